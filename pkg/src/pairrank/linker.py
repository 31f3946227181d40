"""Client for the reconciliation protocol: resolve topic slugs to unique
knowledge-base entity IDs.

Speaks the W3C-style reconciliation contract (form-encoded JSON query
batch, scored candidate array response).  Candidates carrying the
github-topic property (P9100) with a value equal to one of the topic's
surface forms are boosted to the front; a manually curated type blocklist
drops irrelevant entity classes (people, TV channels, locations, ...).

Two modes:
  * fixture mode -- responses come from a directory of recorded JSON
    files keyed by slug; fully deterministic, used in tests and CI.
  * live mode -- HTTP with retries and a content-addressed response cache
    so reruns never re-query the public endpoint.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import httpx

from .errors import ProtocolError, TransportError
from .pipeline import Topic

GITHUB_TOPIC_PROPERTY = "P9100"
MAX_CANDIDATES = 10
RETRIES = 3
BACKOFF_BASE_S = 0.5
MIN_REQUEST_INTERVAL_S = 0.25

SOURCE_AUTO = "auto"
SOURCE_MANUAL = "manual_override"
SOURCE_UNLINKED = "unlinked"


def entity_url(entity_id: str) -> str:
    return f"https://www.wikidata.org/wiki/{entity_id}"


@dataclass(frozen=True)
class ReconCandidate:
    entity_id: str
    label: str
    types: tuple[tuple[str, str], ...]
    score: float
    exact_topic_property_match: bool = False

    def __post_init__(self):
        if not self.entity_id:
            raise ValueError("entity_id must be non-empty")


@dataclass(frozen=True)
class TypeBlocklist:
    blocked_type_ids: frozenset[str]

    @classmethod
    def from_text(cls, text: str) -> "TypeBlocklist":
        """One type ID per line; anything after '#' is a comment."""
        ids = set()
        for line in text.splitlines():
            entry = line.split("#", 1)[0].strip()
            if entry:
                ids.add(entry)
        return cls(frozenset(ids))

    @classmethod
    def from_file(cls, path: str | Path) -> "TypeBlocklist":
        return cls.from_text(Path(path).read_text("utf-8"))

    def blocks(self, candidate: ReconCandidate) -> bool:
        return any(tid in self.blocked_type_ids for tid, _ in candidate.types)


EMPTY_BLOCKLIST = TypeBlocklist(frozenset())


@dataclass(frozen=True)
class LinkDecision:
    topic_id: str
    chosen: str | None
    source: str
    candidates_considered: tuple[ReconCandidate, ...]

    def to_json(self) -> dict:
        return {
            "topic_id": self.topic_id,
            "chosen": self.chosen,
            "source": self.source,
            "candidates_considered": [
                {"entity_id": c.entity_id, "label": c.label,
                 "types": [list(t) for t in c.types], "score": c.score,
                 "exact_topic_property_match": c.exact_topic_property_match}
                for c in self.candidates_considered
            ],
        }


def _parse_candidates(body, surface_forms: frozenset[str]) -> list[ReconCandidate]:
    try:
        result = body["q0"]["result"]
    except (KeyError, TypeError) as exc:
        raise ProtocolError(f"response missing q0.result: {exc!r}") from exc
    if not isinstance(result, list):
        raise ProtocolError("q0.result is not a list")
    candidates = []
    for raw in result[:MAX_CANDIDATES]:
        try:
            types = tuple((t["id"], t.get("name", "")) for t in raw.get("type", []))
            values = {str(v) for v in raw.get("p9100", [])}
            candidates.append(ReconCandidate(
                entity_id=str(raw["id"]),
                label=str(raw.get("name", "")),
                types=types,
                score=float(raw.get("score", 0.0)),
                exact_topic_property_match=bool(values & surface_forms),
            ))
        except (KeyError, TypeError, ValueError) as exc:
            raise ProtocolError(f"malformed candidate record: {exc!r}") from exc
    candidates.sort(key=lambda c: (not c.exact_topic_property_match, -c.score))
    return candidates


class ReconciliationClient:
    """Issues reconciliation queries against fixtures, cache, or network."""

    def __init__(self, endpoint: str | None = None,
                 fixtures_dir: str | Path | None = None,
                 cache_dir: str | Path | None = None,
                 transport: httpx.BaseTransport | None = None,
                 sleep=time.sleep):
        if endpoint is None and fixtures_dir is None:
            raise ValueError("need an endpoint or a fixtures directory")
        self.endpoint = endpoint
        self.fixtures_dir = Path(fixtures_dir) if fixtures_dir else None
        self.cache_dir = Path(cache_dir) if cache_dir else None
        self._transport = transport
        self._sleep = sleep
        self._last_request = 0.0

    def _query_payload(self, topic: Topic) -> dict:
        forms = sorted({topic.topic_id, *topic.surface_forms})
        return {
            "q0": {
                "query": topic.topic_id,
                "limit": MAX_CANDIDATES,
                "properties": [{"pid": GITHUB_TOPIC_PROPERTY, "v": forms}],
            }
        }

    def _cache_path(self, payload: dict) -> Path | None:
        if not self.cache_dir:
            return None
        digest = hashlib.sha256(
            json.dumps(payload, sort_keys=True).encode()).hexdigest()
        return self.cache_dir / f"{digest}.json"

    def _fetch(self, payload: dict) -> dict:
        data = {"queries": json.dumps(payload)}
        last_error: Exception | None = None
        for attempt in range(RETRIES + 1):
            try:
                now = time.monotonic()
                wait = MIN_REQUEST_INTERVAL_S - (now - self._last_request)
                if wait > 0:
                    self._sleep(wait)
                with httpx.Client(transport=self._transport, timeout=30.0) as client:
                    response = client.post(self.endpoint, data=data)
                self._last_request = time.monotonic()
                response.raise_for_status()
                return response.json()
            except (httpx.TransportError, httpx.HTTPStatusError) as exc:
                last_error = exc
                if attempt < RETRIES:
                    self._sleep(BACKOFF_BASE_S * (2 ** attempt))
            except json.JSONDecodeError as exc:
                raise ProtocolError(f"response is not JSON: {exc}") from exc
        raise TransportError(
            f"reconciliation request failed after {RETRIES + 1} attempts: "
            f"{last_error!r}")

    def reconcile(self, topic: Topic) -> list[ReconCandidate]:
        """Resolve one topic to at most 10 scored candidates.

        Exact github-topic property matches order first, then score
        descending.  An empty candidate list is a valid result.
        """
        if not topic.topic_id:
            raise ValueError("topic slug must be non-empty")
        surface_forms = frozenset({topic.topic_id, *topic.surface_forms})
        if self.fixtures_dir is not None:
            path = self.fixtures_dir / f"{topic.topic_id}.json"
            if not path.exists():
                raise TransportError(
                    f"fixture mode: no recorded response for {topic.topic_id!r}")
            body = json.loads(path.read_text("utf-8"))
            return _parse_candidates(body, surface_forms)
        payload = self._query_payload(topic)
        cache_path = self._cache_path(payload)
        if cache_path is not None and cache_path.exists():
            body = json.loads(cache_path.read_text("utf-8"))
            return _parse_candidates(body, surface_forms)
        body = self._fetch(payload)
        candidates = _parse_candidates(body, surface_forms)
        if cache_path is not None:
            cache_path.parent.mkdir(parents=True, exist_ok=True)
            tmp = cache_path.with_suffix(".tmp")
            tmp.write_text(json.dumps(body, sort_keys=True), "utf-8")
            tmp.replace(cache_path)
        return candidates


def apply_blocklist(candidates: Sequence[ReconCandidate],
                    blocklist: TypeBlocklist) -> list[ReconCandidate]:
    """Drop candidates whose type set touches the blocklist; keep order."""
    return [c for c in candidates if not blocklist.blocks(c)]


def link_topic(topic: Topic, candidates: Sequence[ReconCandidate],
               blocklist: TypeBlocklist = EMPTY_BLOCKLIST,
               overrides: Mapping[str, str] | None = None) -> LinkDecision:
    """Pick the entity: manual override first, else first surviving candidate.

    Overrides are trusted verbatim even when the entity never appeared in
    the candidate list (they exist to fix reconciliation mistakes).
    """
    overrides = overrides or {}
    considered = tuple(candidates)
    if topic.topic_id in overrides:
        return LinkDecision(topic.topic_id, overrides[topic.topic_id],
                            SOURCE_MANUAL, considered)
    survivors = apply_blocklist(considered, blocklist)
    if survivors:
        return LinkDecision(topic.topic_id, survivors[0].entity_id,
                            SOURCE_AUTO, considered)
    return LinkDecision(topic.topic_id, None, SOURCE_UNLINKED, considered)


def link_topics(topics: Sequence[Topic], client: ReconciliationClient,
                blocklist: TypeBlocklist = EMPTY_BLOCKLIST,
                overrides: Mapping[str, str] | None = None) -> list[LinkDecision]:
    return [link_topic(topic, client.reconcile(topic), blocklist, overrides)
            for topic in topics]


def parse_overrides_csv(text: str) -> dict[str, str]:
    """Override file: CSV rows of (topic_id, entity_id)."""
    overrides = {}
    for row in csv.reader(io.StringIO(text)):
        if not row or row[0] == "topic_id":
            continue
        if len(row) < 2 or not row[1].strip():
            raise ValueError(f"override row needs topic_id,entity_id: {row!r}")
        overrides[row[0].strip()] = row[1].strip()
    return overrides


def decisions_to_jsonl(decisions: Sequence[LinkDecision]) -> str:
    return "".join(json.dumps(d.to_json(), sort_keys=True) + "\n"
                   for d in decisions)
