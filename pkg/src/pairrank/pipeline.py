"""Candidate-topic pipeline: dump ingestion, normalization, filtering,
annotator agreement and entity-based deduplication.

Input dumps are line-delimited JSON in the GitHub REST repository shape
(fields used: ``full_name``, ``topics``, ``description``,
``stargazers_count`` plus a ``has_readme`` flag added by the dump tool).
All transforms are deterministic batch functions.
"""

from __future__ import annotations

import csv
import io
import json
import re
from collections import Counter
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import (
    AgreementUndefinedError,
    DegenerateAgreementError,
    IngestError,
    IntegrityError,
    PreconditionError,
)

MIN_STARS = 10

STATE_CANDIDATE = "candidate"
STATE_FILTERED_IN = "filtered_in"
STATE_FILTERED_OUT = "filtered_out"
STATE_LINKED = "linked"
STATE_RANKED = "ranked"

# Forward-only lifecycle.
_NEXT_STATES = {
    STATE_CANDIDATE: {STATE_FILTERED_IN, STATE_FILTERED_OUT},
    STATE_FILTERED_IN: {STATE_LINKED},
    STATE_FILTERED_OUT: set(),
    STATE_LINKED: {STATE_RANKED},
    STATE_RANKED: set(),
}


def _load_table(name: str) -> dict[str, str]:
    table = {}
    text = resources.files("pairrank.data").joinpath(name).read_text("utf-8")
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, value = line.split()
        table[key] = value
    return table


def _load_words(name: str) -> frozenset[str]:
    text = resources.files("pairrank.data").joinpath(name).read_text("utf-8")
    return frozenset(line.strip() for line in text.splitlines()
                     if line.strip() and not line.startswith("#"))


STOP_WORDS = _load_words("stopwords.txt")
ABBREVIATIONS = _load_table("abbreviations.txt")
LEMMAS = _load_table("lemmas.txt")

_DISALLOWED = re.compile(r"[^A-Za-z_\- ]+")
_CAMEL_LOWER_UPPER = re.compile(r"([a-z])([A-Z])")
_CAMEL_ACRONYM = re.compile(r"([A-Z]+)([A-Z][a-z])")
_SEPARATORS = re.compile(r"[_\- ]+")


@dataclass(frozen=True)
class NormalizedTopic:
    """Outcome of normalizing one raw topic string."""

    raw: str
    slug: str
    tokens: tuple[str, ...]

    @property
    def degenerate(self) -> bool:
        return not self.tokens


def normalize_topic(raw: str) -> NormalizedTopic:
    """Canonicalize a raw topic label into a hyphenated slug.

    Order: strip punctuation/digits/non-ASCII, split on snake/camel case and
    separators, lowercase, expand abbreviations, drop stop words, lemmatize
    against the bundled static table.  An empty token list marks the topic
    degenerate (excluded from candidates) rather than raising.
    """
    if not raw:
        raise ValueError("raw topic must be non-empty")
    text = _DISALLOWED.sub("", raw)
    text = _CAMEL_ACRONYM.sub(r"\1 \2", text)
    text = _CAMEL_LOWER_UPPER.sub(r"\1 \2", text)
    tokens = []
    for piece in _SEPARATORS.split(text):
        token = piece.lower()
        if not token:
            continue
        token = ABBREVIATIONS.get(token, token)
        if token in STOP_WORDS:
            continue
        token = LEMMAS.get(token, token)
        tokens.append(token)
    return NormalizedTopic(raw, "-".join(tokens), tuple(tokens))


@dataclass
class Topic:
    """A candidate label with aliases, usage frequency and lifecycle state."""

    topic_id: str
    surface_forms: set[str] = field(default_factory=set)
    frequency: int = 0
    entity_id: str | None = None
    state: str = STATE_CANDIDATE

    def advance(self, new_state: str) -> "Topic":
        """Move the lifecycle forward; backward transitions are rejected."""
        if new_state not in _NEXT_STATES.get(self.state, set()):
            raise ValueError(f"illegal state transition {self.state} -> {new_state}")
        return replace(self, state=new_state)

    def to_json(self) -> dict:
        return {
            "topic_id": self.topic_id,
            "surface_forms": sorted(self.surface_forms),
            "frequency": self.frequency,
            "entity_id": self.entity_id,
            "state": self.state,
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "Topic":
        return cls(topic_id=obj["topic_id"],
                   surface_forms=set(obj.get("surface_forms", [])),
                   frequency=int(obj.get("frequency", 0)),
                   entity_id=obj.get("entity_id"),
                   state=obj.get("state", STATE_CANDIDATE))


def topics_to_jsonl(topics: Iterable[Topic]) -> str:
    return "".join(json.dumps(t.to_json(), sort_keys=True) + "\n" for t in topics)


def topics_from_jsonl(text: str) -> list[Topic]:
    return [Topic.from_json(json.loads(line))
            for line in text.splitlines() if line.strip()]


@dataclass(frozen=True)
class RepoRecord:
    """One repository's metadata, as scraped from the REST API."""

    full_name: str
    topics: tuple[str, ...]
    has_readme: bool
    description: str | None
    stars: int

    @classmethod
    def from_api_dict(cls, obj: Mapping) -> "RepoRecord":
        full_name = obj["full_name"]
        if not isinstance(full_name, str) or not full_name:
            raise ValueError("full_name must be a non-empty string")
        topics = obj.get("topics", [])
        if not isinstance(topics, (list, tuple)):
            raise ValueError("topics must be a list")
        return cls(
            full_name=full_name,
            topics=tuple(str(t) for t in topics),
            has_readme=bool(obj.get("has_readme", False)),
            description=obj.get("description"),
            stars=int(obj.get("stargazers_count", 0)),
        )

    def meets_criteria(self) -> bool:
        """At least one topic, a README, a description, and ten stars."""
        return (bool(self.topics)
                and self.has_readme
                and bool(self.description and self.description.strip())
                and self.stars >= MIN_STARS)


@dataclass
class IngestReport:
    records_seen: int = 0
    malformed: int = 0
    duplicates: int = 0
    excluded: int = 0
    kept: int = 0
    degenerate_topics: int = 0


def ingest_dump(records: Iterable) -> tuple[list[Topic], IngestReport]:
    """Filter repository records and aggregate candidate topic frequencies.

    Frequency counts distinct repositories per canonical slug; duplicate
    ``full_name`` records are counted once.  Raises IngestError when the
    stream yields no parseable records at all.
    """
    report = IngestReport()
    seen_names: set[str] = set()
    by_slug: dict[str, Topic] = {}
    for raw in records:
        report.records_seen += 1
        try:
            record = raw if isinstance(raw, RepoRecord) else RepoRecord.from_api_dict(raw)
        except (KeyError, TypeError, ValueError):
            report.malformed += 1
            continue
        if record.full_name in seen_names:
            report.duplicates += 1
            continue
        seen_names.add(record.full_name)
        if not record.meets_criteria():
            report.excluded += 1
            continue
        report.kept += 1
        slugs_here: set[str] = set()
        for raw_topic in record.topics:
            norm = normalize_topic(raw_topic) if raw_topic else None
            if norm is None or norm.degenerate:
                report.degenerate_topics += 1
                continue
            topic = by_slug.setdefault(norm.slug, Topic(norm.slug))
            topic.surface_forms.add(raw_topic)
            if norm.slug not in slugs_here:
                topic.frequency += 1
                slugs_here.add(norm.slug)
    if report.records_seen == 0 or report.records_seen == report.malformed:
        raise IngestError(
            f"dump yielded no usable records ({report.records_seen} seen, "
            f"{report.malformed} malformed)")
    topics = sorted(by_slug.values(), key=lambda t: (-t.frequency, t.topic_id))
    return topics, report


def read_dump_jsonl(path: str | Path):
    """Yield parsed objects from a line-delimited JSON dump.

    Unparseable lines come through as None so ingest_dump can count them
    as malformed.
    """
    path = Path(path)
    try:
        stream = path.open("r", encoding="utf-8")
    except OSError as exc:
        raise IngestError(f"cannot read dump {path}: {exc}") from exc
    with stream:
        for line in stream:
            if not line.strip():
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError:
                yield None


@dataclass(frozen=True)
class FrequencyCut:
    topics: tuple[Topic, ...]
    coverage: float
    truncated: bool          # True when top_n exceeded the available topics


def frequency_cut(topics: Sequence[Topic], top_n: int,
                  tie_slack: int = 5) -> FrequencyCut:
    """Keep the top_n most frequent topics.

    Topics tied with the n-th frequency are all included when that adds at
    most `tie_slack` extras; otherwise the cut falls back to slug order
    inside the tie.  Also reports the kept share of total use frequency.
    """
    if top_n < 1:
        raise ValueError(f"top_n must be >= 1, got {top_n}")
    ordered = sorted(topics, key=lambda t: (-t.frequency, t.topic_id))
    total = sum(t.frequency for t in ordered)
    if top_n >= len(ordered):
        return FrequencyCut(tuple(ordered), 1.0 if total else 0.0,
                            truncated=top_n > len(ordered))
    boundary_freq = ordered[top_n - 1].frequency
    kept = ordered[:top_n]
    extras = [t for t in ordered[top_n:] if t.frequency == boundary_freq]
    if extras and len(extras) <= tie_slack:
        kept = kept + extras
    coverage = (sum(t.frequency for t in kept) / total) if total else 0.0
    return FrequencyCut(tuple(kept), coverage, truncated=False)


@dataclass(frozen=True)
class BinaryLabelSheet:
    """One annotator's 0/1 labels; topics absent from `labels` are missing."""

    annotator_id: str
    labels: Mapping[str, int]

    def __post_init__(self):
        for tid, value in self.labels.items():
            if value not in (0, 1):
                raise ValueError(f"label for {tid!r} must be 0 or 1, got {value!r}")

    @classmethod
    def from_csv(cls, text: str, annotator_id: str) -> "BinaryLabelSheet":
        labels = {}
        for row in csv.reader(io.StringIO(text)):
            if not row or row[0] == "topic_id":
                continue
            if len(row) < 2 or row[1].strip() == "":
                continue    # missing label
            labels[row[0]] = int(row[1])
        return cls(annotator_id, labels)

    def to_csv(self) -> str:
        lines = ["topic_id,label"]
        for tid in sorted(self.labels):
            lines.append(f"{tid},{self.labels[tid]}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class MajorityVote:
    filtered_in: tuple[str, ...]
    filtered_out: tuple[str, ...]


def majority_vote(sheets: Sequence[BinaryLabelSheet], quorum: int,
                  candidates: Iterable[str] | None = None) -> MajorityVote:
    """Partition topics by positive-label count against the quorum.

    Missing labels count as 0.  With an explicit candidate registry,
    sheets referencing unknown topics raise IntegrityError.
    """
    if not sheets:
        raise ValueError("need at least one sheet")
    if not (1 <= quorum <= len(sheets)):
        raise ValueError(f"quorum must be in [1, {len(sheets)}], got {quorum}")
    if candidates is not None:
        universe = set(candidates)
        for sheet in sheets:
            unknown = set(sheet.labels) - universe
            if unknown:
                raise IntegrityError(
                    f"sheet {sheet.annotator_id!r} references unknown topics: "
                    f"{sorted(unknown)[:5]}")
    else:
        universe = set()
        for sheet in sheets:
            universe.update(sheet.labels)
    votes = Counter()
    for sheet in sheets:
        for tid, value in sheet.labels.items():
            votes[tid] += value
    filtered_in = sorted(t for t in universe if votes[t] >= quorum)
    filtered_out = sorted(t for t in universe if votes[t] < quorum)
    return MajorityVote(tuple(filtered_in), tuple(filtered_out))


def krippendorff_alpha(sheets: Sequence[BinaryLabelSheet]) -> float:
    """Krippendorff's alpha for nominal data with missing labels.

    Coincidence-matrix formulation: units with fewer than two labels are
    excluded; returns a value in [-1, 1].
    """
    if len(sheets) < 2:
        raise ValueError("need at least two sheets")
    units: dict[str, list[int]] = {}
    for sheet in sheets:
        for tid, value in sheet.labels.items():
            units.setdefault(tid, []).append(value)
    usable = [labels for labels in units.values() if len(labels) >= 2]
    if not usable:
        raise AgreementUndefinedError("no unit carries two or more labels")
    totals: Counter = Counter()
    n = 0
    observed = 0.0
    for labels in usable:
        m = len(labels)
        n += m
        counts = Counter(labels)
        totals.update(counts)
        for c in counts:
            for k in counts:
                if c != k:
                    observed += counts[c] * counts[k] / (m - 1)
    expected = 0.0
    for c in totals:
        for k in totals:
            if c != k:
                expected += totals[c] * totals[k]
    if expected == 0.0:
        raise DegenerateAgreementError(
            "all labels identical: expected disagreement is zero")
    d_obs = observed / n
    d_exp = expected / (n * (n - 1))
    return 1.0 - d_obs / d_exp


def pairwise_alpha(sheets: Sequence[BinaryLabelSheet]) -> dict[tuple[str, str], float]:
    """Alpha for every pair of sheets (as the per-pair agreement report)."""
    out = {}
    for i in range(len(sheets)):
        for j in range(i + 1, len(sheets)):
            pair = (sheets[i].annotator_id, sheets[j].annotator_id)
            out[pair] = krippendorff_alpha([sheets[i], sheets[j]])
    return out


def dedup_by_entity(topics: Sequence[Topic]) -> list[Topic]:
    """Merge topics sharing a knowledge-base entity ID.

    Surface forms are unioned and frequencies summed; the slug of the most
    frequent member (ties: lexicographically first) survives.
    """
    for topic in topics:
        if not topic.entity_id:
            raise PreconditionError(f"topic {topic.topic_id!r} has no entity_id")
    groups: dict[str, list[Topic]] = {}
    for topic in topics:
        groups.setdefault(topic.entity_id, []).append(topic)
    merged = []
    for entity_id, members in groups.items():
        representative = min(members, key=lambda t: (-t.frequency, t.topic_id))
        merged.append(Topic(
            topic_id=representative.topic_id,
            surface_forms=set().union(*(t.surface_forms for t in members)),
            frequency=sum(t.frequency for t in members),
            entity_id=entity_id,
            state=representative.state,
        ))
    return sorted(merged, key=lambda t: (-t.frequency, t.topic_id))
