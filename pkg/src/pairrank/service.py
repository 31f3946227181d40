"""HTTP annotation service: hands out pairs, records judgments durably,
and serves the current ranking, levels and statistics.

State model: one lock serializes every mutation (the log and sampler have
a single writer); an annotation is fsynced to the append-only log before
its acknowledgment leaves the handler.  Ranking snapshots are recomputed
deterministically from the log whenever it has grown, so a restart that
replays the log reproduces the pre-restart snapshot byte for byte.

Annotators authenticate with bearer tokens from a static roster file.
"""

from __future__ import annotations

import threading
import time
from collections import Counter
from dataclasses import dataclass, field as dataclass_field
from datetime import datetime, timezone
from pathlib import Path

from fastapi import FastAPI, Header, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from . import __version__
from .errors import (
    AuthError,
    CheckoutError,
    DuplicateTopicError,
    PairRankError,
    PoolExhaustedError,
)
from .levels import LevelAssignment, level_distribution
from .linker import entity_url
from .pipeline import Topic, normalize_topic
from .rating import (
    DEFAULT_PASSES,
    OUTCOME_SKIP,
    OUTCOME_TIE,
    OUTCOMES,
    RatingConfig,
    rank_stability_curve,
)
from .sampler import SamplerState, draw_pair_for_annotator, refill_pool
from .storage import (
    SNAPSHOT_NAME,
    AnnotationLog,
    LOG_NAME,
    TOPICS_NAME,
    TopicRegistry,
    atomic_write_text,
    build_snapshot,
    load_roster,
    snapshot_to_json,
)

DEFAULT_CHECKOUT_TTL_S = 600.0
DEFAULT_REFRESH_EVERY = 25
DEFAULT_STABILITY_WINDOW = 200

ANNOTATION_PROMPT = "Pick the more general topic."


@dataclass
class ServiceConfig:
    data_dir: Path
    roster_path: Path
    rating: RatingConfig = dataclass_field(default_factory=RatingConfig.online)
    passes: int = DEFAULT_PASSES
    pool_size: int = 50
    refresh_every: int = DEFAULT_REFRESH_EVERY
    checkout_ttl: float = DEFAULT_CHECKOUT_TTL_S
    stability_window: int = DEFAULT_STABILITY_WINDOW
    seed: int = 0


@dataclass
class _Checkout:
    pair_id: str
    annotator_id: str
    pair: tuple[str, str]
    expires_at: float
    payload: dict


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


class AnnotationService:
    """All service behavior, framework-free (the FastAPI app wraps this)."""

    def __init__(self, config: ServiceConfig, clock=time.monotonic):
        self.config = config
        self.clock = clock
        config.data_dir.mkdir(parents=True, exist_ok=True)
        self.roster = load_roster(config.roster_path)
        self.registry = TopicRegistry(config.data_dir / TOPICS_NAME)
        self.log = AnnotationLog(config.data_dir / LOG_NAME)
        self.sampler = SamplerState.for_topics(
            self.registry.slugs(), cfg=config.rating,
            pool_size=config.pool_size, seed=config.seed)
        for ann in self.log.annotations:
            self.sampler.record_annotation(ann)
            self.sampler.seen_by.setdefault(ann.annotator_id, set()).add(
                (ann.topic_a, ann.topic_b))
        if len(self.registry) >= 2:
            refill_pool(self.sampler, self.log.annotations)
        self._lock = threading.Lock()
        self._checkouts: dict[str, _Checkout] = {}
        self._by_annotator: dict[str, str] = {}
        self._completed: dict[str, dict] = {}
        self._draws = 0
        self._accepted_since_refresh = 0
        self._snapshot: dict | None = None
        self._snapshot_at = -1

    # -- auth ---------------------------------------------------------------

    def _auth(self, authorization: str | None) -> str:
        if not authorization or not authorization.lower().startswith("bearer "):
            raise AuthError("missing bearer token")
        token = authorization.split(None, 1)[1].strip()
        annotator = self.roster.get(token)
        if annotator is None:
            raise AuthError("unknown token")
        return annotator

    # -- pair checkout ------------------------------------------------------

    def _expire_checkouts(self) -> None:
        now = self.clock()
        for pair_id in [pid for pid, co in self._checkouts.items()
                        if co.expires_at <= now]:
            checkout = self._checkouts.pop(pair_id)
            self.sampler.release_pair(checkout.pair)
            self._by_annotator.pop(checkout.annotator_id, None)

    def _pair_payload(self, pair_id: str, pair: tuple[str, str]) -> dict:
        def topic_view(slug: str) -> dict:
            topic = self.registry.topics.get(slug)
            entity = topic.entity_id if topic else None
            return {"slug": slug,
                    "entity_url": entity_url(entity) if entity else None}

        return {"pair_id": pair_id,
                "topic_a": topic_view(pair[0]),
                "topic_b": topic_view(pair[1])}

    def next_pair(self, authorization: str | None, annotator_query: str | None) -> dict:
        with self._lock:
            annotator = self._auth(authorization)
            if annotator_query and annotator_query != annotator:
                raise AuthError("annotator does not match token")
            self._expire_checkouts()
            held = self._by_annotator.get(annotator)
            if held is not None:
                return self._checkouts[held].payload   # idempotent re-serve
            try:
                candidate = draw_pair_for_annotator(self.sampler, annotator)
            except PoolExhaustedError:
                refill_pool(self.sampler, self.log.annotations)
                candidate = draw_pair_for_annotator(self.sampler, annotator)
            self._draws += 1
            pair_id = f"p{self._draws:08d}"
            payload = self._pair_payload(pair_id, candidate.pair)
            self._checkouts[pair_id] = _Checkout(
                pair_id, annotator, candidate.pair,
                self.clock() + self.config.checkout_ttl, payload)
            self._by_annotator[annotator] = pair_id
            return payload

    # -- annotation ---------------------------------------------------------

    def annotate(self, authorization: str | None, pair_id: str, outcome: str) -> dict:
        with self._lock:
            annotator = self._auth(authorization)
            if outcome not in OUTCOMES:
                raise ValueError(f"outcome must be one of {OUTCOMES}, got {outcome!r}")
            done = self._completed.get(pair_id)
            if done is not None:
                if done["annotator_id"] == annotator:
                    return done["ack"]                 # idempotent replay
                raise CheckoutError("pair was answered by another annotator")
            self._expire_checkouts()
            checkout = self._checkouts.get(pair_id)
            if checkout is None:
                raise CheckoutError(f"unknown or expired pair_id {pair_id!r}")
            if checkout.annotator_id != annotator:
                raise CheckoutError("pair is checked out by another annotator")
            ann = self.log.append(annotator, checkout.pair[0], checkout.pair[1],
                                  outcome, _utc_now())
            self.sampler.record_annotation(ann)
            self._checkouts.pop(pair_id)
            self._by_annotator.pop(annotator, None)
            ack = {"annotation_id": ann.annotation_id,
                   "total_annotations": len(self.log)}
            self._completed[pair_id] = {"annotator_id": annotator, "ack": ack}
            if outcome != OUTCOME_SKIP:
                self._accepted_since_refresh += 1
            if (self._accepted_since_refresh >= self.config.refresh_every
                    or self.sampler.pool_low()):
                refill_pool(self.sampler, self.log.annotations)
                self._accepted_since_refresh = 0
            return ack

    # -- read models ----------------------------------------------------------

    def ranking(self) -> dict:
        with self._lock:
            return dict(self._current_snapshot())

    def _current_snapshot(self) -> dict:
        if self._snapshot_at != len(self.log):
            snapshot = build_snapshot(self.log.annotations, self.registry.slugs(),
                                      self.config.rating, self.config.passes)
            atomic_write_text(self.config.data_dir / SNAPSHOT_NAME,
                              snapshot_to_json(snapshot))
            self._snapshot = snapshot
            self._snapshot_at = len(self.log)
        return self._snapshot

    def stats(self) -> dict:
        with self._lock:
            per_annotator: dict[str, Counter] = {}
            for ann in self.log.annotations:
                row = per_annotator.setdefault(ann.annotator_id, Counter())
                row["annotations"] += 1
                if ann.outcome == OUTCOME_TIE:
                    row["ties"] += 1
            rows = [{"annotator_id": aid,
                     "annotations": c["annotations"], "ties": c["ties"]}
                    for aid, c in sorted(per_annotator.items())]
            curve = rank_stability_curve(
                self.log.annotations, self.config.stability_window,
                cfg=self.config.rating, passes=self.config.passes,
                topic_ids=self.registry.slugs() or None)
            snapshot = self._current_snapshot()
            frequencies = {tid: topic.frequency
                           for tid, topic in self.registry.topics.items()}
            assignments = [LevelAssignment(tid, level, center)
                           for tid, level, center in snapshot["levels"]]
            dist = level_distribution(assignments, frequencies) if assignments else None
            return {
                "per_annotator": rows,
                "totals": {
                    "annotations": len(self.log),
                    "ties": sum(r["ties"] for r in rows),
                },
                "stability_curve": [[count, change] for count, change in curve],
                "level_distribution": None if dist is None else {
                    "levels": list(dist.levels),
                    "topic_counts": list(dist.topic_counts),
                    "weighted_counts": list(dist.weighted_counts),
                    "mean_level": dist.mean_level,
                    "weighted_mean_level": dist.weighted_mean_level,
                },
            }

    def topics(self) -> list[dict]:
        with self._lock:
            return [self.registry.topics[slug].to_json()
                    for slug in self.registry.slugs()]

    def add_topic(self, authorization: str | None, slug: str,
                  entity_id: str | None) -> dict:
        with self._lock:
            self._auth(authorization)
            normalized = normalize_topic(slug)
            if normalized.degenerate:
                raise ValueError(f"slug {slug!r} normalizes to nothing")
            canonical = normalized.slug
            if canonical in self.registry:
                raise DuplicateTopicError(f"topic {canonical!r} already exists")
            if entity_id and entity_id in self.registry.entity_ids():
                raise DuplicateTopicError(
                    f"entity {entity_id!r} already linked to another topic")
            topic = Topic(canonical, {slug}, 0, entity_id,
                          "linked" if entity_id else "candidate")
            self.registry.add(topic)
            self.sampler.add_topic(canonical)
            return topic.to_json()

    def bootstrap(self) -> dict:
        return {
            "service": "pairrank-annotation-service",
            "version": __version__,
            "prompt": ANNOTATION_PROMPT,
            "endpoints": {
                "next_pair": "/api/pairs/next",
                "annotate": "/api/annotations",
                "ranking": "/api/ranking",
                "topics": "/api/topics",
                "stats": "/api/stats",
            },
        }

    def close(self) -> None:
        self.log.close()


class AnnotatePayload(BaseModel):
    pair_id: str
    outcome: str


class TopicPayload(BaseModel):
    slug: str
    entity_id: str | None = None


def _status_of(exc: PairRankError) -> int:
    if isinstance(exc, AuthError):
        return 401
    if isinstance(exc, (CheckoutError, DuplicateTopicError, PoolExhaustedError)):
        return 409
    return 500


def create_app(config: ServiceConfig, clock=time.monotonic) -> FastAPI:
    service = AnnotationService(config, clock)
    app = FastAPI(title="pairrank annotation service", version=__version__)
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])
    app.state.service = service

    def guarded(fn, *args):
        try:
            return fn(*args)
        except PairRankError as exc:
            raise HTTPException(_status_of(exc), detail=str(exc)) from exc
        except ValueError as exc:
            raise HTTPException(400, detail=str(exc)) from exc

    @app.get("/api/bootstrap")
    def bootstrap():
        return service.bootstrap()

    @app.get("/api/pairs/next")
    def next_pair(annotator: str | None = None,
                  authorization: str | None = Header(None)):
        return guarded(service.next_pair, authorization, annotator)

    @app.post("/api/annotations")
    def annotate(payload: AnnotatePayload,
                 authorization: str | None = Header(None)):
        return guarded(service.annotate, authorization,
                       payload.pair_id, payload.outcome)

    @app.get("/api/ranking")
    def ranking():
        return service.ranking()

    @app.get("/api/topics")
    def topics():
        return service.topics()

    @app.post("/api/topics", status_code=201)
    def add_topic(payload: TopicPayload,
                  authorization: str | None = Header(None)):
        return guarded(service.add_topic, authorization,
                       payload.slug, payload.entity_id)

    @app.get("/api/stats")
    def stats():
        return service.stats()

    return app
