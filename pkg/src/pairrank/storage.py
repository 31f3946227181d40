"""Durable state for the annotation service.

Everything lives in plain files under one data directory:

  * ``annotations.log`` -- append-only line-delimited JSON, one record per
    judgment, sequence numbers strictly increasing and gap-free.  A record
    is flushed and fsynced before the service acknowledges it.
  * ``topics.jsonl``    -- the topic registry (rewritten atomically).
  * ``snapshot.json``   -- latest ranking snapshot (rewritten atomically).

Replaying the log through the deterministic ranking pipeline reconstructs
the exact pre-restart snapshot.
"""

from __future__ import annotations

import csv
import io
import json
import os
from pathlib import Path
from typing import Iterable, Sequence

from .errors import IntegrityError
from .levels import assign_levels, choose_k_auto
from .pipeline import Topic, topics_from_jsonl, topics_to_jsonl
from .rating import Annotation, DEFAULT_PASSES, RatingConfig, rank_annotations

LOG_NAME = "annotations.log"
TOPICS_NAME = "topics.jsonl"
SNAPSHOT_NAME = "snapshot.json"


def atomic_write_text(path: Path, text: str) -> None:
    """Write via a temp file and rename so readers never see partials."""
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, "utf-8")
    tmp.replace(path)


class AnnotationLog:
    """Append-only annotation log with strict sequence numbering."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.annotations: list[Annotation] = []
        self._next_seq = 1
        if self.path.exists():
            self._replay()
        self._handle = self.path.open("a", encoding="utf-8")

    def _replay(self) -> None:
        with self.path.open("r", encoding="utf-8") as handle:
            for line in handle:
                if not line.strip():
                    continue
                record = json.loads(line)
                if record["seq"] != self._next_seq:
                    raise IntegrityError(
                        f"log corrupt: expected seq {self._next_seq}, "
                        f"found {record['seq']}")
                self.annotations.append(Annotation(
                    annotator_id=record["annotator_id"],
                    topic_a=record["topic_a"],
                    topic_b=record["topic_b"],
                    outcome=record["outcome"],
                    timestamp=record.get("timestamp", ""),
                    annotation_id=record["annotation_id"],
                ))
                self._next_seq += 1

    def append(self, annotator_id: str, topic_a: str, topic_b: str,
               outcome: str, timestamp: str) -> Annotation:
        """Durably append one record; returns it with its assigned ID."""
        seq = self._next_seq
        ann = Annotation(annotator_id=annotator_id, topic_a=topic_a,
                         topic_b=topic_b, outcome=outcome,
                         timestamp=timestamp,
                         annotation_id=f"a{seq:08d}")
        record = {"seq": seq, "annotation_id": ann.annotation_id,
                  "annotator_id": annotator_id, "topic_a": topic_a,
                  "topic_b": topic_b, "outcome": outcome,
                  "timestamp": timestamp}
        self._handle.write(json.dumps(record, sort_keys=True) + "\n")
        self._handle.flush()
        os.fsync(self._handle.fileno())
        self.annotations.append(ann)
        self._next_seq += 1
        return ann

    def __len__(self) -> int:
        return len(self.annotations)

    def close(self) -> None:
        self._handle.close()


def build_snapshot(annotations: Sequence[Annotation], topic_ids: Sequence[str],
                   cfg: RatingConfig, passes: int = DEFAULT_PASSES) -> dict:
    """Deterministic ranking snapshot over the given log prefix.

    Contains only values derivable from the log and registry, never wall
    time, so a replay after restart is byte-identical.
    """
    universe = sorted(set(topic_ids))
    ranking = rank_annotations(annotations, topic_ids=universe,
                               cfg=cfg, passes=passes)
    entries = [[pos, tid, rating.mean, rating.deviation]
               for pos, (tid, rating) in enumerate(ranking.entries, start=1)]
    levels = []
    elbow = None
    if len(ranking):
        means = [rating.mean for _, rating in ranking.entries]
        report = choose_k_auto(means)
        elbow = {"k_candidates": list(report.k_candidates),
                 "sse": list(report.sse),
                 "chosen_k": report.chosen_k}
        levels = [[a.topic_id, a.level, a.cluster_center]
                  for a in assign_levels(ranking, report.chosen_k)]
    ranked_count = sum(1 for a in annotations
                       if a.outcome in ("a_wins", "b_wins"))
    return {
        "version": len(annotations),
        "annotation_count": len(annotations),
        "ranked_annotation_count": ranked_count,
        "entries": entries,
        "levels": levels,
        "elbow": elbow,
    }


def snapshot_to_json(snapshot: dict) -> str:
    return json.dumps(snapshot, sort_keys=True, indent=None,
                      separators=(",", ":")) + "\n"


class TopicRegistry:
    """The service's topic table, persisted as JSONL."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.topics: dict[str, Topic] = {}
        if self.path.exists():
            for topic in topics_from_jsonl(self.path.read_text("utf-8")):
                self.topics[topic.topic_id] = topic

    def __contains__(self, topic_id: str) -> bool:
        return topic_id in self.topics

    def __len__(self) -> int:
        return len(self.topics)

    def slugs(self) -> list[str]:
        return sorted(self.topics)

    def entity_ids(self) -> set[str]:
        return {t.entity_id for t in self.topics.values() if t.entity_id}

    def add(self, topic: Topic) -> None:
        self.topics[topic.topic_id] = topic
        self.save()

    def save(self) -> None:
        ordered = [self.topics[s] for s in self.slugs()]
        atomic_write_text(self.path, topics_to_jsonl(ordered))


def annotations_to_jsonl(annotations: Iterable[Annotation]) -> str:
    """Serialize a log in the on-disk record format (sequence renumbered)."""
    lines = []
    for seq, ann in enumerate(annotations, start=1):
        lines.append(json.dumps({
            "seq": seq,
            "annotation_id": ann.annotation_id or f"a{seq:08d}",
            "annotator_id": ann.annotator_id,
            "topic_a": ann.topic_a,
            "topic_b": ann.topic_b,
            "outcome": ann.outcome,
            "timestamp": ann.timestamp,
        }, sort_keys=True))
    return "".join(line + "\n" for line in lines)


def annotations_from_jsonl(text: str) -> list[Annotation]:
    """Parse a log file, enforcing gap-free ascending sequence numbers."""
    annotations = []
    expected = 1
    for line in text.splitlines():
        if not line.strip():
            continue
        record = json.loads(line)
        if record.get("seq") != expected:
            raise IntegrityError(
                f"log corrupt: expected seq {expected}, found {record.get('seq')}")
        annotations.append(Annotation(
            annotator_id=record["annotator_id"],
            topic_a=record["topic_a"],
            topic_b=record["topic_b"],
            outcome=record["outcome"],
            timestamp=record.get("timestamp", ""),
            annotation_id=record.get("annotation_id", ""),
        ))
        expected += 1
    return annotations


def load_roster(path: str | Path) -> dict[str, str]:
    """Roster CSV of (annotator_id, token) rows; returns token -> annotator."""
    text = Path(path).read_text("utf-8")
    roster = {}
    for row in csv.reader(io.StringIO(text)):
        if not row or row[0] == "annotator_id":
            continue
        if len(row) < 2 or not row[0].strip() or not row[1].strip():
            raise ValueError(f"roster row needs annotator_id,token: {row!r}")
        roster[row[1].strip()] = row[0].strip()
    return roster
