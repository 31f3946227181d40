"""Command-line front door for the pipeline stages, simulations and serving.

Every subcommand is deterministic given its --seed flag, exits nonzero
with a single machine-parsable ``error: <kind>: <message>`` line on
failure, and writes outputs atomically (temp file + rename) so partial
artifacts are never left behind.
"""

from __future__ import annotations

import functools
import json
import os
import sys
from pathlib import Path

import click

from . import __version__
from .errors import PairRankError
from .insertion import (
    STRATEGIES,
    ConvergenceRule,
    insertion_summary,
    summary_to_csv,
    traces_to_jsonl,
)
from .levels import (
    assign_levels,
    choose_k_auto,
    histogram_to_csv,
    level_distribution,
    levels_to_csv,
)
from .linker import (
    EMPTY_BLOCKLIST,
    ReconciliationClient,
    TypeBlocklist,
    decisions_to_jsonl,
    link_topics,
    parse_overrides_csv,
)
from .pipeline import (
    BinaryLabelSheet,
    frequency_cut,
    ingest_dump,
    krippendorff_alpha,
    majority_vote,
    pairwise_alpha,
    read_dump_jsonl,
    topics_from_jsonl,
    topics_to_jsonl,
)
from .rating import (
    DEFAULT_PASSES,
    RatingConfig,
    rank_annotations,
    rank_stability_curve,
)
from .simulate import POLICIES, run_campaign
from .storage import annotations_from_jsonl, annotations_to_jsonl, atomic_write_text

DEFAULT_BIND = "127.0.0.1:8100"


def fail_cleanly(fn):
    """Translate expected failures into one-line errors and exit code 1."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (PairRankError, OSError, ValueError, json.JSONDecodeError) as exc:
            click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
            sys.exit(1)

    return wrapper


def _write(path: str | Path, text: str) -> None:
    atomic_write_text(Path(path), text)


def _read_log(path: str | Path):
    return annotations_from_jsonl(Path(path).read_text("utf-8"))


@click.group()
@click.version_option(__version__, prog_name="pairrank")
def main():
    """Rank topic labels from general to specific via pairwise comparisons."""


@main.command()
@click.argument("dump", type=click.Path(exists=True, dir_okay=False))
@click.option("--top-n", default=3000, show_default=True,
              help="Keep the N most frequent candidate topics.")
@click.option("--out", default="topics.jsonl", show_default=True,
              help="Topic table output (line-delimited JSON).")
@fail_cleanly
def ingest(dump, top_n, out):
    """Filter a repository metadata dump into candidate topics."""
    topics, report = ingest_dump(read_dump_jsonl(dump))
    cut = frequency_cut(topics, top_n)
    _write(out, topics_to_jsonl(cut.topics))
    click.echo(json.dumps({
        "records_seen": report.records_seen,
        "kept_records": report.kept,
        "malformed": report.malformed,
        "duplicates": report.duplicates,
        "candidate_topics": len(topics),
        "topics_after_cut": len(cut.topics),
        "coverage": round(cut.coverage, 6),
        "truncated": cut.truncated,
        "out": str(out),
    }, sort_keys=True))


@main.command("filter")
@click.option("--topics", "topics_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Candidate topic table from `ingest`.")
@click.option("--sheets", required=True, multiple=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Binary label sheet CSVs, one per annotator.")
@click.option("--quorum", default=2, show_default=True)
@click.option("--out", default="filtered.jsonl", show_default=True)
@fail_cleanly
def filter_cmd(topics_path, sheets, quorum, out):
    """Majority-vote the label sheets and report annotator agreement."""
    topics = topics_from_jsonl(Path(topics_path).read_text("utf-8"))
    by_id = {t.topic_id: t for t in topics}
    loaded = [BinaryLabelSheet.from_csv(Path(p).read_text("utf-8"), Path(p).stem)
              for p in sheets]
    vote = majority_vote(loaded, quorum, candidates=by_id.keys())
    kept = [by_id[t].advance("filtered_in") for t in vote.filtered_in]
    _write(out, topics_to_jsonl(kept))
    alpha = krippendorff_alpha(loaded) if len(loaded) >= 2 else None
    pairwise = ({f"{a}-{b}": round(v, 6) for (a, b), v in
                 pairwise_alpha(loaded).items()} if len(loaded) >= 2 else {})
    click.echo(json.dumps({
        "filtered_in": len(vote.filtered_in),
        "filtered_out": len(vote.filtered_out),
        "krippendorff_alpha": None if alpha is None else round(alpha, 6),
        "pairwise_alpha": pairwise,
        "out": str(out),
    }, sort_keys=True))


@main.command()
@click.option("--topics", "topics_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--blocklist", "blocklist_path",
              type=click.Path(exists=True, dir_okay=False))
@click.option("--overrides", "overrides_path",
              type=click.Path(exists=True, dir_okay=False))
@click.option("--offline-fixtures", "fixtures_dir",
              type=click.Path(exists=True, file_okay=False),
              help="Recorded responses; no network is touched.")
@click.option("--endpoint", default="https://wikidata.reconci.link/en/api",
              show_default=True)
@click.option("--cache-dir", type=click.Path(file_okay=False),
              help="Response cache for live mode.")
@click.option("--out", default="decisions.jsonl", show_default=True)
@fail_cleanly
def link(topics_path, blocklist_path, overrides_path, fixtures_dir,
         endpoint, cache_dir, out):
    """Resolve filtered topics to knowledge-base entities."""
    topics = topics_from_jsonl(Path(topics_path).read_text("utf-8"))
    blocklist = (TypeBlocklist.from_file(blocklist_path)
                 if blocklist_path else EMPTY_BLOCKLIST)
    overrides = (parse_overrides_csv(Path(overrides_path).read_text("utf-8"))
                 if overrides_path else {})
    client = ReconciliationClient(
        endpoint=None if fixtures_dir else endpoint,
        fixtures_dir=fixtures_dir, cache_dir=cache_dir)
    decisions = link_topics(topics, client, blocklist, overrides)
    _write(out, decisions_to_jsonl(decisions))
    counts = {"auto": 0, "manual_override": 0, "unlinked": 0}
    for d in decisions:
        counts[d.source] += 1
    click.echo(json.dumps({**counts, "out": str(out)}, sort_keys=True))


@main.command()
@click.option("--log", "log_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--topics", "topics_path",
              type=click.Path(exists=True, dir_okay=False),
              help="Optional topic table providing the universe and frequencies.")
@click.option("--out-dir", default="rank-out", show_default=True)
@click.option("--window", default=200, show_default=True,
              help="Stability-curve window in annotations.")
@click.option("--passes", default=DEFAULT_PASSES, show_default=True)
@fail_cleanly
def rank(log_path, topics_path, out_dir, window, passes):
    """Compute the ranking, levels, histogram and stability curve."""
    annotations = _read_log(log_path)
    cfg = RatingConfig()
    frequencies = {}
    topic_ids = None
    if topics_path:
        topics = topics_from_jsonl(Path(topics_path).read_text("utf-8"))
        topic_ids = sorted(t.topic_id for t in topics)
        frequencies = {t.topic_id: t.frequency for t in topics}
    ranking = rank_annotations(annotations, topic_ids=topic_ids,
                               cfg=cfg, passes=passes)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write(out / "ranking.tsv", ranking.to_tsv())
    summary = {"topics": len(ranking), "annotations": len(annotations),
               "out_dir": str(out)}
    if len(ranking):
        means = [r.mean for _, r in ranking.entries]
        report = choose_k_auto(means)
        assignments = assign_levels(ranking, report.chosen_k)
        _write(out / "levels.csv", levels_to_csv(assignments, ranking))
        freq = {a.topic_id: frequencies.get(a.topic_id, 1) for a in assignments}
        _write(out / "histogram.csv",
               histogram_to_csv(level_distribution(assignments, freq)))
        summary["chosen_k"] = report.chosen_k
    curve = rank_stability_curve(annotations, window, cfg=cfg,
                                 passes=passes, topic_ids=topic_ids)
    curve_csv = "annotation_count,mean_abs_position_change\n" + "".join(
        f"{count},{change:.6f}\n" for count, change in curve)
    _write(out / "stability.csv", curve_csv)
    click.echo(json.dumps(summary, sort_keys=True))


@main.command()
@click.option("--data", "data_dir", required=False,
              default=lambda: os.environ.get("PAIRRANK_DATA", "service-data"),
              help="Data directory [env: PAIRRANK_DATA].")
@click.option("--roster", "roster_path", required=False,
              default=lambda: os.environ.get("PAIRRANK_ROSTER", "roster.csv"),
              help="Annotator roster CSV [env: PAIRRANK_ROSTER].")
@click.option("--bind", default=lambda: os.environ.get("PAIRRANK_BIND", DEFAULT_BIND),
              help=f"host:port [env: PAIRRANK_BIND, default {DEFAULT_BIND}].")
@click.option("--seed", default=0, show_default=True)
@fail_cleanly
def serve(data_dir, roster_path, bind, seed):
    """Run the annotation HTTP service."""
    import uvicorn

    from .service import ServiceConfig, create_app

    host, _, port = bind.rpartition(":")
    config = ServiceConfig(data_dir=Path(data_dir),
                           roster_path=Path(roster_path), seed=seed)
    app = create_app(config)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port), log_level="warning")


@main.group()
def simulate():
    """Offline simulation studies."""


@simulate.command("insertion")
@click.option("--log", "log_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--strategy", type=click.Choice(STRATEGIES + ("all",)),
              default="informed", show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--tolerance", default=3, show_default=True)
@click.option("--consecutive", default=2, show_default=True)
@click.option("--out", help="Summary CSV path (stdout when omitted).")
@click.option("--traces", "traces_path", help="Optional trace export (JSONL).")
@fail_cleanly
def simulate_insertion_cmd(log_path, strategy, seed, tolerance, consecutive,
                           out, traces_path):
    """Replay new-topic insertion for every topic in the log."""
    annotations = _read_log(log_path)
    rule = ConvergenceRule(tolerance, consecutive)
    strategies = STRATEGIES if strategy == "all" else (strategy,)
    summaries = [insertion_summary(annotations, s, rule, seed=seed)
                 for s in strategies]
    csv_text = summary_to_csv(summaries)
    if out:
        _write(out, csv_text)
        click.echo(json.dumps({"out": out}, sort_keys=True))
    else:
        click.echo(csv_text, nl=False)
    if traces_path:
        _write(traces_path,
               "".join(traces_to_jsonl(s.traces) for s in summaries))


@simulate.command("campaign")
@click.option("--topics", "n_topics", default=50, show_default=True)
@click.option("--noise", default=None, type=float,
              help="Thurstone noise sigma (defaults to the rating beta).")
@click.option("--policy", type=click.Choice(POLICIES), default="active",
              show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--budget", default=None, type=int,
              help="Annotation budget (default: C(n,2)/3).")
@click.option("--rho-target", default=0.9, show_default=True)
@click.option("--out", help="Write the result JSON here (stdout when omitted).")
@click.option("--log-out", help="Also write the generated annotation log.")
@fail_cleanly
def simulate_campaign_cmd(n_topics, noise, policy, seed, budget,
                          rho_target, out, log_out):
    """Run a synthetic end-to-end annotation campaign."""
    result = run_campaign(n_topics=n_topics, budget=budget, policy=policy,
                          seed=seed, noise=noise, rho_target=rho_target)
    payload = json.dumps({
        "policy": result.policy,
        "seed": result.seed,
        "annotations": len(result.annotations),
        "annotations_to_target": result.annotations_to_target,
        "rho_target": rho_target,
        "final_rho": round(result.final_rho, 6),
        "rho_curve": [[c, round(r, 6)] for c, r in result.rho_curve],
    }, sort_keys=True)
    if out:
        _write(out, payload + "\n")
        click.echo(json.dumps({"out": out}, sort_keys=True))
    else:
        click.echo(payload)
    if log_out:
        _write(log_out, annotations_to_jsonl(result.annotations))


@main.command()
@click.argument("kind", type=click.Choice(["ranking", "levels", "histogram",
                                           "traces"]))
@click.option("--log", "log_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--topics", "topics_path",
              type=click.Path(exists=True, dir_okay=False))
@click.option("--strategy", type=click.Choice(STRATEGIES), default="informed",
              show_default=True, help="Insertion strategy (traces export).")
@click.option("--seed", default=0, show_default=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@fail_cleanly
def export(kind, log_path, topics_path, strategy, seed, out):
    """Export one artifact from an annotation log."""
    annotations = _read_log(log_path)
    cfg = RatingConfig()
    topic_ids = None
    frequencies = {}
    if topics_path:
        topics = topics_from_jsonl(Path(topics_path).read_text("utf-8"))
        topic_ids = sorted(t.topic_id for t in topics)
        frequencies = {t.topic_id: t.frequency for t in topics}
    if kind == "traces":
        summary = insertion_summary(annotations, strategy, seed=seed)
        _write(out, traces_to_jsonl(summary.traces))
        click.echo(json.dumps({"out": out, "topics": len(summary.traces)},
                              sort_keys=True))
        return
    ranking = rank_annotations(annotations, topic_ids=topic_ids, cfg=cfg)
    if kind == "ranking":
        _write(out, ranking.to_tsv())
    else:
        if not len(ranking):
            raise ValueError("log contains no topics to cluster")
        report = choose_k_auto([r.mean for _, r in ranking.entries])
        assignments = assign_levels(ranking, report.chosen_k)
        if kind == "levels":
            _write(out, levels_to_csv(assignments, ranking))
        else:
            freq = {a.topic_id: frequencies.get(a.topic_id, 1)
                    for a in assignments}
            _write(out, histogram_to_csv(level_distribution(assignments, freq)))
    click.echo(json.dumps({"out": out, "topics": len(ranking)}, sort_keys=True))


if __name__ == "__main__":
    main()
