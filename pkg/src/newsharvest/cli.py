"""Command-line entry point: one subcommand per pipeline stage plus ``e2e``.

Every subcommand reads and writes files inside ``--out`` and appends an entry
to ``manifest.json`` there. Exit status is 0 on success, 1 when a stage fails
and 2 for usage or configuration errors.
"""

from __future__ import annotations

import argparse
import contextlib
import hashlib
import ipaddress
import json
import logging
import os
import socket
import sys
from dataclasses import replace
from pathlib import Path
from typing import Iterator, Sequence
from urllib.parse import urlsplit

from newsharvest import pipeline
from newsharvest.analyze import (
    build_stage_ledger,
    coverage_breakdown,
    distributions_to_csv,
    overlap,
    scores_by_cell,
    summary,
    typology_counts,
)
from newsharvest.config import RunConfig, load_config
from newsharvest.dedup import decisions_to_csv, dedup_merge
from newsharvest.enrich import enrich_all, enrichments_from_csv, enrichments_to_csv, load_rules, load_snapshot
from newsharvest.errors import ConfigError, HarvestError
from newsharvest.harvest import SimulatedClock, SystemClock
from newsharvest.llmmeta import ModelClient, annotate_all, detect_hallucination
from newsharvest.plan import QueryPlan, Stage, config_digest
from newsharvest.simnews.corpus import load_corpus
from newsharvest.simnews.server import SimNewsServer, serve
from newsharvest.store import Dataset, Origin, dataset_to_csv, export_delimited, format_ts, import_delimited
from newsharvest.validate import ValidationConfig, run_validation

log = logging.getLogger("newsharvest")

SIMNEWS = "simnews"
MANIFEST = "manifest.json"
POLITENESS_FLOOR_S = 1.0


class UsageError(HarvestError):
    pass


class StageFailure(HarvestError):
    def __init__(self, stage: str, message: str):
        super().__init__(f"stage {stage} failed: {message}")
        self.stage = stage


# --- manifest ----------------------------------------------------------------------

def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def append_manifest(
    out: Path,
    subcommand: str,
    outputs: dict[str, str],
    *,
    config: RunConfig | None,
    seed: int | None,
    started: str,
    finished: str,
    stage_counts: dict[str, int] | None = None,
    extra: dict | None = None,
) -> dict:
    """Record one subcommand run; output paths are relative to ``out``."""
    path = out / MANIFEST
    doc = json.loads(path.read_text(encoding="utf-8")) if path.exists() else {"runs": []}
    if config is not None:
        doc["config_digest"] = config_digest(config.raw)
        doc["topic"] = config.topic
    doc["seed"] = seed
    if stage_counts:
        doc.setdefault("stage_query_counts", {}).update(stage_counts)
    entry = {
        "subcommand": subcommand,
        "started_at": started,
        "finished_at": finished,
        "seed": seed,
        "outputs": dict(sorted(outputs.items())),
        "digests": {name: _sha256(out / rel) for name, rel in sorted(outputs.items())},
    }
    if extra:
        entry.update(extra)
    doc["runs"].append(entry)
    path.write_text(json.dumps(doc, indent=2, ensure_ascii=False, sort_keys=True) + "\n", encoding="utf-8")
    return doc


# --- wiring ------------------------------------------------------------------------

def _is_loopback(url: str | None) -> bool:
    if not url:
        return False
    host = urlsplit(url if "://" in url else f"http://{url}").hostname or ""
    if host == "localhost":
        return True
    try:
        return ipaddress.ip_address(host).is_loopback
    except ValueError:
        try:
            return ipaddress.ip_address(socket.gethostbyname(host)).is_loopback
        except OSError:
            return False


def _config(args) -> RunConfig:
    cfg = load_config(args.config)
    if getattr(args, "topic", None):
        cfg = replace(cfg, topic=args.topic)
    return cfg


def _politeness(args, cfg: RunConfig):
    lo = args.min_delay if args.min_delay is not None else cfg.min_delay_s
    hi = args.max_delay if args.max_delay is not None else cfg.max_delay_s
    if lo < POLITENESS_FLOOR_S and not args.i_understand_politeness:
        raise UsageError(
            f"--min-delay {lo} is below {POLITENESS_FLOOR_S} s; pass --i-understand-politeness to allow it"
        )
    try:
        return cfg.policy(min_delay_s=lo, max_delay_s=hi)
    except (ValueError, ConfigError) as exc:
        raise UsageError(str(exc)) from exc


class Wiring:
    """Endpoint, proxy, model URL and clock resolved from flags and environment."""

    def __init__(self, endpoint: str, proxy: str | None, model_url: str | None, virtual: bool, label: str):
        self.endpoint = endpoint
        self.proxy = proxy
        self.model_url = model_url
        self.virtual = virtual
        self.label = label


@contextlib.contextmanager
def wiring(args, need_endpoint: bool = True) -> Iterator[Wiring]:
    endpoint = args.endpoint or os.environ.get("NEWSHARVEST_ENDPOINT")
    model_url = getattr(args, "model_url", None) or os.environ.get("NEWSHARVEST_MODEL_URL")
    if endpoint == SIMNEWS:
        corpus = load_corpus(args.fixture)
        with SimNewsServer(corpus) as server:
            yield Wiring(server.endpoint, server.proxy, model_url or server.model_url, True, SIMNEWS)
        return
    if need_endpoint and not endpoint:
        raise UsageError("an endpoint is required (--endpoint or NEWSHARVEST_ENDPOINT); use 'simnews' for fixtures")
    virtual = bool(args.virtual_clock)
    if virtual and not _is_loopback(args.proxy or endpoint):
        raise UsageError("--virtual-clock is only allowed against a loopback endpoint or proxy")
    yield Wiring(endpoint or "", args.proxy, model_url, virtual, endpoint or "")


def _clock(args):
    return SimulatedClock() if getattr(args, "virtual_clock", False) else SystemClock()


def _model(w: Wiring, cfg: RunConfig) -> ModelClient | None:
    return ModelClient(w.model_url, model=cfg.model) if w.model_url else None


def _read_dataset(path: Path, name: str = pipeline.DATASET_NAME) -> Dataset:
    if not path.exists():
        raise UsageError(f"missing input {path}; run the preceding subcommand first")
    return import_delimited(path, origin=Origin.AGGREGATOR, name=name)


def _input(args, default: str) -> Path:
    return Path(args.input) if getattr(args, "input", None) else args.out / default


def _write(out: Path, name: str, text: str) -> str:
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text, encoding="utf-8", newline="")
    return name


# --- subcommands -------------------------------------------------------------------

def cmd_plan(args) -> int:
    cfg = _config(args)
    plan = cfg.static_plan()
    outputs = {
        "plan": _write(args.out, "plan.json", plan.to_json()),
        "plan_text": _write(args.out, "plan.txt", plan.render_lines()),
    }
    counts = plan.stage_counts()
    if cfg.domains is None and cfg.domain_editions:
        counts[Stage.S4_DOMAINS.value] = 0
    now = format_ts(_clock(args).now())
    extra = {"s4_domains": "derived at run time" if cfg.domains is None else len(cfg.domains)}
    append_manifest(args.out, "plan", outputs, config=cfg, seed=args.seed, started=now, finished=now,
                    stage_counts=counts, extra=extra)
    for stage, n in counts.items():
        print(f"{stage:<14}{n:>6}")
    print(f"{'total':<14}{len(plan):>6}")
    return 0


def cmd_harvest(args) -> int:
    cfg = _config(args)
    plan_path = args.out / "plan.json"
    plan = QueryPlan.from_json(plan_path.read_text(encoding="utf-8")) if plan_path.exists() else cfg.static_plan()
    policy = _politeness(args, cfg)
    with wiring(args) as w:
        fetcher = pipeline.make_fetcher(policy, args.seed, w.proxy, w.virtual)
        started = format_ts(fetcher.clock.now())
        col = pipeline.Collector(cfg, fetcher, w.endpoint, args.threshold or cfg.threshold)
        results, outcomes = col.execute(plan)
        finished = format_ts(fetcher.clock.now())
    if len(plan) and not outcomes:
        raise StageFailure("harvest", f"all {len(plan)} queries failed")
    outputs = {"raw_results": _write(args.out, "raw_results.jsonl", pipeline.raw_to_jsonl(results))}
    append_manifest(args.out, "harvest", outputs, config=cfg, seed=args.seed, started=started, finished=finished,
                    stage_counts=plan.stage_counts(),
                    extra={"endpoint": w.label, "failed_queries": len(plan) - len(outcomes)})
    print(f"{len(results)} raw results from {len(outcomes)}/{len(plan)} queries")
    return 0


def cmd_dedup(args) -> int:
    path = _input(args, "raw_results.jsonl")
    if not path.exists():
        raise UsageError(f"missing input {path}; run harvest first")
    raw = pipeline.raw_from_jsonl(path.read_text(encoding="utf-8"))
    threshold = args.threshold if args.threshold is not None else 0.9
    unique, decisions = dedup_merge(raw, threshold)
    outputs = {
        "raw_unique": _write(args.out, "raw_unique.jsonl", pipeline.raw_to_jsonl(unique)),
        "dedup_decisions": _write(args.out, "dedup_decisions.csv", decisions_to_csv(decisions)),
    }
    now = format_ts(_clock(args).now())
    append_manifest(args.out, "dedup", outputs, config=None, seed=args.seed, started=now, finished=now,
                    extra={"threshold": threshold})
    print(f"{len(raw)} raw results -> {len(unique)} unique")
    return 0


def cmd_extract(args) -> int:
    cfg = _config(args)
    path = _input(args, "raw_results.jsonl")
    if not path.exists():
        raise UsageError(f"missing input {path}; run harvest first")
    raw = pipeline.raw_from_jsonl(path.read_text(encoding="utf-8"))
    policy = _politeness(args, cfg)
    with wiring(args) as w:
        fetcher = pipeline.make_fetcher(policy, args.seed, w.proxy, w.virtual)
        started = format_ts(fetcher.clock.now())
        col = pipeline.Collector(cfg, fetcher, w.endpoint, args.threshold or cfg.threshold)
        for stage in sorted({Stage(r.stage) for r in raw}, key=lambda s: s.order):
            col.absorb(stage, [r for r in raw if r.stage == stage.value])
        if cfg.domain_editions and not any(r.stage == Stage.S4_DOMAINS.value for r in raw):
            # domain queries need the harvested domains, so they run here
            col.run_stage(Stage.S4_DOMAINS, cfg.stage4(col.harvested_domains()))
        _, backfilled = col.backfill()
        finished = format_ts(fetcher.clock.now())
    ds = Dataset(pipeline.DATASET_NAME, Origin.AGGREGATOR).derive(col.records, "extract")
    outputs = {
        "records": _write(args.out, "records.csv", dataset_to_csv(ds)),
        "stage_events": _write(args.out, "stage_events.csv", pipeline.events_to_csv(col.events)),
        "backfill": _write(args.out, "backfill.csv", pipeline.backfill_to_csv(backfilled)),
        "raw_all": _write(args.out, "raw_all.jsonl", pipeline.raw_to_jsonl(col.raw)),
    }
    append_manifest(args.out, "extract", outputs, config=cfg, seed=args.seed, started=started, finished=finished,
                    extra={"endpoint": w.label})
    with_text = sum(1 for r in ds.records if r.full_text)
    print(f"{len(ds)} records, {with_text} with text")
    return 0


def cmd_annotate(args) -> int:
    cfg = _config(args)
    ds = _read_dataset(_input(args, "records.csv"))
    records, flags = detect_hallucination(ds.records)
    ds = ds.derive(records, "hallucination", f"groups={len(flags)}")
    with wiring(args, need_endpoint=False) as w:
        model = _model(w, cfg)
        if model is None:
            raise UsageError("annotate needs a model URL (--model-url or NEWSHARVEST_MODEL_URL)")
        clock = _clock(args)
        started = format_ts(clock.now())
        ds = ds.derive(annotate_all(ds.records, model), "annotate", f"model={model.model}")
    outputs = {
        "annotated": _write(args.out, "annotated.csv", dataset_to_csv(ds)),
        "hallucination_flags": _write(args.out, "hallucination_flags.csv", pipeline.flags_to_csv(flags)),
    }
    append_manifest(args.out, "annotate", outputs, config=cfg, seed=args.seed, started=started,
                    finished=format_ts(clock.now()))
    print(f"{len(ds)} records annotated, {len(flags)} hallucination group(s)")
    return 0


def cmd_validate(args) -> int:
    cfg = _config(args)
    path = _input(args, "annotated.csv")
    if not path.exists() and not args.input:
        path = args.out / "records.csv"
    ds = _read_dataset(path)
    clean, report = run_validation(ds, ValidationConfig(cfg.topic_tokens))
    outputs = {
        "dataset": _write(args.out, "dataset.csv", dataset_to_csv(clean)),
        "noise_report": _write(args.out, "noise_report.csv", report.to_csv()),
        "noise_summary": _write(args.out, "noise_summary.txt", report.summary()),
    }
    now = format_ts(_clock(args).now())
    append_manifest(args.out, "validate", outputs, config=cfg, seed=args.seed, started=now, finished=now)
    print(report.summary(), end="")
    return 0


def cmd_enrich(args) -> int:
    ds = _read_dataset(_input(args, "dataset.csv"))
    enrichments = enrich_all(ds.records, load_snapshot(args.snapshot), load_rules(args.rules))
    outputs = {"enrichment": _write(args.out, "enrichment.csv", enrichments_to_csv(enrichments))}
    now = format_ts(_clock(args).now())
    append_manifest(args.out, "enrich", outputs, config=None, seed=args.seed, started=now, finished=now,
                    extra={"snapshot": Path(args.snapshot).name if args.snapshot else "bundled"})
    matched = sum(1 for e in enrichments if e.in_smr)
    print(f"{len(enrichments)} records enriched, {matched} matched the ranking snapshot")
    return 0


def cmd_analyze(args) -> int:
    outputs: dict[str, str] = {}
    ledger = None
    events_path = args.out / "stage_events.csv"
    dataset_path = args.out / "dataset.csv"
    if events_path.exists():
        post = len(_read_dataset(dataset_path)) if dataset_path.exists() else None
        ledger = build_stage_ledger(pipeline.events_from_csv(events_path.read_text(encoding="utf-8")), post)
        outputs["ledger"] = _write(args.out, "stage_ledger.csv", ledger.to_csv())
    cov = typologies = None
    enrich_path = args.out / "enrichment.csv"
    if enrich_path.exists():
        enrichments = enrichments_from_csv(enrich_path.read_text(encoding="utf-8"))
        cov = coverage_breakdown(enrichments)
        typologies = typology_counts(enrichments)
        outputs["coverage"] = _write(args.out, "coverage.csv", cov.to_csv())
        cells = scores_by_cell({pipeline.DATASET_NAME: enrichments}, home_country=args.home_country)
        if cells:
            outputs["distributions"] = _write(args.out, "distributions.csv", distributions_to_csv(cells))
    report = None
    if args.compare:
        datasets = {}
        for spec in args.compare:
            name, sep, path = spec.partition("=")
            if not sep:
                raise UsageError(f"--compare expects NAME=PATH, got {spec!r}")
            datasets[name] = import_delimited(path, origin=Origin.IMPORT, name=name).records
        threshold = args.threshold if args.threshold is not None else 0.9
        report = overlap(datasets, threshold=threshold)
        outputs["overlap"] = _write(args.out, "overlap.csv", report.to_csv())
    if not outputs:
        raise UsageError(f"nothing to analyze in {args.out}; expected stage_events.csv or enrichment.csv")
    text = summary(ledger, report, cov, typologies)
    outputs["analysis_summary"] = _write(args.out, "analysis_summary.txt", text)
    now = format_ts(_clock(args).now())
    append_manifest(args.out, "analyze", outputs, config=None, seed=args.seed, started=now, finished=now)
    print(text, end="")
    return 0


def cmd_export(args) -> int:
    ds = _read_dataset(_input(args, "dataset.csv"))
    if args.dest is None:
        raise UsageError("export needs --dest")
    dest = Path(args.dest)
    n = export_delimited(ds, dest)
    now = format_ts(_clock(args).now())
    append_manifest(args.out, "export", {}, config=None, seed=args.seed, started=now, finished=now,
                    extra={"dest": dest.name, "records": n, "digest": _sha256(dest)})
    print(f"{n} records written to {dest}")
    return 0


def cmd_e2e(args) -> int:
    cfg = _config(args)
    policy = _politeness(args, cfg)
    snapshot = load_snapshot(args.snapshot)
    rules = load_rules(args.rules)
    with wiring(args) as w:
        fetcher = pipeline.make_fetcher(policy, args.seed, w.proxy, w.virtual)
        started = format_ts(fetcher.clock.now())
        model = _model(w, cfg)
        if model is None:
            log.warning("no model URL configured; metadata annotation skipped")
        result = pipeline.run_all(cfg, fetcher, w.endpoint, model, snapshot, rules, args.threshold)
        finished = format_ts(fetcher.clock.now())
    outputs = pipeline.write_outputs(result, args.out)
    counts = {run.stage.value: run.queries for run in result.collector.stage_runs}
    append_manifest(args.out, "e2e", outputs, config=cfg, seed=args.seed, started=started, finished=finished,
                    stage_counts=counts, extra={"endpoint": w.label})
    print(result.ledger.to_csv(), end="")
    print(result.report.summary(), end="")
    return 0


def cmd_serve(args) -> int:
    server = serve(load_corpus(args.fixture), args.bind)
    print(f"aggregator endpoint {server.endpoint} via proxy {server.proxy}")
    print(f"model endpoint      {server.model_url}")
    sys.stdout.flush()
    try:
        server._thread.join()
    except KeyboardInterrupt:
        pass
    finally:
        server.stop()
    return 0


# --- argument parsing --------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default="simnews.json", help="run configuration (JSON); bundled names work")
    common.add_argument("--out", type=Path, default=Path("run"), help="artifact directory (default: ./run)")
    common.add_argument("--seed", type=int, default=0, help="seed for delay jitter and agent rotation")
    common.add_argument("--topic", help="override the configured topic")
    common.add_argument("--threshold", type=float, help="headline similarity threshold for dedup")
    common.add_argument("--input", help="explicit input file instead of the default inside --out")
    common.add_argument("-v", "--verbose", action="store_true")

    net = argparse.ArgumentParser(add_help=False)
    net.add_argument("--endpoint", help="aggregator base URL, or 'simnews' to start the fixture server")
    net.add_argument("--proxy", help="HTTP proxy for all requests")
    net.add_argument("--model-url", help="completion endpoint of the local language model")
    net.add_argument("--fixture", help="fixture corpus JSON for the simnews server")
    net.add_argument("--virtual-clock", action="store_true", help="simulate politeness waits (loopback only)")
    net.add_argument("--min-delay", type=float, help="minimum seconds between requests to one host")
    net.add_argument("--max-delay", type=float, help="maximum seconds between requests to one host")
    net.add_argument("--i-understand-politeness", action="store_true",
                     help="allow a minimum delay below one second")

    ranking = argparse.ArgumentParser(add_help=False)
    ranking.add_argument("--snapshot", help="ranking snapshot CSV (default: bundled sample)")
    ranking.add_argument("--rules", help="typology rules JSON (default: bundled)")

    parser = argparse.ArgumentParser(prog="newsharvest", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="SUBCOMMAND", required=True)

    def add(name, func, help_text, parents=()):
        p = sub.add_parser(name, parents=[common, *parents], help=help_text)
        p.set_defaults(func=func)
        return p

    add("plan", cmd_plan, "render the query plan")
    add("harvest", cmd_harvest, "execute the plan and store raw results", [net])
    add("dedup", cmd_dedup, "collapse duplicate raw results")
    add("extract", cmd_extract, "resolve links, extract article text and backfill", [net])
    add("annotate", cmd_annotate, "screen placeholder text and annotate metadata with the model", [net])
    add("validate", cmd_validate, "filter noise and write the noise report")
    add("enrich", cmd_enrich, "attach ranking scores and source typology", [ranking])
    p = add("analyze", cmd_analyze, "stage ledger, coverage, distributions and overlap")
    p.add_argument("--compare", action="append", metavar="NAME=PATH", help="dataset CSV for overlap analysis")
    p.add_argument("--home-country", default="ES")
    p = add("export", cmd_export, "write the final dataset as delimited text")
    p.add_argument("--dest", help="destination file")
    add("e2e", cmd_e2e, "run every stage against an endpoint", [net, ranking])
    p = sub.add_parser("serve", help="run the simnews fixture server in the foreground")
    p.add_argument("--fixture")
    p.add_argument("--bind", default="127.0.0.1:8765")
    p.set_defaults(func=cmd_serve, verbose=False)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with status 2 on usage errors
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"newsharvest {args.command}: {exc}", file=sys.stderr)
        return 2
    except StageFailure as exc:
        print(f"newsharvest: {exc}", file=sys.stderr)
        return 1
    except (HarvestError, OSError) as exc:
        print(f"newsharvest: stage {args.command} failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
