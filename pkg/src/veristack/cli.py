"""Command-line entry points.

Subcommands mirror the pipeline's phases: fill stores, warm the embedding
index, run claims end to end, evaluate a submission, summarize store
statistics. Exit codes: 0 success, 1 completed with per-claim failures,
2 fatal (bad input, unreachable backend, config errors).
"""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click

from . import __version__
from .backend import HttpBackend, StubBackend
from .backend.wire import ModelBackend
from .core import PipelineConfig, StoreKind, load_config
from .errors import VeristackError
from .evaluation import BackendJudge, LexicalJudge, score_run
from .orchestrator import (
    StageCache,
    load_claim_stores,
    load_claims,
    load_exemplars,
    load_gold,
    load_store_file,
    parse_submission,
    run_batch,
    save_store_file,
    store_path,
    write_results,
    write_submission,
)
from .retrieval import EmbedCache, build_text_index
from .storefill import FakeFetcher, HttpFetcher, fill_store, snapshot_stats
from .storefill.fetch import BrowserFetcher

log = logging.getLogger(__name__)


def _fatal(message: str) -> "SystemExit":
    click.echo(f"error: {message}", err=True)
    return SystemExit(2)


def _load_cfg(config_path: str | None) -> PipelineConfig:
    try:
        return load_config(config_path)
    except VeristackError as exc:
        raise _fatal(str(exc)) from None


def _make_backend(spec: str | None, cfg: PipelineConfig) -> ModelBackend:
    """'fake' selects the in-process deterministic stub; anything else is a
    base URL for a live backend."""
    spec = spec or cfg.backend_url
    if spec == "fake":
        return StubBackend()
    return HttpBackend(spec, timeout=cfg.backend_timeout, retry_budget=cfg.retry_budget)


def _make_fetcher(kind: str, pages_file: str | None, cfg: PipelineConfig):
    if kind == "fake":
        pages = {}
        if pages_file:
            pages = json.loads(Path(pages_file).read_text("utf-8"))
        return FakeFetcher(pages)
    if kind == "browser":
        return BrowserFetcher(timeout=cfg.fetch_timeout)
    return HttpFetcher(timeout=cfg.fetch_timeout)


@click.group()
@click.version_option(version=__version__, prog_name="veristack")
@click.option("--verbose", is_flag=True, help="Debug-level logging.")
def main(verbose: bool) -> None:
    """Multi-agent multimodal fact verification over offline stores."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


@main.command()
@click.option("--stores", "stores_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--fetcher", type=click.Choice(["http", "browser", "fake"]), default="http")
@click.option("--pages", "pages_file", type=click.Path(exists=True, dir_okay=False), default=None,
              help="url -> html JSON mapping, required for --fetcher fake.")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
def fill(stores_dir: str, out_dir: str, fetcher: str, pages_file: str | None, config_path: str | None) -> None:
    """Fetch replacements for empty/generic/restricted store entries.

    Writes filled stores under OUT with the input layout; when OUT is the
    input directory itself, filled variants are written as .filled.jsonl
    siblings so originals stay untouched.
    """
    cfg = _load_cfg(config_path)
    try:
        fetch_impl = _make_fetcher(fetcher, pages_file, cfg)
    except VeristackError as exc:
        raise _fatal(str(exc)) from None
    in_root = Path(stores_dir).resolve()
    out_root = Path(out_dir).resolve()
    sibling_mode = in_root == out_root
    report = []
    for kind in StoreKind:
        if not kind.is_textual:
            continue
        kind_dir = in_root / kind.value
        if not kind_dir.is_dir():
            continue
        for path in sorted(kind_dir.glob("*.jsonl")):
            if path.name.endswith(".filled.jsonl"):
                continue
            store = load_store_file(path, kind)
            filled, stats = fill_store(store, fetch_impl, cfg)
            claim_id = path.name[: -len(".jsonl")]
            target = (
                store_path(out_root, kind, claim_id, filled=True)
                if sibling_mode
                else store_path(out_root, kind, claim_id)
            )
            save_store_file(filled, target)
            report.append(
                {
                    "store": kind.value,
                    "claim_id": claim_id,
                    "original_useful": stats.original.min,
                    "filled_useful": stats.filled.min,
                }
            )
    click.echo(json.dumps(report, indent=2))


@main.command()
@click.option("--stores", "stores_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--cache", "cache_dir", required=True, type=click.Path(file_okay=False))
@click.option("--backend", "backend_spec", default=None, help="Backend URL, or 'fake'.")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
def index(stores_dir: str, cache_dir: str, backend_spec: str | None, config_path: str | None) -> None:
    """Pre-embed every textual store into the on-disk embedding cache."""
    cfg = _load_cfg(config_path)
    backend = _make_backend(backend_spec, cfg)
    cache = EmbedCache(cache_dir, cfg.embed_model)
    total_docs = 0
    total_chunks = 0
    for kind in StoreKind:
        if not kind.is_textual:
            continue
        kind_dir = Path(stores_dir) / kind.value
        if not kind_dir.is_dir():
            continue
        for path in sorted(kind_dir.glob("*.jsonl")):
            store = load_store_file(path, kind)
            dense_index, doc_map = build_text_index(store, backend, cfg, cache)
            total_docs += len(doc_map)
            total_chunks += len(dense_index)
    click.echo(json.dumps({"documents": total_docs, "chunks": total_chunks}))


@main.command()
@click.option("--claims", "claims_file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--stores", "stores_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--backend", "backend_spec", default=None, help="Backend URL, or 'fake'.")
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--train", "train_file", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Exemplar pool for few-shot QA prompts.")
@click.option("--no-cache", is_flag=True, help="Disable the stage cache for this run.")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
def run(
    claims_file: str,
    stores_dir: str,
    out_dir: str,
    backend_spec: str | None,
    workers: int,
    train_file: str | None,
    no_cache: bool,
    config_path: str | None,
) -> None:
    """Verify every claim and write submission.jsonl under OUT."""
    cfg = _load_cfg(config_path)
    backend = _make_backend(backend_spec, cfg)
    try:
        claims = load_claims(claims_file)
    except (OSError, ValueError, KeyError, VeristackError) as exc:
        raise _fatal(f"cannot load claims: {exc}") from None
    if not claims:
        raise _fatal("claims file is empty")
    train = cfg.train_file if train_file is None else train_file
    exemplars = load_exemplars(train) if train else None
    out_root = Path(out_dir)
    out_root.mkdir(parents=True, exist_ok=True)
    cache = StageCache(None if no_cache else out_root / "stage_cache")
    results = run_batch(
        claims,
        lambda claim: load_claim_stores(stores_dir, claim.id),
        cfg,
        backend,
        workers=workers,
        cache=cache,
        exemplars=exemplars,
        embed_cache_root=None if no_cache else str(out_root / "embed_cache"),
    )
    write_submission(results, out_root / "submission.jsonl")
    write_results(results, out_root / "results.jsonl")
    failed = sum(1 for r in results if r.failed)
    click.echo(
        json.dumps(
            {
                "claims": len(results),
                "failed": failed,
                "generate_calls": sum(r.generate_calls for r in results),
                "submission": str(out_root / "submission.jsonl"),
            }
        )
    )
    if failed:
        sys.exit(1)


@main.command("eval")
@click.option("--pred", "pred_file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--gold", "gold_file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--judge", "judge_kind", type=click.Choice(["lexical", "backend"]), default="lexical",
              show_default=True)
@click.option("--backend", "backend_spec", default=None, help="Backend URL for --judge backend.")
@click.option("--runs", type=int, default=None, help="Judging repetitions (mean/std reporting).")
@click.option("--out", "out_file", type=click.Path(dir_okay=False), default=None)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
def eval_cmd(
    pred_file: str,
    gold_file: str,
    judge_kind: str,
    backend_spec: str | None,
    runs: int | None,
    out_file: str | None,
    config_path: str | None,
) -> None:
    """Score a submission against gold annotations."""
    cfg = _load_cfg(config_path)
    try:
        preds = parse_submission(pred_file)
        golds = load_gold(gold_file)
    except (OSError, ValueError, KeyError, VeristackError) as exc:
        raise _fatal(f"cannot load inputs: {exc}") from None
    if judge_kind == "backend":
        judge = BackendJudge(_make_backend(backend_spec, cfg), cfg.generate_model)
    else:
        judge = LexicalJudge()
    try:
        report = score_run(preds, golds, judge, cfg, runs=runs)
    except VeristackError as exc:
        raise _fatal(str(exc)) from None
    payload = json.dumps(report, indent=2, sort_keys=True)
    if out_file:
        Path(out_file).write_text(payload + "\n", encoding="utf-8")
    click.echo(payload)


@main.command()
@click.option("--stores", "stores_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--split", "split_name", default=None, help="Label for the rows; defaults to the dir name.")
def stats(stores_dir: str, split_name: str | None) -> None:
    """Per-store evidence-count statistics, original vs filled."""
    root = Path(stores_dir)
    split = split_name or root.name
    rows = []
    for kind in StoreKind:
        kind_dir = root / kind.value
        if not kind_dir.is_dir():
            continue
        originals = []
        filled = []
        for path in sorted(kind_dir.glob("*.jsonl")):
            if path.name.endswith(".filled.jsonl"):
                continue
            originals.append(load_store_file(path, kind))
            claim_id = path.name[: -len(".jsonl")]
            filled_path = store_path(root, kind, claim_id, filled=True)
            filled.append(load_store_file(filled_path if filled_path.exists() else path, kind))
        if not originals:
            continue
        for status, stores_list in (("original", originals), ("filled", filled)):
            snap = snapshot_stats(stores_list)
            rows.append(
                {
                    "split": split,
                    "store": kind.value,
                    "status": status,
                    "avg": round(snap.avg, 4),
                    "min": snap.min,
                    "max": snap.max,
                }
            )
    if not rows:
        raise _fatal(f"no store files found under {stores_dir}")
    click.echo(json.dumps(rows, indent=2))


@main.group()
def cache() -> None:
    """Stage-cache maintenance."""


@cache.command("clear")
@click.option("--dir", "cache_dir", required=True, type=click.Path(file_okay=False))
def cache_clear(cache_dir: str) -> None:
    removed = StageCache(cache_dir).clear()
    click.echo(json.dumps({"removed": removed}))


if __name__ == "__main__":
    main()
