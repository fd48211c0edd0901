"""File formats: claims, stores, exemplars, gold, submissions.

Everything is JSONL, one record per line, UTF-8, no BOM. Inputs are read
tolerantly (aliases, optional fields); outputs are written with a fixed
key order so reruns produce byte-identical files.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Optional, Sequence

from ..agents.prompts import FewshotExample
from ..core import Claim, ImageRef, KnowledgeStore, Label, StoreEntry, StoreKind, parse_label
from ..errors import LabelInvalid
from ..evaluation.scoring import GoldRecord, PredRecord
from .pipeline import ClaimResult

log = logging.getLogger(__name__)

FALLBACK_LABEL = Label.NOT_ENOUGH_EVIDENCE


def _read_jsonl(path: Path | str) -> list[dict]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: invalid JSON: {exc}") from None
            if not isinstance(record, dict):
                raise ValueError(f"{path}:{lineno}: expected an object")
            out.append(record)
    return out


def _write_jsonl(records: Sequence[dict], path: Path | str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for record in records:
            fh.write(json.dumps(record, ensure_ascii=False))
            fh.write("\n")


def load_claims(path: Path | str) -> list[Claim]:
    """Claims file: claim_id, claim_text, optional claimant/claim_date/image_paths."""
    claims = []
    for record in _read_jsonl(path):
        images = tuple(
            ImageRef(id=f"{record['claim_id']}:img:{n}", location=p)
            for n, p in enumerate(record.get("image_paths", []), start=1)
        )
        claims.append(
            Claim(
                id=str(record["claim_id"]),
                text=record["claim_text"],
                claimant=record.get("claimant"),
                date=record.get("claim_date"),
                images=images,
                metadata={
                    k: v
                    for k, v in record.items()
                    if k not in ("claim_id", "claim_text", "claimant", "claim_date", "image_paths")
                },
            )
        )
    return claims


def load_store_file(path: Path | str, kind: StoreKind) -> KnowledgeStore:
    """One store file: lines of {url, url2text} or {url, image_path}."""
    entries = []
    for i, record in enumerate(_read_jsonl(path)):
        url = record.get("url", "")
        if kind.is_textual:
            text = record.get("url2text", record.get("text"))
            entries.append(StoreEntry(url=url, text=text))
        else:
            image_path = record.get("image_path")
            if not image_path:
                raise ValueError(f"{path}: image store record {i} lacks image_path")
            entries.append(
                StoreEntry(url=url, image=ImageRef(id=str(image_path), location=str(image_path)))
            )
    return KnowledgeStore(kind=kind, entries=tuple(entries))


def save_store_file(store: KnowledgeStore, path: Path | str) -> None:
    records = []
    for entry in store.entries:
        if store.kind.is_textual:
            record: dict = {"url": entry.url, "url2text": entry.text}
            if entry.fill_status.value != "original":
                record["fill_status"] = entry.fill_status.value
            if entry.note:
                record["note"] = entry.note
        else:
            record = {"url": entry.url, "image_path": entry.image.location if entry.image else None}
        records.append(record)
    _write_jsonl(records, path)


def store_path(stores_dir: Path | str, kind: StoreKind, claim_id: str, filled: bool = False) -> Path:
    suffix = ".filled.jsonl" if filled else ".jsonl"
    return Path(stores_dir) / kind.value / f"{claim_id}{suffix}"


def load_claim_stores(stores_dir: Path | str, claim_id: str) -> dict[StoreKind, KnowledgeStore]:
    """All stores present for a claim, preferring filled variants."""
    out: dict[StoreKind, KnowledgeStore] = {}
    for kind in StoreKind:
        filled = store_path(stores_dir, kind, claim_id, filled=True)
        plain = store_path(stores_dir, kind, claim_id)
        path = filled if filled.exists() else plain
        if path.exists():
            out[kind] = load_store_file(path, kind)
    return out


def load_exemplars(path: Path | str) -> list[FewshotExample]:
    """Training exemplars for few-shot selection."""
    out = []
    for record in _read_jsonl(path):
        text = record.get("claim_text", record.get("claim"))
        if not text:
            continue
        rows = record.get("qa_pairs", record.get("questions", []))
        pairs = tuple(
            (row["question"], row["answer"])
            for row in rows
            if isinstance(row, dict) and row.get("question") and row.get("answer")
        )
        out.append(FewshotExample(claim_text=text, pairs=pairs))
    return out


def load_gold(path: Path | str) -> list[GoldRecord]:
    out = []
    for record in _read_jsonl(path):
        raw_label = record.get("label", record.get("veracity_verdict"))
        rows = record.get("qa_pairs", record.get("questions", []))
        out.append(
            GoldRecord(
                claim_id=str(record["claim_id"]),
                label=parse_label(raw_label),
                pairs=tuple((r["question"], r.get("answer", "")) for r in rows),
                justification=record.get("justification", ""),
            )
        )
    return out


def submission_record(result: ClaimResult) -> dict:
    """The stable wire form of one claim's outcome.

    Failed claims degrade to a fixed fallback verdict; the reason lives in
    the error log, not the submission, so submissions stay comparable.
    """
    if result.verdict is None:
        stage = result.error_stage or "unknown"
        return {
            "claim_id": result.claim_id,
            "questions": [],
            "veracity_verdict": FALLBACK_LABEL.canonical,
            "justification": f"Verification could not be completed (stage: {stage}).",
        }
    return {
        "claim_id": result.claim_id,
        "questions": [
            {"question": p.question, "answer": p.answer} for p in result.verdict.selected
        ],
        "veracity_verdict": result.verdict.label.canonical,
        "justification": result.verdict.justification,
    }


def write_submission(results: Sequence[ClaimResult], path: Path | str) -> Path:
    """Write the submission plus a sibling error log when failures exist.

    Returns the error log path if one was written.
    """
    if not results:
        raise ValueError("refusing to write an empty submission")
    path = Path(path)
    _write_jsonl([submission_record(r) for r in results], path)
    errors = [r for r in results if r.failed]
    log_path = path.with_name(path.stem + ".errors.log")
    if errors:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(log_path, "w", encoding="utf-8", newline="\n") as fh:
            for r in errors:
                fh.write(f"{r.claim_id}\t{r.error_stage}\t{r.error}\n")
        log.warning("%d claim(s) failed; see %s", len(errors), log_path)
    elif log_path.exists():
        log_path.unlink()
    return log_path


def write_results(results: Sequence[ClaimResult], path: Path | str) -> None:
    """Diagnostic per-claim record: telemetry, timings, outcome."""
    records = []
    for r in results:
        records.append(
            {
                "claim_id": r.claim_id,
                "ok": not r.failed,
                "error_stage": r.error_stage,
                "error": r.error,
                "generate_calls": r.generate_calls,
                "cache_hits": list(r.cache_hits),
                "qa_pairs": len(r.qaset) if r.qaset is not None else 0,
                "label": r.verdict.label.canonical if r.verdict else None,
                "timings": {stage: round(sec, 6) for stage, sec in r.timings},
            }
        )
    _write_jsonl(records, path)


def parse_submission(path: Path | str) -> list[PredRecord]:
    """Read a submission for scoring; unusable labels become None."""
    out = []
    for record in _read_jsonl(path):
        label: Optional[Label]
        try:
            label = parse_label(record.get("veracity_verdict"))
        except LabelInvalid:
            label = None
        rows = record.get("questions", [])
        pairs = tuple(
            (str(r.get("question", "")), str(r.get("answer", "")))
            for r in rows
            if isinstance(r, dict)
        )
        out.append(
            PredRecord(
                claim_id=str(record["claim_id"]),
                label=label,
                pairs=pairs,
                justification=str(record.get("justification", "")),
            )
        )
    return out
