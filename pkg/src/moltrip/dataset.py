"""Pair ingestion, seeded splitting, overlap removal, diagnostic filtering.

Input files are either line-delimited JSON records with smiles/caption/id
fields or two-column tab-separated text.  Malformed lines are never silently
dropped: every loader and filter returns a sidecar naming the line or record
and the reason it was set aside.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field

from .chem import SmilesError, canonical_smiles, parse_smiles
from .metrics import reconstruction_score


class IoFailure(OSError):
    """The underlying file could not be read or written."""


class FormatUnknown(ValueError):
    """The input file matches neither supported pair format."""


class EmptyInput(ValueError):
    """An operation needs at least one record."""


@dataclass(frozen=True)
class PairRecord:
    smiles: str
    caption: str
    id: str | None = None
    provenance: str = ""

    def __post_init__(self) -> None:
        if not self.smiles:
            raise ValueError("smiles must be non-empty")


@dataclass(frozen=True)
class SplitSpec:
    ratios: tuple[float, float, float] = (0.8, 0.1, 0.1)
    seed: int = 0

    def __post_init__(self) -> None:
        if any(r < 0 for r in self.ratios):
            raise ValueError("ratios must be non-negative")
        if abs(sum(self.ratios) - 1.0) > 1e-9:
            raise ValueError(f"ratios sum to {sum(self.ratios)!r}, not 1")


@dataclass(frozen=True)
class SidecarEntry:
    line_no: int
    content: str
    reason: str


@dataclass(frozen=True)
class LoadResult:
    records: tuple[PairRecord, ...]
    sidecar: tuple[SidecarEntry, ...]


# ---------------------------------------------------------------------------
# loading and writing

def load_pairs(path: str) -> LoadResult:
    """Parse a pair file; malformed lines land in the sidecar with numbers."""
    try:
        with open(path, encoding="utf-8") as handle:
            lines = handle.read().splitlines()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    first = next((line for line in lines if line.strip()), None)
    if first is None:
        return LoadResult(records=(), sidecar=())
    if first.lstrip().startswith("{"):
        reader = _read_json_line
    elif "\t" in first:
        reader = _read_tsv_line
    else:
        raise FormatUnknown(
            f"{path}: first data line is neither a JSON record nor tab-separated"
        )
    records: list[PairRecord] = []
    sidecar: list[SidecarEntry] = []
    for number, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            records.append(reader(line))
        except (ValueError, KeyError) as exc:
            sidecar.append(SidecarEntry(number, line, str(exc)))
    return LoadResult(records=tuple(records), sidecar=tuple(sidecar))


def _read_json_line(line: str) -> PairRecord:
    body = json.loads(line)
    if not isinstance(body, dict):
        raise ValueError("record is not an object")
    return PairRecord(
        smiles=body["smiles"],
        caption=body.get("caption", ""),
        id=body.get("id"),
        provenance=body.get("provenance", ""),
    )


def _read_tsv_line(line: str) -> PairRecord:
    parts = line.split("\t")
    if len(parts) != 2:
        raise ValueError(f"expected 2 tab-separated columns, found {len(parts)}")
    return PairRecord(smiles=parts[0].strip(), caption=parts[1].strip())


def write_pairs(records: list[PairRecord], path: str, fmt: str = "jsonl") -> None:
    if fmt not in ("jsonl", "tsv"):
        raise ValueError(f"unknown format {fmt!r}")
    try:
        with open(path, "w", encoding="utf-8") as handle:
            for record in records:
                if fmt == "jsonl":
                    body = {"smiles": record.smiles, "caption": record.caption}
                    if record.id is not None:
                        body["id"] = record.id
                    if record.provenance:
                        body["provenance"] = record.provenance
                    handle.write(json.dumps(body) + "\n")
                else:
                    handle.write(f"{record.smiles}\t{record.caption}\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# splitting

Partition = tuple[
    tuple[PairRecord, ...], tuple[PairRecord, ...], tuple[PairRecord, ...]
]


def split(pairs: list[PairRecord], spec: SplitSpec) -> Partition:
    """Seeded shuffle, floor-sized val/test, remainder records to train."""
    if not pairs:
        raise EmptyInput("cannot split zero pairs")
    shuffled = list(pairs)
    random.Random(spec.seed).shuffle(shuffled)
    n = len(shuffled)
    # the epsilon guards floors of products like 10 * 0.8 = 7.999...
    sizes = [int(math.floor(n * r + 1e-9)) for r in spec.ratios]
    remainder = n - sum(sizes)
    train_size = sizes[0] + remainder
    train = shuffled[:train_size]
    val = shuffled[train_size:train_size + sizes[1]]
    test = shuffled[train_size + sizes[1]:]
    return tuple(train), tuple(val), tuple(test)


# ---------------------------------------------------------------------------
# overlap removal

@dataclass(frozen=True)
class DedupeResult:
    kept: tuple[PairRecord, ...]
    removed: tuple[PairRecord, ...]
    overlap_fraction: float
    sidecar: tuple[SidecarEntry, ...]


def dedupe_overlap(
    target: list[PairRecord],
    reference: list[PairRecord],
    on_parse_error: str = "drop",
) -> DedupeResult:
    """Drop target records whose canonical SMILES occurs in the reference."""
    if on_parse_error not in ("drop", "keep"):
        raise ValueError("on_parse_error must be 'drop' or 'keep'")
    reference_keys: set[str] = set()
    sidecar: list[SidecarEntry] = []
    for i, record in enumerate(reference):
        try:
            reference_keys.add(canonical_smiles(parse_smiles(record.smiles)))
        except SmilesError as exc:
            sidecar.append(SidecarEntry(i, record.smiles, f"reference: {exc}"))
    kept: list[PairRecord] = []
    removed: list[PairRecord] = []
    overlap = 0
    for i, record in enumerate(target):
        try:
            key = canonical_smiles(parse_smiles(record.smiles))
        except SmilesError as exc:
            sidecar.append(SidecarEntry(i, record.smiles, f"target: {exc}"))
            if on_parse_error == "keep":
                kept.append(record)
            else:
                removed.append(record)
            continue
        if key in reference_keys:
            overlap += 1
            removed.append(record)
        else:
            kept.append(record)
    fraction = overlap / len(target) if target else 0.0
    return DedupeResult(
        kept=tuple(kept),
        removed=tuple(removed),
        overlap_fraction=fraction,
        sidecar=tuple(sidecar),
    )


# ---------------------------------------------------------------------------
# round-trip diagnostic filter

@dataclass(frozen=True)
class PairScore:
    record: PairRecord
    score: float | None
    kept: bool
    reason: str = ""


@dataclass(frozen=True)
class FilterResult:
    kept: tuple[PairRecord, ...]
    rejected: tuple[PairRecord, ...]
    scores: tuple[PairScore, ...] = field(repr=False)


def diagnostic_filter(
    pairs: list[PairRecord],
    generator,
    tau: float,
    m: int = 1,
    temperature: float = 1.0,
) -> FilterResult:
    """Keep pairs whose caption reconstructs with mean score >= tau.

    Each caption is handed to the generator adapter for m samples; the mean
    total reconstruction score against the pair's own molecule decides.
    Adapter failures reject the pair with the failure recorded, never raise.
    """
    if not 0.0 <= tau <= 4.0:
        raise ValueError("tau must lie in [0, 4]")
    if m < 1:
        raise ValueError("m must be >= 1")
    kept: list[PairRecord] = []
    rejected: list[PairRecord] = []
    scores: list[PairScore] = []
    for record in pairs:
        try:
            samples = generator.generate(record.caption, m, temperature)
            total = 0.0
            for sample in samples:
                total += reconstruction_score(record.smiles, sample.text).total
            mean_score = total / m
        except Exception as exc:  # adapter failures reject, never raise
            rejected.append(record)
            scores.append(PairScore(
                record, None, False, f"{type(exc).__name__}: {exc}"
            ))
            continue
        if mean_score >= tau:
            kept.append(record)
            scores.append(PairScore(record, mean_score, True))
        else:
            rejected.append(record)
            scores.append(PairScore(record, mean_score, False, "below threshold"))
    return FilterResult(
        kept=tuple(kept), rejected=tuple(rejected), scores=tuple(scores)
    )
