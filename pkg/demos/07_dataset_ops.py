"""Dataset plumbing: load, split, leakage removal, diagnostic filtering.

Pair files hold one molecule-caption record per line.  Loading never
dies on a bad line (it lands in a sidecar with its line number), splits
are seeded shuffles with floor-sized val/test, dedupe compares canonical
forms so respellings cannot leak across a benchmark boundary, and the
diagnostic filter keeps only pairs whose caption actually reconstructs
the molecule it claims to describe.
"""

from __future__ import annotations

import tempfile
from pathlib import Path

from moltrip.adapters import EchoAdapter
from moltrip.chem import canonicalize
from moltrip.dataset import (
    PairRecord,
    SplitSpec,
    dedupe_overlap,
    diagnostic_filter,
    load_pairs,
    split,
    write_pairs,
)

workdir = Path(tempfile.mkdtemp(prefix="moltrip-demo-"))

print("= loading a pair file with damage in it =")
raw = workdir / "pairs.jsonl"
raw.write_text(
    '{"smiles": "CCO", "caption": "ethanol", "id": "p0"}\n'
    '{"smiles": "CCCC", "caption": "butane", "id": "p1"}\n'
    "this line is not json at all\n"
    '{"smiles": "c1ccccc1", "caption": "benzene", "id": "p2"}\n'
    '{"caption": "a record with no molecule"}\n'
    '{"smiles": "CC(=O)O", "caption": "acetic acid", "id": "p3"}\n'
)
result = load_pairs(str(raw))
print(f"  {len(result.records)} records loaded, "
      f"{len(result.sidecar)} lines quarantined")
for entry in result.sidecar:
    print(f"    line {entry.line_no}: {entry.reason}")

print()
print("= seeded split =")
pool = [
    PairRecord(smiles=s, caption=f"compound {i}", id=f"m{i}")
    for i, s in enumerate(
        ("CCO", "CCC", "CCCC", "CCCCC", "CCN", "CCCN", "CCOC", "OCCO",
         "CC=O", "CC#N", "c1ccccc1", "CC(C)C", "CC(=O)O", "CCS",
         "FC(F)F", "C1CCCCC1", "CCCl", "CCBr", "N#CC#N", "OC(=O)CO")
    )
]
train, val, test = split(pool, SplitSpec(ratios=(0.8, 0.1, 0.1), seed=11))
print(f"  {len(pool)} pairs -> train {len(train)} / val {len(val)} "
      f"/ test {len(test)}")
again = split(pool, SplitSpec(ratios=(0.8, 0.1, 0.1), seed=11))
print(f"  same seed reproduces the partition: {again == (train, val, test)}")
shuffled = split(pool, SplitSpec(ratios=(0.8, 0.1, 0.1), seed=12))
print(f"  a different seed does not:         "
      f"{shuffled == (train, val, test)}")

print()
print("= canonical dedupe against a held-out benchmark =")
benchmark = [
    PairRecord(smiles="OCC", caption="benchmark ethanol"),   # respelled CCO
    PairRecord(smiles="C1=CC=CC=C1", caption="benchmark benzene"),
]
deduped = dedupe_overlap(list(train), benchmark)
print(f"  benchmark respellings: "
      f"{[canonicalize(r.smiles) for r in benchmark]}")
print(f"  train kept {len(deduped.kept)}, removed {len(deduped.removed)}, "
      f"overlap fraction {deduped.overlap_fraction:.3f}")
for record in deduped.removed:
    print(f"    removed {record.id}: {record.smiles} "
          f"(canonical {canonicalize(record.smiles)})")

print()
print("= diagnostic filter: captions must earn their molecule =")
print("  the echo adapter reconstructs by reading the caption as SMILES,")
print("  so a caption that names the right molecule scores 4.0 and a")
print("  caption pasted from some other molecule scores much lower")
candidates = [
    PairRecord(smiles="CCO", caption="CCO", id="good-0"),
    PairRecord(smiles="CCCC", caption="CCCC", id="good-1"),
    PairRecord(smiles="CCO", caption="c1ccccc1", id="swapped-0"),
    PairRecord(smiles="CC#N", caption="CCCCCC", id="swapped-1"),
    PairRecord(smiles="CCN", caption="not a molecule at all", id="junk-0"),
]
filtered = diagnostic_filter(candidates, EchoAdapter(), tau=2.0, m=3)
for ps in filtered.scores:
    score = "  -  " if ps.score is None else f"{ps.score:5.3f}"
    verdict = "keep" if ps.kept else "drop"
    print(f"  {verdict} {ps.record.id:10} score {score}  {ps.reason}")
print(f"  kept {len(filtered.kept)} of {len(candidates)}")

print()
print("= write and reload round-trip =")
out = workdir / "train.jsonl"
write_pairs(list(deduped.kept), str(out), fmt="jsonl")
reloaded = load_pairs(str(out))
print(f"  wrote {len(deduped.kept)} records to {out.name}, "
      f"reloaded {len(reloaded.records)}, "
      f"equal: {reloaded.records == deduped.kept}")
terse = workdir / "train.tsv"
write_pairs(list(deduped.kept), str(terse), fmt="tsv")
print(f"  tsv keeps just molecule and caption: "
      f"{terse.read_text().splitlines()[0]!r}")
