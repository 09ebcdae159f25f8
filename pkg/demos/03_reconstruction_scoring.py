"""Reconstruction scoring and the round-trip metric.

A reconstruction is scored against its reference in four parts: invalid
candidates gate to 0 outright, otherwise three fingerprint Tanimoto
similarities contribute up to 1.0 each and an exact canonical match adds
1.0 more, for a total in [0, 4] that hits 4.0 only on identity.  The
round-trip rate over a corpus counts reconstructions whose canonical
form equals the original.
"""

from __future__ import annotations

from moltrip.chem import canonicalize
from moltrip.metrics import (
    RoundTripSample,
    aggregate_report,
    reconstruction_score,
    round_trip_rate,
)

print("= score breakdowns against reference CCO (ethanol) =")
candidates = (
    ("CCO", "the molecule itself"),
    ("OCC", "same molecule, different spelling"),
    ("CCCO", "close neighbour (propanol)"),
    ("c1ccccc1", "unrelated aromatic (benzene)"),
    ("C(C)(C)(C)(C)C", "invalid: pentavalent carbon"),
    ("C((", "malformed string"),
)
for text, label in candidates:
    s = reconstruction_score("CCO", text)
    print(f"  {text!r:18} {label}")
    print(f"    valid={s.valid} exact={s.exact} keys={s.t_keys:.3f} "
          f"path={s.t_path:.3f} morgan={s.t_morgan:.3f} total={s.total:.3f}")

print()
print("= round-trip evaluation over a small corpus =")
corpus = ("CCO", "CCCC", "CC(=O)O", "c1ccccc1")
reconstructions = ("OCC", "CCCC", "CC(=O)O", "CCCCCC")  # last one misses
samples = []
for original, recon in zip(corpus, reconstructions):
    samples.append(RoundTripSample(
        original=original,
        caption=f"a caption for {original}",
        reconstruction=recon,
        score=reconstruction_score(original, recon),
    ))
    mark = "hit " if canonicalize(recon) == canonicalize(original) else "miss"
    print(f"  {mark} {original} -> {recon}")

rate = round_trip_rate(samples)
report = aggregate_report(samples)
print()
print(f"round_trip_rate = {rate:.2f}")
print(f"exact {report.exact_pct:.1f}%  validity {report.validity_pct:.1f}%  "
      f"sims keys/path/morgan = {report.sim_keys:.3f}/"
      f"{report.sim_path:.3f}/{report.sim_morgan:.3f}")
