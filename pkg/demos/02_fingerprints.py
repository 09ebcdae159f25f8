"""Three fingerprint families and Tanimoto similarity.

Each family maps a molecule to a set of 64-bit feature identifiers:
structural keys fire from a fixed 64-entry catalog, path features hash
linear atom/bond walks, and Morgan features hash circular environments
of increasing radius.  Tanimoto similarity is intersection over union
on those sets, so 1.0 means identical feature sets and 0.0 means
disjoint ones.
"""

from __future__ import annotations

from moltrip.chem import parse_smiles
from moltrip.fingerprints import (
    KEY_NAMES,
    dump_features,
    morgan_features,
    path_features,
    structural_keys,
    tanimoto,
)

ethanol = parse_smiles("CCO")
propanol = parse_smiles("CCCO")
benzene = parse_smiles("c1ccccc1")

print("= structural keys =")
fired = structural_keys(ethanol)
print(f"ethanol fires {len(fired.features)} of 64 keys:")
for index in sorted(fired.features):
    print(f"  {index:2d} {KEY_NAMES[index]}")

print()
print("= family sizes =")
for name, mol in (("ethanol", ethanol), ("propanol", propanol), ("benzene", benzene)):
    keys = structural_keys(mol)
    paths = path_features(mol)
    morgan = morgan_features(mol)
    print(f"  {name}: keys={len(keys.features)} paths={len(paths.features)} "
          f"morgan={len(morgan.features)}")

print()
print("= tanimoto similarity =")
pairs = (("ethanol", ethanol, "propanol", propanol),
         ("ethanol", ethanol, "benzene", benzene),
         ("ethanol", ethanol, "ethanol", ethanol))
for name_a, a, name_b, b in pairs:
    t_keys = tanimoto(structural_keys(a), structural_keys(b))
    t_path = tanimoto(path_features(a), path_features(b))
    t_morgan = tanimoto(morgan_features(a), morgan_features(b))
    print(f"  {name_a} vs {name_b}: keys={t_keys:.3f} "
          f"path={t_path:.3f} morgan={t_morgan:.3f}")

print()
print("= stable textual dump (golden-file format) =")
print(dump_features(morgan_features(parse_smiles("C"), radius=0)))
