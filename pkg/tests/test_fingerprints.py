"""Fingerprint families, Tanimoto, and the stable hash."""

from __future__ import annotations

import random
from pathlib import Path

import pytest

from moltrip.chem import parse_smiles, render_random
from moltrip.fingerprints import (
    KEY_CATALOG,
    KEY_NAMES,
    FamilyMismatch,
    FeatureSet,
    dump_features,
    morgan_features,
    path_features,
    stable_hash,
    structural_keys,
    tanimoto,
)
from oracles import count_distinct_paths, count_morgan_environments

SMALL = ["C", "CCO", "CC(C)C", "C1CC1", "c1ccccc1", "CC=O", "C#N", "CCCl"]


# ---------------------------------------------------------------------------
# stable hash

def test_stable_hash_frozen_values():
    assert stable_hash("x") == 0x827BD4195D1874EF
    assert stable_hash(1, "a") == 0x23ABE25BE241315D
    assert stable_hash("atom", "C", 0, 4, 0, False) == 0x41AEEC3E4884BA42


def test_stable_hash_matches_reference_fnv():
    def reference(data: bytes) -> int:
        h = 0xCBF29CE484222325
        for byte in data:
            h = ((h ^ byte) * 0x100000001B3) % 2**64
        return h

    assert stable_hash("ab") == reference(b"sab;")
    assert stable_hash(7, "x", True) == reference(b"i7;sx;b1;")
    assert stable_hash(-3) == reference(b"i-3;")


def test_stable_hash_type_framing_distinguishes():
    assert stable_hash("1") != stable_hash(1)
    assert stable_hash(1) != stable_hash(True)
    assert stable_hash("a", "b") != stable_hash("ab")


def test_stable_hash_rejects_other_types():
    with pytest.raises(TypeError):
        stable_hash(1.5)


# ---------------------------------------------------------------------------
# Morgan environments

def test_morgan_methane_radius_zero_is_single_feature():
    fs = morgan_features(parse_smiles("C"), radius=0)
    assert len(fs) == 1
    assert fs.family == "morgan"
    assert fs.params == (0,)


def test_morgan_cco_matches_environment_oracle():
    mol = parse_smiles("CCO")
    assert len(morgan_features(mol, 2)) == count_morgan_environments(mol, 2)
    assert len(morgan_features(mol, 2)) == 9


@pytest.mark.parametrize("smiles", SMALL)
@pytest.mark.parametrize("radius", [0, 1, 2])
def test_morgan_counts_match_oracle(smiles, radius):
    mol = parse_smiles(smiles)
    assert len(morgan_features(mol, radius)) == count_morgan_environments(
        mol, radius
    )


def test_morgan_rejects_negative_radius():
    with pytest.raises(ValueError):
        morgan_features(parse_smiles("C"), radius=-1)


# ---------------------------------------------------------------------------
# path features

def test_path_pentane_matches_oracle():
    mol = parse_smiles("CCCCC")
    assert len(path_features(mol, 4)) == count_distinct_paths(mol, 4)
    assert len(path_features(mol, 4)) == 4


@pytest.mark.parametrize("smiles", SMALL)
def test_path_counts_match_oracle(smiles):
    mol = parse_smiles(smiles)
    assert len(path_features(mol, 7)) == count_distinct_paths(mol, 7)


def test_path_reading_direction_invariant():
    assert path_features(parse_smiles("CCO")).features == path_features(
        parse_smiles("OCC")
    ).features


def test_path_distinguishes_bond_orders():
    benzene = path_features(parse_smiles("c1ccccc1"))
    cyclohexane = path_features(parse_smiles("C1CCCCC1"))
    assert tanimoto(benzene, cyclohexane) == 0.0


def test_path_rejects_zero_length():
    with pytest.raises(ValueError):
        path_features(parse_smiles("CC"), max_len=0)


# ---------------------------------------------------------------------------
# structural keys

def test_catalog_has_64_unique_names():
    assert len(KEY_CATALOG) == 64
    assert len(set(KEY_NAMES)) == 64


def test_methane_fires_exactly_carbon_and_sp3():
    fired = structural_keys(parse_smiles("C")).features
    assert fired == {0, 34}
    assert KEY_NAMES[0] == "carbon present"
    assert KEY_NAMES[34] == "sp3 carbon"


def test_benzene_golden_keys():
    fired = structural_keys(parse_smiles("c1ccccc1")).features
    assert fired == {0, 14, 18, 24, 25}
    assert {KEY_NAMES[k] for k in fired} == {
        "carbon present",
        "any ring",
        "6-ring",
        "aromatic atom",
        "aromatic ring",
    }


def test_pyridine_golden_keys():
    fired = structural_keys(parse_smiles("c1ccncc1")).features
    assert fired == {0, 1, 11, 14, 18, 23, 24, 25, 26, 56}


def test_aspirin_golden_keys():
    fired = structural_keys(parse_smiles("CC(=O)Oc1ccccc1C(=O)O")).features
    assert fired == {
        0, 2, 11, 14, 18, 24, 25, 34, 35, 38, 39, 40, 42, 44, 52, 55, 61,
    }


def test_key_identifiers_are_catalog_indices():
    fired = structural_keys(parse_smiles("[NH4+].[Cl-]")).features
    assert fired <= set(range(64))
    assert 30 in fired and 31 in fired and 32 in fired


# ---------------------------------------------------------------------------
# Tanimoto

def test_tanimoto_axioms_on_corpus_pairs(corpus):
    rng = random.Random(1207)
    mols = [parse_smiles(s) for s in rng.sample(corpus, 40)]
    sets = [morgan_features(m) for m in mols]
    for fs in sets:
        assert tanimoto(fs, fs) == pytest.approx(1.0, abs=1e-12)
    for _ in range(200):
        a, b = rng.choice(sets), rng.choice(sets)
        t_ab = tanimoto(a, b)
        t_ba = tanimoto(b, a)
        assert abs(t_ab - t_ba) < 1e-12
        assert -1e-12 <= t_ab <= 1 + 1e-12


def test_tanimoto_family_mismatch():
    mol = parse_smiles("CCO")
    with pytest.raises(FamilyMismatch):
        tanimoto(morgan_features(mol), path_features(mol))
    with pytest.raises(FamilyMismatch):
        tanimoto(morgan_features(mol, 2), morgan_features(mol, 3))


def test_tanimoto_empty_conventions():
    empty = FeatureSet(frozenset(), "morgan", (2,))
    full = FeatureSet(frozenset({1, 2}), "morgan", (2,))
    assert tanimoto(empty, empty) == 1.0
    assert tanimoto(empty, full) == 0.0
    assert tanimoto(full, empty) == 0.0


# ---------------------------------------------------------------------------
# invariance under atom renumbering

@pytest.mark.parametrize("seed", [3, 11])
def test_features_invariant_under_renumbering(corpus, seed):
    rng = random.Random(seed)
    for smiles in rng.sample(corpus, 30):
        mol = parse_smiles(smiles)
        alt = parse_smiles(render_random(mol, rng))
        assert morgan_features(mol) == morgan_features(alt)
        assert path_features(mol) == path_features(alt)
        assert structural_keys(mol) == structural_keys(alt)


# ---------------------------------------------------------------------------
# textual dump

def test_dump_format_structural():
    text = dump_features(structural_keys(parse_smiles("C")))
    assert text.splitlines() == [
        "family=structural_keys params=- count=2",
        "0x0000000000000000",
        "0x0000000000000022",
    ]


def test_dump_format_morgan():
    text = dump_features(morgan_features(parse_smiles("C"), 0))
    assert text.splitlines() == [
        "family=morgan params=radius=0 count=1",
        "0x41aeec3e4884ba42",
    ]


def test_key_catalog_doc_table_matches_code():
    doc = (Path(__file__).parent.parent / "docs" / "structural_keys.md").read_text()
    rows = [
        line for line in doc.splitlines()
        if line.startswith("| ") and not line.startswith("| Index")
    ]
    listed = [row.split("|")[2].strip() for row in rows]
    indices = [int(row.split("|")[1].strip()) for row in rows]
    assert indices == list(range(64))
    assert listed == list(KEY_NAMES)
