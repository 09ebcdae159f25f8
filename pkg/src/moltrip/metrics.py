"""Reconstruction scoring, the round-trip rate, and textual metrics.

The composite score rewards a reconstruction for being parseable and
chemically valid, for matching the reference exactly (canonical equality),
and for fingerprint similarity under three families.  The round-trip rate is
the fraction of samples whose reconstruction is canonically identical to the
original.  BLEU (corpus) and a dependency-free METEOR variant cover the text
side.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from .chem import SmilesError, canonical_smiles, check_validity, parse_smiles
from .errors import EmptyCollection, LengthMismatch
from .fingerprints import morgan_features, path_features, structural_keys, tanimoto

_BLEU_EPSILON = 1e-9
_TOKEN_RE = re.compile(r"[a-z0-9]+")


class InvalidReference(ValueError):
    """The reference side of a score must itself be valid."""


@dataclass(frozen=True)
class ScoreBreakdown:
    """Components of the reconstruction score; total is their combination."""

    valid: bool
    exact: bool
    t_keys: float
    t_path: float
    t_morgan: float
    s_sim: float
    total: float


@dataclass(frozen=True)
class RoundTripSample:
    original: str
    caption: str
    reconstruction: str
    score: ScoreBreakdown


_ZERO_SCORE = ScoreBreakdown(
    valid=False, exact=False, t_keys=0.0, t_path=0.0, t_morgan=0.0,
    s_sim=0.0, total=0.0,
)


def reconstruction_score(x: str, x_prime: str) -> ScoreBreakdown:
    """Score a candidate string against a valid reference SMILES.

    Invalid candidates gate the whole score to zero.  Otherwise the total is
    the sum of the three Tanimoto similarities plus 1 for an exact canonical
    match, so the identity case scores exactly 4.0.
    """
    try:
        reference = parse_smiles(x)
    except SmilesError as exc:
        raise InvalidReference(f"reference does not parse: {exc}") from exc
    report = check_validity(x)
    if not report.is_valid:
        raise InvalidReference(f"reference is not valid: {report.failures[0].reason}")

    if not check_validity(x_prime).is_valid:
        return _ZERO_SCORE
    candidate = parse_smiles(x_prime)

    exact = canonical_smiles(reference) == canonical_smiles(candidate)
    t_keys = tanimoto(structural_keys(reference), structural_keys(candidate))
    t_path = tanimoto(path_features(reference), path_features(candidate))
    t_morgan = tanimoto(morgan_features(reference), morgan_features(candidate))
    s_sim = t_keys + t_path + t_morgan
    return ScoreBreakdown(
        valid=True,
        exact=exact,
        t_keys=t_keys,
        t_path=t_path,
        t_morgan=t_morgan,
        s_sim=s_sim,
        total=s_sim + (1.0 if exact else 0.0),
    )


def round_trip_rate(samples: list[RoundTripSample]) -> float:
    """Fraction of samples reconstructed to the same canonical form.

    Recomputed from the raw strings rather than read off the stored scores,
    so it cross-checks the exact flags independently.
    """
    if not samples:
        raise EmptyCollection("round_trip_rate over zero samples")
    hits = 0
    for sample in samples:
        try:
            if canonical_smiles(parse_smiles(sample.reconstruction)) == \
                    canonical_smiles(parse_smiles(sample.original)):
                hits += 1
        except SmilesError:
            continue
    return hits / len(samples)


# ---------------------------------------------------------------------------
# aggregate evaluation report

@dataclass(frozen=True)
class EvalReport:
    """Per-corpus means in the standard column order.

    Similarity means run over valid pairs only; bleu and meteor are None
    unless reference captions were supplied to aggregate_report.
    """

    samples: int
    exact_pct: float
    validity_pct: float
    sim_keys: float
    sim_path: float
    sim_morgan: float
    bleu: float | None = None
    meteor: float | None = None

    def to_record(self) -> dict:
        record: dict = {
            "samples": self.samples,
            "exact_pct": self.exact_pct,
            "validity_pct": self.validity_pct,
            "sim_keys": self.sim_keys,
            "sim_path": self.sim_path,
            "sim_morgan": self.sim_morgan,
        }
        if self.bleu is not None:
            record["bleu"] = self.bleu
        if self.meteor is not None:
            record["meteor"] = self.meteor
        return record

    def to_lines(self) -> list[str]:
        lines = [
            f"samples={self.samples}",
            f"exact_pct={self.exact_pct:.2f}",
            f"validity_pct={self.validity_pct:.2f}",
            f"sim_keys={self.sim_keys:.4f}",
            f"sim_path={self.sim_path:.4f}",
            f"sim_morgan={self.sim_morgan:.4f}",
        ]
        if self.bleu is not None:
            lines.append(f"bleu={self.bleu:.6f}")
        if self.meteor is not None:
            lines.append(f"meteor={self.meteor:.6f}")
        return lines


def aggregate_report(
    samples: list[RoundTripSample],
    references: list[str] | None = None,
) -> EvalReport:
    """Mean components across samples, plus text metrics given references."""
    if not samples:
        raise EmptyCollection("aggregate_report over zero samples")
    n = len(samples)
    valid = [s for s in samples if s.score.valid]
    exact_pct = 100.0 * sum(1 for s in samples if s.score.exact) / n
    validity_pct = 100.0 * len(valid) / n

    def valid_mean(component) -> float:
        if not valid:
            return 0.0
        return sum(component(s.score) for s in valid) / len(valid)

    bleu_score = None
    meteor_score = None
    if references is not None:
        if len(references) != n:
            raise LengthMismatch(
                f"{n} samples but {len(references)} references"
            )
        captions = [s.caption for s in samples]
        bleu_score = bleu(captions, references)
        meteor_score = sum(
            meteor_lite(c, r) for c, r in zip(captions, references)
        ) / n
    return EvalReport(
        samples=n,
        exact_pct=exact_pct,
        validity_pct=validity_pct,
        sim_keys=valid_mean(lambda s: s.t_keys),
        sim_path=valid_mean(lambda s: s.t_path),
        sim_morgan=valid_mean(lambda s: s.t_morgan),
        bleu=bleu_score,
        meteor=meteor_score,
    )


# ---------------------------------------------------------------------------
# textual metrics

def _tokens(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


def bleu(candidates: list[str], references: list[str]) -> float:
    """Corpus BLEU, n-grams 1..4, uniform weights, add-epsilon smoothing."""
    if len(candidates) != len(references):
        raise LengthMismatch(
            f"{len(candidates)} candidates but {len(references)} references"
        )
    if not candidates:
        raise EmptyCollection("bleu over zero pairs")
    matched = [0] * 4
    total = [0] * 4
    cand_len = 0
    ref_len = 0
    for cand_text, ref_text in zip(candidates, references):
        cand = _tokens(cand_text)
        ref = _tokens(ref_text)
        cand_len += len(cand)
        ref_len += len(ref)
        for n in range(1, 5):
            cand_grams: dict[tuple[str, ...], int] = {}
            for i in range(len(cand) - n + 1):
                gram = tuple(cand[i:i + n])
                cand_grams[gram] = cand_grams.get(gram, 0) + 1
            ref_grams: dict[tuple[str, ...], int] = {}
            for i in range(len(ref) - n + 1):
                gram = tuple(ref[i:i + n])
                ref_grams[gram] = ref_grams.get(gram, 0) + 1
            total[n - 1] += max(len(cand) - n + 1, 0)
            matched[n - 1] += sum(
                min(count, ref_grams.get(gram, 0))
                for gram, count in cand_grams.items()
            )
    if cand_len == 0:
        return 0.0
    log_precision = sum(
        0.25 * math.log((matched[k] + _BLEU_EPSILON) / (total[k] + _BLEU_EPSILON))
        for k in range(4)
    )
    brevity = 1.0 if cand_len > ref_len else math.exp(1.0 - ref_len / cand_len)
    return brevity * math.exp(log_precision)


def meteor_lite(candidate: str, reference: str) -> float:
    """Unigram METEOR variant: greedy exact alignment, recall-weighted F,
    fragmentation penalty 0.5*(chunks/matches)^3 (zero for a single chunk)."""
    cand = _tokens(candidate)
    ref = _tokens(reference)
    if not cand or not ref:
        return 0.0
    taken = [False] * len(ref)
    alignment: list[tuple[int, int]] = []
    for ci, token in enumerate(cand):
        for ri, ref_token in enumerate(ref):
            if not taken[ri] and ref_token == token:
                taken[ri] = True
                alignment.append((ci, ri))
                break
    matches = len(alignment)
    if matches == 0:
        return 0.0
    precision = matches / len(cand)
    recall = matches / len(ref)
    f_mean = 10.0 * precision * recall / (9.0 * precision + recall)
    chunks = 1
    for (prev_c, prev_r), (cur_c, cur_r) in zip(alignment, alignment[1:]):
        if cur_c != prev_c + 1 or cur_r != prev_r + 1:
            chunks += 1
    penalty = 0.0 if chunks == 1 else 0.5 * (chunks / matches) ** 3
    return f_mean * (1.0 - penalty)
