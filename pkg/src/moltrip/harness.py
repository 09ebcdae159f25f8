"""Coupled captioner/generator training at desk scale.

The loop alternates phases: the generator is trained to reconstruct
molecules from reference captions, then the captioner is trained against a
frozen generator snapshot that scores its candidate captions by round-trip
reconstruction.  Tabular policies get exact GRPO steps; remote backends get
the same groups appended to an export stream instead.  Every sample is
seeded, so a (config, seed) pair reproduces the full log bit for bit.
"""

from __future__ import annotations

import json
import os
import random
from dataclasses import dataclass, field, replace

from .adapters import (
    AdapterFailure,
    Sampled,
    TabularPolicy,
    TokenSequencePolicy,
    tabular_grpo_step,
    tabular_sample,
)
from .dataset import IoFailure, PairRecord
from .fingerprints import stable_hash
from .grpo import Completion, GrpoConfig, RolloutGroup, fill_advantages
from .metrics import (
    EvalReport,
    RoundTripSample,
    ScoreBreakdown,
    aggregate_report,
    reconstruction_score,
    round_trip_rate,
)

REWARD_MODES = ("shaped", "exact_only")


@dataclass(frozen=True)
class HarnessConfig:
    """Loop shape and optimizer settings; defaults follow the usual table."""

    batch_size: int = 128
    mini_batch: int = 64
    steps_per_phase: int = 1    # k: consecutive steps before switching phase
    rollout_n: int = 32         # n: generator reconstructions per pair
    group_size_g: int = 32      # G: captions per molecule in captioner groups
    recon_samples_m: int = 1    # m: frozen-generator samples per caption
    literal_n_grouping: bool = False
    update_epochs: int = 1  # passes over a step's groups; clip caps movement
    grpo: GrpoConfig = field(default_factory=GrpoConfig)
    lr: float = 1e-6
    max_steps: int = 100
    seed: int = 0
    convergence_window: int = 10
    convergence_tol: float = 1e-3
    reward_mode: str = "shaped"
    eval_temperature: float = 0.0

    def __post_init__(self) -> None:
        for name in ("batch_size", "mini_batch", "steps_per_phase",
                     "rollout_n", "group_size_g", "recon_samples_m",
                     "update_epochs"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.max_steps < 0:
            raise ValueError("max_steps must be >= 0")
        if self.lr <= 0:
            raise ValueError("lr must be > 0")
        if self.reward_mode not in REWARD_MODES:
            raise ValueError(f"reward_mode must be one of {REWARD_MODES}")


@dataclass(frozen=True)
class StepRecord:
    phase: str
    step: int
    mean_reward: float
    validity_rate: float
    exact_rate: float
    degenerate_fraction: float
    snapshot_id: int


@dataclass(frozen=True)
class PhaseStats:
    mean_reward: float
    validity_rate: float
    exact_rate: float
    degenerate_fraction: float
    snapshot_id: int


@dataclass(frozen=True)
class TrainingLog:
    records: tuple[StepRecord, ...]
    converged: bool
    final_round_trip: float | None
    final_report: EvalReport | None

    def to_records(self) -> dict:
        body: dict = {
            "steps": [vars(r) for r in self.records],
            "converged": self.converged,
        }
        if self.final_round_trip is not None:
            body["final_round_trip"] = self.final_round_trip
        if self.final_report is not None:
            body["final_report"] = self.final_report.to_record()
        return body


class ScoreCache:
    """Memoizes reconstruction_score over (reference, candidate) pairs."""

    def __init__(self) -> None:
        self._table: dict[tuple[str, str], ScoreBreakdown] = {}

    def score(self, reference: str, candidate: str) -> ScoreBreakdown:
        key = (reference, candidate)
        if key not in self._table:
            self._table[key] = reconstruction_score(reference, candidate)
        return self._table[key]

    def __len__(self) -> int:
        return len(self._table)


def _reward(breakdown: ScoreBreakdown, mode: str) -> float:
    if mode == "exact_only":
        return 1.0 if breakdown.exact else 0.0
    return breakdown.total


@dataclass(frozen=True)
class TaggedGroup:
    """A rollout group plus the context the export file must carry."""

    group_id: str
    phase: str
    reference: str  # the molecule the rewards were scored against
    group: RolloutGroup


def _stats(
    groups: list[RolloutGroup],
    breakdowns: list[ScoreBreakdown],
    snapshot_id: int,
) -> PhaseStats:
    rewards = [c.reward for g in groups for c in g.completions]
    return PhaseStats(
        mean_reward=sum(rewards) / len(rewards),
        validity_rate=sum(1 for b in breakdowns if b.valid) / len(breakdowns),
        exact_rate=sum(1 for b in breakdowns if b.exact) / len(breakdowns),
        degenerate_fraction=sum(1 for g in groups if g.degenerate) / len(groups),
        snapshot_id=snapshot_id,
    )


Policy = TabularPolicy | TokenSequencePolicy


def _sample(
    policy: Policy,
    state: str,
    n: int,
    seed: int,
    temperature: float = 1.0,
    table: str = "cur",
) -> list[Sampled]:
    if isinstance(policy, TokenSequencePolicy):
        return policy.sample(state, n, seed, temperature=temperature, table=table)
    return tabular_sample(policy, state, n, seed, temperature=temperature, table=table)


def _apply_updates(
    policy: Policy,
    groups: list[RolloutGroup],
    cfg: HarnessConfig,
) -> None:
    for _ in range(cfg.update_epochs):
        for start in range(0, len(groups), cfg.mini_batch):
            chunk = groups[start:start + cfg.mini_batch]
            if isinstance(policy, TokenSequencePolicy):
                policy.grpo_step(chunk, cfg.grpo, cfg.lr)
            else:
                tabular_grpo_step(policy, chunk, cfg.grpo, cfg.lr)


def generator_phase(
    generator: Policy,
    batch: list[PairRecord],
    cfg: HarnessConfig,
    seed: int,
    cache: ScoreCache | None = None,
    export: list[TaggedGroup] | None = None,
) -> PhaseStats:
    """One generator step: n reconstructions per pair, grouped per pair."""
    cache = cache if cache is not None else ScoreCache()
    generator.snapshot_old()
    groups: list[RolloutGroup] = []
    breakdowns: list[ScoreBreakdown] = []
    for j, pair in enumerate(batch):
        try:
            draws = _sample(
                generator, pair.caption, cfg.rollout_n,
                seed=stable_hash("gen", seed, j), table="old",
            )
            completions = []
            for draw in draws:
                breakdown = cache.score(pair.smiles, draw.text)
                breakdowns.append(breakdown)
                completions.append(Completion(
                    text=draw.text,
                    reward=_reward(breakdown, cfg.reward_mode),
                ))
        except Exception as exc:
            raise AdapterFailure(
                f"generator phase, pair {pair.id or j}: {exc}"
            ) from exc
        groups.append(fill_advantages(RolloutGroup(
            prompt_id=pair.caption,
            completions=tuple(completions),
            snapshot_id=generator.old_snapshot_id,
        )))
    if export is not None:
        for pair, group in zip(batch, groups):
            export.append(TaggedGroup(
                group_id=f"gen-{seed}-{pair.id or group.prompt_id}",
                phase="generator",
                reference=pair.smiles,
                group=group,
            ))
    else:
        _apply_updates(generator, groups, cfg)
    return _stats(groups, breakdowns, generator.old_snapshot_id)


def captioner_phase(
    captioner: Policy,
    generator: Policy,
    batch: list[PairRecord],
    cfg: HarnessConfig,
    seed: int,
    cache: ScoreCache | None = None,
    export: list[TaggedGroup] | None = None,
) -> PhaseStats:
    """One captioner step against the frozen generator snapshot.

    G captions per molecule form the group, each scored by the mean
    reconstruction over m samples from the generator's old table; the
    snapshot is refreshed only after the update, never inside the step.
    """
    cache = cache if cache is not None else ScoreCache()
    captioner.snapshot_old()
    frozen_id = generator.old_snapshot_id
    groups: list[RolloutGroup] = []
    breakdowns: list[ScoreBreakdown] = []
    for j, pair in enumerate(batch):
        try:
            if cfg.literal_n_grouping:
                caption = _sample(
                    captioner, pair.smiles, 1,
                    seed=stable_hash("cap", seed, j), table="old",
                )[0].text
                recon = _sample(
                    generator, caption, cfg.rollout_n,
                    seed=stable_hash("recon", seed, j), table="old",
                )
                completions = []
                for draw in recon:
                    breakdown = cache.score(pair.smiles, draw.text)
                    breakdowns.append(breakdown)
                    completions.append(Completion(
                        text=caption,
                        reward=_reward(breakdown, cfg.reward_mode),
                    ))
            else:
                captions = _sample(
                    captioner, pair.smiles, cfg.group_size_g,
                    seed=stable_hash("cap", seed, j), table="old",
                )
                completions = []
                for g, caption in enumerate(captions):
                    recon = _sample(
                        generator, caption.text, cfg.recon_samples_m,
                        seed=stable_hash("recon", seed, j, g), table="old",
                    )
                    total = 0.0
                    for draw in recon:
                        breakdown = cache.score(pair.smiles, draw.text)
                        breakdowns.append(breakdown)
                        total += _reward(breakdown, cfg.reward_mode)
                    completions.append(Completion(
                        text=caption.text,
                        reward=total / cfg.recon_samples_m,
                    ))
        except Exception as exc:
            raise AdapterFailure(
                f"captioner phase, pair {pair.id or j}: {exc}"
            ) from exc
        groups.append(fill_advantages(RolloutGroup(
            prompt_id=pair.smiles,
            completions=tuple(completions),
            snapshot_id=captioner.old_snapshot_id,
        )))
    if export is not None:
        for pair, group in zip(batch, groups):
            export.append(TaggedGroup(
                group_id=f"cap-{seed}-{pair.id or group.prompt_id}",
                phase="captioner",
                reference=pair.smiles,
                group=group,
            ))
    else:
        _apply_updates(captioner, groups, cfg)
    generator.snapshot_old()  # the frozen copy tracks the live model
    return _stats(groups, breakdowns, frozen_id)


def evaluate_round_trip(
    captioner: Policy,
    generator: Policy,
    pairs: list[PairRecord],
    cfg: HarnessConfig,
    cache: ScoreCache | None = None,
) -> tuple[float, EvalReport, list[RoundTripSample]]:
    """Greedy (by default) caption -> reconstruct -> score over a pair set."""
    cache = cache if cache is not None else ScoreCache()
    samples = []
    for j, pair in enumerate(pairs):
        caption = _sample(
            captioner, pair.smiles, 1,
            seed=stable_hash("eval-cap", cfg.seed, j),
            temperature=cfg.eval_temperature,
        )[0].text
        reconstruction = _sample(
            generator, caption, 1,
            seed=stable_hash("eval-gen", cfg.seed, j),
            temperature=cfg.eval_temperature,
        )[0].text
        samples.append(RoundTripSample(
            original=pair.smiles,
            caption=caption,
            reconstruction=reconstruction,
            score=cache.score(pair.smiles, reconstruction),
        ))
    return round_trip_rate(samples), aggregate_report(samples), samples


def _batches(pairs: list[PairRecord], size: int, seed: int):
    """Endless seeded batch stream; reshuffles at every epoch boundary."""
    rng = random.Random(stable_hash("batches", seed))
    pool: list[PairRecord] = []
    while True:
        if len(pool) < size:
            refill = list(pairs)
            rng.shuffle(refill)
            pool.extend(refill)
        if size >= len(pool):
            batch, pool = pool, []
        else:
            batch, pool = pool[:size], pool[size:]
        yield batch


def run_training(
    captioner: Policy,
    generator: Policy,
    pairs: list[PairRecord],
    cfg: HarnessConfig,
    holdout: list[PairRecord] | None = None,
) -> TrainingLog:
    """Alternate k generator steps and k captioner steps until done.

    Convergence: the mean reward over the latest window improves on the
    previous window by less than the tolerance (needs two full windows).
    """
    if not pairs:
        raise ValueError("dataset is empty")
    holdout = holdout if holdout is not None else pairs
    cache = ScoreCache()
    batch_stream = _batches(pairs, min(cfg.batch_size, len(pairs)), cfg.seed)
    records: list[StepRecord] = []
    history: list[float] = []
    converged = False
    step = 0
    generator.snapshot_old()  # initial frozen copy for the first captioner step

    def plateaued() -> bool:
        w = cfg.convergence_window
        if len(history) < 2 * w:
            return False
        recent = sum(history[-w:]) / w
        previous = sum(history[-2 * w:-w]) / w
        return recent - previous < cfg.convergence_tol

    while step < cfg.max_steps and not converged:
        for phase in ("generator", "captioner"):
            for _ in range(cfg.steps_per_phase):
                if step >= cfg.max_steps or converged:
                    break
                batch = next(batch_stream)
                phase_seed = stable_hash("step", cfg.seed, step)
                if phase == "generator":
                    stats = generator_phase(
                        generator, batch, cfg, phase_seed, cache
                    )
                else:
                    stats = captioner_phase(
                        captioner, generator, batch, cfg, phase_seed, cache
                    )
                records.append(StepRecord(
                    phase=phase,
                    step=step,
                    mean_reward=stats.mean_reward,
                    validity_rate=stats.validity_rate,
                    exact_rate=stats.exact_rate,
                    degenerate_fraction=stats.degenerate_fraction,
                    snapshot_id=stats.snapshot_id,
                ))
                history.append(stats.mean_reward)
                converged = plateaued()
                step += 1
    rate, report, _ = evaluate_round_trip(
        captioner, generator, holdout, cfg, cache
    )
    return TrainingLog(
        records=tuple(records),
        converged=converged,
        final_round_trip=rate,
        final_report=report,
    )


# ---------------------------------------------------------------------------
# rollout export

def export_rollouts(tagged: list[TaggedGroup], path: str) -> None:
    """Write line-delimited rollout records; atomic via write-then-rename."""
    for item in tagged:
        if item.group.advantages is None:
            raise ValueError(f"group {item.group_id} has no advantages")
    tmp = f"{path}.tmp"
    try:
        with open(tmp, "w", encoding="utf-8") as handle:
            for item in tagged:
                for completion, advantage in zip(
                    item.group.completions, item.group.advantages
                ):
                    handle.write(json.dumps({
                        "group": item.group_id,
                        "phase": item.phase,
                        "prompt": item.group.prompt_id,
                        "reference": item.reference,
                        "completion": completion.text,
                        "reward": completion.reward,
                        "advantage": advantage,
                        "snapshot": item.group.snapshot_id,
                    }) + "\n")
        os.replace(tmp, path)
    except OSError as exc:
        raise IoFailure(f"cannot write rollouts to {path}: {exc}") from exc


def read_rollouts(path: str) -> list[TaggedGroup]:
    """Rebuild tagged groups from an export file, preserving group order."""
    try:
        with open(path, encoding="utf-8") as handle:
            lines = [line for line in handle.read().splitlines() if line.strip()]
    except OSError as exc:
        raise IoFailure(f"cannot read rollouts from {path}: {exc}") from exc
    order: list[str] = []
    buckets: dict[str, list[dict]] = {}
    for line in lines:
        row = json.loads(line)
        gid = row["group"]
        if gid not in buckets:
            buckets[gid] = []
            order.append(gid)
        buckets[gid].append(row)
    out: list[TaggedGroup] = []
    for gid in order:
        rows = buckets[gid]
        completions = tuple(
            Completion(text=r["completion"], reward=r["reward"]) for r in rows
        )
        advantages = tuple(r["advantage"] for r in rows)
        group = RolloutGroup(
            prompt_id=rows[0]["prompt"],
            completions=completions,
            advantages=advantages,
            degenerate=all(a == 0.0 for a in advantages),
            snapshot_id=rows[0]["snapshot"],
        )
        out.append(TaggedGroup(
            group_id=gid,
            phase=rows[0]["phase"],
            reference=rows[0]["reference"],
            group=group,
        ))
    return out


def strip_logps(group: RolloutGroup) -> RolloutGroup:
    """Drop per-token log-probs (the export format does not carry them)."""
    return replace(group, completions=tuple(
        Completion(text=c.text, reward=c.reward) for c in group.completions
    ))
