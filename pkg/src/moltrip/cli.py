"""Command-line entry point: every capability behind one executable.

Exit codes: 0 on success, 1 on domain errors (bad molecules, unusable
files, failing bounds), 2 on usage errors.  Output files are written to a
temporary sibling and renamed into place, so a failure never leaves a
partial file.  An optional config file in key = value format, with one
section per subcommand, overrides the parsed flags.
"""

from __future__ import annotations

import argparse
import configparser
import json
import os
import random
import sys
from concurrent.futures import ThreadPoolExecutor

from .adapters import (
    AdapterFailure,
    AuthMissing,
    EchoAdapter,
    HttpStatus,
    MalformedResponse,
    RemoteAdapter,
    RemoteClient,
    RemoteEndpointConfig,
    Timeout,
    UnknownState,
    load_prompts,
)
from .chem import canonicalize, check_validity, parse_smiles
from .dataset import (
    PairRecord,
    SplitSpec,
    dedupe_overlap,
    diagnostic_filter,
    load_pairs,
    split,
    write_pairs,
)
from .fingerprints import dump_features, morgan_features, path_features, structural_keys
from .grpo import Completion, RolloutGroup, fill_advantages
from .harness import REWARD_MODES, TaggedGroup, export_rollouts
from .metrics import (
    RoundTripSample,
    aggregate_report,
    reconstruction_score,
    round_trip_rate,
)
from .theory import check_mi_bound, random_system
from .toy import run_toy

_DOMAIN_ERRORS = (
    ValueError,      # SmilesError, format and config problems, bad arguments
    OSError,         # IoFailure and anything the filesystem throws
    RuntimeError,    # adapter failures, auth, timeouts, bad remote payloads
    UnknownState,
)


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config(args)
        return args.func(args)
    except _DOMAIN_ERRORS as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


# ---------------------------------------------------------------------------
# plumbing

def _pool_map(fn, items, workers: int) -> list:
    """Order-preserving map over a bounded worker pool."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _emit(args, text: str) -> None:
    """Print the summary; mirror it to --out atomically when requested."""
    print(text)
    out = getattr(args, "out", None)
    if out:
        _write_text(out, text + "\n")


def _write_text(path: str, text: str) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as handle:
        handle.write(text)
    os.replace(tmp, path)


def _write_records(path: str, pairs, fmt: str) -> None:
    tmp = f"{path}.tmp"
    write_pairs(list(pairs), tmp, fmt=fmt)
    os.replace(tmp, path)


def _load(path: str) -> list[PairRecord]:
    result = load_pairs(path)
    if result.sidecar:
        print(
            f"warning: {len(result.sidecar)} malformed lines set aside",
            file=sys.stderr,
        )
    return list(result.records)


def _apply_config(args: argparse.Namespace) -> None:
    """Config file sections override flags, per the key = value contract."""
    path = getattr(args, "config", None)
    if not path:
        return
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    if not parser.read(path, encoding="utf-8"):
        raise OSError(f"cannot read config {path}")
    section = getattr(args, "command", None)
    if section not in parser:
        return
    for key, raw in parser[section].items():
        name = key.replace("-", "_")
        if not hasattr(args, name) or name in ("func", "command", "config"):
            raise ValueError(f"config key {key!r} unknown for [{section}]")
        setattr(args, name, _coerce(raw, getattr(args, name)))


def _coerce(raw: str, template):
    raw = raw.strip()
    if isinstance(template, bool):
        return raw.lower() in ("1", "true", "yes", "on")
    if isinstance(template, int):
        return int(raw)
    if isinstance(template, float):
        return float(raw)
    if isinstance(template, (tuple, list)):
        parts = raw.replace(",", " ").split()
        inner = type(template[0]) if template else str
        return type(template)(inner(p) for p in parts)
    return raw


def _generator_adapter(args):
    if args.generator == "echo":
        return EchoAdapter()
    return _remote_adapter(args)


def _remote_adapter(args) -> RemoteAdapter:
    if not args.base_url or not args.model:
        raise ValueError("remote adapter needs --base-url and --model")
    client = RemoteClient(RemoteEndpointConfig(
        base_url=args.base_url,
        model=args.model,
        timeout=args.timeout,
        max_retries=args.max_retries,
    ))
    return RemoteAdapter(client, load_prompts(args.prompts))


def _add_remote_flags(sub) -> None:
    sub.add_argument("--base-url", default="")
    sub.add_argument("--model", default="")
    sub.add_argument("--timeout", type=float, default=30.0)
    sub.add_argument("--max-retries", type=int, default=3)
    sub.add_argument("--prompts", default=None,
                     help="template file overriding the built-in prompts")


# ---------------------------------------------------------------------------
# subcommands

def cmd_canon(args) -> int:
    lines = _pool_map(canonicalize, args.smiles, args.workers)
    _emit(args, "\n".join(lines))
    return 0


def cmd_validate(args) -> int:
    def verdict(text: str) -> tuple[bool, str]:
        report = check_validity(text)
        if report.is_valid:
            return True, f"VALID\t{text}"
        reasons = "; ".join(
            f.reason if f.atom_index is None else f"atom {f.atom_index}: {f.reason}"
            for f in report.failures
        )
        return False, f"INVALID\t{text}\t{reasons}"

    results = _pool_map(verdict, args.smiles, args.workers)
    _emit(args, "\n".join(line for _, line in results))
    return 0 if all(ok for ok, _ in results) else 1


def cmd_fp(args) -> int:
    def one(text: str) -> str:
        mol = parse_smiles(text)
        if args.family == "keys":
            fs = structural_keys(mol)
        elif args.family == "path":
            fs = path_features(mol, max_len=args.max_path)
        else:
            fs = morgan_features(mol, radius=args.radius)
        return dump_features(fs)

    blocks = _pool_map(one, args.smiles, args.workers)
    _emit(args, "\n\n".join(blocks))
    return 0


def cmd_score(args) -> int:
    breakdown = reconstruction_score(args.ref, args.hyp)
    lines = [f"total {breakdown.total}"]
    lines.append(f"valid {str(breakdown.valid).lower()}")
    lines.append(f"exact {str(breakdown.exact).lower()}")
    for name in ("t_keys", "t_path", "t_morgan", "s_sim"):
        lines.append(f"{name} {getattr(breakdown, name)}")
    _emit(args, "\n".join(lines))
    return 0


def cmd_eval(args) -> int:
    pairs = _load(args.pairs)
    adapter = _generator_adapter(args)

    def one(pair: PairRecord) -> RoundTripSample:
        text = adapter.generate(pair.caption, 1, args.temperature)[0].text
        return RoundTripSample(
            original=pair.smiles,
            caption=pair.caption,
            reconstruction=text,
            score=reconstruction_score(pair.smiles, text),
        )

    samples = _pool_map(one, pairs, args.workers)
    report = aggregate_report(samples)
    rate = round_trip_rate(samples)
    lines = [f"samples {report.samples}"]
    for name in ("exact_pct", "validity_pct", "sim_keys", "sim_path", "sim_morgan"):
        lines.append(f"{name} {getattr(report, name)}")
    lines.append(f"round_trip {rate}")
    print("\n".join(lines))
    if args.out:
        _write_text(args.out, json.dumps(
            {"report": report.to_record(), "round_trip": rate}, indent=2,
        ) + "\n")
    return 0


def cmd_split(args) -> int:
    pairs = _load(args.pairs)
    spec = SplitSpec(ratios=tuple(args.ratios), seed=args.seed)
    parts = split(pairs, spec)
    os.makedirs(args.out_dir, exist_ok=True)
    lines = []
    for name, part in zip(("train", "val", "test"), parts):
        path = os.path.join(args.out_dir, f"{name}.{args.fmt}")
        _write_records(path, part, args.fmt)
        lines.append(f"{name} {len(part)} {path}")
    print("\n".join(lines))
    return 0


def cmd_dedupe(args) -> int:
    target = _load(args.target)
    reference = _load(args.reference)
    result = dedupe_overlap(target, reference, on_parse_error=args.on_parse_error)
    _write_records(args.out, result.kept, args.fmt)
    if args.sidecar:
        _write_text(args.sidecar, "".join(
            f"{e.line_no}\t{e.content}\t{e.reason}\n" for e in result.sidecar
        ))
    print(f"kept {len(result.kept)}")
    print(f"removed {len(result.removed)}")
    print(f"overlap_fraction {result.overlap_fraction}")
    return 0


def cmd_filter(args) -> int:
    pairs = _load(args.pairs)
    adapter = _generator_adapter(args)
    result = diagnostic_filter(
        pairs, adapter, tau=args.tau, m=args.m, temperature=args.temperature,
    )
    _write_records(args.out, result.kept, args.fmt)
    if args.rejected:
        _write_records(args.rejected, result.rejected, args.fmt)
    print(f"kept {len(result.kept)}")
    print(f"rejected {len(result.rejected)}")
    return 0


def cmd_train_toy(args) -> int:
    result = run_toy(
        seed=args.seed, max_steps=args.max_steps, reward_mode=args.reward_mode,
    )
    log = result.log
    lines = [
        f"steps {len(log.records)}",
        f"converged {str(log.converged).lower()}",
        f"round_trip {log.final_round_trip}",
        f"exact_pct {log.final_report.exact_pct}",
        f"validity_pct {log.final_report.validity_pct}",
    ]
    print("\n".join(lines))
    if args.out:
        _write_text(args.out, json.dumps(log.to_records(), indent=2) + "\n")
    return 0


def cmd_annotate(args) -> int:
    pairs = _load(args.pairs)
    adapter = _remote_adapter(args)
    tagged: list[TaggedGroup] = []
    completions_total = 0

    def one(indexed: tuple[int, PairRecord]) -> TaggedGroup:
        j, pair = indexed
        draws = adapter.generate(pair.caption, args.n, args.temperature)
        completions = tuple(
            Completion(
                text=d.text,
                reward=reconstruction_score(pair.smiles, d.text).total,
            )
            for d in draws
        )
        group = fill_advantages(RolloutGroup(
            prompt_id=pair.caption, completions=completions,
        ))
        return TaggedGroup(
            group_id=f"annotate-{args.seed}-{pair.id or j}",
            phase="generator",
            reference=pair.smiles,
            group=group,
        )

    tagged = _pool_map(one, enumerate(pairs), args.workers)
    completions_total = sum(len(t.group.completions) for t in tagged)
    export_rollouts(tagged, args.out)
    print(f"groups {len(tagged)}")
    print(f"completions {completions_total}")
    print(f"rollouts {args.out}")
    return 0


def cmd_theory_check(args) -> int:
    rng = random.Random(args.seed)
    reports = [
        check_mi_bound(random_system(rng, args.max_size))
        for _ in range(args.systems)
    ]
    held = sum(1 for r in reports if r.holds)
    print(f"{held}/{args.systems} bounds hold")
    if args.out:
        _write_text(args.out, json.dumps([vars(r) for r in reports], indent=2) + "\n")
    return 0 if held == args.systems else 1


# ---------------------------------------------------------------------------
# parser assembly

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="moltrip",
        description="Round-trip molecule-text alignment toolkit",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    def sub(name: str, func, **kwargs):
        p = subs.add_parser(name, **kwargs)
        p.set_defaults(func=func, command=name)
        p.add_argument("--config", default=None,
                       help="key = value file; its [section] overrides flags")
        p.add_argument("--workers", type=int, default=1)
        return p

    p = sub("canon", cmd_canon, help="canonicalize SMILES strings")
    p.add_argument("smiles", nargs="+")
    p.add_argument("--out", default=None)

    p = sub("validate", cmd_validate, help="run the validity gate")
    p.add_argument("smiles", nargs="+")
    p.add_argument("--out", default=None)

    p = sub("fp", cmd_fp, help="dump fingerprint features")
    p.add_argument("smiles", nargs="+")
    p.add_argument("--family", choices=("keys", "path", "morgan"), required=True)
    p.add_argument("--radius", type=int, default=2)
    p.add_argument("--max-path", type=int, default=7)
    p.add_argument("--out", default=None)

    p = sub("score", cmd_score, help="reconstruction score of hyp against ref")
    p.add_argument("--ref", required=True)
    p.add_argument("--hyp", required=True)
    p.add_argument("--out", default=None)

    p = sub("eval", cmd_eval, help="batch round-trip evaluation report")
    p.add_argument("--pairs", required=True)
    p.add_argument("--generator", choices=("echo", "remote"), default="echo")
    p.add_argument("--temperature", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    _add_remote_flags(p)

    p = sub("split", cmd_split, help="seeded train/val/test split")
    p.add_argument("--pairs", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--ratios", type=float, nargs=3, default=[0.8, 0.1, 0.1])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fmt", choices=("jsonl", "tsv"), default="jsonl")

    p = sub("dedupe", cmd_dedupe, help="drop canonical duplicates of a reference")
    p.add_argument("--target", required=True)
    p.add_argument("--reference", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--sidecar", default=None)
    p.add_argument("--on-parse-error", choices=("drop", "keep"), default="drop")
    p.add_argument("--fmt", choices=("jsonl", "tsv"), default="jsonl")

    p = sub("filter", cmd_filter, help="round-trip diagnostic filter")
    p.add_argument("--pairs", required=True)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--temperature", type=float, default=1.0)
    p.add_argument("--generator", choices=("echo", "remote"), default="echo")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--rejected", default=None)
    p.add_argument("--fmt", choices=("jsonl", "tsv"), default="jsonl")
    _add_remote_flags(p)

    p = sub("train-toy", cmd_train_toy, help="desk-scale coupled training run")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-steps", type=int, default=200)
    p.add_argument("--reward-mode", choices=REWARD_MODES, default="shaped")
    p.add_argument("--out", default=None)

    p = sub("annotate", cmd_annotate,
            help="remote reward annotation and rollout export")
    p.add_argument("--pairs", required=True)
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--temperature", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    _add_remote_flags(p)

    theory = subs.add_parser("theory", help="bound verification")
    theory_subs = theory.add_subparsers(dest="theory_command", required=True)
    p = theory_subs.add_parser("check", help="verify the bound chain on random systems")
    p.set_defaults(func=cmd_theory_check, command="theory-check")
    p.add_argument("--config", default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--systems", type=int, default=100)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--max-size", type=int, default=6)
    p.add_argument("--out", default=None)

    return parser


if __name__ == "__main__":
    sys.exit(main())
