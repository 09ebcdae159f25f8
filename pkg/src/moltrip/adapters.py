"""Captioner/generator adapters: scripted mocks, tabular policies, remote LLM.

One contract covers all three backends: caption() maps a molecule string to
sampled caption texts, generate() maps a caption to sampled molecule
strings, and each sample carries exact per-token log-probabilities when the
backend can provide them.  Tabular softmax policies additionally support
exact-gradient GRPO updates, which is what makes the desk-scale training
loop verifiable.
"""

from __future__ import annotations

import bisect
import copy
import math
import os
import random
import threading
import time
from dataclasses import dataclass, field
from typing import Protocol, runtime_checkable

import requests

from .chem import canonical_smiles, check_validity, parse_smiles
from .fingerprints import stable_hash
from .grpo import Completion, GrpoConfig, RolloutGroup, group_objective

API_KEY_VAR = "RTMOL_API_KEY"
_RETRYABLE_STATUS = {429, 500, 502, 503, 504}


class AdapterFailure(RuntimeError):
    """A policy backend failed while serving a sampling request."""


class UnknownState(KeyError):
    """A tabular policy was asked about a state outside its table."""


class StaleSnapshot(ValueError):
    """Rollout groups reference an old-policy snapshot no longer held."""


class AuthMissing(RuntimeError):
    """The API key environment variable is not set."""


class Timeout(RuntimeError):
    """The remote endpoint did not answer within the configured timeout."""


class HttpStatus(RuntimeError):
    def __init__(self, status: int, detail: str = ""):
        super().__init__(f"HTTP {status} {detail}".rstrip())
        self.status = status


class MalformedResponse(RuntimeError):
    """The remote endpoint answered with an unusable payload."""


@dataclass(frozen=True)
class Sampled:
    """One sampled text with optional exact per-token log-probabilities."""

    text: str
    logps: tuple[float, ...] | None = None


@runtime_checkable
class AdapterContract(Protocol):
    supports_training: bool

    def caption(
        self, molecule: str, n: int, temperature: float = 1.0
    ) -> list[Sampled]: ...

    def generate(
        self, caption: str, n: int, temperature: float = 1.0
    ) -> list[Sampled]: ...


# ---------------------------------------------------------------------------
# scripted mocks

class ScriptedAdapter:
    """Deterministic lookup-table adapter for tests and demos."""

    supports_training = False

    def __init__(self, caption_map: dict[str, str], generate_map: dict[str, str]):
        self._captions = {
            canonical_smiles(parse_smiles(k)): v for k, v in caption_map.items()
        }
        self._generations = dict(generate_map)

    def caption(self, molecule, n, temperature=1.0):
        key = canonical_smiles(parse_smiles(molecule))
        if key not in self._captions:
            raise UnknownState(key)
        return [Sampled(self._captions[key])] * n

    def generate(self, caption, n, temperature=1.0):
        if caption not in self._generations:
            raise UnknownState(caption)
        return [Sampled(self._generations[caption])] * n


class EchoAdapter:
    """Captions with the canonical SMILES itself; generates by echoing.

    The degenerate but perfectly aligned system: every round trip is exact
    by construction, which pins the top line of the evaluation report.
    """

    supports_training = False

    def caption(self, molecule, n, temperature=1.0):
        text = canonical_smiles(parse_smiles(molecule))
        return [Sampled(text)] * n

    def generate(self, caption, n, temperature=1.0):
        return [Sampled(caption.strip())] * n


# ---------------------------------------------------------------------------
# tabular softmax policies

def _log_softmax(row: list[float]) -> list[float]:
    peak = max(row)
    log_norm = peak + math.log(sum(math.exp(v - peak) for v in row))
    return [v - log_norm for v in row]


@dataclass
class TabularPolicy:
    """Softmax-over-logits policy on finite states and actions.

    Keeps three logit tables: the live one, a frozen "old" snapshot that
    sampling ratios are measured against, and a fixed reference for the KL
    penalty.  Snapshot ids let rollouts prove which table produced them.
    """

    states: tuple[str, ...]
    actions: tuple[str, ...]
    logits: list[list[float]]
    old_logits: list[list[float]] = field(default=None)  # type: ignore[assignment]
    ref_logits: list[list[float]] = field(default=None)  # type: ignore[assignment]
    old_snapshot_id: int = 0

    def __post_init__(self) -> None:
        expected = (len(self.states), len(self.actions))
        if (len(self.logits), len(self.logits[0])) != expected:
            raise ValueError("logits shape must be states x actions")
        if self.old_logits is None:
            self.old_logits = copy.deepcopy(self.logits)
        if self.ref_logits is None:
            self.ref_logits = copy.deepcopy(self.logits)
        self._state_index = {s: i for i, s in enumerate(self.states)}
        self._action_index = {a: i for i, a in enumerate(self.actions)}

    @classmethod
    def uniform(cls, states, actions) -> "TabularPolicy":
        rows = [[0.0] * len(actions) for _ in states]
        return cls(states=tuple(states), actions=tuple(actions), logits=rows)

    def state_index(self, state: str) -> int:
        if state not in self._state_index:
            raise UnknownState(state)
        return self._state_index[state]

    def action_index(self, action: str) -> int:
        if action not in self._action_index:
            raise UnknownState(action)
        return self._action_index[action]

    def log_probs(self, state: str, table: str = "cur") -> list[float]:
        rows = {
            "cur": self.logits, "old": self.old_logits, "ref": self.ref_logits,
        }[table]
        return _log_softmax(rows[self.state_index(state)])

    def snapshot_old(self) -> int:
        """Freeze the live table as the new old policy; returns its id."""
        self.old_logits = copy.deepcopy(self.logits)
        self.old_snapshot_id += 1
        return self.old_snapshot_id

    def clone(self) -> "TabularPolicy":
        return TabularPolicy(
            states=self.states,
            actions=self.actions,
            logits=copy.deepcopy(self.logits),
            old_logits=copy.deepcopy(self.old_logits),
            ref_logits=copy.deepcopy(self.ref_logits),
            old_snapshot_id=self.old_snapshot_id,
        )


def tabular_sample(
    policy: TabularPolicy,
    state: str,
    n: int,
    seed: int,
    temperature: float = 1.0,
    table: str = "cur",
) -> list[Sampled]:
    """n independent draws from the softmax row, reproducible per draw.

    Draw i depends only on (seed, state, i), so extending n preserves the
    prefix.  Temperature 0 degenerates to the argmax action.  Attached
    log-probabilities are always the exact temperature-1 values from the
    requested table.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    log_probs = policy.log_probs(state, table)
    if temperature == 0.0:
        best = max(range(len(log_probs)), key=lambda i: (log_probs[i], -i))
        return [
            Sampled(policy.actions[best], (log_probs[best],)) for _ in range(n)
        ]
    if temperature != 1.0:
        scaled = _log_softmax([lp / temperature for lp in log_probs])
    else:
        scaled = log_probs
    cumulative = []
    acc = 0.0
    for lp in scaled:
        acc += math.exp(lp)
        cumulative.append(acc)
    last = len(cumulative) - 1
    out = []
    for i in range(n):
        # process-independent per-draw stream: python's tuple hash is salted
        u = random.Random(stable_hash("draw", seed, state, i)).random()
        chosen = min(bisect.bisect_right(cumulative, u), last)
        out.append(Sampled(policy.actions[chosen], (log_probs[chosen],)))
    return out


def _clip_slope(ratio: float, advantage: float, epsilon: float) -> float:
    """d/dr of min{r*A, clamp(r)*A} away from the kink points."""
    clamped = max(min(ratio, 1.0 + epsilon), 1.0 - epsilon)
    if ratio * advantage <= clamped * advantage:
        return advantage
    if 1.0 - epsilon < ratio < 1.0 + epsilon:
        return advantage
    return 0.0


def tabular_objective(
    policy: TabularPolicy, groups: list[RolloutGroup], cfg: GrpoConfig
) -> float:
    """Total J over groups with log-probs taken from the policy tables."""
    total = 0.0
    for group in groups:
        _check_group(policy, group)
        state = group.prompt_id
        cur = policy.log_probs(state, "cur")
        old = policy.log_probs(state, "old")
        ref = policy.log_probs(state, "ref")
        completions = tuple(
            Completion(
                text=c.text,
                reward=c.reward,
                logp_cur=(cur[policy.action_index(c.text)],),
                logp_old=(old[policy.action_index(c.text)],),
                logp_ref=(ref[policy.action_index(c.text)],),
            )
            for c in group.completions
        )
        total += group_objective(
            RolloutGroup(
                prompt_id=group.prompt_id,
                completions=completions,
                advantages=group.advantages,
                degenerate=group.degenerate,
                snapshot_id=group.snapshot_id,
            ),
            cfg,
        )
    return total


def _check_group(policy: TabularPolicy, group: RolloutGroup) -> None:
    if group.advantages is None:
        raise ValueError("group advantages not filled")
    if group.snapshot_id is not None and group.snapshot_id != policy.old_snapshot_id:
        raise StaleSnapshot(
            f"group snapshot {group.snapshot_id} != "
            f"policy old snapshot {policy.old_snapshot_id}"
        )


def tabular_gradient(
    policy: TabularPolicy, groups: list[RolloutGroup], cfg: GrpoConfig
) -> list[list[float]]:
    """Exact gradient of the total objective with respect to the live logits.

    Single-token completions over a softmax row admit the closed form
    dJ/dz[s,a'] = sum_i coeff_i * (1[a'=a_i] - pi_cur(a'|s)) with
    coeff_i = clip_slope * ratio_i + beta * (exp(d_i) - 1).
    """
    grad = [[0.0] * len(policy.actions) for _ in policy.states]
    for group in groups:
        _check_group(policy, group)
        s = policy.state_index(group.prompt_id)
        cur = _log_softmax(policy.logits[s])
        old = _log_softmax(policy.old_logits[s])
        ref = _log_softmax(policy.ref_logits[s])
        probs = [math.exp(lp) for lp in cur]
        for completion, advantage in zip(group.completions, group.advantages):
            a = policy.action_index(completion.text)
            ratio = math.exp(cur[a] - old[a])
            d = ref[a] - cur[a]
            coeff = (
                _clip_slope(ratio, advantage, cfg.epsilon) * ratio
                + cfg.beta * (math.exp(d) - 1.0)
            )
            if coeff == 0.0:
                continue
            row = grad[s]
            for ap in range(len(policy.actions)):
                row[ap] += coeff * ((1.0 if ap == a else 0.0) - probs[ap])
    return grad


def tabular_grpo_step(
    policy: TabularPolicy,
    groups: list[RolloutGroup],
    cfg: GrpoConfig,
    lr: float,
) -> TabularPolicy:
    """Ascend the exact objective gradient in place; returns the policy."""
    grad = tabular_gradient(policy, groups, cfg)
    for s in range(len(policy.states)):
        row = policy.logits[s]
        for a in range(len(policy.actions)):
            row[a] += lr * grad[s][a]
    return policy


# ---------------------------------------------------------------------------
# token-level sequence policy

class TokenSequencePolicy:
    """Autoregressive token policy over a finite single-character vocabulary.

    Each (prompt, prefix) context is a state in an ordinary tabular table,
    so snapshots, ratios, and the KL reference behave exactly as in the
    single-shot case; completions just carry one log-prob per drawn token.
    With a stop token the string may end early; without one every rollout
    is exactly max_tokens long, which keeps sampling odds flat across
    competing strings.  Exact strings are exponentially rare under the
    uniform start, which is what makes reward shaping observable at desk
    scale.
    """

    def __init__(
        self,
        prompts: tuple[str, ...],
        vocab: tuple[str, ...],
        max_tokens: int,
        eos: str | None = None,
    ) -> None:
        if max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")
        if any(len(tok) != 1 for tok in vocab):
            raise ValueError("vocab tokens must be single characters")
        if eos is not None and eos in vocab:
            raise ValueError("eos must not appear in the vocabulary")
        contexts = len(prompts) * sum(
            len(vocab) ** i for i in range(max_tokens)
        )
        if contexts > 200_000:
            raise ValueError(f"context table too large ({contexts} states)")
        self.prompts = tuple(prompts)
        self.vocab = tuple(vocab)
        self.max_tokens = max_tokens
        self.eos = eos
        states = []
        prefixes = [""]
        for _ in range(max_tokens):
            states.extend(self._encode(p, pre) for p in prompts for pre in prefixes)
            prefixes = [pre + tok for pre in prefixes for tok in vocab]
        actions = self.vocab if eos is None else self.vocab + (eos,)
        self.table = TabularPolicy.uniform(tuple(states), actions)

    @staticmethod
    def _encode(prompt: str, prefix: str) -> str:
        return f"{prompt}\x1f{prefix}"

    @property
    def old_snapshot_id(self) -> int:
        return self.table.old_snapshot_id

    def snapshot_old(self) -> int:
        return self.table.snapshot_old()

    def _tokens(self, text: str) -> list[str]:
        """Token walk a completion text took, including the stop if drawn."""
        toks = list(text)
        for tok in toks:
            if tok not in self.vocab:
                raise UnknownState(f"token {tok!r} not in vocabulary")
        if len(toks) > self.max_tokens:
            raise UnknownState(f"text longer than {self.max_tokens} tokens")
        if len(toks) < self.max_tokens:
            if self.eos is None:
                raise UnknownState(f"text shorter than {self.max_tokens} tokens")
            toks.append(self.eos)
        return toks

    def sample(
        self,
        prompt: str,
        n: int,
        seed: int,
        temperature: float = 1.0,
        table: str = "cur",
    ) -> list[Sampled]:
        """n independent rollouts; draw (i, t) depends only on (seed, prompt, i, t)."""
        if n < 1:
            raise ValueError("n must be >= 1")
        out = []
        for i in range(n):
            prefix = ""
            logps = []
            for t in range(self.max_tokens):
                row = self.table.log_probs(self._encode(prompt, prefix), table)
                if temperature == 0.0:
                    chosen = max(range(len(row)), key=lambda j: (row[j], -j))
                else:
                    scaled = row if temperature == 1.0 else _log_softmax(
                        [lp / temperature for lp in row]
                    )
                    cumulative = []
                    acc = 0.0
                    for lp in scaled:
                        acc += math.exp(lp)
                        cumulative.append(acc)
                    u = random.Random(
                        stable_hash("draw", seed, prompt, i, t)
                    ).random()
                    chosen = min(
                        bisect.bisect_right(cumulative, u), len(row) - 1
                    )
                logps.append(row[chosen])
                token = self.table.actions[chosen]
                if token == self.eos:
                    break
                prefix += token
            out.append(Sampled(prefix, tuple(logps)))
        return out

    def _rebuilt(self, group: RolloutGroup) -> RolloutGroup:
        completions = []
        for c in group.completions:
            logps = {"cur": [], "old": [], "ref": []}
            prefix = ""
            for tok in self._tokens(c.text):
                ctx = self._encode(group.prompt_id, prefix)
                a = self.table.action_index(tok)
                for name in logps:
                    logps[name].append(self.table.log_probs(ctx, name)[a])
                if tok != self.eos:
                    prefix += tok
            completions.append(Completion(
                text=c.text,
                reward=c.reward,
                logp_cur=tuple(logps["cur"]),
                logp_old=tuple(logps["old"]),
                logp_ref=tuple(logps["ref"]),
            ))
        return RolloutGroup(
            prompt_id=group.prompt_id,
            completions=tuple(completions),
            advantages=group.advantages,
            degenerate=group.degenerate,
            snapshot_id=group.snapshot_id,
        )

    def objective(self, groups: list[RolloutGroup], cfg: GrpoConfig) -> float:
        """Total J over groups with per-token log-probs from the tables."""
        total = 0.0
        for group in groups:
            _check_group(self.table, group)
            total += group_objective(self._rebuilt(group), cfg)
        return total

    def gradient(
        self, groups: list[RolloutGroup], cfg: GrpoConfig
    ) -> dict[int, list[float]]:
        """Exact objective gradient, sparse over touched context rows.

        The single-token closed form applies per drawn token, scaled by the
        completion's 1/|y| length normalizer.
        """
        width = len(self.table.actions)
        grad: dict[int, list[float]] = {}
        rows: dict[int, tuple[list[float], ...]] = {}
        for group in groups:
            _check_group(self.table, group)
            for completion, advantage in zip(group.completions, group.advantages):
                toks = self._tokens(completion.text)
                scale = 1.0 / len(toks)
                prefix = ""
                for tok in toks:
                    s = self.table.state_index(
                        self._encode(group.prompt_id, prefix)
                    )
                    if s not in rows:
                        cur = _log_softmax(self.table.logits[s])
                        rows[s] = (
                            cur,
                            _log_softmax(self.table.old_logits[s]),
                            _log_softmax(self.table.ref_logits[s]),
                            [math.exp(lp) for lp in cur],
                        )
                    cur, old, ref, probs = rows[s]
                    a = self.table.action_index(tok)
                    ratio = math.exp(cur[a] - old[a])
                    d = ref[a] - cur[a]
                    coeff = scale * (
                        _clip_slope(ratio, advantage, cfg.epsilon) * ratio
                        + cfg.beta * (math.exp(d) - 1.0)
                    )
                    if tok != self.eos:
                        prefix += tok
                    if coeff == 0.0:
                        continue
                    row = grad.setdefault(s, [0.0] * width)
                    for ap in range(width):
                        row[ap] += coeff * ((1.0 if ap == a else 0.0) - probs[ap])
        return grad

    def grpo_step(
        self, groups: list[RolloutGroup], cfg: GrpoConfig, lr: float
    ) -> "TokenSequencePolicy":
        grad = self.gradient(groups, cfg)
        for s, row in grad.items():
            live = self.table.logits[s]
            for a in range(len(row)):
                live[a] += lr * row[a]
        return self


# ---------------------------------------------------------------------------
# remote LLM client

@dataclass(frozen=True)
class RemoteEndpointConfig:
    base_url: str
    model: str
    timeout: float = 30.0
    max_retries: int = 3
    max_in_flight: int = 4
    api_key_var: str = API_KEY_VAR

    def __post_init__(self) -> None:
        if self.timeout <= 0:
            raise ValueError("timeout must be > 0")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")


class RemoteClient:
    """Minimal chat-completions client with retries and an in-flight cap."""

    def __init__(self, cfg: RemoteEndpointConfig, session=None, sleep=time.sleep):
        self.cfg = cfg
        self._session = session if session is not None else requests.Session()
        self._sleep = sleep
        self._gate = threading.BoundedSemaphore(cfg.max_in_flight)

    def complete(self, prompt: str, n: int = 1, temperature: float = 1.0) -> list[Sampled]:
        key = os.environ.get(self.cfg.api_key_var)
        if not key:
            raise AuthMissing(f"{self.cfg.api_key_var} is not set")
        payload = {
            "model": self.cfg.model,
            "messages": [{"role": "user", "content": prompt}],
            "n": n,
            "temperature": temperature,
        }
        url = self.cfg.base_url.rstrip("/") + "/chat/completions"
        headers = {"Authorization": f"Bearer {key}"}
        last_error: Exception | None = None
        for attempt in range(self.cfg.max_retries + 1):
            if attempt:
                self._sleep(min(0.5 * 2 ** (attempt - 1), 8.0))
            with self._gate:
                try:
                    response = self._session.post(
                        url, json=payload, headers=headers,
                        timeout=self.cfg.timeout,
                    )
                except requests.Timeout as exc:
                    last_error = Timeout(str(exc))
                    continue
                except requests.ConnectionError as exc:
                    last_error = HttpStatus(0, f"connection error: {exc}")
                    continue
            if response.status_code in _RETRYABLE_STATUS:
                last_error = HttpStatus(response.status_code, "retryable")
                continue
            if response.status_code != 200:
                raise HttpStatus(response.status_code)
            return self._parse(response, n)
        assert last_error is not None
        raise last_error

    @staticmethod
    def _parse(response, n: int) -> list[Sampled]:
        try:
            body = response.json()
        except ValueError as exc:
            raise MalformedResponse(f"not JSON: {exc}") from exc
        choices = body.get("choices")
        if not isinstance(choices, list) or len(choices) != n:
            raise MalformedResponse(
                f"expected {n} choices, got {choices!r:.80}"
            )
        out = []
        for choice in choices:
            try:
                out.append(Sampled(choice["message"]["content"]))
            except (TypeError, KeyError) as exc:
                raise MalformedResponse(f"bad choice shape: {choice!r:.80}") from exc
        return out


def remote_complete(
    cfg: RemoteEndpointConfig,
    prompt: str,
    n: int = 1,
    temperature: float = 1.0,
    session=None,
    sleep=time.sleep,
) -> list[Sampled]:
    return RemoteClient(cfg, session=session, sleep=sleep).complete(
        prompt, n, temperature
    )


# ---------------------------------------------------------------------------
# prompt templates and SMILES extraction

DEFAULT_PROMPTS = {
    "caption_template": "Describe the molecule {smiles} in one short sentence.",
    "generate_template": (
        "Answer with a single SMILES string and nothing else: {caption}"
    ),
}


def load_prompts(path: str | None = None) -> dict[str, str]:
    """key = value template file; missing keys fall back to the defaults."""
    prompts = dict(DEFAULT_PROMPTS)
    if path is None:
        return prompts
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line or line.startswith("#") or "=" not in line:
                continue
            key, _, value = line.partition("=")
            prompts[key.strip()] = value.strip()
    return prompts


class RemoteAdapter:
    """AdapterContract over a RemoteClient plus prompt templates."""

    supports_training = False

    def __init__(self, client: RemoteClient, prompts: dict[str, str] | None = None):
        self._client = client
        self._prompts = prompts if prompts is not None else dict(DEFAULT_PROMPTS)

    def caption(self, molecule, n, temperature=1.0):
        prompt = self._prompts["caption_template"].format(smiles=molecule)
        return self._client.complete(prompt, n, temperature)

    def generate(self, caption, n, temperature=1.0):
        prompt = self._prompts["generate_template"].format(caption=caption)
        out = []
        for sample in self._client.complete(prompt, n, temperature):
            extracted = extract_smiles(sample.text)
            out.append(Sampled(extracted if extracted is not None else sample.text))
        return out


def extract_smiles(text: str, pattern=None) -> str | None:
    """Pull a valid SMILES out of free-form model output.

    Default strategy: the longest whitespace-separated token that parses and
    validates; falls back to the whole stripped text.  A regex override
    searches for candidate substrings instead.
    """
    if pattern is not None:
        candidates = sorted(pattern.findall(text), key=len, reverse=True)
    else:
        candidates = sorted(set(text.split()), key=len, reverse=True)
    for candidate in candidates:
        if _is_valid(candidate):
            return candidate
    whole = text.strip()
    if pattern is None and whole and _is_valid(whole):
        return whole
    return None


def _is_valid(text: str) -> bool:
    return check_validity(text).is_valid
