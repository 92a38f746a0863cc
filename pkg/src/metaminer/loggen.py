"""
Synthetic event logs: random block-structured process trees, random
play-outs of them, and optional per-trace noise (skip, insert, swap).
"""
from __future__ import annotations

import json
import string
from dataclasses import asdict, dataclass, field, replace
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigError
from .eventlog import Event, EventLog, Trace, write_csv
from .processtree import AND, LOOP, OPERATORS, SEQ, XOR, ProcessTree

NOISE_KINDS = ("none", "skip", "insert", "swap")
LOOP_CONTINUE = 0.5
LOOP_CAP = 10
EPOCH = datetime(2020, 1, 1, tzinfo=timezone.utc)


@dataclass(frozen=True)
class GeneratorConfig:
    activities: Tuple[int, int] = (4, 10)
    depth: Tuple[int, int] = (1, 3)
    operator_probabilities: Dict[str, float] = field(
        default_factory=lambda: {SEQ: 0.4, XOR: 0.25, AND: 0.25, LOOP: 0.1})
    n_cases: int = 100
    noise: str = "none"
    noise_rate: float = 0.0
    seed: int = 0

    def __post_init__(self):
        lo, hi = self.activities
        dlo, dhi = self.depth
        if not 1 <= lo <= hi:
            raise ConfigError(f"invalid activity range {self.activities}")
        if not 0 <= dlo <= dhi:
            raise ConfigError(f"invalid depth range {self.depth}")
        if hi < dlo + 1:
            raise ConfigError(f"a tree of depth {dlo} needs at least {dlo + 1} activities, range allows {hi}")
        probs = self.operator_probabilities
        if set(probs) - set(OPERATORS):
            raise ConfigError(f"unknown operators {sorted(set(probs) - set(OPERATORS))}")
        if any(p < 0 for p in probs.values()) or abs(sum(probs.values()) - 1.0) > 1e-9:
            raise ConfigError("operator probabilities must be non-negative and sum to 1")
        if self.n_cases < 1:
            raise ConfigError("n_cases must be >= 1")
        if self.noise not in NOISE_KINDS:
            raise ConfigError(f"noise kind must be one of {', '.join(NOISE_KINDS)}")
        if not 0.0 <= self.noise_rate <= 1.0:
            raise ConfigError("noise rate must lie in [0, 1]")

    def to_dict(self):
        d = asdict(self)
        d["activities"], d["depth"] = list(self.activities), list(self.depth)
        return d


@dataclass(frozen=True)
class NoiseAnnotation:
    trace: int
    kind: str
    position: int


@dataclass(frozen=True)
class GroundTruth:
    tree: ProcessTree
    noise: Tuple[NoiseAnnotation, ...] = ()

    def to_dict(self):
        return {"tree": self.tree.to_dict(), "noise": [asdict(a) for a in self.noise]}

    @classmethod
    def from_dict(cls, d):
        return cls(ProcessTree.from_dict(d["tree"]), tuple(NoiseAnnotation(**a) for a in d["noise"]))


def activity_name(i: int) -> str:
    """a, b, ..., z, aa, ab, ..."""
    letters = string.ascii_lowercase
    name = ""
    i += 1
    while i:
        i, r = divmod(i - 1, 26)
        name = letters[r] + name
    return name


def _rng(seed) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed))


def generate_process_tree(config: GeneratorConfig) -> ProcessTree:
    """Tree of exactly the sampled depth and leaf count; leaves are named in preorder."""
    rng = _rng([config.seed, 0])
    d = int(rng.integers(config.depth[0], config.depth[1] + 1))
    n = int(rng.integers(max(config.activities[0], d + 1), config.activities[1] + 1))
    ops = list(config.operator_probabilities)
    probs = np.array([config.operator_probabilities[o] for o in ops])
    counter = iter(range(n))

    def build(depth: int, leaves: int) -> ProcessTree:
        if depth == 0:
            return ProcessTree.leaf(activity_name(next(counter)))
        op = ops[int(rng.choice(len(ops), p=probs))]
        if depth == 1:  # every child is a leaf
            return ProcessTree(op, tuple(build(0, 1) for _ in range(leaves)))
        # one child reaches depth - 1 and needs `depth` leaves; the others need one each
        max_k = 2 if op == LOOP else min(4, leaves - depth + 1)
        k = int(rng.integers(2, max_k + 1))
        deep = int(rng.integers(k))
        sizes = np.ones(k, dtype=int)
        sizes[deep] = depth
        extra = leaves - int(sizes.sum())
        if extra:
            sizes += rng.multinomial(extra, np.full(k, 1.0 / k))
        children = []
        for i, m in enumerate(sizes):
            if i == deep:
                child_depth = depth - 1
            elif m == 1:
                child_depth = 0
            else:
                child_depth = int(rng.integers(1, min(depth - 1, m - 1) + 1))
            children.append(build(child_depth, int(m)))
        return ProcessTree(op, tuple(children))

    return build(d, n).validate()


def _play(tree: ProcessTree, rng: np.random.Generator) -> List[str]:
    if tree.is_leaf:
        return [] if tree.label is None else [tree.label]
    op, kids = tree.operator, tree.children
    if op == SEQ:
        return [a for c in kids for a in _play(c, rng)]
    if op == XOR:
        return _play(kids[int(rng.integers(len(kids)))], rng)
    if op == AND:
        parts = [_play(c, rng) for c in kids]
        # uniform random interleaving: draw the next branch with probability
        # proportional to its remaining length
        order = np.concatenate([np.full(len(p), i) for i, p in enumerate(parts)]).astype(int)
        rng.shuffle(order)
        cursors = [0] * len(parts)
        out = []
        for i in order:
            out.append(parts[i][cursors[i]])
            cursors[i] += 1
        return out
    out = _play(kids[0], rng)
    rounds = 0
    while rounds < LOOP_CAP and rng.random() < LOOP_CONTINUE:
        redo = kids[1 + int(rng.integers(len(kids) - 1))]
        out += _play(redo, rng) + _play(kids[0], rng)
        rounds += 1
    return out


def _apply_noise(seq: List[str], kind: str, alphabet: Sequence[str], rng) -> Tuple[List[str], str, int]:
    if kind in ("skip", "swap") and len(seq) < 2:
        kind = "insert"
    seq = list(seq)
    if kind == "skip":
        pos = int(rng.integers(len(seq)))
        del seq[pos]
    elif kind == "swap":
        pos = int(rng.integers(len(seq) - 1))
        seq[pos], seq[pos + 1] = seq[pos + 1], seq[pos]
    else:
        pos = int(rng.integers(len(seq) + 1))
        seq.insert(pos, alphabet[int(rng.integers(len(alphabet)))])
    return seq, kind, pos


def simulate_log(tree: ProcessTree, config: GeneratorConfig, name: str = "log") -> Tuple[EventLog, GroundTruth]:
    tree.validate()
    alphabet = tree.activities()
    width = len(str(config.n_cases - 1))
    traces, notes = [], []
    for i, ss in enumerate(np.random.SeedSequence([config.seed, 1]).spawn(config.n_cases)):
        rng = np.random.default_rng(ss)
        seq = _play(tree, rng)
        if config.noise != "none" and alphabet and rng.random() < config.noise_rate:
            seq, kind, pos = _apply_noise(seq, config.noise, alphabet, rng)
            notes.append(NoiseAnnotation(i, kind, pos))
        if not seq:  # only reachable through silent-only trees
            continue
        start = EPOCH + timedelta(hours=i)
        gaps = np.cumsum(rng.integers(1, 3600, len(seq)))
        events = tuple(Event(a, start + timedelta(seconds=int(g))) for a, g in zip(seq, gaps))
        traces.append(Trace(f"case_{i:0{width}d}", events))
    return EventLog(tuple(traces), name), GroundTruth(tree, tuple(notes))


def generate_log(config: GeneratorConfig, name: str = "log") -> Tuple[EventLog, GroundTruth]:
    return simulate_log(generate_process_tree(config), config, name)


def write_log(log: EventLog, truth: GroundTruth, path, config: Optional[GeneratorConfig] = None) -> None:
    """Canonical CSV plus a ``<name>.truth.json`` sidecar."""
    path = Path(path)
    write_csv(log, path)
    doc = truth.to_dict()
    if config is not None:
        doc["config"] = config.to_dict()
    path.with_suffix(".truth.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


# Regimes used to build a varied corpus. Each fixes the operator mix and
# noise; activity count, depth and case count are drawn per log.
REGIMES: Dict[str, Dict] = {
    "sequence": {"operator_probabilities": {SEQ: 0.7, XOR: 0.1, AND: 0.1, LOOP: 0.1}},
    "choice": {"operator_probabilities": {SEQ: 0.25, XOR: 0.6, AND: 0.1, LOOP: 0.05}},
    "parallel": {"operator_probabilities": {SEQ: 0.25, XOR: 0.1, AND: 0.6, LOOP: 0.05}},
    "noisy": {"operator_probabilities": {SEQ: 0.4, XOR: 0.25, AND: 0.25, LOOP: 0.1},
              "noise": ("skip", "insert", "swap"), "noise_rate": (0.05, 0.3)},
}


def regime_config(regime: str, seed: int) -> GeneratorConfig:
    """Per-log configuration of ``regime``; every choice is drawn from ``seed``."""
    try:
        params = REGIMES[regime]
    except KeyError:
        raise ConfigError(f"unknown regime {regime!r}; expected one of {', '.join(REGIMES)}") from None
    rng = _rng([seed, 2])
    noise, rate = "none", 0.0
    if "noise" in params:
        noise = params["noise"][int(rng.integers(len(params["noise"])))]
        rate = float(round(rng.uniform(*params["noise_rate"]), 3))
    return GeneratorConfig(
        activities=(4, 12), depth=(1, 4),
        operator_probabilities=dict(params["operator_probabilities"]),
        n_cases=int(rng.integers(50, 201)), noise=noise, noise_rate=rate, seed=seed,
    )


@dataclass(frozen=True)
class CorpusEntry:
    log_id: str
    regime: str
    config: GeneratorConfig
    log: EventLog
    truth: GroundTruth


def generate_corpus(n_logs: int, seed: int = 0, regimes: Sequence[str] = tuple(REGIMES)) -> List[CorpusEntry]:
    """``n_logs`` logs cycling through ``regimes``; log ids are zero-padded so they sort in order."""
    if n_logs < 1:
        raise ConfigError("n_logs must be >= 1")
    seeds = np.random.SeedSequence(seed).generate_state(n_logs)
    width = max(3, len(str(n_logs - 1)))
    out = []
    for i in range(n_logs):
        regime = regimes[i % len(regimes)]
        config = regime_config(regime, int(seeds[i]))
        log_id = f"log_{i:0{width}d}_{regime}"
        log, truth = generate_log(config, log_id)
        out.append(CorpusEntry(log_id, regime, config, log, truth))
    return out


def with_seed(config: GeneratorConfig, seed: int) -> GeneratorConfig:
    return replace(config, seed=seed)
