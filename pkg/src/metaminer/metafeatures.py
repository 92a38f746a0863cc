"""
Meta-features: a fixed, ordered vector of lightweight log descriptors.

Families, in manifest order:

* ``trace_length`` (27): statistics profile of per-trace lengths
* ``variant`` (11): shape of the variant frequency distribution
* ``activity_all`` / ``activity_start`` / ``activity_end`` (12 each):
  activity occurrence counts over all events, first events, last events
* ``log_level`` (4): traces, unique traces, their ratio, events
* ``entropy`` (14): block, prefix, Lempel-Ziv and nearest-neighbour entropies

Natural logarithms throughout. The manifest is the single source of truth
for the feature order; :data:`DIM` is its length.
"""
from __future__ import annotations

import csv
import hashlib
import io
import math
from collections import Counter
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np
from scipy import special, stats

from .errors import DataError
from .eventlog import EventLog, VariantTable, variants

PROFILE_FIELDS = (
    "min", "max", "mean", "median", "mode", "std", "variance", "p25", "p75", "iqr",
    "geometric_mean", "geometric_std", "harmonic_mean", "coeff_variation", "entropy",
) + tuple(f"hist_{i}" for i in range(10)) + ("skewness", "kurtosis")

VARIANT_FIELDS = (
    "mean", "std", "skewness", "kurtosis", "most_common_ratio",
    "top_1pct_ratio", "top_5pct_ratio", "top_10pct_ratio", "top_20pct_ratio",
    "top_50pct_ratio", "top_75pct_ratio",
)
TOP_FRACTIONS = (0.01, 0.05, 0.10, 0.20, 0.50, 0.75)

ACTIVITY_FIELDS = (
    "n_activities", "min", "max", "mean", "median", "std", "variance", "p25", "p75", "iqr",
    "skewness", "kurtosis",
)
ACTIVITY_GROUPS = ("all", "start", "end")

LOG_FIELDS = ("n_traces", "n_unique_traces", "unique_ratio", "n_events")

ENTROPY_FIELDS = (
    "trace", "prefix",
    "kblock_diff_1", "kblock_diff_3", "kblock_diff_5",
    "kblock_ratio_1", "kblock_ratio_3", "kblock_ratio_5",
    "global_block", "knn_3", "knn_5", "knn_7", "lempel_ziv", "kozachenko_leonenko",
)


@dataclass(frozen=True)
class FeatureSpec:
    name: str
    family: str


def _build_manifest() -> Tuple[FeatureSpec, ...]:
    specs = [FeatureSpec(f"trace_length_{f}", "trace_length") for f in PROFILE_FIELDS]
    specs += [FeatureSpec(f"variant_{f}", "variant") for f in VARIANT_FIELDS]
    for group in ACTIVITY_GROUPS:
        specs += [FeatureSpec(f"activity_{group}_{f}", f"activity_{group}") for f in ACTIVITY_FIELDS]
    specs += [FeatureSpec(f, "log_level") for f in LOG_FIELDS]
    specs += [FeatureSpec(f"entropy_{f}", "entropy") for f in ENTROPY_FIELDS]
    return tuple(specs)


MANIFEST: Tuple[FeatureSpec, ...] = _build_manifest()
FEATURE_NAMES: Tuple[str, ...] = tuple(s.name for s in MANIFEST)
DIM = len(MANIFEST)


def manifest_fingerprint(names: Sequence[str] = FEATURE_NAMES) -> str:
    return hashlib.sha256("\n".join(names).encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class FeatureVector:
    log_id: str
    values: Tuple[float, ...]

    def __post_init__(self):
        if len(self.values) != DIM:
            raise DataError(f"feature vector has {len(self.values)} values, manifest has {DIM}")

    def as_dict(self) -> Dict[str, float]:
        return dict(zip(FEATURE_NAMES, self.values))


# --------------------------------------------------------------------------- statistics

def _shape(x: np.ndarray) -> Tuple[float, float]:
    """Biased skewness and excess kurtosis; 0 for constant or single-element samples."""
    if x.size < 2 or np.all(x == x[0]):
        return 0.0, 0.0
    return float(stats.skew(x)), float(stats.kurtosis(x))


def _shannon(counts) -> float:
    # sorted so the float sum does not depend on dict (trace) order
    counts = np.sort(np.asarray(list(counts), dtype=float))
    total = counts.sum()
    if total <= 0:
        return 0.0
    p = counts[counts > 0] / total
    return float(max(0.0, -(p * np.log(p)).sum()))


@dataclass(frozen=True)
class StatisticsProfile:
    min: float
    max: float
    mean: float
    median: float
    mode: float
    std: float
    variance: float
    p25: float
    p75: float
    iqr: float
    geometric_mean: float
    geometric_std: float
    harmonic_mean: float
    coeff_variation: float
    entropy: float
    histogram: Tuple[float, ...]
    skewness: float
    kurtosis: float

    def as_list(self) -> List[float]:
        head = [getattr(self, f) for f in PROFILE_FIELDS[:15]]
        return head + list(self.histogram) + [self.skewness, self.kurtosis]


def statistics_profile(values: Sequence[float]) -> StatisticsProfile:
    # sorted so that float sums do not depend on trace order
    x = np.sort(np.asarray(values, dtype=float))
    if x.size == 0:
        raise DataError("statistics of an empty sample")
    lo, hi = float(x.min()), float(x.max())
    mean = float(x.mean())
    std = float(x.std())
    p25, median, p75 = (float(v) for v in np.percentile(x, [25, 50, 75]))
    uniq, counts = np.unique(x, return_counts=True)
    mode = float(uniq[np.argmax(counts)])
    if lo > 0:
        logs = np.log(x)
        gmean = float(np.exp(logs.mean()))
        gstd = float(np.exp(logs.std()))
        hmean = float(x.size / np.sum(1.0 / x))
    else:
        gmean = gstd = hmean = 0.0
    if hi > lo:
        hist, _ = np.histogram(x, bins=10, range=(lo, hi))
    else:
        hist = np.zeros(10)
        hist[0] = x.size
    skew, kurt = _shape(x)
    return StatisticsProfile(
        min=lo, max=hi, mean=mean, median=median, mode=mode, std=std, variance=std * std,
        p25=p25, p75=p75, iqr=p75 - p25, geometric_mean=gmean, geometric_std=gstd,
        harmonic_mean=hmean, coeff_variation=std / mean if mean else 0.0,
        entropy=_shannon(counts), histogram=tuple(float(h) for h in hist),
        skewness=skew, kurtosis=kurt,
    )


# --------------------------------------------------------------------------- families

def variant_features(vt: VariantTable) -> List[float]:
    if not vt.entries:
        raise DataError("variant table is empty")
    counts = np.array(sorted(vt.entries.values(), reverse=True), dtype=float)
    skew, kurt = _shape(counts)
    out = [float(counts.mean()), float(counts.std()), skew, kurt, counts[0] / vt.total]
    cum = np.cumsum(counts)
    for q in TOP_FRACTIONS:
        k = math.ceil(q * len(counts))
        out.append(float(cum[k - 1] / vt.total))
    return out


def activity_features(log: EventLog, group: str = "all") -> List[float]:
    log.require_nonempty()
    if group == "all":
        counter = Counter(a for t in log.traces for a in t.activities)
    elif group == "start":
        counter = Counter(t.events[0].activity for t in log.traces)
    elif group == "end":
        counter = Counter(t.events[-1].activity for t in log.traces)
    else:
        raise ValueError(f"unknown activity group {group!r}")
    x = np.array(sorted(counter.values()), dtype=float)
    p25, median, p75 = (float(v) for v in np.percentile(x, [25, 50, 75]))
    std = float(x.std())
    skew, kurt = _shape(x)
    return [
        float(len(counter)), float(x.min()), float(x.max()), float(x.mean()), median,
        std, std * std, p25, p75, p75 - p25, skew, kurt,
    ]


def log_level_features(log: EventLog) -> List[float]:
    n = len(log.traces)
    unique = len({t.activities for t in log.traces})
    return [float(n), float(unique), unique / n, float(log.n_events)]


# --------------------------------------------------------------------------- entropies

TERMINAL = "\x00$"


def block_entropy(table: Dict[Tuple[str, ...], int], k: int) -> float:
    """Shannon entropy of length-k windows starting at every event, traces padded with a terminal symbol."""
    if k == 0:
        return 0.0
    blocks: Counter = Counter()
    pad = (TERMINAL,) * (k - 1)
    for seq, n in table.items():
        padded = seq + pad
        for i in range(len(seq)):
            blocks[padded[i:i + k]] += n
    return _shannon(blocks.values())


def prefix_entropy(table: Dict[Tuple[str, ...], int]) -> float:
    prefixes: Counter = Counter()
    for seq, n in table.items():
        for i in range(1, len(seq) + 1):
            prefixes[seq[:i]] += n
    return _shannon(prefixes.values())


def global_block_entropy(table: Dict[Tuple[str, ...], int]) -> float:
    substrings: Counter = Counter()
    for seq, n in table.items():
        for i in range(len(seq)):
            for j in range(i + 1, len(seq) + 1):
                substrings[seq[i:j]] += n
    return _shannon(substrings.values())


def lz76_complexity(sequence: Sequence) -> int:
    """
    Number of phrases in the Lempel-Ziv (1976) parsing: each phrase is the
    shortest extension that does not occur earlier (overlap allowed).
    """
    n = len(sequence)
    if n == 0:
        return 0
    codes = {}
    text = "".join(chr(0x100 + codes.setdefault(s, len(codes))) for s in sequence)
    phrases = 0
    pos = 0
    while pos < n:
        # largest L such that text[pos:pos+L] occurs in text[:pos+L-1]
        lo, hi = 0, n - pos
        step = 1
        while step <= hi and text.find(text[pos:pos + step], 0, pos + step - 1) != -1:
            lo = step
            step *= 2
        hi = min(hi, step)
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if text.find(text[pos:pos + mid], 0, pos + mid - 1) != -1:
                lo = mid
            else:
                hi = mid - 1
        phrases += 1
        pos += lo + 1
    return phrases


def lempel_ziv_entropy(table: Dict[Tuple[str, ...], int]) -> float:
    """LZ76 phrase count of all traces (canonically sorted, separator-joined) over the sequence length."""
    seq: List[str] = []
    for trace in sorted(table):
        for _ in range(table[trace]):
            if seq:
                seq.append(TERMINAL)
            seq.extend(trace)
    return lz76_complexity(seq) / len(seq)


def _embedding(table) -> Tuple[np.ndarray, np.ndarray]:
    points = Counter()
    for seq, n in table.items():
        points[(len(seq), len(set(seq)))] += n
    keys = sorted(points)
    return np.array(keys, dtype=float), np.array([points[k] for k in keys], dtype=float)


def knn_entropy(table: Dict[Tuple[str, ...], int], k: int) -> float:
    """
    Nearest-neighbour differential entropy of the per-trace embedding
    (trace length, distinct activities).

    Duplicate points are frequent, so the k-th neighbour is taken among
    points at non-zero distance (counting multiplicity); k is capped at N-1.
    Lattice distances are >= 1, which keeps the estimate non-negative.
    """
    pts, mult = _embedding(table)
    n = int(mult.sum())
    if n < 2:
        return 0.0
    k_eff = min(k, n - 1)
    d = pts.shape[1]
    log_unit_ball = (d / 2) * math.log(math.pi) - special.gammaln(d / 2 + 1)
    if len(pts) == 1:
        log_eps = np.zeros(1)
    else:
        dist = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1))
        log_eps = np.empty(len(pts))
        for i in range(len(pts)):
            order = np.argsort(dist[i], kind="stable")
            order = order[order != i]
            cum = np.cumsum(mult[order])
            j = int(np.searchsorted(cum, k_eff))
            j = min(j, len(order) - 1)
            log_eps[i] = math.log(dist[i, order[j]])
    value = special.digamma(n) - special.digamma(k_eff) + log_unit_ball + d * float((mult * log_eps).sum()) / n
    return float(max(0.0, value))


def kozachenko_leonenko_entropy(table) -> float:
    return knn_entropy(table, 1)


def entropy_suite(log: EventLog) -> List[float]:
    table = variants(log).entries
    h = {k: block_entropy(table, k) for k in (0, 1, 2, 3, 4, 5)}
    return [
        _shannon(table.values()),
        prefix_entropy(table),
        h[1] - h[0], h[3] - h[2], h[5] - h[4],
        h[1] / 1, h[3] / 3, h[5] / 5,
        global_block_entropy(table),
        knn_entropy(table, 3), knn_entropy(table, 5), knn_entropy(table, 7),
        lempel_ziv_entropy(table),
        kozachenko_leonenko_entropy(table),
    ]


FAMILY_EXTRACTORS = (
    ("trace_length", lambda log: statistics_profile([len(t) for t in log.traces]).as_list()),
    ("variant", lambda log: variant_features(variants(log))),
    ("activity_all", lambda log: activity_features(log, "all")),
    ("activity_start", lambda log: activity_features(log, "start")),
    ("activity_end", lambda log: activity_features(log, "end")),
    ("log_level", log_level_features),
    ("entropy", entropy_suite),
)


def extract_features(log: EventLog, log_id: str = None) -> FeatureVector:
    log.require_nonempty()
    values: List[float] = []
    for family, fn in FAMILY_EXTRACTORS:
        try:
            part = fn(log)
        except Exception as exc:
            raise DataError(f"feature family {family!r} failed: {exc}") from exc
        values.extend(float(v) for v in part)
    values = [v if math.isfinite(v) else 0.0 for v in values]
    return FeatureVector(log_id if log_id is not None else log.name, tuple(values))


def features_to_csv(vectors: Sequence[FeatureVector]) -> str:
    """One row per log, manifest order, shortest round-trip float repr."""
    buf = io.StringIO(newline="")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["log_id", *FEATURE_NAMES])
    for v in vectors:
        w.writerow([v.log_id, *(repr(float(x)) for x in v.values)])
    return buf.getvalue()
