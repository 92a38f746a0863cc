"""Meta-database: one row per log with its meta-features and best-ranked algorithm."""
from __future__ import annotations

import csv
import io
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from ..discovery import ROSTER, parse_identifier
from ..errors import DataError, EmptyDatabaseError
from ..eventlog import EventLog
from ..metafeatures import DIM, FEATURE_NAMES, FeatureVector, extract_features, manifest_fingerprint
from ..quality import QualityVector, evaluate
from .ranking import metric_set, rank_algorithms

log = logging.getLogger(__name__)

DB_VERSION = 1


@dataclass(frozen=True)
class MetaRow:
    log_id: str
    features: FeatureVector
    meta_target: str


@dataclass
class MetaDatabase:
    rows: List[MetaRow]
    roster: Tuple[str, ...]
    include_time: bool = False
    fingerprint: str = field(default_factory=manifest_fingerprint)
    # (log id, algorithm) -> QualityVector, kept for reporting; not part of the file format
    quality: Dict[Tuple[str, str], QualityVector] = field(default_factory=dict, compare=False)
    excluded: Dict[str, str] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        self.rows = sorted(self.rows, key=lambda r: r.log_id)
        ids = [r.log_id for r in self.rows]
        if len(set(ids)) != len(ids):
            raise DataError("meta-database has duplicate log ids")
        for r in self.rows:
            if r.meta_target not in self.roster:
                raise DataError(f"meta-target {r.meta_target!r} of {r.log_id} is not in the roster")

    def __len__(self):
        return len(self.rows)

    @property
    def metrics(self) -> Tuple[str, ...]:
        return metric_set(self.include_time)

    def matrix(self):
        import numpy as np

        X = np.array([r.features.values for r in self.rows], dtype=float).reshape(len(self.rows), DIM)
        y = np.array([self.roster.index(r.meta_target) for r in self.rows], dtype=np.int64)
        return X, y

    def class_distribution(self) -> Dict[str, int]:
        dist = {a: 0 for a in self.roster}
        for r in self.rows:
            dist[r.meta_target] += 1
        return dist

    def restrict(self, roster: Sequence[str]) -> "MetaDatabase":
        """Re-rank the stored quality vectors over a sub-roster."""
        roster = tuple(parse_identifier(a) for a in roster)
        if len(roster) < 2 or not set(roster) <= set(self.roster):
            raise ValueError(f"sub-roster must hold at least two of {', '.join(self.roster)}")
        if not self.quality:
            raise DataError("meta-database carries no quality vectors to re-rank")
        rows, quality = [], {}
        for r in self.rows:
            scores = {a: self.quality[(r.log_id, a)] for a in roster}
            target = rank_algorithms(scores, self.include_time, r.log_id, roster).meta_target
            rows.append(MetaRow(r.log_id, r.features, target))
            quality.update({(r.log_id, a): q for a, q in scores.items()})
        return MetaDatabase(rows, roster, self.include_time, self.fingerprint, quality, dict(self.excluded))

    # -- persistence
    def to_csv(self) -> str:
        buf = io.StringIO(newline="")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["log_id", *FEATURE_NAMES, "meta_target"])
        for r in self.rows:
            w.writerow([r.log_id, *(repr(float(v)) for v in r.features.values), r.meta_target])
        return buf.getvalue()

    def sidecar(self) -> Dict:
        return {
            "version": DB_VERSION, "roster": list(self.roster),
            "metrics": list(self.metrics), "include_time": self.include_time,
            "manifest_fingerprint": self.fingerprint, "n_features": DIM,
            "class_distribution": self.class_distribution(),
        }

    def save(self, path) -> None:
        path = Path(path)
        path.write_text(self.to_csv(), encoding="utf-8")
        sidecar_path(path).write_text(json.dumps(self.sidecar(), indent=2, sort_keys=True) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "MetaDatabase":
        path = Path(path)
        meta = json.loads(sidecar_path(path).read_text(encoding="utf-8"))
        if meta.get("manifest_fingerprint") != manifest_fingerprint():
            raise DataError(f"{path}: meta-database was built with a different feature manifest")
        reader = csv.reader(io.StringIO(path.read_text(encoding="utf-8"), newline=""))
        header = next(reader)
        if header[1:-1] != list(FEATURE_NAMES):
            raise DataError(f"{path}: feature columns do not match the manifest")
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            try:
                values = tuple(float(v) for v in rec[1:-1])
                rows.append(MetaRow(rec[0], FeatureVector(rec[0], values), rec[-1]))
            except (ValueError, DataError) as exc:
                raise DataError(f"{path}: bad record on line {lineno}: {exc}") from None
        return cls(rows, tuple(meta["roster"]), bool(meta["include_time"]), meta["manifest_fingerprint"])


def sidecar_path(path: Path) -> Path:
    return path.with_suffix(path.suffix + ".json") if path.suffix != ".json" else path.with_suffix(".meta.json")


def _process_log(item, roster, include_time, repetitions):
    """Features plus quality vectors for one log; runs in worker processes."""
    log_id, event_log = item
    scores = {}
    failures = {}
    try:
        features = extract_features(event_log, log_id)
    except Exception as exc:
        return log_id, None, scores, {"features": f"{type(exc).__name__}: {exc}"}
    for algo in roster:
        try:
            scores[algo] = evaluate(event_log, algo, repetitions=repetitions)
        except Exception as exc:  # a failing pair excludes the log, not the build
            failures[algo] = f"{type(exc).__name__}: {exc}"
    return log_id, features, scores, failures


def build_meta_database(
    logs: Sequence[Tuple[str, EventLog]],
    roster: Sequence[str] = ROSTER,
    include_time: bool = False,
    jobs: int = 1,
    repetitions: int = 3,
    progress: Optional[Callable[[str], None]] = None,
) -> MetaDatabase:
    """``logs`` is a sequence of (log id, EventLog) pairs."""
    roster = tuple(parse_identifier(a) for a in roster)
    if len(roster) < 2 or len(set(roster)) != len(roster):
        raise ValueError("roster needs at least two distinct algorithms")
    items = sorted(logs, key=lambda kv: kv[0])
    # discovery is only worth repeating when its wall time feeds the ranking
    repetitions = repetitions if include_time else 1
    if not items:
        raise EmptyDatabaseError("no logs given")
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_process_log, it, roster, include_time, repetitions) for it in items]
            results = [f.result() for f in futures]
    else:
        results = [_process_log(it, roster, include_time, repetitions) for it in items]

    rows, quality, excluded = [], {}, {}
    for log_id, features, scores, failures in results:
        if failures:
            reason = "; ".join(f"{a}: {msg}" for a, msg in failures.items())
            log.warning("excluding log %s: %s", log_id, reason)
            excluded[log_id] = reason
            continue
        ranking = rank_algorithms(scores, include_time, log_id, roster)
        if ranking.tied:
            log.debug("log %s: tie between %s, %s chosen", log_id, ",".join(ranking.tied), ranking.meta_target)
        rows.append(MetaRow(log_id, features, ranking.meta_target))
        for a, q in scores.items():
            quality[(log_id, a)] = q
        if progress:
            progress(log_id)
    if not rows:
        raise EmptyDatabaseError("every log failed; meta-database is empty")
    return MetaDatabase(rows, roster, include_time, quality=quality, excluded=excluded)


def quality_rows(db: MetaDatabase, timing: bool = True) -> List[Dict[str, object]]:
    out = []
    for (log_id, algo), q in sorted(db.quality.items(), key=lambda kv: (kv[0][0], db.roster.index(kv[0][1]))):
        out.append({
            "log_id": log_id, "algorithm": algo,
            "f": q.fitness, "p": q.precision, "g": q.generalization, "s": q.simplicity,
            "t": q.time if timing else None,
        })
    return out
