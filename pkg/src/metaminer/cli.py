"""Command-line entry point: ``metaminer <subcommand> [options]``."""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import secrets
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from . import __version__
from .discovery import ROSTER, DiscoveryAlgorithm, parse_identifier, timed_discovery
from .errors import ConfigError, DataError, MetaminerError
from .eventlog import EventLog, read_log
from .loggen import REGIMES, generate_corpus, write_log
from .metafeatures import DIM, MANIFEST, extract_features, features_to_csv, manifest_fingerprint
from .metalearn import (
    Hyperparameters, MetaDatabase, MetaModel, build_meta_database, evaluate_meta_model,
    quality_rows, rank_algorithms, train_random_forest,
)
from .petrinet import to_dot, to_pnml
from .quality import measure

log = logging.getLogger("metaminer")

LOG_SUFFIXES = (".csv", ".xes", ".xes.gz")
QUALITY_COLUMNS = ("log_id", "algorithm", "f", "p", "g", "s", "t")


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad usage; usage errors here are status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


# --------------------------------------------------------------------------- helpers

def _is_log(path: Path) -> bool:
    name = path.name.lower()
    return any(name.endswith(s) for s in LOG_SUFFIXES)


def collect_logs(paths: Sequence[str]) -> List[Path]:
    """Files as given; directories contribute their log files (non-recursive), sorted."""
    out = []
    for p in map(Path, paths):
        if p.is_dir():
            out.extend(sorted(q for q in p.iterdir() if q.is_file() and _is_log(q)))
        elif p.exists():
            out.append(p)
        else:
            raise DataError(f"{p}: no such file or directory")
    if not out:
        raise DataError("no event logs found in " + ", ".join(paths))
    return out


def log_id_of(path: Path) -> str:
    name = path.name
    for s in LOG_SUFFIXES:
        if name.lower().endswith(s):
            return name[: -len(s)]
    return path.stem


def load_log(path: Path) -> EventLog:
    try:
        return read_log(path)
    except DataError as exc:
        raise DataError(f"{path}: {exc}") from None


def load_logs(paths: Sequence[Path]) -> List[Tuple[str, EventLog]]:
    items = [(log_id_of(p), load_log(p)) for p in paths]
    ids = [i for i, _ in items]
    dupes = sorted({i for i in ids if ids.count(i) > 1})
    if dupes:
        raise DataError(f"duplicate log ids: {', '.join(dupes)}")
    return items


def _features_job(item):
    log_id, path = item
    return extract_features(load_log(path), log_id)


def _table(rows: Sequence[Dict], columns: Sequence[str]) -> str:
    def fmt(v):
        if v is None:
            return ""
        if isinstance(v, float):
            return f"{v:.4f}"
        return str(v)

    cells = [[fmt(r.get(c)) for c in columns] for r in rows]
    widths = [max([len(c)] + [len(row[i]) for row in cells]) for i, c in enumerate(columns)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(columns, widths))]
    lines += ["  ".join(v.ljust(w) for v, w in zip(row, widths)) for row in cells]
    return "\n".join(lines)


def _csv(rows: Sequence[Dict], columns: Sequence[str]) -> str:
    buf = io.StringIO(newline="")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow(["" if r.get(c) is None else (repr(r[c]) if isinstance(r[c], float) else r[c]) for c in columns])
    return buf.getvalue()


def _emit(args, payload, text: str) -> None:
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(text)


def _write(path, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8")


def _parse_roster(text: str) -> Tuple[str, ...]:
    try:
        roster = tuple(parse_identifier(a) for a in text.split(",") if a.strip())
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if len(roster) < 2 or len(set(roster)) != len(roster):
        raise UsageError("--roster needs at least two distinct algorithms")
    return roster


def _algorithm(args) -> DiscoveryAlgorithm:
    params = {}
    try:
        ident = parse_identifier(args.algorithm)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if ident == "HM":
        if args.dependency is not None:
            params["dependency_threshold"] = args.dependency
        if args.and_threshold is not None:
            params["and_threshold"] = args.and_threshold
    elif args.dependency is not None or args.and_threshold is not None:
        raise UsageError("--dependency/--and-threshold only apply to hm")
    if ident == "IMf":
        if args.noise is not None:
            params["noise_threshold"] = args.noise
    elif args.noise is not None:
        raise UsageError("--noise only applies to imf")
    try:
        return DiscoveryAlgorithm(ident, params)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _hyperparameters(args) -> Hyperparameters:
    for name in ("trees", "min_leaf"):
        if getattr(args, name) < 1:
            raise UsageError(f"--{name.replace('_', '-')} must be >= 1")
    return Hyperparameters(args.trees, args.max_depth, args.min_leaf, args.features_per_split)


def _figure(fn, *a) -> Optional[Path]:
    from . import report

    return getattr(report, fn)(*a)


# --------------------------------------------------------------------------- subcommands

def cmd_generate(args) -> int:
    regimes = tuple(r.strip() for r in args.regimes.split(",") if r.strip())
    unknown = [r for r in regimes if r not in REGIMES]
    if unknown or not regimes:
        raise UsageError(f"unknown regimes {unknown}; expected some of {', '.join(REGIMES)}")
    if args.n_logs < 1:
        raise UsageError("--n-logs must be >= 1")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    corpus = generate_corpus(args.n_logs, args.seed, regimes)
    rows = []
    for e in corpus:
        write_log(e.log, e.truth, out / f"{e.log_id}.csv", e.config)
        rows.append({"log_id": e.log_id, "regime": e.regime, "traces": len(e.log.traces),
                     "events": e.log.n_events, "noisy_traces": len(e.truth.noise)})
    cols = ("log_id", "regime", "traces", "events", "noisy_traces")
    # a JSON index so the directory can be fed straight back in as a log collection
    _write(out / "corpus.json", json.dumps(rows, indent=2, sort_keys=True) + "\n")
    _emit(args, rows, _table(rows, cols) if args.verbose else f"wrote {len(rows)} logs to {out}")
    return 0


def cmd_extract(args) -> int:
    paths = collect_logs(args.logs)
    items = sorted(((log_id_of(p), p) for p in paths), key=lambda kv: kv[0])
    if args.jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            vectors = list(pool.map(_features_job, items))
    else:
        vectors = [_features_job(it) for it in items]
    text = features_to_csv(vectors)
    if args.out:
        _write(args.out, text)
    if args.json:
        print(json.dumps([{"log_id": v.log_id, "features": v.as_dict()} for v in vectors], indent=2, sort_keys=True))
    elif not args.out:
        sys.stdout.write(text)
    else:
        print(f"wrote {len(vectors)} feature vectors ({DIM} features) to {args.out}")
    return 0


def cmd_discover(args) -> int:
    algo = _algorithm(args)
    path = Path(args.log)
    event_log = load_log(path)
    net = algo.discover(event_log)
    if args.pnml:
        _write(args.pnml, to_pnml(net))
    if args.dot:
        _write(args.dot, to_dot(net))
    info = {
        "log": str(path), "algorithm": algo.identifier, "parameters": algo.parameters,
        "places": len(net.places), "transitions": len(net.transitions),
        "silent_transitions": len(net.silent_transitions), "arcs": len(net.arcs),
    }
    text = "\n".join(f"{k}: {v}" for k, v in info.items())
    _emit(args, info, text)
    return 0


def _quality_for(event_log: EventLog, algo, repetitions: int):
    result = timed_discovery(event_log, algo, repetitions)
    return measure(event_log, result.net, result.duration)


def cmd_evaluate(args) -> int:
    roster = tuple(dict.fromkeys(_algorithm_only(a) for a in args.algorithms.split(",") if a.strip()))
    if not roster:
        raise UsageError("--algorithms is empty")
    rows = []
    for p in collect_logs(args.logs):
        event_log = load_log(p)
        for a in roster:
            q = _quality_for(event_log, a, args.repetitions)
            if q.clamped:
                log.warning("%s/%s: clamped %s", log_id_of(p), a, ",".join(q.clamped))
            rows.append({"log_id": log_id_of(p), "algorithm": a, "f": q.fitness, "p": q.precision,
                         "g": q.generalization, "s": q.simplicity, "t": None if args.no_timing else q.time})
    if args.out:
        _write(args.out, _csv(rows, QUALITY_COLUMNS))
    _emit(args, rows, _table(rows, QUALITY_COLUMNS))
    return 0


def _algorithm_only(name: str) -> str:
    try:
        return parse_identifier(name)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_build_metadb(args) -> int:
    roster = _parse_roster(args.roster)
    items = load_logs(collect_logs(args.logs))
    db = build_meta_database(items, roster, include_time=args.with_time, jobs=args.jobs,
                             repetitions=args.repetitions)
    out = Path(args.out)
    db.save(out)
    qrows = quality_rows(db, timing=not args.no_timing)
    stem = out.with_suffix("")
    _write(stem.with_name(stem.name + ".quality.csv"), _csv(qrows, QUALITY_COLUMNS))
    rank_rows = []
    for r in db.rows:
        scores = {a: db.quality[(r.log_id, a)] for a in roster}
        rank_rows.extend(rank_algorithms(scores, db.include_time, r.log_id, roster).rows)
    from .report import mean_ranks

    _figure("average_rank_figure", mean_ranks(rank_rows, roster), stem.with_name(stem.name + ".ranks.png"))
    summary = {"rows": len(db), "excluded": db.excluded, "class_distribution": db.class_distribution(),
               "roster": list(roster), "metrics": list(db.metrics)}
    text = [f"meta-database: {len(db)} logs -> {out}"]
    text += [f"  {a}: {n}" for a, n in db.class_distribution().items()]
    text += [f"  excluded {k}: {v}" for k, v in db.excluded.items()]
    _emit(args, summary, "\n".join(text))
    return 0


def cmd_train(args) -> int:
    db = MetaDatabase.load(args.db)
    model = train_random_forest(db, _hyperparameters(args), args.seed)
    out = Path(args.out)
    model.save(out)
    imp = model.feature_importance()
    stem = out.with_suffix("")
    rows = [{"rank": i + 1, "feature": n, "importance": v} for i, (n, v) in enumerate(imp.ranked)]
    _write(stem.with_name(stem.name + ".importance.csv"), _csv(rows, ("rank", "feature", "importance")))
    _figure("importance_figure", imp.ranked, stem.with_name(stem.name + ".importance.png"))
    summary = {"model": str(out), "trees": len(model.forest.trees), "seed": args.seed,
               "importance_normalized": imp.normalized, "top_features": rows[:10]}
    text = f"trained {len(model.forest.trees)} trees on {len(db)} logs -> {out}\n"
    text += _table(rows[:10], ("rank", "feature", "importance"))
    if not imp.normalized:
        text += "\n(model has no splits; importances are all zero)"
    _emit(args, summary, text)
    return 0


def cmd_evaluate_model(args) -> int:
    db = MetaDatabase.load(args.db)
    if not 0 < args.split < 1:
        raise UsageError("--split must lie strictly between 0 and 1")
    if args.repetitions < 1:
        raise UsageError("--repetitions must be >= 1")
    rep = evaluate_meta_model(db, args.split, args.repetitions, args.seed, _hyperparameters(args))
    out = Path(args.out)
    _write(out, rep.dumps())
    if args.csv:
        _write(args.csv, rep.summary_csv())
    stem = out.with_suffix("")
    _figure("performance_figure", rep, stem.with_name(stem.name + ".performance.png"))
    rows = [{"method": m, "accuracy": rep.scores[m].accuracy, "f_score": rep.scores[m].f_score}
            for m in ("meta_model", "majority", "random")]
    _emit(args, rep.to_dict(), _table(rows, ("method", "accuracy", "f_score")))
    return 0


def cmd_recommend(args) -> int:
    model = MetaModel.load(args.model)
    path = Path(args.log)
    event_log = load_log(path)
    rec = model.predict(extract_features(event_log, log_id_of(path)))
    payload = {"log": str(path), "algorithm": rec.algorithm, "votes": rec.votes}
    text = [f"recommended: {rec.algorithm}"] + [f"  {a}: {v:.3f}" for a, v in rec.votes.items()]
    if args.run or args.pnml or args.dot:
        net = DiscoveryAlgorithm(rec.algorithm).discover(event_log)
        q = measure(event_log, net)
        payload["quality"] = {"f": q.fitness, "p": q.precision, "g": q.generalization, "s": q.simplicity}
        text.append("quality: " + ", ".join(f"{k}={v:.4f}" for k, v in payload["quality"].items()))
        if args.pnml:
            _write(args.pnml, to_pnml(net))
        if args.dot:
            _write(args.dot, to_dot(net))
    _emit(args, payload, "\n".join(text))
    return 0


def cmd_manifest(args) -> int:
    rows = [{"index": i, "name": s.name, "family": s.family} for i, s in enumerate(MANIFEST)]
    payload = {"dimension": DIM, "fingerprint": manifest_fingerprint(), "features": rows}
    _emit(args, payload, f"{DIM} features, fingerprint {manifest_fingerprint()}\n"
          + _table(rows, ("index", "name", "family")))
    return 0


# --------------------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="master seed (random and printed if omitted)")
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="worker processes for batch work")
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = Parser(prog="metaminer", description="Recommend a process discovery algorithm for an event log.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=Parser)
    sub.required = True

    def add(name, fn, help_text, seeded=False):
        p = sub.add_parser(name, parents=[common], help=help_text, description=help_text)
        p.set_defaults(func=fn, seeded=seeded)
        return p

    def algo_flags(p, required=True):
        p.add_argument("--algorithm", "-a", required=required, help="am | hm | im | imf | imd")
        p.add_argument("--dependency", type=float, help="hm dependency threshold")
        p.add_argument("--and-threshold", type=float, help="hm AND-binding threshold")
        p.add_argument("--noise", type=float, help="imf noise threshold")

    def forest_flags(p):
        p.add_argument("--trees", type=int, default=100)
        p.add_argument("--max-depth", type=int, default=None)
        p.add_argument("--min-leaf", type=int, default=1)
        p.add_argument("--features-per-split", type=int, default=None)

    p = add("generate", cmd_generate, "generate a synthetic log corpus with ground-truth trees", seeded=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--n-logs", type=int, default=20)
    p.add_argument("--regimes", default=",".join(REGIMES), help=f"comma list of {', '.join(REGIMES)}")

    p = add("extract", cmd_extract, "extract meta-features to CSV")
    p.add_argument("logs", nargs="+", help="log files or directories")
    p.add_argument("--out", "-o", help="CSV path (default: stdout)")

    p = add("discover", cmd_discover, "discover a Petri net")
    p.add_argument("--log", required=True)
    algo_flags(p)
    p.add_argument("--pnml", help="write the net as PNML")
    p.add_argument("--dot", help="write the net as Graphviz DOT")

    p = add("evaluate", cmd_evaluate, "score discovered nets on fitness, precision, generalization, simplicity")
    p.add_argument("logs", nargs="+")
    p.add_argument("--algorithms", default=",".join(ROSTER), help="one algorithm or a comma list")
    p.add_argument("--repetitions", type=int, default=3, help="timed discovery runs (median reported)")
    p.add_argument("--no-timing", action="store_true", help="leave the time column blank")
    p.add_argument("--out", "-o", help="quality CSV")

    p = add("build-metadb", cmd_build_metadb, "build the meta-database from a log collection")
    p.add_argument("logs", nargs="+")
    p.add_argument("--roster", default=",".join(ROSTER))
    p.add_argument("--out", "-o", required=True, help="meta-database CSV (sidecar JSON written next to it)")
    p.add_argument("--with-time", action="store_true", help="include discovery time in the ranking")
    p.add_argument("--no-timing", action="store_true", help="leave the time column of the quality CSV blank")
    p.add_argument("--repetitions", type=int, default=3)

    p = add("train", cmd_train, "train the random-forest meta-model", seeded=True)
    p.add_argument("--db", required=True)
    p.add_argument("--out", "-o", required=True)
    forest_flags(p)

    p = add("evaluate-model", cmd_evaluate_model, "repeated holdout evaluation against baselines", seeded=True)
    p.add_argument("--db", required=True)
    p.add_argument("--split", type=float, default=0.75, help="training fraction")
    p.add_argument("--repetitions", type=int, default=30)
    p.add_argument("--out", "-o", required=True, help="JSON report")
    p.add_argument("--csv", help="optional CSV summary")
    forest_flags(p)

    p = add("recommend", cmd_recommend, "recommend an algorithm for a log")
    p.add_argument("--log", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--run", action="store_true", help="also discover with the recommendation and score it")
    p.add_argument("--pnml")
    p.add_argument("--dot")

    add("manifest", cmd_manifest, "list the meta-feature manifest")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose > 1 else logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s")
    if args.seed is None and args.seeded:
        args.seed = secrets.randbelow(2**31)
        print(f"seed: {args.seed}", file=sys.stderr)
    if args.jobs < 1:
        parser.error("--jobs must be >= 1")
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        parser.error(str(exc))
    except (DataError, OSError) as exc:
        print(f"metaminer: error: {exc}", file=sys.stderr)
        return 2
    except MetaminerError as exc:
        print(f"metaminer: error: {exc}", file=sys.stderr)
        return 2
    return 1


if __name__ == "__main__":
    sys.exit(main())
