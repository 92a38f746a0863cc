"""
Inductive miner family.

``IM`` splits the log along cuts of its directly-follows graph and recurses
on sub-logs. ``IMf`` filters infrequent arcs, start/end activities and the
activities they strand before each cut search, and splits the log in a
noise-tolerant way. ``IMd`` recurses on projections of the graph only,
never touching the log after the first pass.

Cuts are tried in the order exclusive choice, sequence, parallel, loop.
When none applies the sub-problem becomes a flower over its activities.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Optional, Sequence, Set, Tuple

from ..eventlog import EventLog, dfg_from_variants, variants
from ..petrinet import PetriNet
from ..processtree import AND, LOOP, SEQ, XOR, ProcessTree, tree_to_petri_net

IM, IMF, IMD = "IM", "IMf", "IMd"

Log = Dict[Tuple[str, ...], int]
Group = Tuple[str, ...]


@dataclass(frozen=True)
class DFGView:
    nodes: FrozenSet[str]
    edges: Dict[Tuple[str, str], int]
    starts: Dict[str, int]
    ends: Dict[str, int]

    @classmethod
    def of_log(cls, log: Log) -> "DFGView":
        dfg = dfg_from_variants(log)
        return cls(frozenset(dfg.nodes), dfg.edge_counts, dfg.start_counts, dfg.end_counts)

    def restrict(self, group, starts, ends) -> "DFGView":
        g = set(group)
        edges = {(a, b): n for (a, b), n in self.edges.items() if a in g and b in g}
        return DFGView(frozenset(g), edges, starts, ends)


# --------------------------------------------------------------------------- cut detection

def _components(nodes, linked) -> List[Group]:
    parent = {n: n for n in nodes}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in linked:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    groups: Dict[str, List[str]] = {}
    for n in sorted(nodes):
        groups.setdefault(find(n), []).append(n)
    return sorted(tuple(g) for g in groups.values())


def _reachability(view: DFGView) -> Dict[str, Set[str]]:
    succ: Dict[str, List[str]] = {n: [] for n in view.nodes}
    for a, b in view.edges:
        succ[a].append(b)
    reach = {}
    for n in view.nodes:
        seen: Set[str] = set()
        stack = list(succ[n])
        while stack:
            x = stack.pop()
            if x not in seen:
                seen.add(x)
                stack.extend(succ[x])
        reach[n] = seen
    return reach


def xor_cut(view: DFGView) -> Optional[List[Group]]:
    groups = _components(view.nodes, view.edges)
    return groups if len(groups) > 1 else None


def sequence_cut(view: DFGView) -> Optional[List[Group]]:
    reach = _reachability(view)
    nodes = sorted(view.nodes)
    linked = []
    for i, a in enumerate(nodes):
        for b in nodes[i + 1:]:
            ab, ba = b in reach[a], a in reach[b]
            if ab == ba:
                linked.append((a, b))
    groups = _components(nodes, linked)
    if len(groups) < 2:
        return None
    reach_groups = {g: sum(1 for h in groups if h != g and any(y in reach[x] for x in g for y in h)) for g in groups}
    groups.sort(key=lambda g: (-reach_groups[g], g))
    for i, g in enumerate(groups):
        for h in groups[i + 1:]:
            for x in g:
                for y in h:
                    if y not in reach[x] or x in reach[y]:
                        return None
    return groups


def parallel_cut(view: DFGView) -> Optional[List[Group]]:
    nodes = sorted(view.nodes)
    linked = [
        (a, b) for i, a in enumerate(nodes) for b in nodes[i + 1:]
        if not ((a, b) in view.edges and (b, a) in view.edges)
    ]
    groups = _components(nodes, linked)
    if len(groups) < 2:
        return None
    ok = [g for g in groups if any(a in view.starts for a in g) and any(a in view.ends for a in g)]
    bad = [g for g in groups if g not in ok]
    if not ok:
        return None
    if bad:
        merged = tuple(sorted(set(ok[0]).union(*bad)))
        groups = sorted([merged] + ok[1:])
    return groups if len(groups) > 1 else None


def loop_cut(view: DFGView) -> Optional[List[Group]]:
    starts = {a for a in view.starts if a in view.nodes}
    ends = {a for a in view.ends if a in view.nodes}
    if not starts or not ends:
        return None
    do = starts | ends
    rest = [n for n in view.nodes if n not in do]
    comps = _components(rest, [(a, b) for (a, b) in view.edges if a in rest and b in rest])
    redo: List[Group] = []
    for comp in comps:
        c = set(comp)
        into_do = False
        for (a, b) in view.edges:
            if b in c and a in do and a not in ends:
                into_do = True
            if a in c and b in do and b not in starts:
                into_do = True
        if not into_do:
            for x in c:
                from_ends = {e for e in ends if (e, x) in view.edges}
                if from_ends and from_ends != ends:
                    into_do = True
                to_starts = {s for s in starts if (x, s) in view.edges}
                if to_starts and to_starts != starts:
                    into_do = True
        if into_do:
            do |= c
        else:
            redo.append(comp)
    if not redo:
        return None
    return [tuple(sorted(do))] + redo


CUTS = ((XOR, xor_cut), (SEQ, sequence_cut), (AND, parallel_cut), (LOOP, loop_cut))


def find_cut(view: DFGView) -> Optional[Tuple[str, List[Group]]]:
    for op, detect in CUTS:
        groups = detect(view)
        if groups:
            return op, groups
    return None


# --------------------------------------------------------------------------- log splitting

def _add(log: Log, trace, n):
    trace = tuple(trace)
    log[trace] = log.get(trace, 0) + n


def split_log(log: Log, op: str, groups: Sequence[Group]) -> List[Log]:
    """Split a log along a cut; events that contradict the cut are dropped."""
    member = {a: i for i, g in enumerate(groups) for a in g}
    subs: List[Log] = [dict() for _ in groups]
    for trace, n in log.items():
        if op == XOR:
            hits = Counter(member[a] for a in trace if a in member)
            best = min(hits, key=lambda i: (-hits[i], i)) if hits else 0
            _add(subs[best], [a for a in trace if member.get(a) == best], n)
        elif op == SEQ:
            for i, part in enumerate(_sequence_segments(trace, member, len(groups))):
                _add(subs[i], part, n)
        elif op == AND:
            for i in range(len(groups)):
                _add(subs[i], [a for a in trace if member.get(a) == i], n)
        else:
            _split_loop(trace, member, subs, n)
    return subs


def _sequence_segments(trace, member, k) -> List[List[str]]:
    # minimum number of dropped events so that group indices are non-decreasing
    inf = len(trace) + 1
    cost = [[0] * k]
    back = []
    for a in trace:
        row, brow = [], []
        best, arg = inf, 0
        for g in range(k):
            if cost[-1][g] < best:
                best, arg = cost[-1][g], g
            row.append(best + (0 if member.get(a) == g else 1))
            brow.append(arg)
        cost.append(row)
        back.append(brow)
    g = min(range(k), key=lambda i: (cost[-1][i], i))
    assigned = [0] * len(trace)
    for pos in range(len(trace) - 1, -1, -1):
        assigned[pos] = g
        g = back[pos][g]
    parts: List[List[str]] = [[] for _ in range(k)]
    for a, g in zip(trace, assigned):
        if member.get(a) == g:
            parts[g].append(a)
    return parts


def _split_loop(trace, member, subs, n):
    segments: List[Tuple[int, List[str]]] = []
    for a in trace:
        g = member.get(a)
        if g is None:
            continue
        if segments and segments[-1][0] == g:
            segments[-1][1].append(a)
        else:
            segments.append((g, [a]))
    expect_do = True
    for g, events in segments:
        if g == 0:
            _add(subs[0], events, n)
            expect_do = False
        else:
            if expect_do:
                _add(subs[0], (), n)
            _add(subs[g], events, n)
            expect_do = True
    if expect_do:
        _add(subs[0], (), n)


# --------------------------------------------------------------------------- recursion

def _flower(activities) -> ProcessTree:
    return ProcessTree(LOOP, (ProcessTree.tau(),) + tuple(ProcessTree.leaf(a) for a in sorted(activities)))


def _single_activity(log: Log, a: str) -> ProcessTree:
    if all(len(t) == 1 for t in log):
        return ProcessTree.leaf(a)
    return ProcessTree(LOOP, (ProcessTree.leaf(a), ProcessTree.tau()))


def _imf_filter(log: Log, threshold: float) -> Tuple[Log, DFGView]:
    """Drop infrequent arcs and start/end activities, then project away stranded activities."""
    while True:
        view = DFGView.of_log(log)
        max_out: Dict[str, int] = {}
        for (a, _), n in view.edges.items():
            max_out[a] = max(max_out.get(a, 0), n)
        edges = {(a, b): n for (a, b), n in view.edges.items() if n >= threshold * max_out[a]}
        top_s = max(view.starts.values())
        top_e = max(view.ends.values())
        starts = {a: n for a, n in view.starts.items() if n >= threshold * top_s}
        ends = {a: n for a, n in view.ends.items() if n >= threshold * top_e}

        succ: Dict[str, List[str]] = {}
        pred: Dict[str, List[str]] = {}
        for a, b in edges:
            succ.setdefault(a, []).append(b)
            pred.setdefault(b, []).append(a)
        fwd = _closure(starts, succ)
        bwd = _closure(ends, pred)
        keep = fwd & bwd
        if not keep:
            return log, DFGView(view.nodes, edges, starts, ends)
        if keep == set(view.nodes):
            return log, DFGView(view.nodes, edges, starts, ends)
        projected: Log = {}
        for trace, n in log.items():
            _add(projected, [a for a in trace if a in keep], n)
        projected.pop((), None)
        if not projected:
            return log, DFGView(view.nodes, edges, starts, ends)
        log = projected


def _closure(seeds, adj) -> Set[str]:
    seen = set(seeds)
    stack = list(seeds)
    while stack:
        for y in adj.get(stack.pop(), ()):
            if y not in seen:
                seen.add(y)
                stack.append(y)
    return seen


def _mine_log(log: Log, variant: str, threshold: float) -> ProcessTree:
    total = sum(log.values())
    empty = log.get((), 0)
    nonempty = {t: n for t, n in log.items() if t}
    if not nonempty:
        return ProcessTree.tau()
    if empty:
        if variant == IMF and empty < threshold * total:
            log = nonempty
        else:
            return ProcessTree(XOR, (ProcessTree.tau(), _mine_log(nonempty, variant, threshold)))
    alphabet = {a for t in log for a in t}
    if len(alphabet) == 1:
        return _single_activity(log, next(iter(alphabet)))
    if variant == IMF:
        filtered, view = _imf_filter(log, threshold)
        if filtered is not log:
            return _mine_log(filtered, variant, threshold)
    else:
        view = DFGView.of_log(log)
    cut = find_cut(view)
    if cut is None:
        return _flower(alphabet)
    op, groups = cut
    children = tuple(_mine_log(sub, variant, threshold) for sub in split_log(log, op, groups))
    return ProcessTree(op, children)


def _mine_dfg(view: DFGView) -> ProcessTree:
    if len(view.nodes) == 1:
        a = next(iter(view.nodes))
        if (a, a) in view.edges:
            return ProcessTree(LOOP, (ProcessTree.leaf(a), ProcessTree.tau()))
        return ProcessTree.leaf(a)
    cut = find_cut(view)
    if cut is None:
        return _flower(view.nodes)
    op, groups = cut
    children = []
    for i, group in enumerate(groups):
        g = set(group)
        starts = {a: n for a, n in view.starts.items() if a in g}
        ends = {a: n for a, n in view.ends.items() if a in g}
        optional = False
        if op == SEQ or (op == LOOP and i > 0):
            entering: Counter = Counter()
            leaving: Counter = Counter()
            for (a, b), n in view.edges.items():
                if a not in g and b in g and (op == SEQ or a in groups[0]):
                    entering[b] += n
                if a in g and b not in g and (op == SEQ or b in groups[0]):
                    leaving[a] += n
            if op == LOOP:
                starts, ends = dict(entering), dict(leaving)
            else:
                starts = dict(Counter(starts) + entering)
                ends = dict(Counter(ends) + leaving)
        if op == SEQ:
            before = set().union(*groups[:i]) if i else set()
            after = set().union(*groups[i + 1:])
            optional = (
                any(a in after for a in view.starts)
                or any(a in before for a in view.ends)
                or any(a in before and b in after for (a, b) in view.edges)
            )
        child = _mine_dfg(view.restrict(group, starts, ends))
        if optional:
            child = ProcessTree(XOR, (ProcessTree.tau(), child))
        children.append(child)
    return ProcessTree(op, tuple(children))


def inductive_tree(log: EventLog, variant: str = IM, noise_threshold: float = 0.2) -> ProcessTree:
    if variant not in (IM, IMF, IMD):
        raise ValueError(f"unknown inductive miner variant {variant!r}")
    if not 0.0 <= noise_threshold <= 1.0:
        raise ValueError("noise threshold must lie in [0, 1]")
    table = dict(variants(log).entries)
    if variant == IMD:
        return _mine_dfg(DFGView.of_log(table))
    return _mine_log(table, variant, noise_threshold if variant == IMF else 0.0)


def inductive_miner(log: EventLog, variant: str = IM, noise_threshold: float = 0.2) -> PetriNet:
    return tree_to_petri_net(inductive_tree(log, variant, noise_threshold), name=variant.lower())
