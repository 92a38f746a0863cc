"""Classic alpha miner: footprint relations from the directly-follows graph, maximal pairs, one place each."""
from __future__ import annotations

from typing import Dict, FrozenSet, List, Tuple

from ..eventlog import DirectlyFollowsGraph, EventLog, build_dfg
from ..petrinet import NetBuilder, PetriNet

CAUSAL, REVERSE, PARALLEL, CHOICE = "->", "<-", "||", "#"

MAX_PAIRS = 200_000


class FootprintMatrix:
    def __init__(self, activities, relations: Dict[Tuple[str, str], str]):
        self.activities = tuple(activities)
        self.relations = relations

    @classmethod
    def from_dfg(cls, dfg: DirectlyFollowsGraph) -> "FootprintMatrix":
        acts = sorted(dfg.nodes)
        follows = set(dfg.edge_counts)
        rel = {}
        for a in acts:
            for b in acts:
                ab, ba = (a, b) in follows, (b, a) in follows
                if ab and ba:
                    rel[(a, b)] = PARALLEL
                elif ab:
                    rel[(a, b)] = CAUSAL
                elif ba:
                    rel[(a, b)] = REVERSE
                else:
                    rel[(a, b)] = CHOICE
        return cls(acts, rel)

    def __getitem__(self, pair):
        return self.relations[pair]


def _maximal_pairs(fp: FootprintMatrix) -> List[Tuple[FrozenSet[str], FrozenSet[str]]]:
    """
    Maximal (A, B) with A and B internally unrelated and A -> B completely.

    These are the maximal cliques, with both sides non-empty, of a graph on
    left/right copies of the activities: left-left and right-right edges for
    the choice relation, left-right edges for causality.
    """
    rel = fp.relations
    free = [a for a in fp.activities if rel[(a, a)] == CHOICE]
    nodes = [(a, 0) for a in free] + [(a, 1) for a in free]
    adj = {v: set() for v in nodes}
    for u in nodes:
        for v in nodes:
            if u == v:
                continue
            if u[1] == v[1]:
                ok = rel[(u[0], v[0])] == CHOICE
            elif u[1] == 0:
                ok = rel[(u[0], v[0])] == CAUSAL
            else:
                ok = rel[(v[0], u[0])] == CAUSAL
            if ok:
                adj[u].add(v)

    found = []

    def expand(r, p, x):
        if not p and not x:
            A = frozenset(a for a, side in r if side == 0)
            B = frozenset(b for b, side in r if side == 1)
            if A and B:
                found.append((A, B))
                if len(found) > MAX_PAIRS:
                    raise RuntimeError("alpha miner pair enumeration exceeded its budget")
            return
        pivot = max(p | x, key=lambda v: (len(adj[v] & p), v))
        for v in sorted(p - adj[pivot]):
            expand(r | {v}, p & adj[v], x & adj[v])
            p = p - {v}
            x = x | {v}

    expand(frozenset(), set(nodes), set())
    return sorted(set(found), key=lambda ab: (sorted(ab[0]), sorted(ab[1])))


def alpha_miner(log: EventLog) -> PetriNet:
    log.require_nonempty()
    dfg = build_dfg(log)
    fp = FootprintMatrix.from_dfg(dfg)
    pairs = _maximal_pairs(fp)

    b = NetBuilder("alpha")
    source, sink = b.place(), b.place()
    tid = {a: b.transition(a) for a in fp.activities}
    for a in fp.activities:
        if dfg.start_counts.get(a):
            b.arc(source, tid[a])
        if dfg.end_counts.get(a):
            b.arc(tid[a], sink)
    for A, B in pairs:
        p = b.place()
        for a in sorted(A):
            b.arc(tid[a], p)
        for x in sorted(B):
            b.arc(p, tid[x])
    return b.build({source: 1}, {sink: 1})
