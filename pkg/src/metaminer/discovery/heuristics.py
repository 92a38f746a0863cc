"""
Heuristic miner.

The dependency graph keeps every arc a->b whose dependency value reaches the
threshold. Each activity's successors (and predecessors) are grouped into
AND-bindings: two successors are concurrent when the directly-follows
evidence between them is high relative to their evidence from the activity.
Bindings are exclusive alternatives. The resulting causal structure is
turned into a Petri net with one place per kept arc and silent
transitions wherever an activity has more than one binding.
"""
from __future__ import annotations

from typing import Dict, List, Set, Tuple

from ..eventlog import DirectlyFollowsGraph, EventLog, build_dfg
from ..petrinet import NetBuilder, PetriNet

START, END = "\x00start", "\x00end"


def dependency(dfg: DirectlyFollowsGraph, a: str, b: str) -> float:
    ab = dfg.edge_counts.get((a, b), 0)
    if a == b:
        return ab / (ab + 1)
    ba = dfg.edge_counts.get((b, a), 0)
    return (ab - ba) / (ab + ba + 1)


def dependency_graph(dfg: DirectlyFollowsGraph, threshold: float) -> Set[Tuple[str, str]]:
    """Arcs observed in the DFG whose dependency value is at least ``threshold``."""
    return {
        (a, b) for (a, b) in dfg.edge_counts
        if dependency(dfg, a, b) >= threshold and dependency(dfg, a, b) > 0
    }


def _bindings(center: str, others: List[str], dfg: DirectlyFollowsGraph, and_threshold: float, outgoing: bool):
    """Partition ``others`` into AND-groups (connected components of the pairwise AND relation)."""
    e = dfg.edge_counts
    parent = {x: x for x in others}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, x in enumerate(others):
        for y in others[i + 1:]:
            if x in (START, END) or y in (START, END) or x == center or y == center:
                continue
            between = e.get((x, y), 0) + e.get((y, x), 0)
            if outgoing:
                evidence = e.get((center, x), 0) + e.get((center, y), 0)
            else:
                evidence = e.get((x, center), 0) + e.get((y, center), 0)
            if between / (evidence + 1) >= and_threshold:
                parent[find(y)] = find(x)
    groups: Dict[str, List[str]] = {}
    for x in others:
        groups.setdefault(find(x), []).append(x)
    return sorted((sorted(g) for g in groups.values()))


def heuristic_miner(log: EventLog, dependency_threshold: float = 0.9, and_threshold: float = 0.65) -> PetriNet:
    if not (0.0 <= dependency_threshold <= 1.0 and 0.0 <= and_threshold <= 1.0):
        raise ValueError("heuristic miner thresholds must lie in [0, 1]")
    log.require_nonempty()
    dfg = build_dfg(log)
    arcs = dependency_graph(dfg, dependency_threshold)
    starts = {a for a, n in dfg.start_counts.items() if n}
    ends = {a for a, n in dfg.end_counts.items() if n}

    # activities never enabled (no input and not a start activity) are dropped
    active = set(dfg.nodes)
    while True:
        keep = {a for a in active if a in starts or any(x in active and x != a for (x, y) in arcs if y == a)}
        if keep == active:
            break
        active = keep
    arcs = {(a, b) for (a, b) in arcs if a in active and b in active}

    succ = {a: sorted(b for (x, b) in arcs if x == a) for a in active}
    pred = {a: sorted(x for (x, b) in arcs if b == a) for a in active}

    b = NetBuilder("heuristics")
    source, sink = b.place(), b.place()
    tid = {a: b.transition(a) for a in sorted(active)}
    arc_place = {arc: b.place() for arc in sorted(arcs)}

    def place_of(x, y):
        if x == START:
            return source
        if y == END:
            return sink
        return arc_place[(x, y)]

    for a in sorted(active):
        outs = [y for y in succ[a] if y != a]
        groups = _bindings(a, outs, dfg, and_threshold, outgoing=True)
        if a in succ[a]:
            groups.append([a])
        if a in ends:
            groups.append([END])
        _wire(b, groups, lambda y, a=a: place_of(a, y), tid[a], outgoing=True)

        ins = [x for x in pred[a] if x != a]
        groups = _bindings(a, ins, dfg, and_threshold, outgoing=False)
        if a in pred[a]:
            groups.append([a])
        if a in starts:
            groups.append([START])
        _wire(b, groups, lambda x, a=a: place_of(x, a), tid[a], outgoing=False)

    return b.build({source: 1}, {sink: 1})


def _wire(b: NetBuilder, groups, place_for, t: str, outgoing: bool) -> None:
    if not groups:
        return
    if len(groups) == 1:
        for x in groups[0]:
            if outgoing:
                b.arc(t, place_for(x))
            else:
                b.arc(place_for(x), t)
        return
    hub = b.place()
    if outgoing:
        b.arc(t, hub)
    else:
        b.arc(hub, t)
    for group in groups:
        tau = b.transition()
        if outgoing:
            b.connect([hub], tau, [place_for(x) for x in group])
        else:
            b.connect([place_for(x) for x in group], tau, [hub])
