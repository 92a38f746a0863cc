"""
Model quality: token-replay fitness, escaping-edges precision,
usage-based generalization and degree-based simplicity.

All log-dependent metrics share one replay. Traces are replayed through a
prefix trie, so every distinct prefix is replayed once and its marking is
reused both for fitness bookkeeping and for the precision automaton.
"""
from __future__ import annotations

import math
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

from .errors import DegenerateNetError, MetricError
from .eventlog import EventLog
from .petrinet import Marking, PetriNet

END = "\x00end"  # pseudo-activity observed at the end of every trace
STATE_BUDGET = 5000  # markings explored per silent-move search


@dataclass(frozen=True)
class ReplayResult:
    """Per-case token counts (consumed, produced, missing, remaining) in log order plus log-level sums."""

    cases: Tuple[Tuple[int, int, int, int], ...]
    consumed: int
    produced: int
    missing: int
    remaining: int

    @property
    def fitness(self) -> float:
        return fitness_from_counts(self.consumed, self.produced, self.missing, self.remaining)


@dataclass(frozen=True)
class PrecisionAutomaton:
    """Prefix states with visit frequency, observed continuations and model-allowed activities."""

    states: Dict[Tuple[str, ...], Tuple[int, FrozenSet[str], FrozenSet[str]]]

    def escaping(self, prefix) -> FrozenSet[str]:
        _, observed, allowed = self.states[prefix]
        return allowed - observed

    def precision(self) -> float:
        esc = allowed = 0
        for visits, obs, al in self.states.values():
            esc += visits * len(al - obs)
            allowed += visits * len(al)
        if allowed == 0:
            return 1.0
        return 1.0 - esc / allowed


@dataclass(frozen=True)
class GeneralizationCounts:
    executions: Dict[str, int]

    @property
    def n_nodes(self) -> int:
        return len(self.executions)


@dataclass
class QualityVector:
    fitness: float
    precision: float
    generalization: float
    simplicity: float
    time: float = 0.0
    clamped: Tuple[str, ...] = field(default=(), compare=False)

    @property
    def metrics(self) -> Dict[str, float]:
        return {"f": self.fitness, "p": self.precision, "g": self.generalization, "s": self.simplicity, "t": self.time}


# --------------------------------------------------------------------------- closed forms

def fitness_from_counts(consumed, produced, missing, remaining) -> float:
    if consumed == 0 or produced == 0:
        raise DegenerateNetError("no tokens consumed or produced during replay")
    return 0.5 * (1.0 - missing / consumed) + 0.5 * (1.0 - remaining / produced)


def generalization_from_counts(executions: Sequence[int]) -> float:
    """Usage-based generalization; a node never executed contributes as if executed once."""
    if len(executions) == 0:
        raise DegenerateNetError("net has no nodes")
    total = sum(1.0 / math.sqrt(n) if n > 0 else 1.0 for n in executions)
    return 1.0 - total / len(executions)


def simplicity_from_degrees(degrees: Sequence[int]) -> float:
    if len(degrees) == 0:
        raise DegenerateNetError("net has no nodes")
    mean = sum(degrees) / len(degrees)
    return 1.0 / (1.0 + max(0.0, mean - 2.0))


def simplicity(net: PetriNet) -> float:
    return simplicity_from_degrees(net.degrees())


# --------------------------------------------------------------------------- replay engine

class _Step:
    __slots__ = ("marking", "consumed", "produced", "missing", "remaining", "fired", "children", "visits", "ends")

    def __init__(self, marking):
        self.marking = marking
        self.consumed = self.produced = self.missing = self.remaining = 0
        self.fired: List[str] = []
        self.children: Dict[str, "_Step"] = {}
        self.visits = 0
        self.ends = 0


class TokenReplay:
    """
    Token-based replay of a log on an accepting net.

    When an event's transition is disabled, a breadth-first search over silent
    firings (depth at most twice the transition count) looks for a marking
    that enables it; failing that, the missing tokens are inserted.
    """

    def __init__(self, net: PetriNet, max_depth: Optional[int] = None, state_budget: int = STATE_BUDGET):
        self.net = net
        self.max_depth = max_depth if max_depth is not None else 2 * len(net.transitions)
        self.state_budget = state_budget
        self._pre = net.preset
        self._post = net.postset
        self._silent = net.silent_transitions
        self._closure: Dict[Marking, FrozenSet[str]] = {}
        self._final_paths: Dict[Marking, Optional[List[str]]] = {}

    # -- token game on plain dicts
    def _enabled(self, m, t) -> bool:
        return all(m.get(p, 0) >= 1 for p in self._pre[t])

    def _fire(self, m: Marking, t: str) -> Marking:
        tokens = dict(m)
        for p in self._pre[t]:
            tokens[p] -= 1
        for p in self._post[t]:
            tokens[p] = tokens.get(p, 0) + 1
        return Marking(tokens)

    def _silent_search(self, m: Marking, goal) -> Optional[List[str]]:
        if goal(m):
            return []
        if not self._silent:
            return None
        parents = {m: None}
        queue = deque([(m, 0)])
        while queue:
            cur, depth = queue.popleft()
            if depth >= self.max_depth:
                continue
            for t in self._silent:
                if not self._enabled(cur, t):
                    continue
                nxt = self._fire(cur, t)
                if nxt in parents:
                    continue
                parents[nxt] = (cur, t)
                if goal(nxt):
                    path = []
                    node = nxt
                    while parents[node] is not None:
                        node, tid = parents[node]
                        path.append(tid)
                    return path[::-1]
                if len(parents) >= self.state_budget:
                    return None
                queue.append((nxt, depth + 1))
        return None

    def visible_closure(self, m: Marking) -> FrozenSet[str]:
        """Labels of visible transitions enabled in some marking silently reachable from ``m``."""
        hit = self._closure.get(m)
        if hit is not None:
            return hit
        labels = set()
        seen = {m}
        queue = deque([(m, 0)])
        while queue:
            cur, depth = queue.popleft()
            for t in self.net.transitions:
                if t.label is not None and t.label not in labels and self._enabled(cur, t.id):
                    labels.add(t.label)
            if depth >= self.max_depth:
                continue
            for tid in self._silent:
                if self._enabled(cur, tid):
                    nxt = self._fire(cur, tid)
                    if nxt not in seen and len(seen) < self.state_budget:
                        seen.add(nxt)
                        queue.append((nxt, depth + 1))
        out = frozenset(labels)
        self._closure[m] = out
        return out

    def _step(self, marking: Marking, label: str) -> _Step:
        tids = self.net.by_label.get(label, ())
        if not tids:
            # no transition carries this label: one token missing and one left over
            step = _Step(marking)
            step.consumed = step.produced = step.missing = step.remaining = 1
            return step
        step = _Step(None)
        m = marking
        chosen = next((t for t in tids if self._enabled(m, t)), None)
        if chosen is None:
            path = self._silent_search(m, lambda x: any(self._enabled(x, t) for t in tids))
            if path is not None:
                for t in path:
                    step.consumed += len(self._pre[t])
                    step.produced += len(self._post[t])
                    step.fired.append(t)
                    m = self._fire(m, t)
                chosen = next(t for t in tids if self._enabled(m, t))
            else:
                chosen = min(tids, key=lambda t: sum(1 for p in self._pre[t] if m.get(p, 0) < 1))
                tokens = dict(m)
                for p in self._pre[chosen]:
                    if tokens.get(p, 0) < 1:
                        tokens[p] = 1
                        step.missing += 1
                m = Marking(tokens)
        step.consumed += len(self._pre[chosen])
        step.produced += len(self._post[chosen])
        step.fired.append(chosen)
        step.marking = self._fire(m, chosen)
        return step

    def _finish(self, m: Marking):
        """Silent moves towards the final marking, then consume it. Returns (c, p, m, r, fired)."""
        final = self.net.final_marking
        if m in self._final_paths:
            path = self._final_paths[m]
        else:
            path = self._silent_search(m, lambda x: x == final)
            self._final_paths[m] = path
        consumed = produced = 0
        fired = list(path or [])
        for t in fired:
            consumed += len(self._pre[t])
            produced += len(self._post[t])
            m = self._fire(m, t)
        missing = 0
        tokens = dict(m)
        for p, n in final.items():
            have = tokens.get(p, 0)
            if have < n:
                missing += n - have
                tokens[p] = 0
            else:
                tokens[p] = have - n
            consumed += n
        remaining = sum(tokens.values())
        return consumed, produced, missing, remaining, fired

    def run(self, log: EventLog) -> "ReplayOutcome":
        log.require_nonempty()
        net = self.net
        init_tokens = net.initial_marking.total
        root = _Step(net.initial_marking)
        paths = []
        for trace in log.traces:
            node = root
            node.visits += 1
            path = [node]
            for label in trace.activities:
                child = node.children.get(label)
                if child is None:
                    child = self._step(node.marking, label)
                    node.children[label] = child
                node = child
                node.visits += 1
                path.append(node)
            node.ends += 1
            paths.append(path)

        executions: Counter = Counter({p: 0 for p in net.places})
        executions.update({t.id: 0 for t in net.transitions})
        for p, n in net.initial_marking.items():
            executions[p] += n * len(log.traces)

        finish_cache = {}
        cases = []
        for path in paths:
            c, p, mi, r = 0, init_tokens, 0, 0
            for step in path[1:]:
                c += step.consumed
                p += step.produced
                mi += step.missing
                r += step.remaining
            last = path[-1]
            fin = finish_cache.get(id(last))
            if fin is None:
                fin = self._finish(last.marking)
                finish_cache[id(last)] = fin
            fc, fp, fm, fr, fired = fin
            cases.append((c + fc, p + fp, mi + fm, r + fr))
            for t in fired:
                executions[t] += 1
                for pl in self._post[t]:
                    executions[pl] += 1

        # firings inside the trie, weighted by how many traces pass each step
        stack = [root]
        while stack:
            node = stack.pop()
            for child in node.children.values():
                for t in child.fired:
                    executions[t] += child.visits
                    for pl in self._post[t]:
                        executions[pl] += child.visits
                stack.append(child)

        replay = ReplayResult(
            tuple(cases),
            sum(x[0] for x in cases), sum(x[1] for x in cases),
            sum(x[2] for x in cases), sum(x[3] for x in cases),
        )
        return ReplayOutcome(replay, GeneralizationCounts(dict(executions)), root, self)


@dataclass
class ReplayOutcome:
    replay: ReplayResult
    counts: GeneralizationCounts
    trie: _Step
    engine: TokenReplay

    def automaton(self) -> PrecisionAutomaton:
        states = {}
        stack = [((), self.trie)]
        while stack:
            prefix, node = stack.pop()
            observed = set(node.children)
            if node.ends:
                observed.add(END)
            allowed = self.engine.visible_closure(node.marking)
            states[prefix] = (node.visits, frozenset(observed), allowed)
            for label, child in node.children.items():
                stack.append((prefix + (label,), child))
        return PrecisionAutomaton(states)


def replay(log: EventLog, net: PetriNet) -> ReplayOutcome:
    return TokenReplay(net).run(log)


def token_replay_fitness(log: EventLog, net: PetriNet) -> Tuple[float, ReplayResult]:
    result = replay(log, net).replay
    return result.fitness, result


def escaping_edges_precision(log: EventLog, net: PetriNet) -> float:
    return replay(log, net).automaton().precision()


def generalization(log: EventLog, net: PetriNet) -> float:
    return generalization_from_counts(list(replay(log, net).counts.executions.values()))


def _unit(value: float, name: str, clamped: list) -> float:
    if value < 0.0 or value > 1.0:
        clamped.append(name)
        return min(1.0, max(0.0, value))
    return value


def measure(log: EventLog, net: PetriNet, time: float = 0.0) -> QualityVector:
    """All four metrics of ``net`` against ``log`` from a single replay."""
    clamped: list = []
    try:
        outcome = replay(log, net)
    except MetricError:
        raise
    except Exception as exc:
        raise MetricError("replay", exc) from exc
    values = {}
    for name, fn in (
        ("fitness", lambda: outcome.replay.fitness),
        ("precision", lambda: outcome.automaton().precision()),
        ("generalization", lambda: generalization_from_counts(list(outcome.counts.executions.values()))),
        ("simplicity", lambda: simplicity(net)),
    ):
        try:
            values[name] = _unit(fn(), name, clamped)
        except Exception as exc:
            raise MetricError(name, exc) from exc
    return QualityVector(time=time, clamped=tuple(clamped), **values)


def evaluate(log: EventLog, algo, repetitions: int = 3) -> QualityVector:
    """Discover a net with ``algo`` (timed) and score it on all four dimensions."""
    from .discovery import timed_discovery

    result = timed_discovery(log, algo, repetitions=repetitions)
    return measure(log, result.net, time=result.duration)
