"""
Accepting Petri nets with silent transitions and their token-game semantics.

Nets and markings are immutable values. Arcs have weight one and connect a
place to a transition or a transition to a place.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, Iterator, List, Mapping, Optional, Tuple
from xml.etree import ElementTree as ET

from .errors import NetError, TransitionNotEnabled


class Marking(Mapping[str, int]):
    """Immutable token multiset; places holding zero tokens are not stored."""

    __slots__ = ("_tokens", "_hash")

    def __init__(self, tokens: Optional[Mapping[str, int]] = None, **kw):
        items = dict(tokens or {}, **kw)
        for place, n in items.items():
            if n < 0:
                raise NetError(f"negative token count on {place!r}")
        self._tokens = {p: int(n) for p, n in sorted(items.items()) if n}
        self._hash = hash(tuple(self._tokens.items()))

    def __getitem__(self, place):
        return self._tokens.get(place, 0)

    def __contains__(self, place):
        return place in self._tokens

    def __iter__(self) -> Iterator[str]:
        return iter(self._tokens)

    def __len__(self):
        return len(self._tokens)

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        if isinstance(other, Marking):
            return self._tokens == other._tokens
        if isinstance(other, Mapping):
            return self._tokens == {p: n for p, n in other.items() if n}
        return NotImplemented

    def __repr__(self):
        return f"Marking({self._tokens})"

    @property
    def total(self) -> int:
        return sum(self._tokens.values())

    def covers(self, other: Mapping[str, int]) -> bool:
        return all(self[p] >= n for p, n in other.items())


@dataclass(frozen=True)
class Transition:
    id: str
    label: Optional[str] = None

    @property
    def silent(self) -> bool:
        return self.label is None


@dataclass(frozen=True)
class PetriNet:
    places: Tuple[str, ...]
    transitions: Tuple[Transition, ...]
    arcs: Tuple[Tuple[str, str], ...]
    initial_marking: Marking
    final_marking: Marking
    name: str = field(default="net", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "places", tuple(self.places))
        object.__setattr__(self, "transitions", tuple(self.transitions))
        object.__setattr__(self, "arcs", tuple(dict.fromkeys(self.arcs)))
        places = set(self.places)
        tids = {t.id for t in self.transitions}
        if len(places) != len(self.places) or len(tids) != len(self.transitions):
            raise NetError("duplicate place or transition id")
        if places & tids:
            raise NetError("place and transition ids overlap")
        for src, dst in self.arcs:
            if not ((src in places and dst in tids) or (src in tids and dst in places)):
                raise NetError(f"arc {src}->{dst} does not connect a place and a transition")
        for m in (self.initial_marking, self.final_marking):
            for p in m:
                if p not in places:
                    raise NetError(f"marking references unknown place {p!r}")

    @cached_property
    def transition_map(self) -> Dict[str, Transition]:
        return {t.id: t for t in self.transitions}

    @cached_property
    def preset(self) -> Dict[str, Tuple[str, ...]]:
        pre = {t.id: [] for t in self.transitions}
        for src, dst in self.arcs:
            if dst in pre:
                pre[dst].append(src)
        return {t: tuple(ps) for t, ps in pre.items()}

    @cached_property
    def postset(self) -> Dict[str, Tuple[str, ...]]:
        post = {t.id: [] for t in self.transitions}
        for src, dst in self.arcs:
            if src in post:
                post[src].append(dst)
        return {t: tuple(ps) for t, ps in post.items()}

    @cached_property
    def silent_transitions(self) -> Tuple[str, ...]:
        return tuple(t.id for t in self.transitions if t.silent)

    @cached_property
    def by_label(self) -> Dict[str, Tuple[str, ...]]:
        out: Dict[str, List[str]] = {}
        for t in self.transitions:
            if t.label is not None:
                out.setdefault(t.label, []).append(t.id)
        return {k: tuple(v) for k, v in out.items()}

    @property
    def labels(self) -> FrozenSet[str]:
        return frozenset(self.by_label)

    def degrees(self) -> List[int]:
        """Arc degree (inputs + outputs) of every place then every transition."""
        deg = Counter()
        for src, dst in self.arcs:
            deg[src] += 1
            deg[dst] += 1
        return [deg[p] for p in self.places] + [deg[t.id] for t in self.transitions]

    def __len__(self):
        return len(self.places) + len(self.transitions)


def is_enabled(net: PetriNet, m: Mapping[str, int], t: str) -> bool:
    return all(m.get(p, 0) >= 1 for p in net.preset[t])


def enabled_transitions(net: PetriNet, m: Mapping[str, int]) -> FrozenSet[str]:
    return frozenset(t.id for t in net.transitions if is_enabled(net, m, t.id))


def fire(net: PetriNet, m: Mapping[str, int], t: str) -> Marking:
    if t not in net.preset:
        raise NetError(f"unknown transition {t!r}")
    if not is_enabled(net, m, t):
        raise TransitionNotEnabled(f"transition {t!r} is not enabled")
    tokens = dict(m)
    for p in net.preset[t]:
        tokens[p] -= 1
    for p in net.postset[t]:
        tokens[p] = tokens.get(p, 0) + 1
    return Marking(tokens)


def visible_language(net: PetriNet, max_length: int, max_states: int = 200_000) -> set:
    """
    All visible label sequences of length <= ``max_length`` that lead from the
    initial marking to exactly the final marking (silent moves are free).
    Exhaustive; meant for small nets in tests and diagnostics.
    """
    final = net.final_marking
    accepted = set()
    frontier = {(net.initial_marking, ())}
    seen = set(frontier)
    while frontier:
        nxt = set()
        for m, word in frontier:
            if m == final:
                accepted.add(word)
            for t in enabled_transitions(net, m):
                label = net.transition_map[t].label
                if label is not None and len(word) >= max_length:
                    continue
                m2 = fire(net, m, t)
                state = (m2, word if label is None else word + (label,))
                if state not in seen:
                    if len(seen) >= max_states:
                        raise NetError("state budget exhausted while enumerating language")
                    seen.add(state)
                    nxt.add(state)
        frontier = nxt
    return accepted


# --------------------------------------------------------------------------- export

def to_pnml(net: PetriNet) -> str:
    pnml = ET.Element("pnml")
    net_el = ET.SubElement(pnml, "net", id=net.name, type="http://www.pnml.org/version-2009/grammar/pnmlcoremodel")
    page = ET.SubElement(net_el, "page", id="page0")
    for p in net.places:
        pe = ET.SubElement(page, "place", id=p)
        ET.SubElement(ET.SubElement(pe, "name"), "text").text = p
        if net.initial_marking[p]:
            ET.SubElement(ET.SubElement(pe, "initialMarking"), "text").text = str(net.initial_marking[p])
    for t in net.transitions:
        te = ET.SubElement(page, "transition", id=t.id)
        ET.SubElement(ET.SubElement(te, "name"), "text").text = t.label if t.label is not None else t.id
        if t.silent:
            ET.SubElement(te, "toolspecific", tool="ProM", version="6.4", activity="$invisible$")
    for i, (src, dst) in enumerate(net.arcs):
        ET.SubElement(page, "arc", id=f"a{i}", source=src, target=dst)
    finals = ET.SubElement(net_el, "finalmarkings")
    fm = ET.SubElement(finals, "marking")
    for p in net.places:
        if net.final_marking[p]:
            ET.SubElement(ET.SubElement(fm, "place", idref=p), "text").text = str(net.final_marking[p])
    ET.indent(pnml)
    return '<?xml version="1.0" encoding="UTF-8"?>\n' + ET.tostring(pnml, encoding="unicode") + "\n"


def _dot_quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_dot(net: PetriNet) -> str:
    lines = [f"digraph {_dot_quote(net.name)} {{", "  rankdir=LR;"]
    for p in net.places:
        tokens = net.initial_marking[p]
        label = "&#9679;" if tokens == 1 else (str(tokens) if tokens else "")
        extra = ", peripheries=2" if net.final_marking[p] else ""
        lines.append(f"  {_dot_quote(p)} [shape=circle, label={_dot_quote(label)}{extra}];")
    for t in net.transitions:
        if t.silent:
            lines.append(f"  {_dot_quote(t.id)} [shape=box, style=filled, fillcolor=black, label=\"\", width=0.15];")
        else:
            lines.append(f"  {_dot_quote(t.id)} [shape=box, label={_dot_quote(t.label)}];")
    for src, dst in net.arcs:
        lines.append(f"  {_dot_quote(src)} -> {_dot_quote(dst)};")
    lines.append("}")
    return "\n".join(lines) + "\n"


class NetBuilder:
    """Incremental construction with deterministic sequential ids."""

    def __init__(self, name: str = "net"):
        self.name = name
        self.places: List[str] = []
        self.transitions: List[Transition] = []
        self.arcs: List[Tuple[str, str]] = []

    def place(self) -> str:
        pid = f"p{len(self.places)}"
        self.places.append(pid)
        return pid

    def transition(self, label: Optional[str] = None) -> str:
        tid = f"t{len(self.transitions)}"
        self.transitions.append(Transition(tid, label))
        return tid

    def arc(self, src: str, dst: str) -> None:
        self.arcs.append((src, dst))

    def connect(self, inputs: Iterable[str], t: str, outputs: Iterable[str]) -> None:
        for p in inputs:
            self.arc(p, t)
        for p in outputs:
            self.arc(t, p)

    def build(self, initial: Mapping[str, int], final: Mapping[str, int]) -> PetriNet:
        return PetriNet(
            tuple(self.places), tuple(self.transitions), tuple(self.arcs),
            Marking(initial), Marking(final), name=self.name,
        )
