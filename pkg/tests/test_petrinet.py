import xml.etree.ElementTree as ET

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from metaminer.errors import NetError, TransitionNotEnabled
from metaminer.petrinet import (
    Marking, NetBuilder, PetriNet, Transition, enabled_transitions, fire, is_enabled, to_dot, to_pnml,
)


def chain():
    b = NetBuilder()
    a, z = b.place(), b.place()
    t = b.transition("t")
    b.connect([a], t, [z])
    return b.build({a: 1}, {z: 1}), a, z, t


def test_enabled_simple():
    net, a, z, t = chain()
    assert enabled_transitions(net, {a: 1}) == {t}
    assert enabled_transitions(net, {}) == frozenset()


def test_fire_moves_token():
    net, a, z, t = chain()
    assert fire(net, Marking({a: 1}), t) == Marking({z: 1})
    with pytest.raises(TransitionNotEnabled):
        fire(net, Marking(), t)


def test_self_loop_keeps_token():
    b = NetBuilder()
    p = b.place()
    t = b.transition("x")
    b.connect([p], t, [p])
    net = b.build({p: 1}, {p: 1})
    assert fire(net, net.initial_marking, t) == Marking({p: 1})


def test_marking_ignores_zero_and_hashes():
    assert Marking({"a": 0, "b": 2}) == Marking(b=2)
    assert hash(Marking({"a": 1, "b": 2})) == hash(Marking({"b": 2, "a": 1}))
    assert Marking(a=3).covers({"a": 2}) and not Marking(a=1).covers({"a": 2})
    with pytest.raises(NetError):
        Marking(a=-1)


def test_net_validation():
    with pytest.raises(NetError):
        PetriNet(("p",), (Transition("p"),), (), Marking(), Marking())
    with pytest.raises(NetError):
        PetriNet(("p", "q"), (), (("p", "q"),), Marking(), Marking())
    with pytest.raises(NetError):
        PetriNet(("p",), (), (), Marking(x=1), Marking())


@st.composite
def random_nets(draw):
    n_places = 5
    n_trans = draw(st.integers(1, 6))
    places = [f"p{i}" for i in range(n_places)]
    arcs = []
    for i in range(n_trans):
        ins = draw(st.sets(st.sampled_from(places), max_size=3))
        outs = draw(st.sets(st.sampled_from(places), max_size=3))
        arcs += [(p, f"t{i}") for p in sorted(ins)] + [(f"t{i}", p) for p in sorted(outs)]
    marking = {p: draw(st.integers(0, 2)) for p in places}
    net = PetriNet(tuple(places), tuple(Transition(f"t{i}", f"l{i}") for i in range(n_trans)),
                   tuple(arcs), Marking(marking), Marking())
    return net, marking


@settings(max_examples=150, deadline=None)
@given(random_nets())
def test_enabledness_matches_brute_force(case):
    net, marking = case
    brute = set()
    for t in net.transitions:
        needed = [src for src, dst in net.arcs if dst == t.id]
        if all(marking[p] >= 1 for p in needed):
            brute.add(t.id)
    assert enabled_transitions(net, marking) == brute


@settings(max_examples=150, deadline=None)
@given(random_nets())
def test_firing_conserves_tokens_arithmetically(case):
    net, marking = case
    m = Marking(marking)
    for t in sorted(enabled_transitions(net, m)):
        after = fire(net, m, t)
        n_in = sum(1 for src, dst in net.arcs if dst == t)
        n_out = sum(1 for src, dst in net.arcs if src == t)
        assert after.total == m.total - n_in + n_out
        assert is_enabled(net, m, t)


def test_pnml_and_dot_exports():
    net, a, z, t = chain()
    doc = ET.fromstring(to_pnml(net).split("\n", 1)[1])
    assert len(doc.findall(".//place")) >= 2
    assert len(doc.findall(".//transition")) == 1
    assert len(doc.findall(".//arc")) == 2
    dot = to_dot(net)
    assert dot.startswith("digraph") and f'"{a}" -> "{t}"' in dot
