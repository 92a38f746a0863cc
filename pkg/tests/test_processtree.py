import itertools

import pytest

from metaminer.errors import NetError
from metaminer.loggen import GeneratorConfig, generate_process_tree
from metaminer.petrinet import visible_language
from metaminer.processtree import (
    ProcessTree, loop, normalize, par, seq, tree_language, tree_to_petri_net, xor,
)


def test_leaf_net_has_three_nodes():
    net = tree_to_petri_net(ProcessTree.leaf("a"))
    assert len(net.places) == 2 and len(net.transitions) == 1
    assert visible_language(net, 3) == {("a",)}


def test_sequence_replays_exactly_ab():
    net = tree_to_petri_net(seq("a", "b"))
    assert visible_language(net, 4) == {("a", "b")}
    assert len(net.places) == 3  # a's exit is b's entry


def test_xor_with_nested_sequence():
    net = tree_to_petri_net(xor("a", seq("b", "c")))
    assert visible_language(net, 3) == {("a",), ("b", "c")}


def test_parallel_and_loop_languages():
    assert visible_language(tree_to_petri_net(par("a", "b")), 3) == {("a", "b"), ("b", "a")}
    lang = visible_language(tree_to_petri_net(loop("a", "b")), 5)
    assert lang == {("a",), ("a", "b", "a"), ("a", "b", "a", "b", "a")}
    assert visible_language(tree_to_petri_net(loop("a", None)), 3) == {("a",), ("a", "a"), ("a", "a", "a")}


def test_malformed_trees_rejected():
    with pytest.raises(NetError):
        ProcessTree("seq", (ProcessTree.leaf("a"),)).validate()
    with pytest.raises(NetError):
        ProcessTree("nope", (ProcessTree.leaf("a"), ProcessTree.leaf("b"))).validate()
    with pytest.raises(NetError):
        tree_to_petri_net(ProcessTree("xor", ()))


def test_normalize_flattens():
    assert normalize(seq(seq("a", "b"), "c")) == seq("a", "b", "c")


def test_dict_round_trip():
    t = seq("a", xor(None, par("b", loop("c", "d"))))
    assert ProcessTree.from_dict(t.to_dict()) == t


def brute_shuffles(a, b):
    """Interleavings via choosing positions; independent of the recursive helper."""
    n = len(a) + len(b)
    out = set()
    for pos in itertools.combinations(range(n), len(a)):
        ai, bi, w = iter(a), iter(b), []
        for i in range(n):
            w.append(next(ai) if i in pos else next(bi))
        out.add(tuple(w))
    return out


def test_tree_language_parallel_matches_brute_force():
    lang = tree_language(par(seq("a", "b"), seq("c", "d")), 4)
    assert lang == brute_shuffles(("a", "b"), ("c", "d"))


@pytest.mark.parametrize("seed", range(40))
def test_net_language_equals_tree_language(seed):
    cfg = GeneratorConfig(activities=(2, 6), depth=(1, 3), seed=seed)
    tree = generate_process_tree(cfg)
    net = tree_to_petri_net(tree)
    assert visible_language(net, 5) == tree_language(tree, 5)


def test_translation_is_deterministic():
    t = seq("a", par("b", "c"), loop("d", "e"))
    assert tree_to_petri_net(t) == tree_to_petri_net(t)
