"""
Block-structured process trees and their translation to workflow nets.

Operators: ``seq`` (sequence), ``xor`` (exclusive choice), ``and``
(parallel) and ``loop`` (redo loop: first child is the do-part, the others
are redo-parts; the language is do (redo do)*). Leaves carry an activity
label or are silent (``label is None``).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional, Tuple

from .errors import NetError
from .petrinet import NetBuilder, PetriNet

SEQ, XOR, AND, LOOP = "seq", "xor", "and", "loop"
OPERATORS = (SEQ, XOR, AND, LOOP)
_SYMBOLS = {SEQ: "->", XOR: "X", AND: "+", LOOP: "*"}


@dataclass(frozen=True)
class ProcessTree:
    operator: Optional[str] = None
    children: Tuple["ProcessTree", ...] = ()
    label: Optional[str] = None

    @classmethod
    def leaf(cls, label: Optional[str]) -> "ProcessTree":
        return cls(None, (), label)

    @classmethod
    def tau(cls) -> "ProcessTree":
        return cls(None, (), None)

    @property
    def is_leaf(self) -> bool:
        return self.operator is None

    @property
    def is_silent(self) -> bool:
        return self.is_leaf and self.label is None

    def validate(self) -> "ProcessTree":
        if self.is_leaf:
            if self.children:
                raise NetError("leaf nodes cannot have children")
            return self
        if self.operator not in OPERATORS:
            raise NetError(f"unknown operator {self.operator!r}")
        if len(self.children) < 2:
            raise NetError(f"operator {self.operator} needs at least two children")
        for c in self.children:
            if not isinstance(c, ProcessTree):
                raise NetError("children must be process trees")
            c.validate()
        return self

    def leaves(self) -> Iterator["ProcessTree"]:
        if self.is_leaf:
            yield self
        else:
            for c in self.children:
                yield from c.leaves()

    def activities(self) -> Tuple[str, ...]:
        return tuple(sorted({l.label for l in self.leaves() if l.label is not None}))

    def internal_nodes(self) -> Iterator["ProcessTree"]:
        if not self.is_leaf:
            yield self
            for c in self.children:
                yield from c.internal_nodes()

    def depth(self) -> int:
        if self.is_leaf:
            return 0
        return 1 + max(c.depth() for c in self.children)

    def __str__(self):
        if self.is_leaf:
            return "tau" if self.label is None else repr(self.label)
        return f"{_SYMBOLS[self.operator]}({', '.join(str(c) for c in self.children)})"

    def to_dict(self):
        if self.is_leaf:
            return {"label": self.label}
        return {"operator": self.operator, "children": [c.to_dict() for c in self.children]}

    @classmethod
    def from_dict(cls, data) -> "ProcessTree":
        if "operator" in data:
            return cls(data["operator"], tuple(cls.from_dict(c) for c in data["children"])).validate()
        return cls.leaf(data.get("label"))


def seq(*children):
    return ProcessTree(SEQ, tuple(_as_tree(c) for c in children))


def xor(*children):
    return ProcessTree(XOR, tuple(_as_tree(c) for c in children))


def par(*children):
    return ProcessTree(AND, tuple(_as_tree(c) for c in children))


def loop(*children):
    return ProcessTree(LOOP, tuple(_as_tree(c) for c in children))


def _as_tree(x) -> ProcessTree:
    if isinstance(x, ProcessTree):
        return x
    if x is None:
        return ProcessTree.tau()
    return ProcessTree.leaf(x)


def normalize(tree: ProcessTree) -> ProcessTree:
    """Flatten nested seq/xor/and nodes of the same operator; loops are left as they are."""
    if tree.is_leaf:
        return tree
    kids = []
    for c in (normalize(c) for c in tree.children):
        if tree.operator != LOOP and c.operator == tree.operator:
            kids.extend(c.children)
        else:
            kids.append(c)
    return ProcessTree(tree.operator, tuple(kids))


def tree_to_petri_net(tree: ProcessTree, name: str = "net") -> PetriNet:
    """
    Translate a process tree into a workflow net with one source and one sink.

    Ids are assigned in a fixed preorder walk, so equal trees give identical
    nets. Parallel blocks get a silent split and join; loops get a silent
    entry and exit so the redo arcs never leak into sibling choices.
    """
    tree.validate()
    b = NetBuilder(name)
    source = b.place()
    sink = b.place()

    def build(node: ProcessTree, entry: str, exit_: str) -> None:
        if node.is_leaf:
            b.connect([entry], b.transition(node.label), [exit_])
        elif node.operator == SEQ:
            current = entry
            for i, child in enumerate(node.children):
                nxt = exit_ if i == len(node.children) - 1 else b.place()
                build(child, current, nxt)
                current = nxt
        elif node.operator == XOR:
            for child in node.children:
                build(child, entry, exit_)
        elif node.operator == AND:
            split = b.transition()
            join = b.transition()
            b.arc(entry, split)
            b.arc(join, exit_)
            for child in node.children:
                cin, cout = b.place(), b.place()
                b.arc(split, cin)
                b.arc(cout, join)
                build(child, cin, cout)
        elif node.operator == LOOP:
            do_in, do_out = b.place(), b.place()
            b.connect([entry], b.transition(), [do_in])
            build(node.children[0], do_in, do_out)
            for redo in node.children[1:]:
                build(redo, do_out, do_in)
            b.connect([do_out], b.transition(), [exit_])
        else:  # pragma: no cover - validate() rejects this
            raise NetError(f"unknown operator {node.operator!r}")

    build(tree, source, sink)
    return b.build({source: 1}, {sink: 1})


def tree_language(tree: ProcessTree, max_length: int, max_loop_rounds: Optional[int] = None) -> set:
    """
    Traces of the tree with at most ``max_length`` events, by direct recursion
    on the operator semantics (independent of the net translation). Loops are
    unrolled until no new word fits, or at most ``max_loop_rounds`` rounds.
    """

    def lang(node):
        if node.is_leaf:
            return {()} if node.label is None else {(node.label,)}
        kids = [lang(c) for c in node.children]
        if node.operator == SEQ:
            out = {()}
            for k in kids:
                out = {a + b for a in out for b in k if len(a) + len(b) <= max_length}
            return out
        if node.operator == XOR:
            return set().union(*kids)
        if node.operator == AND:
            out = {()}
            for k in kids:
                out = {w for a in out for b in k if len(a) + len(b) <= max_length for w in _shuffles(a, b)}
            return out
        do, redos = kids[0], set().union(*kids[1:])
        out = set(do)
        frontier = set(do)
        for _ in range(max_loop_rounds or max_length + 1):
            frontier = {
                w + r + d for w in frontier for r in redos for d in do
                if len(w) + len(r) + len(d) <= max_length
            } - out
            if not frontier:
                break
            out |= frontier
        return out

    return {w for w in lang(tree) if len(w) <= max_length}


def _shuffles(a, b):
    if not a:
        return {b}
    if not b:
        return {a}
    return {(a[0],) + w for w in _shuffles(a[1:], b)} | {(b[0],) + w for w in _shuffles(a, b[1:])}
