"""(+,x) programs over multilinear polynomials, support-set semantics only.

Nodes are stored bottom-up: every child index is smaller than its parent's
index and the last node is the root.  The storage order doubles as the total
order used to break ties between children of a ``plus`` node, so the children
of a ``plus`` node must be listed in increasing index order.

Monomials are handled internally as Python ``int`` bitmasks (bit ``v`` set iff
variable ``v`` occurs).  The public :data:`Monomial` type is a sorted tuple of
variable ids; use :func:`mono_mask` / :func:`mask_mono` to convert.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

Monomial = tuple[int, ...]

INPUT = "input"
TIMES = "times"
PLUS = "plus"


class ProgramError(ValueError):
    """Raised for structurally unusable programs and malformed program text."""


@dataclass(frozen=True)
class Input:
    var: int


@dataclass(frozen=True)
class Times:
    left: int
    right: int


@dataclass(frozen=True)
class Plus:
    children: tuple[int, ...]


Node = Union[Input, Times, Plus]


def mono_mask(mono: Iterable[int]) -> int:
    mask = 0
    for v in mono:
        mask |= 1 << v
    return mask


def mask_mono(mask: int) -> Monomial:
    out = []
    v = 0
    while mask:
        if mask & 1:
            out.append(v)
        mask >>= 1
        v += 1
    return tuple(out)


def children_of(node: Node) -> tuple[int, ...]:
    if isinstance(node, Input):
        return ()
    if isinstance(node, Times):
        return (node.left, node.right)
    return node.children


@dataclass(frozen=True)
class Violation:
    node: int
    kind: str
    detail: str

    def __str__(self) -> str:
        return f"node {self.node}: {self.kind}: {self.detail}"


@dataclass(eq=False)
class Program:
    """An immutable (+,x) program.

    ``var_names`` gives a printable name per variable id; its length is the
    size of the variable universe.
    """

    nodes: tuple[Node, ...]
    var_names: tuple[str, ...]
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        self.nodes = tuple(self.nodes)
        self.var_names = tuple(self.var_names)
        if not self.nodes:
            raise ProgramError("program has no nodes")
        size = len(self.nodes)
        for i, node in enumerate(self.nodes):
            if isinstance(node, Input):
                if not 0 <= node.var < len(self.var_names):
                    raise ProgramError(f"node {i}: variable {node.var} out of range")
            elif isinstance(node, Times):
                pass
            elif isinstance(node, Plus):
                if not node.children:
                    raise ProgramError(f"node {i}: plus node without children")
            else:
                raise ProgramError(f"node {i}: unknown node type {node!r}")
            for c in children_of(node):
                if not 0 <= c < size:
                    raise ProgramError(f"node {i}: child {c} out of range")

    # -- basic structure -------------------------------------------------

    @property
    def size(self) -> int:
        return len(self.nodes)

    @property
    def num_vars(self) -> int:
        return len(self.var_names)

    @property
    def root(self) -> int:
        return len(self.nodes) - 1

    def __len__(self) -> int:
        return len(self.nodes)

    def is_topological(self) -> bool:
        return all(c < i for i, node in enumerate(self.nodes) for c in children_of(node))

    def _require_topological(self) -> None:
        if "topo" not in self._cache:
            self._cache["topo"] = self.is_topological()
        if not self._cache["topo"]:
            raise ProgramError("children must precede their parents")

    @property
    def degrees(self) -> tuple[int, ...]:
        """Per-node degree (plus nodes take the max over children)."""
        if "deg" not in self._cache:
            self._require_topological()
            deg: list[int] = []
            for node in self.nodes:
                if isinstance(node, Input):
                    deg.append(1)
                elif isinstance(node, Times):
                    deg.append(deg[node.left] + deg[node.right])
                else:
                    deg.append(max(deg[c] for c in node.children))
            self._cache["deg"] = tuple(deg)
        return self._cache["deg"]

    @property
    def varmasks(self) -> tuple[int, ...]:
        """Per-node bitmask of the variables labelling descendants."""
        if "var" not in self._cache:
            self._require_topological()
            masks: list[int] = []
            for node in self.nodes:
                if isinstance(node, Input):
                    masks.append(1 << node.var)
                else:
                    m = 0
                    for c in children_of(node):
                        m |= masks[c]
                    masks.append(m)
            self._cache["var"] = tuple(masks)
        return self._cache["var"]

    @property
    def heights(self) -> tuple[int, ...]:
        """Per-node height: inputs are 0, every other node is 1 + max child."""
        if "height" not in self._cache:
            self._require_topological()
            h: list[int] = []
            for node in self.nodes:
                cs = children_of(node)
                h.append(1 + max(h[c] for c in cs) if cs else 0)
            self._cache["height"] = tuple(h)
        return self._cache["height"]

    @property
    def depth(self) -> int:
        return max(self.heights)

    @property
    def degree(self) -> int:
        return self.degrees[self.root]

    def degree_of(self, q: int) -> int:
        return self.degrees[q]

    def varset(self, q: int) -> tuple[int, ...]:
        return mask_mono(self.varmasks[q])

    def parents(self) -> tuple[tuple[int, ...], ...]:
        if "parents" not in self._cache:
            ps: list[list[int]] = [[] for _ in self.nodes]
            for i, node in enumerate(self.nodes):
                for c in children_of(node):
                    ps[c].append(i)
            self._cache["parents"] = tuple(tuple(p) for p in ps)
        return self._cache["parents"]

    def reachable(self, q: int | None = None) -> list[int]:
        """Indices of the nodes below (and including) ``q``, ascending."""
        q = self.root if q is None else q
        seen = {q}
        stack = [q]
        while stack:
            u = stack.pop()
            for c in children_of(self.nodes[u]):
                if c not in seen:
                    seen.add(c)
                    stack.append(c)
        return sorted(seen)

    # -- membership ------------------------------------------------------

    def contains(self, q: int, mono: Monomial | Sequence[int]) -> bool:
        """True iff the monomial belongs to supp(q)."""
        return self.contains_mask(q, mono_mask(mono))

    def contains_mask(self, q: int, alpha: int) -> bool:
        varm = self.varmasks
        if alpha & ~varm[q] or alpha.bit_count() != self.degrees[q]:
            return False
        memo = self._cache.setdefault("member", {})
        return self._member(q, alpha, memo)

    def _member(self, q: int, alpha: int, memo: dict) -> bool:
        key = (q, alpha)
        hit = memo.get(key)
        if hit is not None:
            return hit
        node = self.nodes[q]
        varm = self.varmasks
        deg = self.degrees
        if isinstance(node, Input):
            res = alpha == 1 << node.var
        elif isinstance(node, Times):
            a1 = alpha & varm[node.left]
            a2 = alpha & varm[node.right]
            res = (
                a1 | a2 == alpha
                and a1.bit_count() == deg[node.left]
                and a2.bit_count() == deg[node.right]
                and self._member(node.left, a1, memo)
                and self._member(node.right, a2, memo)
            )
        else:
            res = any(
                not alpha & ~varm[c] and deg[c] == deg[q] and self._member(c, alpha, memo)
                for c in node.children
            )
        memo[key] = res
        return res

    def first_child_containing(self, q: int, alpha: int) -> int:
        """Position (in the child sequence) of the first child of plus node q with alpha in its support, or -1."""
        node = self.nodes[q]
        assert isinstance(node, Plus)
        for pos, c in enumerate(node.children):
            if self.contains_mask(c, alpha):
                return pos
        return -1

    # -- text format -----------------------------------------------------

    def to_text(self) -> str:
        lines = []
        for node in self.nodes:
            if isinstance(node, Input):
                lines.append(f"input {self.var_names[node.var]}")
            elif isinstance(node, Times):
                lines.append(f"times {node.left} {node.right}")
            else:
                lines.append("plus " + " ".join(map(str, node.children)))
        return "\n".join(lines) + "\n"

    def __str__(self) -> str:
        return f"Program(size={self.size}, vars={self.num_vars}, degree={self.degree})"


_NAME = re.compile(r"^\S+$")


def parse_program(text: str) -> Program:
    """Parse the line-oriented program format (``input v`` / ``times i j`` / ``plus i j ...``)."""
    nodes: list[Node] = []
    names: list[str] = []
    index: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        op, args = parts[0].lower(), parts[1:]
        i = len(nodes)
        if op == INPUT:
            if len(args) != 1 or not _NAME.match(args[0]):
                raise ProgramError(f"line {lineno}: expected 'input <name>'")
            name = args[0]
            if name not in index:
                index[name] = len(names)
                names.append(name)
            nodes.append(Input(index[name]))
            continue
        try:
            refs = [int(a) for a in args]
        except ValueError:
            raise ProgramError(f"line {lineno}: node references must be integers") from None
        for r in refs:
            if r < 0 or r >= i:
                raise ProgramError(f"line {lineno}: reference {r} is not an earlier node")
        if op == TIMES:
            if len(refs) != 2:
                raise ProgramError(f"line {lineno}: times takes exactly two children")
            nodes.append(Times(refs[0], refs[1]))
        elif op == PLUS:
            if not refs:
                raise ProgramError(f"line {lineno}: plus needs at least one child")
            nodes.append(Plus(tuple(refs)))
        else:
            raise ProgramError(f"line {lineno}: unknown node kind {parts[0]!r}")
    if not nodes:
        raise ProgramError("empty program")
    return Program(tuple(nodes), tuple(names))


def validate_program(p: Program) -> list[Violation]:
    """List every violated program invariant; an empty list means valid."""
    out: list[Violation] = []
    for i, node in enumerate(p.nodes):
        for c in children_of(node):
            if c >= i:
                out.append(Violation(i, "order", f"child {c} does not precede its parent"))
    if out:
        return out
    deg = p.degrees
    varm = p.varmasks
    for i, node in enumerate(p.nodes):
        if isinstance(node, Times):
            shared = varm[node.left] & varm[node.right]
            if shared:
                names = ", ".join(p.var_names[v] for v in mask_mono(shared))
                out.append(Violation(i, "multilinearity", f"children share variables {names}"))
        elif isinstance(node, Plus):
            ds = {deg[c] for c in node.children}
            if len(ds) > 1:
                out.append(Violation(i, "homogeneity", f"children have degrees {sorted(ds)}"))
            for c in node.children:
                if isinstance(p.nodes[c], Plus):
                    out.append(Violation(i, "plus-child", f"child {c} is a plus node"))
            if list(node.children) != sorted(set(node.children)):
                out.append(Violation(i, "child-order", "plus children must be strictly increasing"))
    return out


@dataclass(frozen=True)
class SupportInfo:
    """Supports of the nodes whose support has at most ``threshold`` monomials.

    ``exact[q]`` is the sorted tuple of monomial masks of supp(q), or ``None``
    when the support is larger than the threshold.
    """

    exact: tuple[tuple[int, ...] | None, ...]
    effective_height: tuple[int, ...]
    threshold: int

    def is_exact(self, q: int) -> bool:
        return self.exact[q] is not None

    def support(self, q: int) -> list[Monomial]:
        s = self.exact[q]
        if s is None:
            raise ValueError(f"support of node {q} exceeds the threshold {self.threshold}")
        return [mask_mono(m) for m in s]


def capped_support(p: Program, cap: int) -> SupportInfo:
    """Bottom-up support enumeration that gives up on a node once it exceeds ``cap``."""
    if cap < 1:
        raise ValueError("cap must be at least 1")
    key = ("capped", cap)
    if key in p._cache:
        return p._cache[key]
    exact: list[tuple[int, ...] | None] = []
    eh: list[int] = []
    for node in p.nodes:
        if isinstance(node, Input):
            s: tuple[int, ...] | None = (1 << node.var,)
        elif isinstance(node, Times):
            a, b = exact[node.left], exact[node.right]
            if a is None or b is None or len(a) * len(b) > cap:
                s = None
            else:
                s = tuple(sorted(x | y for x in a for y in b))
        else:
            acc: set[int] = set()
            s = None
            for c in node.children:
                sc = exact[c]
                if sc is None:
                    acc = None
                    break
                acc.update(sc)
                if len(acc) > cap:
                    acc = None
                    break
            if acc is not None:
                s = tuple(sorted(acc))
        exact.append(s)
        if s is not None:
            eh.append(0)
        else:
            eh.append(1 + max(eh[c] for c in children_of(node)))
    info = SupportInfo(tuple(exact), tuple(eh), cap)
    p._cache[key] = info
    return info
