"""NNF circuits in the c2d text format: checks, smoothing and the (+,x) encoding."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, Union

from .program import Input, Monomial, Plus, Program, Times, Violation


class NnfError(ValueError):
    pass


@dataclass(frozen=True)
class Lit:
    """Literal over variable ``var`` (1-based as in the file format)."""

    var: int
    positive: bool


@dataclass(frozen=True)
class And:
    children: tuple[int, ...]


@dataclass(frozen=True)
class Or:
    children: tuple[int, ...]


@dataclass(frozen=True)
class Const:
    value: bool


NnfNode = Union[Lit, And, Or, Const]


@dataclass(frozen=True)
class NnfCircuit:
    """Nodes in topological order; the root is the last node."""

    num_vars: int
    nodes: tuple[NnfNode, ...]

    def __post_init__(self) -> None:
        if not self.nodes:
            raise NnfError("circuit has no nodes")
        for i, node in enumerate(self.nodes):
            if isinstance(node, Lit):
                if not 1 <= node.var <= self.num_vars:
                    raise NnfError(f"node {i}: variable {node.var} out of range 1..{self.num_vars}")
            elif isinstance(node, (And, Or)):
                for c in node.children:
                    if not 0 <= c < i:
                        raise NnfError(f"node {i}: child {c} is not an earlier node")

    @property
    def root(self) -> int:
        return len(self.nodes) - 1

    @property
    def varsets(self) -> tuple[frozenset[int], ...]:
        out: list[frozenset[int]] = []
        for node in self.nodes:
            if isinstance(node, Lit):
                out.append(frozenset((node.var,)))
            elif isinstance(node, Const):
                out.append(frozenset())
            else:
                out.append(frozenset().union(*(out[c] for c in node.children)))
        return tuple(out)

    def reachable(self) -> list[int]:
        seen = {self.root}
        stack = [self.root]
        while stack:
            u = stack.pop()
            node = self.nodes[u]
            if isinstance(node, (And, Or)):
                for c in node.children:
                    if c not in seen:
                        seen.add(c)
                        stack.append(c)
        return sorted(seen)

    def evaluate(self, assignment: Sequence[bool]) -> bool:
        """Evaluate on ``assignment[v - 1]`` for variable ``v``."""
        val: list[bool] = []
        for node in self.nodes:
            if isinstance(node, Lit):
                val.append(assignment[node.var - 1] == node.positive)
            elif isinstance(node, Const):
                val.append(node.value)
            elif isinstance(node, And):
                val.append(all(val[c] for c in node.children))
            else:
                val.append(any(val[c] for c in node.children))
        return val[-1]

    def num_edges(self) -> int:
        return sum(len(n.children) for n in self.nodes if isinstance(n, (And, Or)))

    def to_text(self) -> str:
        lines = [f"nnf {len(self.nodes)} {self.num_edges()} {self.num_vars}"]
        for node in self.nodes:
            if isinstance(node, Lit):
                lines.append(f"L {node.var if node.positive else -node.var}")
            elif isinstance(node, Const):
                lines.append("A 0" if node.value else "O 0 0")
            elif isinstance(node, And):
                lines.append(f"A {len(node.children)} " + " ".join(map(str, node.children)))
            else:
                lines.append(f"O 0 {len(node.children)} " + " ".join(map(str, node.children)))
        return "\n".join(lines) + "\n"


def parse_nnf(text: str) -> NnfCircuit:
    """Parse the c2d format.  ``A 0`` is true and ``O j 0`` is false."""
    header = None
    nodes: list[NnfNode] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        parts = raw.split()
        if not parts or parts[0] == "c":
            continue
        try:
            nums = [int(x) for x in parts[1:]]
        except ValueError:
            raise NnfError(f"line {lineno}: expected integers") from None
        kind = parts[0]
        if header is None:
            if kind != "nnf" or len(nums) != 3 or min(nums) < 0:
                raise NnfError(f"line {lineno}: malformed header, expected 'nnf <nodes> <edges> <vars>'")
            header = nums
            continue
        i = len(nodes)
        if kind == "L":
            if len(nums) != 1 or nums[0] == 0:
                raise NnfError(f"line {lineno}: expected 'L <nonzero literal>'")
            v = nums[0]
            if abs(v) > header[2]:
                raise NnfError(f"line {lineno}: variable {abs(v)} out of range 1..{header[2]}")
            nodes.append(Lit(abs(v), v > 0))
            continue
        if kind == "A":
            if not nums or len(nums) != 1 + nums[0]:
                raise NnfError(f"line {lineno}: expected 'A <k> <children...>'")
            kids = tuple(nums[1:])
        elif kind == "O":
            if len(nums) < 2 or len(nums) != 2 + nums[1]:
                raise NnfError(f"line {lineno}: expected 'O <j> <k> <children...>'")
            kids = tuple(nums[2:])
        else:
            raise NnfError(f"line {lineno}: unknown node kind {kind!r}")
        for c in kids:
            if not 0 <= c < i:
                raise NnfError(f"line {lineno}: child index {c} out of range")
        if not kids:
            nodes.append(Const(kind == "A"))
        else:
            nodes.append(And(kids) if kind == "A" else Or(kids))
    if header is None:
        raise NnfError("missing 'nnf' header")
    if not nodes:
        raise NnfError("circuit has no nodes")
    if header[0] != len(nodes):
        raise NnfError(f"header announces {header[0]} nodes, found {len(nodes)}")
    return NnfCircuit(header[2], tuple(nodes))


def check_decomposable(c: NnfCircuit) -> list[Violation]:
    vs = c.varsets
    out = []
    for i, node in enumerate(c.nodes):
        if isinstance(node, And):
            seen: set[int] = set()
            for ch in node.children:
                shared = seen & vs[ch]
                if shared:
                    out.append(Violation(i, "decomposability", f"children share variables {sorted(shared)}"))
                    break
                seen |= vs[ch]
    return out


def check_smooth(c: NnfCircuit) -> list[Violation]:
    """Or nodes whose children differ in variables; also flags a root missing variables."""
    vs = c.varsets
    out = []
    for i, node in enumerate(c.nodes):
        if isinstance(node, Or):
            sets = {vs[ch] for ch in node.children}
            if len(sets) > 1:
                desc = " vs ".join(str(sorted(s)) for s in sorted(sets, key=sorted))
                out.append(Violation(i, "smoothness", f"children mention {desc}"))
    missing = set(range(1, c.num_vars + 1)) - vs[c.root]
    if missing:
        out.append(Violation(c.root, "smoothness", f"root does not mention variables {sorted(missing)}"))
    return out


def eliminate_constants(c: NnfCircuit) -> NnfCircuit | bool:
    """Propagate constants; returns a bool when the whole circuit is constant.

    The result keeps only nodes reachable from the root.
    """
    const: dict[int, bool] = {}
    kids: dict[int, tuple[int, ...]] = {}
    for i, node in enumerate(c.nodes):
        if isinstance(node, Const):
            const[i] = node.value
        elif isinstance(node, (And, Or)):
            absorbing = not isinstance(node, And)  # false kills And, true makes Or true
            live = []
            dead = False
            for ch in node.children:
                if ch in const:
                    if const[ch] == absorbing:
                        dead = True
                        break
                else:
                    live.append(ch)
            if dead:
                const[i] = absorbing
            elif not live:
                const[i] = not absorbing
            else:
                kids[i] = tuple(dict.fromkeys(live))
    if c.root in const:
        return const[c.root]

    # rebuild the reachable part, collapsing single-child gates
    new: list[NnfNode] = []
    where: dict[int, int] = {}

    def emit(u: int) -> int:
        if u in where:
            return where[u]
        node = c.nodes[u]
        if isinstance(node, Lit):
            new.append(node)
        else:
            ks = kids[u]
            if len(ks) == 1:
                where[u] = emit(ks[0])
                return where[u]
            mapped = tuple(emit(k) for k in ks)
            new.append(And(mapped) if isinstance(node, And) else Or(mapped))
        where[u] = len(new) - 1
        return where[u]

    # children come first in post-order, so emit never recurses deeply
    for u in _postorder(c, kids):
        emit(u)
    return NnfCircuit(c.num_vars, tuple(new))


def _postorder(c: NnfCircuit, kids: dict[int, tuple[int, ...]]) -> Iterable[int]:
    seen: set[int] = set()
    order: list[int] = []
    stack: list[tuple[int, bool]] = [(c.root, False)]
    while stack:
        u, done = stack.pop()
        if done:
            order.append(u)
            continue
        if u in seen:
            continue
        seen.add(u)
        stack.append((u, True))
        for k in reversed(kids.get(u, ())):
            if k not in seen:
                stack.append((k, False))
    return order


def smooth(c: NnfCircuit) -> NnfCircuit:
    """Pad Or children (and the root) with ``(x or not x)`` gadgets for missing variables.

    Input must be decomposable and constant-free.  Already smooth circuits
    come back unchanged.
    """
    if check_decomposable(c):
        raise NnfError("circuit is not decomposable")
    if any(isinstance(n, Const) for n in c.nodes):
        raise NnfError("eliminate constants before smoothing")
    if not check_smooth(c):
        return c
    vs = c.varsets
    nodes: list[NnfNode] = list(c.nodes)
    gadget: dict[int, int] = {}

    def taut(v: int) -> int:
        if v not in gadget:
            nodes.append(Lit(v, True))
            nodes.append(Lit(v, False))
            nodes.append(Or((len(nodes) - 2, len(nodes) - 1)))
            gadget[v] = len(nodes) - 1
        return gadget[v]

    # rebuilt copies of original nodes; padding only changes Or children
    remap: list[int] = list(range(len(c.nodes)))
    for i, node in enumerate(c.nodes):
        if isinstance(node, Or):
            target = vs[i]
            new_kids = []
            for ch in node.children:
                k = remap[ch]
                missing = sorted(target - vs[ch])
                if missing:
                    nodes.append(And((k,) + tuple(taut(v) for v in missing)))
                    k = len(nodes) - 1
                new_kids.append(k)
            nodes.append(Or(tuple(new_kids)))
            remap[i] = len(nodes) - 1
        elif isinstance(node, And):
            kids = tuple(remap[ch] for ch in node.children)
            if kids != node.children:
                nodes.append(And(kids))
                remap[i] = len(nodes) - 1
    root = remap[c.root]
    missing = sorted(set(range(1, c.num_vars + 1)) - vs[c.root])
    if missing:
        nodes.append(And((root,) + tuple(taut(v) for v in missing)))
        root = len(nodes) - 1
    return _restrict(NnfCircuit(c.num_vars, tuple(nodes)), root)


def _restrict(c: NnfCircuit, root: int) -> NnfCircuit:
    """Keep the nodes below ``root`` (in order) and make ``root`` last."""
    seen = {root}
    stack = [root]
    while stack:
        u = stack.pop()
        node = c.nodes[u]
        if isinstance(node, (And, Or)):
            for ch in node.children:
                if ch not in seen:
                    seen.add(ch)
                    stack.append(ch)
    order = sorted(seen)
    pos = {u: i for i, u in enumerate(order)}
    new: list[NnfNode] = []
    for u in order:
        node = c.nodes[u]
        if isinstance(node, And):
            new.append(And(tuple(pos[ch] for ch in node.children)))
        elif isinstance(node, Or):
            new.append(Or(tuple(pos[ch] for ch in node.children)))
        else:
            new.append(node)
    return NnfCircuit(c.num_vars, tuple(new))


@dataclass(frozen=True)
class ModelDecoder:
    """Literal variables: ``+v`` is id ``2(v-1)`` and ``-v`` is ``2(v-1)+1``."""

    num_vars: int

    @staticmethod
    def var(v: int, positive: bool) -> int:
        return 2 * (v - 1) + (0 if positive else 1)

    def encode(self, assignment: Sequence[bool]) -> Monomial:
        if len(assignment) != self.num_vars:
            raise ValueError(f"assignment has {len(assignment)} values, expected {self.num_vars}")
        return tuple(self.var(v, bool(b)) for v, b in enumerate(assignment, 1))

    def decode(self, mono: Iterable[int]) -> tuple[bool, ...]:
        out: list[bool | None] = [None] * self.num_vars
        for x in mono:
            v, neg = divmod(x, 2)
            if v >= self.num_vars or out[v] is not None:
                raise ValueError(f"monomial {tuple(mono)} is not a total assignment")
            out[v] = not neg
        if any(b is None for b in out):
            raise ValueError(f"monomial {tuple(mono)} is not a total assignment")
        return tuple(out)  # type: ignore[arg-type]

    def var_names(self) -> tuple[str, ...]:
        return tuple(n for v in range(1, self.num_vars + 1) for n in (f"+{v}", f"-{v}"))


def dnnf_to_plus_times(c: NnfCircuit) -> tuple[Program, ModelDecoder]:
    """Translate a smooth, decomposable, constant-free circuit into a (+,x) program.

    And nodes become left-folded chains of times nodes and Or nodes plus
    nodes whose plus children are flattened; only the part reachable from
    the root is emitted.
    """
    if any(isinstance(c.nodes[u], Const) for u in c.reachable()):
        raise NnfError("eliminate constants first")
    if check_decomposable(c):
        raise NnfError("circuit is not decomposable")
    if check_smooth(c):
        raise NnfError("circuit is not smooth")
    dec = ModelDecoder(c.num_vars)
    nodes: list = []
    where: dict[int, int] = {}
    inputs: dict[int, int] = {}
    for u in c.reachable():
        node = c.nodes[u]
        if isinstance(node, Lit):
            x = dec.var(node.var, node.positive)
            if x not in inputs:
                nodes.append(Input(x))
                inputs[x] = len(nodes) - 1
            where[u] = inputs[x]
        elif isinstance(node, And):
            acc = where[node.children[0]]
            for ch in node.children[1:]:
                nodes.append(Times(acc, where[ch]))
                acc = len(nodes) - 1
            where[u] = acc
        else:
            kids: set[int] = set()
            for ch in node.children:
                k = where[ch]
                if isinstance(nodes[k], Plus):
                    kids.update(nodes[k].children)
                else:
                    kids.add(k)
            if len(kids) == 1:
                where[u] = kids.pop()
            else:
                nodes.append(Plus(tuple(sorted(kids))))
                where[u] = len(nodes) - 1
    prog = Program(tuple(nodes), dec.var_names())
    return _restrict_program(prog, where[c.root]), dec


def _restrict_program(p: Program, root: int) -> Program:
    keep = p.reachable(root)
    pos = {u: i for i, u in enumerate(keep)}
    new = []
    for u in keep:
        node = p.nodes[u]
        if isinstance(node, Times):
            new.append(Times(pos[node.left], pos[node.right]))
        elif isinstance(node, Plus):
            new.append(Plus(tuple(pos[ch] for ch in node.children)))
        else:
            new.append(node)
    return Program(tuple(new), p.var_names)


@dataclass(frozen=True)
class DnnfPipeline:
    """Result of preparing a circuit; ``program`` is ``None`` for a constant circuit."""

    program: Program | None
    decoder: ModelDecoder
    constant: bool | None
    smoothed: bool


def prepare_dnnf(c: NnfCircuit) -> DnnfPipeline:
    """Constant elimination, smoothing and translation.

    A constant-true circuit has 2^numVars models and no program; the caller
    reports that count directly.
    """
    dec = ModelDecoder(c.num_vars)
    if check_decomposable(c):
        raise NnfError("circuit is not decomposable")
    reduced = eliminate_constants(c)
    if isinstance(reduced, bool):
        return DnnfPipeline(None, dec, reduced, False)
    needs = bool(check_smooth(reduced))
    sm = smooth(reduced) if needs else reduced
    prog, dec = dnnf_to_plus_times(sm)
    return DnnfPipeline(prog, dec, None, needs)
