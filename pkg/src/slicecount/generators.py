"""Seeded instance generators and the small worked example program."""

from __future__ import annotations

import random
from typing import Sequence

from .grammar import Grammar
from .nnf import And, Const, Lit, NnfCircuit, NnfNode, Or
from .program import Input, Plus, Program, Times, children_of


def running_example() -> tuple[Program, dict[str, int]]:
    """The 20-node example program and a map from its node labels q0..q19 to indices.

    Inputs q11..q19 carry x1..x9; the root q0 has degree 4 and 8 monomials.
    """
    labels = ["q11", "q12", "q13", "q14", "q15", "q16", "q17", "q18", "q19"]
    nodes: list = [Input(v) for v in range(9)]
    idx = {name: i for i, name in enumerate(labels)}

    def add(name: str, node) -> None:
        idx[name] = len(nodes)
        nodes.append(node)

    add("q7", Plus((idx["q11"], idx["q12"])))
    add("q8", Plus((idx["q13"], idx["q14"])))
    add("q4", Times(idx["q13"], idx["q7"]))
    add("q5", Times(idx["q8"], idx["q15"]))
    add("q9", Times(idx["q16"], idx["q17"]))
    add("q10", Times(idx["q18"], idx["q19"]))
    add("q3", Plus((idx["q4"], idx["q5"])))
    add("q6", Plus((idx["q9"], idx["q10"])))
    add("q1", Times(idx["q3"], idx["q6"]))
    add("q2", Times(idx["q5"], idx["q10"]))
    add("q0", Plus((idx["q1"], idx["q2"])))
    names = tuple(f"x{i}" for i in range(1, 10))
    return Program(tuple(nodes), names), idx


# -- (+,x) programs -----------------------------------------------------------------


def _compact(nodes: list, root: int, names: Sequence[str]) -> Program:
    keep = {root}
    stack = [root]
    while stack:
        u = stack.pop()
        for c in children_of(nodes[u]):
            if c not in keep:
                keep.add(c)
                stack.append(c)
    order = sorted(keep)
    pos = {u: i for i, u in enumerate(order)}
    used_vars = sorted({nodes[u].var for u in order if isinstance(nodes[u], Input)})
    vpos = {v: i for i, v in enumerate(used_vars)}
    out = []
    for u in order:
        node = nodes[u]
        if isinstance(node, Input):
            out.append(Input(vpos[node.var]))
        elif isinstance(node, Times):
            out.append(Times(pos[node.left], pos[node.right]))
        else:
            out.append(Plus(tuple(sorted({pos[c] for c in node.children}))))
    return Program(tuple(out), tuple(names[v] for v in used_vars))


def random_program(
    rng: random.Random,
    degree: int,
    num_vars: int | None = None,
    width: int = 3,
    plus_fanin: tuple[int, int] = (2, 3),
) -> Program:
    """Random homogeneous multilinear program of the given degree.

    For every degree d a few times nodes combine two existing nodes of
    degrees a and d - a with disjoint variables, and plus nodes group times
    nodes (or inputs) of equal degree.
    """
    num_vars = num_vars or degree + 4
    if num_vars < degree:
        raise ValueError("need at least as many variables as the degree")
    names = [f"x{i}" for i in range(num_vars)]
    nodes: list = [Input(v) for v in range(num_vars)]
    varm: list[int] = [1 << v for v in range(num_vars)]
    pools: dict[int, list[int]] = {1: list(range(num_vars))}
    plain: dict[int, list[int]] = {1: list(range(num_vars))}

    def add(node, mask: int) -> int:
        nodes.append(node)
        varm.append(mask)
        return len(nodes) - 1

    def add_plus(d: int) -> None:
        cands = plain[d]
        if len(cands) < 2:
            return
        k = min(len(cands), rng.randint(*plus_fanin))
        kids = tuple(sorted(rng.sample(cands, k)))
        m = 0
        for c in kids:
            m |= varm[c]
        pools[d].append(add(Plus(kids), m))

    for _ in range(rng.randint(1, 2)):
        add_plus(1)
    for d in range(2, degree + 1):
        pools[d], plain[d] = [], []
        made = 0
        for _ in range(width * 8):
            if made >= width:
                break
            a = rng.randint(1, d - 1)
            if not pools.get(a) or not pools.get(d - a):
                continue
            x = rng.choice(pools[a])
            y = rng.choice(pools[d - a])
            if varm[x] & varm[y]:
                continue
            t = add(Times(x, y), varm[x] | varm[y])
            pools[d].append(t)
            plain[d].append(t)
            made += 1
        if not pools[d]:
            raise ValueError(f"could not build a node of degree {d}; use more variables")
        for _ in range(rng.randint(1, 2)):
            add_plus(d)
    top = [u for u in pools[degree]]
    plus_top = [u for u in top if isinstance(nodes[u], Plus)]
    root = rng.choice(plus_top) if plus_top else rng.choice(top)
    return _compact(nodes, root, names)


def deep_program(rng: random.Random, degree: int, style: str = "chain") -> Program:
    """Left-linear chain (``style='chain'``) or randomly oriented comb of depth about 2*degree.

    Level k extends every monomial of level k-1 by one fresh variable from a
    small random menu, through one or two times nodes under a plus node.
    """
    if degree < 1:
        raise ValueError("degree must be positive")
    nodes: list = []
    names: list[str] = []

    def var(name: str) -> int:
        names.append(name)
        nodes.append(Input(len(names) - 1))
        return len(nodes) - 1

    def menu(k: int, size: int) -> int:
        leaves = [var(f"{'abc'[i]}{k}") for i in range(size)]
        if size == 1:
            return leaves[0]
        nodes.append(Plus(tuple(leaves)))
        return len(nodes) - 1

    cur = menu(1, 2)
    for k in range(2, degree + 1):
        if style == "chain":
            alts = [menu(k, 2), var(f"c{k}")]
        else:
            first = rng.randint(1, 2)
            alts = [menu(k, first)]
            if rng.random() < 0.6:
                names.append(f"d{k}")
                nodes.append(Input(len(names) - 1))
                alts.append(len(nodes) - 1)
        terms = []
        for a in alts:
            if style == "comb" and rng.random() < 0.5:
                nodes.append(Times(a, cur))
            else:
                nodes.append(Times(cur, a))
            terms.append(len(nodes) - 1)
        if len(terms) == 1:
            cur = terms[0]
        else:
            nodes.append(Plus(tuple(terms)))
            cur = len(nodes) - 1
    return Program(tuple(nodes), tuple(names))


def sum_of_products(
    rng: random.Random,
    degree: int,
    blocks: int,
    menu: tuple[int, int] = (1, 2),
    pool: int | None = None,
) -> Program:
    """Plus over ``blocks`` products of ``degree`` factors, each a plus of 1..k inputs.

    Factor sizes are drawn from ``menu``.  Blocks draw their variables from
    a shared pool (default: just enough for one block) so supports overlap.
    """
    if degree < 1 or blocks < 1:
        raise ValueError("degree and blocks must be positive")
    need = degree * menu[1]
    pool = max(pool or need, need)
    names = [f"x{i}" for i in range(pool)]
    nodes: list = [Input(v) for v in range(pool)]
    tops = []
    for _ in range(blocks):
        vars_ = rng.sample(range(pool), need)
        factors = []
        for k in range(degree):
            size = rng.randint(*menu)
            opts = sorted(vars_[k * menu[1] : k * menu[1] + size])
            if len(opts) == 1:
                factors.append(opts[0])
            else:
                nodes.append(Plus(tuple(opts)))
                factors.append(len(nodes) - 1)
        cur = factors[0]
        for f in factors[1:]:
            nodes.append(Times(cur, f))
            cur = len(nodes) - 1
        tops.append(cur)
    flat = set()
    for u in tops:
        # degree-one blocks may already be plus nodes; merge their inputs
        flat.update(nodes[u].children if isinstance(nodes[u], Plus) else (u,))
    tops = sorted(flat) if len(set(tops)) > 1 else tops[:1]
    if len(tops) > 1:
        nodes.append(Plus(tuple(tops)))
    return _compact(nodes, len(nodes) - 1 if len(tops) > 1 else tops[0], names)


# -- grammars -------------------------------------------------------------------


def random_grammar(rng: random.Random, max_nonterminals: int = 6, max_alphabet: int = 3, epsilon_rate: float = 0.1) -> Grammar:
    nts = ["S"] + [chr(ord("A") + i) for i in range(rng.randint(0, max_nonterminals - 1))]
    sigma = ["a", "b", "c"][: rng.randint(1, max_alphabet)]
    rules = []
    for lhs in nts:
        for _ in range(rng.randint(1, 3)):
            if rng.random() < epsilon_rate:
                rhs: tuple[str, ...] = ()
            else:
                length = rng.choice((1, 2, 2, 3))
                rhs = tuple(rng.choice(nts + sigma) for _ in range(length))
            rules.append((lhs, rhs))
    rules = list(dict.fromkeys(rules))
    used = {s for _, r in rules for s in r}
    alphabet = tuple(a for a in sigma if a in used) or (sigma[0],)
    if not any(s in alphabet for _, r in rules for s in r):
        rules.append(("S", (alphabet[0],)))
    return Grammar(tuple(nts), alphabet, tuple(rules), "S")


# -- NNF circuits -----------------------------------------------------------------


def random_dnnf(rng: random.Random, num_vars: int, smooth: bool = True, max_depth: int = 4, constants: bool = False) -> NnfCircuit:
    """Random decomposable circuit over variables 1..num_vars (mentions them all)."""
    nodes: list[NnfNode] = []
    shared: dict[frozenset, int] = {}

    def emit(node: NnfNode) -> int:
        nodes.append(node)
        return len(nodes) - 1

    def build(vs: list[int], depth: int) -> int:
        key = frozenset(vs)
        if key in shared and rng.random() < 0.3:
            return shared[key]
        if len(vs) == 1:
            v = vs[0]
            roll = rng.random()
            if roll < 0.35:
                out = emit(Lit(v, True))
            elif roll < 0.7:
                out = emit(Lit(v, False))
            else:
                out = emit(Or((emit(Lit(v, True)), emit(Lit(v, False)))))
        elif depth <= 0 or rng.random() < 0.45:
            vs = vs[:]
            rng.shuffle(vs)
            k = rng.randint(2, min(3, len(vs)))
            cuts = sorted(rng.sample(range(1, len(vs)), k - 1))
            parts = [vs[a:b] for a, b in zip([0] + cuts, cuts + [len(vs)])]
            kids = [build(sorted(part), depth - 1) for part in parts]
            if constants and rng.random() < 0.1:
                kids.append(emit(Const(True)))
            out = emit(And(tuple(kids)))
        else:
            kids = []
            for _ in range(rng.randint(2, 3)):
                if smooth or len(vs) == 1:
                    kids.append(build(vs, depth - 1))
                else:
                    sub = sorted(rng.sample(vs, rng.randint(1, len(vs))))
                    kids.append(build(sub, depth - 1))
            if constants and rng.random() < 0.1:
                kids.append(emit(Const(False)))
            out = emit(Or(tuple(dict.fromkeys(kids))))
        shared[key] = out
        return out

    root = build(list(range(1, num_vars + 1)), max_depth)
    if root != len(nodes) - 1:
        # shared subcircuit chosen as root: re-emit as a unary And wrapper
        root = emit(And((root,)))
    return NnfCircuit(num_vars, tuple(nodes))
