"""Depth reduction for homogeneous multilinear (+,x) programs.

The construction is the classical degree-halving one.  Besides the gates
``gate(g)`` (the support of node g) it uses derivatives ``der(g, h)``: the
set of monomials beta such that beta * alpha is produced at g by a parse
tree that passes through h, for any alpha in supp(h).  In a multilinear
program h occurs at most once in any parse tree of g and beta never shares a
variable with h, so ``der(g, h) x gate(h)`` is again multilinear.

Two identities drive the recursion.  For a threshold m with
``ceil(d/2) <= m < d = deg(g)``, every parse tree of g has exactly one times
node t with ``deg(t) > m`` whose children both have degree ``<= m``:

    gate(g) = sum over such t of der(g, t) x gate(t.left) x gate(t.right)

For ``deg(h) <= m < deg(g)`` every parse tree through h has exactly one
times node t on the g-to-h path with ``deg(t) > m`` whose child c towards h
has ``deg(c) <= m``:

    der(g, h) = sum over such (t, c) of der(g, t) x gate(t.other) x der(c, h)

Each object may also be expanded directly along the original node.  A
memoized search picks, per object, the option of least height; with the
halving choices of m this gives height at most 3 ceil(log2 n) for n >= 2.

Size: every object is a plus over at most |P| terms of at most two times
nodes, and there are O(|P|^2) objects, so the output is O(|P|^3) in the
worst case.  Only objects reachable from the root are materialized, and on
chain and comb programs of degree at most 10 the output stays below
``SIZE_CONSTANT * |P|^2`` nodes (checked by the test suite).
"""

from __future__ import annotations

import heapq
import math
import sys
from dataclasses import dataclass

from .program import Input, Plus, Program, Times, children_of

SIZE_CONSTANT = 4

def depth_bound(n: int) -> int:
    """3 * ceil(log2 n); 0 for n = 1."""
    if n < 1:
        raise ValueError("degree must be positive")
    return 3 * math.ceil(math.log2(n)) if n > 1 else 0


@dataclass
class _Plan:
    height: int  # height of the materialized node (-1 for ONE)
    inner: int  # height of the children if the node is a plus, else -1
    terms: tuple  # summands, each a tuple of ("gate", g) / ("der", g, h) factors


def _factor_height(hs: list[int]) -> int:
    """Height of a balanced times tree over factors of the given heights."""
    if not hs:
        return -1
    heap = list(hs)
    heapq.heapify(heap)
    while len(heap) > 1:
        a = heapq.heappop(heap)
        b = heapq.heappop(heap)
        heapq.heappush(heap, max(a, b) + 1)
    return heap[0]


class _Reducer:
    def __init__(self, p: Program) -> None:
        self.p = p
        self.deg = p.degrees
        n = p.size
        # reach[u]: bitmask of nodes reachable from u, u included
        reach = [0] * n
        for u, node in enumerate(p.nodes):
            m = 1 << u
            for c in children_of(node):
                m |= reach[c]
            reach[u] = m
        self.reach = reach
        self.times = [u for u, node in enumerate(p.nodes) if isinstance(node, Times)]
        self.plans: dict[tuple, _Plan] = {}

    def reaches(self, a: int, b: int) -> bool:
        return bool(self.reach[a] >> b & 1)

    # -- planning -------------------------------------------------------

    def plan(self, key: tuple) -> _Plan:
        got = self.plans.get(key)
        if got is None:
            got = self._gate(key[1]) if key[0] == "gate" else self._der(key[1], key[2])
            self.plans[key] = got
        return got

    def _sum(self, terms: list[tuple]) -> _Plan:
        items = []
        for factors in terms:
            real = [pl for pl in (self.plan(f) for f in factors) if pl.height >= 0]
            if len(terms) == 1:
                if len(real) == 1:
                    return _Plan(real[0].height, real[0].inner, tuple(terms))
                return _Plan(_factor_height([pl.height for pl in real]), -1, tuple(terms))
            if len(real) == 1:
                # a lone plus factor is spliced into the parent plus
                items.append(real[0].inner if real[0].inner >= 0 else real[0].height)
            else:
                items.append(_factor_height([pl.height for pl in real]))
        inner = max(items)
        return _Plan(inner + 1, inner, tuple(terms))

    def _best(self, options: list[list[tuple]]) -> _Plan:
        best = None
        for terms in options:
            if not terms:
                continue
            pl = self._sum(terms)
            if best is None or (pl.height, len(pl.terms)) < (best.height, len(best.terms)):
                best = pl
        assert best is not None
        return best

    def _gate(self, g: int) -> _Plan:
        node = self.p.nodes[g]
        if isinstance(node, Input):
            return _Plan(0, -1, ())
        options: list[list[tuple]] = []
        if isinstance(node, Times):
            options.append([(("gate", node.left), ("gate", node.right))])
        else:
            options.append([(("gate", c),) for c in node.children])
        d = self.deg[g]
        for m in range((d + 1) // 2, d):
            terms = []
            for t in self.times:
                if not self.reaches(g, t):
                    continue
                tn = self.p.nodes[t]
                if self.deg[t] > m >= max(self.deg[tn.left], self.deg[tn.right]):
                    terms.append((("der", g, t), ("gate", tn.left), ("gate", tn.right)))
            options.append(terms)
        return self._best(options)

    def _der(self, g: int, h: int) -> _Plan:
        if self.deg[g] == self.deg[h]:
            return _Plan(-1, -1, ())  # ONE: g reaches h through plus nodes only
        node = self.p.nodes[g]
        options: list[list[tuple]] = []
        if isinstance(node, Times):
            for c, o in ((node.left, node.right), (node.right, node.left)):
                if self.reaches(c, h):
                    options.append([(("der", c, h), ("gate", o))])
        else:
            options.append([(("der", c, h),) for c in node.children if self.reaches(c, h)])
        for m in range(self.deg[h], self.deg[g]):
            terms = []
            for t in self.times:
                if not self.reaches(g, t) or self.deg[t] <= m:
                    continue
                tn = self.p.nodes[t]
                for c, o in ((tn.left, tn.right), (tn.right, tn.left)):
                    if self.deg[c] <= m and self.reaches(c, h):
                        terms.append((("der", g, t), ("gate", o), ("der", c, h)))
            options.append(terms)
        return self._best(options)

    # -- materialization --------------------------------------------------

    def build(self, root_key: tuple) -> Program:
        nodes: list = []
        intern: dict = {}
        made: dict[tuple, int | None] = {}

        def emit(node) -> int:
            k = intern.get(node)
            if k is None:
                nodes.append(node)
                k = intern[node] = len(nodes) - 1
            return k

        def times_of(ids: list[int]) -> int:
            heap = [(heights[i], i) for i in ids]
            heapq.heapify(heap)
            while len(heap) > 1:
                ha, a = heapq.heappop(heap)
                hb, b = heapq.heappop(heap)
                k = emit(Times(min(a, b), max(a, b)))
                set_height(k, max(ha, hb) + 1)
                heapq.heappush(heap, (heights[k], k))
            return heap[0][1]

        heights: dict[int, int] = {}

        def set_height(k: int, h: int) -> None:
            heights.setdefault(k, h)

        def make(key: tuple) -> int | None:
            if key in made:
                return made[key]
            pl = self.plan(key)
            if key[0] == "gate" and isinstance(self.p.nodes[key[1]], Input):
                k = emit(Input(self.p.nodes[key[1]].var))
                set_height(k, 0)
                made[key] = k
                return k
            if pl.height < 0:
                made[key] = None
                return None
            kids: set[int] = set()
            for factors in pl.terms:
                ids = [i for i in (make(f) for f in factors) if i is not None]
                k = times_of(ids)
                if isinstance(nodes[k], Plus):
                    kids.update(nodes[k].children)
                else:
                    kids.add(k)
            if len(kids) == 1:
                k = kids.pop()
            else:
                k = emit(Plus(tuple(sorted(kids))))
                set_height(k, 1 + max(heights[c] for c in kids))
            made[key] = k
            return k

        old = sys.getrecursionlimit()
        sys.setrecursionlimit(max(old, 20000))
        try:
            root = make(root_key)
        finally:
            sys.setrecursionlimit(old)
        assert root is not None
        return _renumber(nodes, root, self.p.var_names)


def _renumber(nodes: list, root: int, var_names) -> Program:
    """Keep the nodes below ``root`` in creation order (already topological)."""
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
    out = []
    for u in order:
        node = nodes[u]
        if isinstance(node, Times):
            out.append(Times(pos[node.left], pos[node.right]))
        elif isinstance(node, Plus):
            out.append(Plus(tuple(sorted(pos[c] for c in node.children))))
        else:
            out.append(node)
    return Program(tuple(out), var_names)


def reduce_depth(p: Program, force: bool = False) -> Program:
    """Equivalent program (same root support) of height at most ``depth_bound(deg)``.

    Programs already within the bound are returned unchanged unless
    ``force`` is set.  A degree-1 program whose root is a plus node keeps
    height 1, the least possible.
    """
    bound = depth_bound(p.degree)
    if p.depth <= bound and not force:
        return p
    sub = _restrict(p)
    red = _Reducer(sub)
    out = red.build(("gate", sub.root))
    if out.depth > p.depth and not force:
        return p
    return out


def _restrict(p: Program) -> Program:
    keep = p.reachable()
    if len(keep) == p.size:
        return p
    pos = {u: i for i, u in enumerate(keep)}
    out = []
    for u in keep:
        node = p.nodes[u]
        if isinstance(node, Times):
            out.append(Times(pos[node.left], pos[node.right]))
        elif isinstance(node, Plus):
            out.append(Plus(tuple(pos[c] for c in node.children)))
        else:
            out.append(node)
    return Program(tuple(out), p.var_names)
