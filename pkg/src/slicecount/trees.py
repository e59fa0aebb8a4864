"""Derivation trees of monomials and their last common subtree nodesets."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from math import prod

from .program import Input, Monomial, Plus, Program, SupportInfo, Times, mask_mono, mono_mask

Antichain = frozenset


@dataclass(frozen=True)
class DerivationTree:
    """Canonical derivation of ``monomial`` at ``root``.

    ``children`` maps every tree node to its tree children (``()`` for leaves)
    and ``parts`` maps it to the part of the monomial derived there.  A
    program node occurs at most once in a tree because sibling subtrees of a
    times node are variable-disjoint.  ``pruned`` is set for the variant that
    stops at nodes of effective height 0.
    """

    program: Program
    root: int
    monomial: int
    children: dict[int, tuple[int, ...]]
    parts: dict[int, int]
    pruned: bool = False

    @property
    def nodes(self) -> frozenset[int]:
        return frozenset(self.children)

    def __len__(self) -> int:
        return len(self.children)

    def leaves(self) -> list[int]:
        return [u for u, cs in self.children.items() if not cs]

    def parent_map(self) -> dict[int, int]:
        return {c: u for u, cs in self.children.items() for c in cs}

    def subtree(self, u: int) -> tuple:
        """Nested-tuple form of the subtree at ``u``, for structural comparison."""
        return (u, self.parts[u], tuple(self.subtree(c) for c in self.children[u]))

    def is_ancestor(self, a: int, b: int) -> bool:
        """True iff ``a`` is a proper ancestor of ``b`` in this tree."""
        par = self.parent_map()
        while b in par:
            b = par[b]
            if b == a:
                return True
        return False


def _build(p: Program, q: int, alpha: int, stop_at_zero: tuple[int, ...] | None) -> DerivationTree:
    if not p.contains_mask(q, alpha):
        raise ValueError(f"monomial {mask_mono(alpha)} is not in the support of node {q}")
    varm = p.varmasks
    children: dict[int, tuple[int, ...]] = {}
    parts: dict[int, int] = {}
    stack = [(q, alpha)]
    while stack:
        u, a = stack.pop()
        parts[u] = a
        node = p.nodes[u]
        if isinstance(node, Input) or (stop_at_zero is not None and stop_at_zero[u] == 0):
            children[u] = ()
        elif isinstance(node, Times):
            children[u] = (node.left, node.right)
            stack.append((node.right, a & varm[node.right]))
            stack.append((node.left, a & varm[node.left]))
        else:
            first = next(c for c in node.children if p.contains_mask(c, a))
            children[u] = (first,)
            stack.append((first, a))
    return DerivationTree(p, q, alpha, children, parts, stop_at_zero is not None)


def derivation_tree(p: Program, q: int, mono: Monomial) -> DerivationTree:
    """tree(mono, q): plus nodes descend into their first child containing the monomial."""
    return _build(p, q, mono_mask(mono), None)


def derivation_tree_star(p: Program, q: int, mono: Monomial, info: SupportInfo) -> DerivationTree:
    """Like :func:`derivation_tree` but every branch stops at effective height 0."""
    return _build(p, q, mono_mask(mono), info.effective_height)


def _full(t: DerivationTree) -> DerivationTree:
    return _build(t.program, t.root, t.monomial, None) if t.pruned else t


def last_common_subtree_nodeset(t1: DerivationTree, t2: DerivationTree) -> Antichain:
    """Highest nodes of ``t1`` whose subtrees coincide in both trees.

    When either argument is a pruned tree the nodeset of the full trees is
    restricted to the nodes kept by the pruned trees.
    """
    if t1.program is not t2.program:
        raise ValueError("trees belong to different programs")
    f1, f2 = _full(t1), _full(t2)
    out = set()
    stack = [f1.root]
    while stack:
        u = stack.pop()
        # canonical construction: equal parts at a shared node imply equal subtrees
        if u in f2.parts and f2.parts[u] == f1.parts[u]:
            out.add(u)
        else:
            stack.extend(f1.children[u])
    if t1.pruned or t2.pruned:
        keep = t1.nodes | t2.nodes
        out &= keep
    return frozenset(out)


def is_antichain(t: DerivationTree, nodes) -> bool:
    nodes = list(nodes)
    return all(not t.is_ancestor(a, b) for a in nodes for b in nodes if a != b)


def mutation_class(
    p: Program,
    q: int,
    mono: Monomial,
    tau,
    info: SupportInfo,
    star: bool = False,
) -> set[Monomial]:
    """All alpha' in supp(q) whose last common subtree nodeset with ``mono`` is ``tau``.

    ``info`` must hold the exact support of ``q``.  With ``star=True`` the
    nodeset is restricted to the nodes of the pruned trees.
    """
    supp = info.exact[q]
    if supp is None:
        raise ValueError(f"support of node {q} is not enumerated")
    tau = frozenset(tau)
    heights = info.effective_height if star else None
    base = _build(p, q, mono_mask(mono), heights)
    out = set()
    for other in supp:
        t = _build(p, q, other, heights)
        if last_common_subtree_nodeset(base, t) == tau:
            out.add(mask_mono(other))
    return out


def mutations_below(p: Program, q: int, mono: Monomial, tau, cap: int = 1 << 16) -> set[Monomial]:
    """Monomials obtained by replacing, for each node t of ``tau``, the part of
    ``mono`` derived at t in tree(mono, q) by any monomial of supp(t).

    ``mono`` itself is included.  Every result lies in supp(q).
    """
    from .oracle import support_masks

    tree = derivation_tree(p, q, mono)
    tau = list(tau)
    for u in tau:
        if u not in tree.parts:
            raise ValueError(f"node {u} is not in tree({mono}, {q})")
    if not is_antichain(tree, tau):
        raise ValueError("tau is not an antichain of the tree")
    fixed = tree.monomial
    for u in tau:
        fixed &= ~tree.parts[u]
    options = [sorted(support_masks(p, cap, u)) for u in tau]
    out = {fixed}
    for opts in options:
        out = {m | o for m in out for o in opts}
    return {mask_mono(m) for m in out}


def antichain_audit(p: Program, q: int, info: SupportInfo, star: bool = False) -> list[tuple]:
    """Check the mutation-class size bound for every monomial of supp(q).

    For every alpha and every nodeset tau realised by some alpha', verifies
    ``|I(alpha, q, tau)| * prod |supp(t)| <= |supp(q)|`` over t in tau, and that
    tau is an antichain of tree(alpha, q).  Returns the violations as
    ``(alpha, tau, count, bound)`` tuples.  Needs exact supports of ``q`` and of
    every node appearing in some tau.
    """
    supp = info.exact[q]
    if supp is None:
        raise ValueError(f"support of node {q} is not enumerated")
    heights = info.effective_height if star else None
    trees = {a: _build(p, q, a, heights) for a in supp}
    fulls = {a: _full(t) for a, t in trees.items()}
    total = len(supp)
    bad = []
    for a in supp:
        counts: Counter = Counter()
        for b in supp:
            counts[last_common_subtree_nodeset(trees[a], trees[b])] += 1
        for tau, count in counts.items():
            sizes = []
            for u in tau:
                su = info.exact[u]
                if su is None:
                    raise ValueError(f"support of node {u} is not enumerated")
                sizes.append(len(su))
            if count * prod(sizes) > total or not is_antichain(fulls[a], tau):
                bad.append((mask_mono(a), tau, count, total / prod(sizes)))
    return bad
