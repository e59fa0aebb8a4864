"""Context-free grammars: parsing, CNF conversion, slice programs and their (+,x) encoding."""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

from .program import Input, Monomial, Plus, Program, Times, mask_mono

EPSILON_TOKENS = ("ε", "''", '""')
_NONTERMINAL = re.compile(r"^[A-Z][A-Za-z0-9_]*$")
_TOKEN = re.compile(r"'[^']*'|\"[^\"]*\"|\||[^\s|;]+|;")


class GrammarError(ValueError):
    pass


@dataclass(frozen=True)
class Grammar:
    """A CFG.  ``rules`` keeps file order; an empty right-hand side is an epsilon rule."""

    nonterminals: tuple[str, ...]
    alphabet: tuple[str, ...]
    rules: tuple[tuple[str, tuple[str, ...]], ...]
    start: str

    def __post_init__(self) -> None:
        nts = set(self.nonterminals)
        clash = nts & set(self.alphabet)
        if clash:
            raise GrammarError(f"symbols used both as terminal and nonterminal: {sorted(clash)}")
        if self.start not in nts:
            raise GrammarError(f"undefined start symbol {self.start!r}")
        for lhs, rhs in self.rules:
            if lhs not in nts:
                raise GrammarError(f"rule for unknown nonterminal {lhs!r}")
            for s in rhs:
                if s not in nts and s not in self.alphabet:
                    raise GrammarError(f"unknown symbol {s!r} in rule for {lhs}")

    def is_terminal(self, s: str) -> bool:
        return s not in self._nt_set

    @property
    def _nt_set(self) -> frozenset[str]:
        return frozenset(self.nonterminals)

    def rules_for(self, lhs: str) -> list[tuple[str, ...]]:
        return [rhs for l, rhs in self.rules if l == lhs]

    def is_cnf(self) -> bool:
        nts = self._nt_set
        for _, rhs in self.rules:
            if len(rhs) == 1 and rhs[0] not in nts:
                continue
            if len(rhs) == 2 and rhs[0] in nts and rhs[1] in nts:
                continue
            return False
        return True

    @property
    def size(self) -> int:
        return sum(1 + len(rhs) for _, rhs in self.rules)

    def to_text(self) -> str:
        def sym(s: str) -> str:
            if s in self._nt_set or re.fullmatch(r"[a-z][A-Za-z0-9_]*", s):
                return s
            return "'" + s + "'"

        lines = [f"@start {self.start}"]
        for lhs in self.nonterminals:
            alts = self.rules_for(lhs)
            if alts:
                body = " | ".join(" ".join(sym(s) for s in rhs) if rhs else "ε" for rhs in alts)
                lines.append(f"{lhs} -> {body}")
        return "\n".join(lines) + "\n"


def parse_grammar(text: str) -> Grammar:
    """Parse ``LHS -> a B | 'x' C ;`` lines; the first LHS is the start unless ``@start`` says otherwise."""
    start: str | None = None
    rules: list[tuple[str, tuple[str, ...]]] = []
    nts: list[str] = []
    terminals: list[str] = []
    nt_set: set[str] = set()
    raw_rules: list[tuple[int, str, list[list[str]]]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("@start"):
            parts = line.split()
            if len(parts) != 2:
                raise GrammarError(f"line {lineno}: expected '@start <Nonterminal>'")
            start = parts[1]
            continue
        if "->" not in line:
            raise GrammarError(f"line {lineno}: expected 'LHS -> ...'")
        lhs, body = line.split("->", 1)
        lhs = lhs.strip()
        if not _NONTERMINAL.match(lhs):
            raise GrammarError(f"line {lineno}: bad nonterminal {lhs!r}")
        if lhs not in nt_set:
            nt_set.add(lhs)
            nts.append(lhs)
        alts: list[list[str]] = [[]]
        for tok in _TOKEN.findall(body):
            if tok == ";":
                continue
            if tok == "|":
                alts.append([])
            else:
                alts[-1].append(tok)
        raw_rules.append((lineno, lhs, alts))
    if not raw_rules:
        raise GrammarError("grammar has no rules")
    for lineno, lhs, alts in raw_rules:
        for alt in alts:
            rhs: list[str] = []
            for tok in alt:
                if tok in EPSILON_TOKENS:
                    continue
                if tok[0] in "'\"":
                    name = tok[1:-1]
                    if name in nt_set:
                        raise GrammarError(f"line {lineno}: terminal {tok} clashes with a nonterminal")
                    if name not in terminals:
                        terminals.append(name)
                    rhs.append(name)
                elif _NONTERMINAL.match(tok):
                    if tok not in nt_set:
                        nt_set.add(tok)
                        nts.append(tok)
                    rhs.append(tok)
                elif re.fullmatch(r"[a-z0-9][A-Za-z0-9_]*|[^\sA-Za-z0-9_]", tok):
                    if tok not in terminals:
                        terminals.append(tok)
                    rhs.append(tok)
                else:
                    raise GrammarError(f"line {lineno}: cannot read symbol {tok!r}")
            rules.append((lhs, tuple(rhs)))
    start = raw_rules[0][1] if start is None else start
    if start not in nt_set:
        raise GrammarError(f"undefined start symbol {start!r}")
    # a nonterminal used before a quoted terminal of the same name is caught here
    return Grammar(tuple(nts), tuple(terminals), tuple(dict.fromkeys(rules)), start)


# -- CNF conversion ------------------------------------------------------------


def _fresh(base: str, taken: set[str]) -> str:
    k = 1
    while f"{base}_{k}" in taken:
        k += 1
    name = f"{base}_{k}"
    taken.add(name)
    return name


def nullable_nonterminals(g: Grammar) -> set[str]:
    nullable: set[str] = set()
    changed = True
    while changed:
        changed = False
        for lhs, rhs in g.rules:
            if lhs not in nullable and all(s in nullable for s in rhs):
                nullable.add(lhs)
                changed = True
    return nullable


def _prune(nts: Sequence[str], rules: list[tuple[str, tuple[str, ...]]], start: str, alphabet: Sequence[str]):
    """Drop non-generating and unreachable nonterminals (keeps the start symbol)."""
    nt_set = set(nts)
    gen: set[str] = set()
    changed = True
    while changed:
        changed = False
        for lhs, rhs in rules:
            if lhs not in gen and all(s in gen or s not in nt_set for s in rhs):
                gen.add(lhs)
                changed = True
    rules = [(l, r) for l, r in rules if l in gen and all(s in gen or s not in nt_set for s in r)]
    reach = {start}
    stack = [start]
    while stack:
        a = stack.pop()
        for l, r in rules:
            if l == a:
                for s in r:
                    if s in nt_set and s not in reach:
                        reach.add(s)
                        stack.append(s)
    rules = [(l, r) for l, r in rules if l in reach]
    keep = [a for a in nts if a in reach and (a in gen or a == start)]
    used_terms = {s for _, r in rules for s in r if s not in nt_set}
    alpha = [a for a in alphabet if a in used_terms]
    return keep, rules, alpha


@dataclass(frozen=True)
class CnfGrammar:
    """A grammar in Chomsky normal form plus whether the original derived the empty word."""

    grammar: Grammar
    derives_empty: bool


def to_cnf(g: Grammar) -> CnfGrammar:
    """Convert to CNF: epsilon rules, unit rules, terminal lifting, binarization.

    The slices L_n for n >= 1 are preserved; whether the empty word was
    derivable is reported separately.  Fresh names are deterministic.
    """
    nts = list(g.nonterminals)
    nt_set = set(nts)
    taken = set(nts) | set(g.alphabet)
    nullable = nullable_nonterminals(g)
    derives_empty = g.start in nullable

    # 1. epsilon rules
    rules: list[tuple[str, tuple[str, ...]]] = []
    for lhs, rhs in g.rules:
        opt = [i for i, s in enumerate(rhs) if s in nullable]
        for drop in itertools.product((False, True), repeat=len(opt)):
            gone = {i for i, d in zip(opt, drop) if d}
            new = tuple(s for i, s in enumerate(rhs) if i not in gone)
            if new:
                rules.append((lhs, new))
    rules = list(dict.fromkeys(rules))

    # 2. unit rules
    unit = {a: {a} for a in nts}
    changed = True
    while changed:
        changed = False
        for lhs, rhs in rules:
            if len(rhs) == 1 and rhs[0] in nt_set:
                for a in nts:
                    if lhs in unit[a] and rhs[0] not in unit[a]:
                        unit[a].add(rhs[0])
                        changed = True
    non_unit = [(l, r) for l, r in rules if not (len(r) == 1 and r[0] in nt_set)]
    rules = []
    for a in nts:
        for b in nts:
            if b in unit[a]:
                rules.extend((a, r) for l, r in non_unit if l == b)
    rules = list(dict.fromkeys(rules))
    nts, rules, alphabet = _prune(nts, rules, g.start, g.alphabet)
    nt_set = set(nts)

    # 3. terminal lifting
    lifted: dict[str, str] = {}
    out: list[tuple[str, tuple[str, ...]]] = []
    for lhs, rhs in rules:
        if len(rhs) == 1:
            out.append((lhs, rhs))
            continue
        new = []
        for s in rhs:
            if s in nt_set:
                new.append(s)
                continue
            if s not in lifted:
                base = "T_" + s if re.fullmatch(r"[A-Za-z0-9_]+", s) else f"T_{alphabet.index(s)}"
                name = base if base not in taken else _fresh(base, taken)
                taken.add(name)
                lifted[s] = name
            new.append(lifted[s])
        out.append((lhs, tuple(new)))
    for s in alphabet:
        if s in lifted:
            out.append((lifted[s], (s,)))

    # 4. binarization
    final: list[tuple[str, tuple[str, ...]]] = []
    extra_nts: list[str] = []
    for lhs, rhs in out:
        cur = lhs
        while len(rhs) > 2:
            nxt = _fresh(lhs, taken)
            extra_nts.append(nxt)
            final.append((cur, (rhs[0], nxt)))
            cur, rhs = nxt, rhs[1:]
        final.append((cur, rhs))
    all_nts = nts + [lifted[s] for s in alphabet if s in lifted] + extra_nts
    final = list(dict.fromkeys(final))
    if not final:
        # language without non-empty words: keep a start symbol with no rules
        return CnfGrammar(Grammar((g.start,), tuple(alphabet), (), g.start), derives_empty)
    return CnfGrammar(Grammar(tuple(all_nts), tuple(alphabet), tuple(final), g.start), derives_empty)


def cyk_accepts(g: Grammar, word: Sequence[str]) -> bool:
    """CYK membership for a CNF grammar and a non-empty word."""
    n = len(word)
    if n == 0:
        raise ValueError("CYK needs a non-empty word")
    unary: dict[str, set[str]] = {}
    binary: list[tuple[str, str, str]] = []
    for lhs, rhs in g.rules:
        if len(rhs) == 1:
            unary.setdefault(rhs[0], set()).add(lhs)
        else:
            binary.append((lhs, rhs[0], rhs[1]))
    table = [[set() for _ in range(n + 1)] for _ in range(n)]
    for i, a in enumerate(word):
        table[i][1] = set(unary.get(a, ()))
    for length in range(2, n + 1):
        for i in range(n - length + 1):
            cell = table[i][length]
            for k in range(1, length):
                left, right = table[i][k], table[i + k][length - k]
                if not left or not right:
                    continue
                for lhs, b, c in binary:
                    if b in left and c in right:
                        cell.add(lhs)
    return g.start in table[0][n]


# -- (union, concat) slice programs ---------------------------------------------


@dataclass(frozen=True)
class Letter:
    symbol: str


@dataclass(frozen=True)
class Union_:
    children: tuple[int, ...]


@dataclass(frozen=True)
class Concat:
    left: int
    right: int


UcNode = Union[Letter, Union_, Concat]


@dataclass(frozen=True)
class UnionConcatProgram:
    """Homogeneous (union, concat) program; ``root`` is ``None`` for the empty language."""

    nodes: tuple[UcNode, ...]
    alphabet: tuple[str, ...]
    root: int | None
    lengths: tuple[int, ...] = field(default=())

    def __post_init__(self) -> None:
        if not self.lengths:
            object.__setattr__(self, "lengths", _uc_lengths(self.nodes))

    @property
    def is_empty(self) -> bool:
        return self.root is None

    @property
    def size(self) -> int:
        return len(self.nodes)

    def language(self, u: int | None = None) -> set[str | tuple[str, ...]]:
        """Brute-force evaluation of a node's language (words as tuples)."""
        u = self.root if u is None else u
        if u is None:
            return set()
        memo: dict[int, set[tuple[str, ...]]] = {}
        for i, node in enumerate(self.nodes[: u + 1]):
            if isinstance(node, Letter):
                memo[i] = {(node.symbol,)}
            elif isinstance(node, Concat):
                memo[i] = {a + b for a in memo[node.left] for b in memo[node.right]}
            else:
                memo[i] = set().union(*(memo[c] for c in node.children))
        return memo[u]

    def to_text(self) -> str:
        lines = []
        for node in self.nodes:
            if isinstance(node, Letter):
                lines.append(f"letter {node.symbol}")
            elif isinstance(node, Concat):
                lines.append(f"concat {node.left} {node.right}")
            else:
                lines.append("union " + " ".join(map(str, node.children)))
        if self.root is None:
            lines.append("# empty language")
        return "\n".join(lines) + "\n"


def _uc_lengths(nodes: Sequence[UcNode]) -> tuple[int, ...]:
    out: list[int] = []
    for i, node in enumerate(nodes):
        if isinstance(node, Letter):
            out.append(1)
        elif isinstance(node, Concat):
            out.append(out[node.left] + out[node.right])
        else:
            ls = {out[c] for c in node.children}
            if len(ls) != 1:
                raise ValueError(f"union node {i} is not homogeneous: lengths {sorted(ls)}")
            out.append(ls.pop())
    return tuple(out)


def cfg_slice_program(cnf: Grammar | CnfGrammar, n: int) -> UnionConcatProgram:
    """(union, concat) program whose root denotes the words of length exactly ``n``.

    Node ``q[A, i]`` holds L_i(A): a union of the letters of ``A -> a`` for
    i = 1, otherwise an outer union over rules ``A -> B C`` of inner unions
    over the length splits.  Empty languages and unreachable nodes are
    dropped.
    """
    g = cnf.grammar if isinstance(cnf, CnfGrammar) else cnf
    if n < 1:
        raise ValueError("n must be at least 1")
    if not g.is_cnf():
        raise GrammarError("grammar is not in Chomsky normal form")
    binary: dict[str, list[tuple[str, str]]] = {a: [] for a in g.nonterminals}
    unary: dict[str, list[str]] = {a: [] for a in g.nonterminals}
    for lhs, rhs in g.rules:
        if len(rhs) == 1:
            unary[lhs].append(rhs[0])
        else:
            binary[lhs].append((rhs[0], rhs[1]))

    # which (A, i) are non-empty
    nonempty: dict[tuple[str, int], bool] = {}
    for i in range(1, n + 1):
        for a in g.nonterminals:
            if i == 1:
                nonempty[a, i] = bool(unary[a])
            else:
                nonempty[a, i] = any(
                    nonempty[b, k] and nonempty[c, i - k]
                    for b, c in binary[a]
                    for k in range(1, i)
                )
    if not nonempty[g.start, n]:
        return UnionConcatProgram((), tuple(g.alphabet), None)

    nodes: list[UcNode] = []
    letters: dict[str, int] = {}
    built: dict[tuple[str, int], int] = {}

    def add(node: UcNode) -> int:
        nodes.append(node)
        return len(nodes) - 1

    def letter(s: str) -> int:
        if s not in letters:
            letters[s] = add(Letter(s))
        return letters[s]

    def build(a: str, i: int) -> int:
        key = (a, i)
        if key in built:
            return built[key]
        if i == 1:
            kids = sorted({letter(s) for s in unary[a]})
        else:
            kids = []
            for b, c in binary[a]:
                inner = []
                for k in range(1, i):
                    if nonempty[b, k] and nonempty[c, i - k]:
                        inner.append(add(Concat(build(b, k), build(c, i - k))))
                if inner:
                    kids.append(add(Union_(tuple(inner))))
        built[key] = add(Union_(tuple(kids)))
        return built[key]

    root = build(g.start, n)
    return UnionConcatProgram(tuple(nodes), tuple(g.alphabet), root)


# -- (+,x) encoding ---------------------------------------------------------------


@dataclass(frozen=True)
class WordDecoder:
    """Bijection between words of length n and monomials over variables x[sigma, position]."""

    alphabet: tuple[str, ...]
    n: int

    def var(self, symbol: str, position: int) -> int:
        return position * len(self.alphabet) + self.alphabet.index(symbol)

    def encode(self, word: Sequence[str]) -> Monomial:
        if len(word) != self.n:
            raise ValueError(f"word length {len(word)} != {self.n}")
        return tuple(sorted(self.var(s, t) for t, s in enumerate(word)))

    def decode(self, mono: Iterable[int]) -> tuple[str, ...]:
        k = len(self.alphabet)
        word: list[str | None] = [None] * self.n
        for v in mono:
            pos, sym = divmod(v, k)
            if pos >= self.n or word[pos] is not None:
                raise ValueError(f"monomial {tuple(mono)} does not encode a word")
            word[pos] = self.alphabet[sym]
        if any(w is None for w in word):
            raise ValueError(f"monomial {tuple(mono)} does not encode a word of length {self.n}")
        return tuple(word)  # type: ignore[arg-type]

    def decode_mask(self, mask: int) -> tuple[str, ...]:
        return self.decode(mask_mono(mask))

    def var_names(self) -> tuple[str, ...]:
        return tuple(f"{s}@{t}" for t in range(self.n) for s in self.alphabet)


def uc_to_plus_times(uc: UnionConcatProgram, n: int | None = None) -> tuple[Program, WordDecoder]:
    """Encode a homogeneous (union, concat) program as a multilinear (+,x) program.

    Every node ``u`` and offset ``r`` with ``r + len(u) <= n`` becomes one
    program node: letters map to x[sigma, r], unions to plus and
    ``u = v . w`` to ``node(v, r) x node(w, r + len(v))``.  Only nodes
    reachable from (root, 0) are built; nested unions are flattened so that
    no plus node has a plus child.
    """
    if uc.root is None:
        raise ValueError("empty language has no (+,x) program")
    n = uc.lengths[uc.root] if n is None else n
    if uc.lengths[uc.root] != n:
        raise ValueError(f"root words have length {uc.lengths[uc.root]}, not {n}")
    dec = WordDecoder(tuple(uc.alphabet), n)
    nodes: list = []
    memo: dict[tuple[int, int], int] = {}
    flat: dict[tuple[int, int], tuple[int, ...]] = {}

    def build(i: int, r: int) -> int:
        key = (i, r)
        if key in memo:
            return memo[key]
        node = uc.nodes[i]
        if isinstance(node, Letter):
            nodes.append(Input(dec.var(node.symbol, r)))
            out = len(nodes) - 1
        elif isinstance(node, Concat):
            a = build(node.left, r)
            b = build(node.right, r + uc.lengths[node.left])
            nodes.append(Times(a, b))
            out = len(nodes) - 1
        else:
            kids = plus_children(i, r)
            if len(kids) == 1:
                out = kids[0]
            else:
                nodes.append(Plus(kids))
                out = len(nodes) - 1
        memo[key] = out
        return out

    def plus_children(i: int, r: int) -> tuple[int, ...]:
        key = (i, r)
        if key in flat:
            return flat[key]
        kids: set[int] = set()
        for c in uc.nodes[i].children:
            if isinstance(uc.nodes[c], Union_):
                kids.update(plus_children(c, r))
            else:
                kids.add(build(c, r))
        flat[key] = tuple(sorted(kids))
        return flat[key]

    build(uc.root, 0)
    return Program(tuple(nodes), dec.var_names()), dec


@dataclass(frozen=True)
class CfgSlice:
    """Result of the grammar pipeline; ``program`` is ``None`` when the slice is empty."""

    program: Program | None
    decoder: WordDecoder
    uc: UnionConcatProgram
    cnf: CnfGrammar


def grammar_slice(g: Grammar, n: int) -> CfgSlice:
    cnf = to_cnf(g)
    uc = cfg_slice_program(cnf, n)
    if uc.is_empty:
        return CfgSlice(None, WordDecoder(tuple(cnf.grammar.alphabet), n), uc, cnf)
    prog, dec = uc_to_plus_times(uc, n)
    return CfgSlice(prog, dec, uc, cnf)
