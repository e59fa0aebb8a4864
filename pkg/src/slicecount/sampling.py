"""Vectorized sample sets: R sets of monomials stored back to back.

A :class:`SampleSets` holds ``vals`` (one row of ``W`` uint64 words per
monomial, bit v of the concatenated words set iff variable v occurs) and
``off`` with ``off[r]:off[r+1]`` delimiting set r.

All random thinning goes through :func:`bernoulli_positions`, which keeps
every index of an implicit range independently with probability t.  Sets of
pairs (for times nodes) and repeated supports (for height-0 nodes) are
thinned over their implicit index space without being materialized.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .program import Program

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)


class SampleLimit(Exception):
    """Raised when a set reaches the size cutoff or the memory guard trips."""

    def __init__(self, reason: str) -> None:
        super().__init__(reason)
        self.reason = reason


def words_for(num_vars: int) -> int:
    return max(1, (num_vars + 63) // 64)


def masks_to_array(masks, width: int) -> np.ndarray:
    masks = list(masks)
    out = np.empty((len(masks), width), dtype=np.uint64)
    if width == 1:
        out[:, 0] = np.array(masks, dtype=np.uint64) if masks else out[:, 0]
        return out
    full = (1 << 64) - 1
    for i, m in enumerate(masks):
        for w in range(width):
            out[i, w] = (m >> (64 * w)) & full
    return out


def row_to_mask(row: np.ndarray) -> int:
    m = 0
    for w, x in enumerate(row.tolist()):
        m |= int(x) << (64 * w)
    return m


@dataclass
class SampleSets:
    vals: np.ndarray
    off: np.ndarray

    @property
    def count(self) -> int:
        return len(self.off) - 1

    def sizes(self) -> np.ndarray:
        return np.diff(self.off)

    def set_masks(self, r: int) -> list[int]:
        return [row_to_mask(x) for x in self.vals[self.off[r] : self.off[r + 1]]]

    @classmethod
    def empty(cls, count: int, width: int) -> "SampleSets":
        return cls(np.empty((0, width), dtype=np.uint64), np.zeros(count + 1, dtype=np.int64))


@dataclass
class FullSets:
    """``count`` sets that all equal ``supp`` (a node whose every monomial is kept).

    Stored once; operations that need per-set rows call :meth:`dense`.
    """

    supp: np.ndarray
    number: int

    @property
    def count(self) -> int:
        return self.number

    def sizes(self) -> np.ndarray:
        return np.full(self.number, len(self.supp), dtype=np.int64)

    def set_masks(self, r: int) -> list[int]:
        return [row_to_mask(x) for x in self.supp]

    def dense(self) -> SampleSets:
        k = len(self.supp)
        return SampleSets(np.tile(self.supp, (self.number, 1)), np.arange(self.number + 1, dtype=np.int64) * k)


def dense(s: SampleSets | FullSets) -> SampleSets:
    return s.dense() if isinstance(s, FullSets) else s


_CHUNK = 1 << 20


@njit(cache=True)
def _geometric_walk(raw, scale, start, total):
    """Positions reached from ``start`` by geometric gaps built from raw 64-bit draws."""
    out = np.empty(raw.size, dtype=np.int64)
    pos = start
    k = 0
    for i in range(raw.size):
        u = (raw[i] >> np.uint64(11)) * (1.0 / 9007199254740992.0)
        pos += np.int64(np.log1p(-u) * scale) + 1
        if pos >= total:
            return out[:k], True
        out[k] = pos
        k += 1
    return out[:k], False


@njit(cache=True)
def _below(raw, n, thresh):
    """Indices i < n whose 32-bit uniform is below thresh; index i reads half i % 2 of raw[i // 2]."""
    out = np.empty(n, dtype=np.int64)
    k = 0
    for i in range(n):
        x = raw[i >> 1]
        half = (x >> np.uint64(32)) if i & 1 else (x & np.uint64(0xFFFFFFFF))
        out[k] = i
        k += half < thresh
    return out[:k]


def bernoulli_positions(total: int, t: float, rng: np.random.Generator, cap: int) -> np.ndarray:
    """Sorted indices of ``range(total)``, each kept independently with probability t.

    For t >= 1/4 every index consumes one 32-bit half of a raw draw compared
    against ``floor(t * 2**32)``; below that the gaps between kept indices
    are drawn from the geometric law (one raw 64-bit draw per kept index),
    so the cost is proportional to the output.  Raises :class:`SampleLimit` when more than
    ``cap`` indices are kept.
    """
    if total <= 0 or t <= 0:
        return np.empty(0, dtype=np.int64)
    if t >= 1:
        if total > cap:
            raise SampleLimit("memory guard")
        return np.arange(total, dtype=np.int64)
    parts = []
    kept = 0
    if t >= 0.25:
        thresh = np.uint64(int(t * 2.0**32))
        for start in range(0, total, _CHUNK):
            n = min(_CHUNK, total - start)
            idx = _below(rng.bit_generator.random_raw((n + 1) // 2), n, thresh)
            kept += idx.size
            if kept > cap:
                raise SampleLimit("memory guard")
            parts.append(idx + start)
    else:
        scale = 1.0 / np.log1p(-t)
        expect = total * t
        pos = -1
        done = False
        while not done:
            n = int(min(_CHUNK, expect + 6 * np.sqrt(expect) + 16))
            steps, done = _geometric_walk(rng.bit_generator.random_raw(n), scale, pos, total)
            kept += steps.size
            if kept > cap:
                raise SampleLimit("memory guard")
            parts.append(steps)
            if steps.size:
                pos = int(steps[-1])
    return np.concatenate(parts) if len(parts) > 1 else parts[0]


def _offsets(pos: np.ndarray, base: np.ndarray) -> np.ndarray:
    return np.searchsorted(pos, base).astype(np.int64)


def check_theta(sizes: np.ndarray, theta: int) -> None:
    if sizes.size and int(sizes.max()) >= theta:
        raise SampleLimit("theta")


def repeated_support(supp: np.ndarray, count: int, t: float, rng, theta: int, cap: int) -> SampleSets | FullSets:
    """``count`` independent thinnings of the same support with probability t.

    Element j of set r sits at flat index r * len(supp) + j.
    """
    k = len(supp)
    if t >= 1:
        check_theta(np.array([k]), theta)
        if k * count > cap:
            raise SampleLimit("memory guard")
        return FullSets(supp, count)
    pos = bernoulli_positions(k * count, t, rng, cap)
    off = _offsets(pos, np.arange(count + 1, dtype=np.int64) * k)
    check_theta(np.diff(off), theta)
    return SampleSets(_gather_mod(supp, pos, off), off)


@njit(cache=True)
def _gather_mod(supp, pos, off):
    """Rows supp[pos % len(supp)], using that set r covers flat indices r*k .. r*k + k - 1."""
    k = supp.shape[0]
    out = np.empty((pos.size, supp.shape[1]), dtype=np.uint64)
    for r in range(off.size - 1):
        start = r * k
        for i in range(off[r], off[r + 1]):
            j = pos[i] - start
            for w in range(supp.shape[1]):
                out[i, w] = supp[j, w]
    return out


def thin(s: SampleSets | FullSets, t: float, rng, cap: int) -> SampleSets | FullSets:
    """Keep each element of every set independently with probability t."""
    if t >= 1:
        return s
    if isinstance(s, FullSets):
        # same flat index space as the dense layout
        return repeated_support(s.supp, s.number, t, rng, 1 << 62, cap)
    pos = bernoulli_positions(len(s.vals), t, rng, cap)
    return SampleSets(s.vals[pos], _offsets(pos, s.off))


def product(a, b, t: float, rng, theta: int, cap: int) -> SampleSets | FullSets:
    """Set r of the result: each pair of A_r x B_r, unioned, kept with probability t.

    Pair (i, j) of set r has flat index base[r] + i * |B_r| + j.
    """
    if isinstance(a, FullSets) and isinstance(b, FullSets):
        pairs = (a.supp[:, None, :] | b.supp[None, :, :]).reshape(-1, a.supp.shape[1])
        return repeated_support(pairs, a.number, t, rng, theta, cap)
    a, b = dense(a), dense(b)
    na = np.diff(a.off)
    nb = np.diff(b.off)
    pairs = na * nb
    base = np.zeros(len(pairs) + 1, dtype=np.int64)
    np.cumsum(pairs, out=base[1:])
    pos = bernoulli_positions(int(base[-1]), t, rng, cap)
    off = _offsets(pos, base)
    check_theta(np.diff(off), theta)
    return SampleSets(_pair_rows(pos, off, base, a.vals, a.off, b.vals, b.off, nb), off)


@njit(cache=True)
def _pair_rows(pos, off, base, av, aoff, bv, boff, nb):
    out = np.empty((pos.size, av.shape[1]), dtype=np.uint64)
    for r in range(off.size - 1):
        m = nb[r]
        i = 0
        j = 0
        last = 0
        for k in range(off[r], off[r + 1]):
            local = pos[k] - base[r]
            step = local - last
            last = local
            if step < 4 * m:
                j += step
                while j >= m:
                    j -= m
                    i += 1
            else:
                i = local // m
                j = local - i * m
            ia = aoff[r] + i
            jb = boff[r] + j
            for w in range(av.shape[1]):
                out[k, w] = av[ia, w] | bv[jb, w]
    return out


def select(s: SampleSets, keep: np.ndarray) -> SampleSets:
    s = dense(s)
    idx = np.flatnonzero(keep)
    return SampleSets(s.vals[idx], _offsets(idx, s.off))


def concat_rows(parts: list[SampleSets]) -> SampleSets:
    """Set r of the result is the concatenation of set r of every part."""
    if len(parts) == 1:
        return parts[0]
    parts = [dense(p) for p in parts]
    count = parts[0].count
    sizes = [p.sizes() for p in parts]
    total = np.sum(sizes, axis=0)
    off = np.zeros(count + 1, dtype=np.int64)
    np.cumsum(total, out=off[1:])
    vals = np.empty((int(off[-1]), parts[0].vals.shape[1]), dtype=np.uint64)
    shift = off[:-1].copy()
    for p in parts:
        _place(vals, shift, p.vals, p.off)
    return SampleSets(vals, off)


@njit(cache=True)
def _place(dest, shift, vals, off):
    """Append set r of (vals, off) at dest[shift[r]:] and advance shift."""
    for r in range(off.size - 1):
        d = shift[r]
        for k in range(off[r], off[r + 1]):
            for w in range(vals.shape[1]):
                dest[d, w] = vals[k, w]
            d += 1
        shift[r] = d


@njit(cache=True)
def _hash(vals):
    h = np.zeros(vals.shape[0], dtype=np.uint64)
    for i in range(vals.shape[0]):
        x = np.uint64(0)
        for w in range(vals.shape[1]):
            x = (x ^ vals[i, w]) * _GOLDEN
            x ^= x >> np.uint64(29)
        h[i] = x
    return h


@njit(cache=True)
def _probe_table(keys, table, vals, bits, out):
    """Fill out[i] from the table; returns the indices that were not found."""
    mask = (1 << bits) - 1
    h = _hash(vals)
    miss = np.empty(vals.shape[0], dtype=np.int64)
    nmiss = 0
    for i in range(vals.shape[0]):
        s = np.int64(h[i] >> np.uint64(64 - bits))
        while True:
            p = table[s]
            if p < 0:
                miss[nmiss] = i
                nmiss += 1
                break
            same = True
            for w in range(vals.shape[1]):
                if keys[s, w] != vals[i, w]:
                    same = False
                    break
            if same:
                out[i] = p
                break
            s = (s + 1) & mask
    return miss[:nmiss]


class FirstChildIndex:
    """Cache of "position of the first child containing alpha" for one plus node.

    Open addressing over the hashed monomial words; misses are resolved with
    exact membership tests and inserted.
    """

    def __init__(self, program: Program, q: int, width: int) -> None:
        self.program = program
        self.children = program.nodes[q].children
        self.width = width
        self.bits = 10
        self._alloc()
        self.size = 0

    def _alloc(self) -> None:
        cap = 1 << self.bits
        self.keys = np.zeros((cap, self.width), dtype=np.uint64)
        self.pos = np.full(cap, -1, dtype=np.int32)

    def _slots(self, h: np.ndarray) -> np.ndarray:
        return (h >> np.uint64(64 - self.bits)).astype(np.int64)

    def _insert(self, keys: np.ndarray, positions: np.ndarray) -> None:
        mask = (1 << self.bits) - 1
        slots = self._slots(_hash(keys))
        for key, s, v in zip(keys, slots.tolist(), positions.tolist()):
            while self.pos[s] >= 0:
                s = (s + 1) & mask
            self.keys[s] = key
            self.pos[s] = v
        self.size += len(keys)

    def _grow(self) -> None:
        used = self.pos >= 0
        keys, vals = self.keys[used], self.pos[used]
        self.bits += 1
        self._alloc()
        self.size = 0
        self._insert(keys, vals)

    def lookup(self, vals: np.ndarray) -> np.ndarray:
        out = np.full(len(vals), -1, dtype=np.int32)
        if not len(vals):
            return out
        missing = self._probe(vals, out)
        if missing.size:
            uniq, inv = np.unique(vals[missing], axis=0, return_inverse=True)
            found = np.array(
                [self._first(row_to_mask(row)) for row in uniq], dtype=np.int32
            )
            while (self.size + len(uniq)) * 2 > (1 << self.bits):
                self._grow()
            self._insert(uniq, found)
            out[missing] = found[inv.reshape(-1)]
        return out

    def _probe(self, vals: np.ndarray, out: np.ndarray) -> np.ndarray:
        return _probe_table(self.keys, self.pos, np.ascontiguousarray(vals), self.bits, out)

    def _first(self, alpha: int) -> int:
        for pos, c in enumerate(self.children):
            if self.program.contains_mask(c, alpha):
                return pos
        raise AssertionError(f"sampled monomial {alpha:#x} is not in the support of any child")


def first_child_index(program: Program, q: int, width: int) -> FirstChildIndex:
    store = program._cache.setdefault("first_child_index", {})
    idx = store.get((q, width))
    if idx is None:
        idx = store[(q, width)] = FirstChildIndex(program, q, width)
    return idx
