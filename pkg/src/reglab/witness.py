"""Search for events A_1 x A_2 that correlate with a residual.

Both oracles work on the weighted residual matrix ``W`` whose entry ``(a, b)``
is the sum of ``weight * residual`` over outcomes with side labels ``a`` and
``b``; the correlation of a pair of label sets is then ``W[A1][:, A2].sum()``.

Ties between equally good pairs go to the least ``(mask1, mask2)``, where a
mask is the integer with bit ``j`` set when label ``j`` (in the side's label
order) belongs to the set.  The total order makes the reduction independent of
how the enumeration is split across threads.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, StructuralError
from .parallel import ordered_map
from .probability import (RandomVariable, SampleSpace, conditional_expectation,
                          join_all)

EXACT_CAPACITY = 24
_CHUNK_ELEMS = 1 << 22


@dataclass(frozen=True)
class Witness:
    """Per-side events and their correlation E((X - E(X|fine)) * prod 1_{A_i})."""

    sides: tuple[int, ...]
    events: tuple[frozenset, ...]
    correlation: float

    def event(self, side: int) -> frozenset:
        return self.events[self.sides.index(side)]


@dataclass(frozen=True)
class MatrixWitness:
    value: float
    rows: tuple[int, ...]
    cols: tuple[int, ...]


def residual(x: RandomVariable, fine, space: SampleSpace) -> RandomVariable:
    """X - E(X | join of the per-side partitions)."""
    return x - conditional_expectation(x, join_all(fine))


def residual_matrix(x: RandomVariable, fine, space: SampleSpace) -> np.ndarray:
    if len(space.sides) != 2:
        raise StructuralError("witness oracles need exactly two sides")
    d = residual(x, fine, space)
    s0, s1 = space.sides
    w = np.zeros((s0.n_labels, s1.n_labels))
    np.add.at(w, (s0.codes, s1.codes), space.weights * d.values)
    return w


def _mask(bits) -> int:
    return sum(1 << int(j) for j in np.flatnonzero(bits))


def _indices(mask: int) -> tuple[int, ...]:
    return tuple(j for j in range(mask.bit_length()) if mask >> j & 1)


def subset_sums(rows: np.ndarray) -> np.ndarray:
    """Row ``mask`` holds the sum of the input rows selected by the bits of ``mask``."""
    k, c = rows.shape
    out = np.zeros((1 << k, c))
    for bit in range(k):
        half = 1 << bit
        out[half:2 * half] = out[:half] + rows[bit]
    return out


def _better(a, b):
    """Compare (value, key) candidates: larger value first, then least key."""
    if b is None:
        return a
    if a[0] != b[0]:
        return a if a[0] > b[0] else b
    return a if a[1] <= b[1] else b


def max_rectangle_exact(w: np.ndarray) -> MatrixWitness:
    """Maximize |sum of W over A1 x A2| over every pair of row and column subsets.

    Enumerates subsets of the shorter side; for each, the best partner set is
    the set of strictly positive (or strictly negative) partner sums.
    """
    w = np.asarray(w, dtype=float)
    transposed = w.shape[0] > w.shape[1]
    m = w.T if transposed else w
    r, c = m.shape
    if r > EXACT_CAPACITY:
        raise CapacityError(
            f"exact witness search limited to {EXACT_CAPACITY} labels on the smaller side "
            f"(got {r}); use heuristic mode")
    if r == 0 or c == 0:
        return MatrixWitness(0.0, (), ())
    lo = max(0, min(r, (_CHUNK_ELEMS // max(c, 1)).bit_length() - 1))
    low = subset_sums(m[:lo])
    high = subset_sums(m[lo:])

    def scan(h: int):
        sums = high[h] + low
        pos = np.where(sums > 0, sums, 0.0).sum(axis=1)
        neg = -np.where(sums < 0, sums, 0.0).sum(axis=1)
        val = np.maximum(pos, neg)
        top = val.max()
        best = None
        for l in np.flatnonzero(val == top):
            enum_mask = (h << lo) | int(l)
            for sign, score in ((1.0, pos[l]), (-1.0, neg[l])):
                if score != top:
                    continue
                part_mask = _mask(sign * sums[l] > 0)
                key = (part_mask, enum_mask) if transposed else (enum_mask, part_mask)
                best = _better((float(top), key, sign), best)
        return best

    best = None
    for cand in ordered_map(scan, range(1 << (r - lo))):
        best = _better(cand, best)
    value, (mask_rows, mask_cols), sign = best
    return MatrixWitness(sign * value if value else 0.0, _indices(mask_rows), _indices(mask_cols))


def max_rectangle_heuristic(w: np.ndarray, restarts: int = 16, seed: int = 0,
                            max_rounds: int = 200) -> MatrixWitness:
    """Alternating maximization from random and singular-vector starts.

    Returns the value of an actual rectangle, so it is a lower bound on the
    exact maximum.
    """
    w = np.asarray(w, dtype=float)
    r, c = w.shape
    if r == 0 or c == 0 or not np.any(w):
        return MatrixWitness(0.0, (), ())
    starts = []
    u, _, vt = np.linalg.svd(w)
    starts += [vt[0] > 0, vt[0] < 0]
    # row-side singular seeds, converted to column starts by one best-response step
    for rows in (u[:, 0] > 0, u[:, 0] < 0):
        colsum = rows.astype(float) @ w
        starts += [colsum > 0, colsum < 0]
    rng = np.random.default_rng(seed)
    starts += [rng.random(c) < 0.5 for _ in range(restarts)]

    best = None
    for cols0 in starts:
        for sign in (1.0, -1.0):
            cols = cols0
            prev = -np.inf
            for _ in range(max_rounds):
                rows = sign * (w @ cols.astype(float)) > 0
                cols = sign * (rows.astype(float) @ w) > 0
                val = sign * float(rows.astype(float) @ w @ cols.astype(float))
                if val <= prev:
                    break
                prev = val
                cand = (val, (_mask(rows), _mask(cols)), sign)
                best = _better(cand, best)
    value, (mr, mc), sign = best
    if value <= 0:
        return MatrixWitness(0.0, (), ())
    return MatrixWitness(sign * value, _indices(mr), _indices(mc))


def _to_witness(space: SampleSpace, mw: MatrixWitness) -> Witness:
    s0, s1 = space.sides
    return Witness(
        (s0.side_index, s1.side_index),
        (frozenset(s0.values[j] for j in mw.rows), frozenset(s1.values[j] for j in mw.cols)),
        mw.value,
    )


def check_capacity(space: SampleSpace) -> None:
    n = min(s.n_labels for s in space.sides)
    if n > EXACT_CAPACITY:
        raise CapacityError(
            f"exact witness search limited to {EXACT_CAPACITY} labels on the smaller side "
            f"(got {n}); use heuristic mode")


def find_witness_exact(x: RandomVariable, fine, space: SampleSpace) -> Witness:
    """The pair of side events maximizing |correlation| with the residual."""
    if len(space.sides) == 2:
        check_capacity(space)
    return _to_witness(space, max_rectangle_exact(residual_matrix(x, fine, space)))


def find_witness_heuristic(x: RandomVariable, fine, space: SampleSpace,
                           restarts: int = 16, seed: int = 0) -> Witness:
    """A good (not necessarily best) pair of side events; deterministic given ``seed``."""
    w = residual_matrix(x, fine, space)
    return _to_witness(space, max_rectangle_heuristic(w, restarts, seed))


def correlation(x: RandomVariable, fine, space: SampleSpace, events) -> float:
    """E((X - E(X|join fine)) * prod_i 1_{A_i}) evaluated directly on outcomes."""
    d = residual(x, fine, space)
    mask = np.ones(space.size, dtype=bool)
    for s, ev in zip(space.sides, events):
        chosen = np.zeros(s.n_labels, dtype=bool)
        chosen[s.codes_of(ev)] = True
        mask &= chosen[s.codes]
    return float(np.sum(space.weights[mask] * d.values[mask]))
