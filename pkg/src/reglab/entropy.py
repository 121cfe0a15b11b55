"""Shannon entropy calculus and entropy-increment regularization (all in bits)."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Hashable, Iterable, Sequence

import numpy as np

from .errors import CapacityError, PreconditionError, StructuralError
from .probability import (Partition, RandomVariable, SampleSpace, conditional_expectation, encode)

AGREE_TOL = 1e-9
ALPHABET_CAPACITY = 6


class DiscreteRV:
    """A finitely-valued random variable on ``base``; one symbol per outcome."""

    __slots__ = ("base", "values", "codes", "alphabet")

    def __init__(self, base: SampleSpace, values: Sequence[Hashable]):
        values = tuple(values)
        if len(values) != base.size:
            raise StructuralError("discrete random variable needs one symbol per outcome")
        codes, alphabet = encode(values)
        codes.setflags(write=False)
        self.base, self.values, self.codes, self.alphabet = base, values, codes, alphabet

    @classmethod
    def constant(cls, base: SampleSpace, symbol: Hashable = 0) -> "DiscreteRV":
        return cls(base, [symbol] * base.size)

    @classmethod
    def of_partition(cls, p: Partition) -> "DiscreteRV":
        return cls(p.space, p.atom_of.tolist())

    @classmethod
    def of(cls, x: RandomVariable) -> "DiscreteRV":
        return cls(x.space, x.values.tolist())

    def map(self, f: Callable[[Hashable], Hashable]) -> "DiscreteRV":
        return DiscreteRV(self.base, [f(v) for v in self.values])

    def probabilities(self) -> np.ndarray:
        """P(X = a) for each symbol of ``alphabet``."""
        return np.bincount(self.codes, weights=self.base.weights, minlength=len(self.alphabet))

    def determines(self, other: "DiscreteRV") -> bool:
        """Whether ``other`` is a function of ``self`` off null outcomes."""
        _same_base(self, other)
        live = self.base.weights > 0
        image: dict[int, int] = {}
        for a, b in zip(self.codes[live].tolist(), other.codes[live].tolist()):
            if image.setdefault(a, b) != b:
                return False
        return True


def _same_base(*rvs: DiscreteRV) -> None:
    base = rvs[0].base
    for r in rvs[1:]:
        if not base.compatible(r.base):
            raise StructuralError("random variables live on different spaces")


def joint(*rvs: DiscreteRV) -> DiscreteRV:
    """The tuple-valued variable (X_1, ..., X_k)."""
    _same_base(*rvs)
    return DiscreteRV(rvs[0].base, list(zip(*(r.values for r in rvs))))


def _h(probs: Iterable[float]) -> float:
    # a mass that rounds to 1 + ulp would otherwise give -1e-16
    return max(0.0, math.fsum(-p * math.log2(p) for p in probs if p > 0))


def entropy(x: DiscreteRV) -> float:
    """H(X) = sum_x P(X=x) log2 1/P(X=x)."""
    return _h(x.probabilities().tolist())


def partition_entropy(p: Partition) -> float:
    return _h(p.atom_masses().tolist())


def _conditional_entropy_direct(x: DiscreteRV, y: DiscreteRV) -> float:
    pxy = joint(x, y)
    py = dict(zip(y.alphabet, y.probabilities().tolist()))
    terms = []
    for (_, ys), p in zip(pxy.alphabet, pxy.probabilities().tolist()):
        if p > 0:
            q = p / py[ys]
            terms.append(py[ys] * -q * math.log2(q))
    return math.fsum(terms)


def conditional_entropy(x: DiscreteRV, y: DiscreteRV) -> float:
    """H(X|Y) by the Bayes identity, cross-checked against the definitional sum."""
    _same_base(x, y)
    bayes = entropy(joint(x, y)) - entropy(y)
    direct = _conditional_entropy_direct(x, y)
    if abs(bayes - direct) > AGREE_TOL:
        raise ArithmeticError(f"H(X|Y) forms disagree: {bayes!r} vs {direct!r}")
    return bayes


def conditional_mutual_information(x: DiscreteRV, y: DiscreteRV, z: DiscreteRV) -> float:
    """I(X:Y|Z) = H(X|Z) - H(X|Y,Z), checked against H(Y|Z) - H(Y|X,Z)."""
    _same_base(x, y, z)
    first = conditional_entropy(x, z) - conditional_entropy(x, joint(y, z))
    second = conditional_entropy(y, z) - conditional_entropy(y, joint(x, z))
    if abs(first - second) > AGREE_TOL:
        raise ArithmeticError(f"I(X:Y|Z) forms disagree: {first!r} vs {second!r}")
    if first < -AGREE_TOL:
        raise ArithmeticError(f"negative conditional mutual information {first!r}")
    return first


def mutual_information(x: DiscreteRV, y: DiscreteRV) -> float:
    return conditional_mutual_information(x, y, DiscreteRV.constant(x.base))


def pinsker_gap(x: RandomVariable, y: DiscreteRV, yp: DiscreteRV) -> tuple[float, float]:
    """(E|E(X|Y') - E(X|Y)|, 2 I(X:Y|Y')^(1/2)) for Y' determined by Y and |X| <= 1."""
    _same_base(y, yp)
    if not x.space.compatible(y.base):
        raise StructuralError("x lives on a different space")
    if not y.determines(yp):
        raise PreconditionError("Y does not determine Y'")
    if np.any(np.abs(x.values) > 1):
        raise PreconditionError("X must take values in [-1, 1]")
    fine = conditional_expectation(x, Partition(x.space, y.codes))
    coarse = conditional_expectation(x, Partition(x.space, yp.codes))
    lhs = math.fsum(x.space.weights * np.abs(coarse.values - fine.values))
    info = conditional_mutual_information(DiscreteRV.of(x), y, yp)
    return lhs, 2.0 * math.sqrt(max(info, 0.0))


# --- set partitions ----------------------------------------------------------

def set_partitions(items: Sequence[int]):
    """All set partitions of ``items`` as lists of blocks (restricted growth order)."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for sub in set_partitions(rest):
        yield [[first]] + sub
        for i in range(len(sub)):
            yield sub[:i] + [[first] + sub[i]] + sub[i + 1:]


def canonical_key(blocks) -> tuple:
    """Order partitions by number of blocks, then by their sorted block lists."""
    norm = tuple(sorted(tuple(sorted(b)) for b in blocks))
    return (len(norm), norm)


def refinements(blocks: Sequence[Sequence[int]]) -> list[tuple[tuple[int, ...], ...]]:
    """Every partition refining ``blocks``, in canonical order."""
    per_block = [list(set_partitions(sorted(b))) for b in blocks]
    out = set()
    for choice in itertools.product(*per_block):
        out.add(canonical_key([blk for part in choice for blk in part])[1])
    return sorted(out, key=lambda p: (len(p), p))


def _labels(parts: Sequence[Sequence[Sequence[int]]], k: int) -> np.ndarray:
    lab = np.empty((len(parts), k), dtype=np.int64)
    for i, part in enumerate(parts):
        for b, block in enumerate(part):
            lab[i, list(block)] = b
    return lab


def _blocks(label_row: np.ndarray) -> list[list[int]]:
    out: dict[int, list[int]] = {}
    for sym, b in enumerate(label_row.tolist()):
        out.setdefault(b, []).append(sym)
    return [out[b] for b in sorted(out)]


def _plogp_sum(q: np.ndarray, axes) -> np.ndarray:
    logs = np.zeros_like(q)
    np.log2(q, out=logs, where=q > 0)
    return np.maximum(-(q * logs).sum(axis=axes), 0.0)


def _objective_terms(table: np.ndarray, lab1: np.ndarray, lab2: np.ndarray):
    """H(Y|Z'1,Z'2) and H(Z'1,Z'2) for all candidate label pairs.

    ``table[a, b, c] = P(X1=a, X2=b, Y=c)``; ``lab1[p, a]`` is the block of symbol
    ``a`` under candidate ``p``.  Returns arrays of shape (len(lab1), len(lab2)).
    """
    k1, k2, ky = table.shape
    e1 = (lab1[:, :, None] == np.arange(k1)).astype(float)   # (n1, a, b1)
    e2 = (lab2[:, :, None] == np.arange(k2)).astype(float)   # (n2, b, b2)
    n1, n2 = len(lab1), len(lab2)
    hy_given = np.empty((n1, n2))
    hz = np.empty((n1, n2))
    step = max(1, (1 << 22) // max(1, n2 * k1 * k2 * ky))
    for s in range(0, n1, step):
        t = np.einsum("pab,acy->pbcy", e1[s:s + step], table)
        q = np.einsum("pbcy,qcd->pqbdy", t, e2)              # P(Z'1, Z'2, Y)
        h_zy = _plogp_sum(q, (2, 3, 4))
        h_z = _plogp_sum(q.sum(axis=4), (2, 3))
        hy_given[s:s + step] = np.maximum(h_zy - h_z, 0.0)
        hz[s:s + step] = h_z
    return hy_given, hz


@dataclass(frozen=True)
class EntropyRegularizationResult:
    Z: tuple[DiscreteRV, DiscreteRV]
    Zp: tuple[DiscreteRV, DiscreteRV]
    iterations: int
    objective_trace: tuple[float, ...]       # objective at each accepted minimizer
    incumbent_trace: tuple[float, ...]       # objective at the coarse pair, same F
    conditional_trace: tuple[float, ...]     # H(Y|Z1,Z2) at each Step 1
    coarse_blocks: tuple[tuple, tuple]       # partitions of the X_i alphabets (symbol codes)
    fine_blocks: tuple[tuple, tuple]
    growth_at_halt: float                    # F(H(Z1,Z2)) for the final coarse pair


def _joint_table(x1: DiscreteRV, x2: DiscreteRV, y: DiscreteRV) -> np.ndarray:
    table = np.zeros((len(x1.alphabet), len(x2.alphabet), len(y.alphabet)))
    np.add.at(table, (x1.codes, x2.codes, y.codes), x1.base.weights)
    return table


def _lift(x: DiscreteRV, label_row: np.ndarray) -> DiscreteRV:
    return DiscreteRV(x.base, label_row[x.codes].tolist())


def entropy_regularize(x1: DiscreteRV, x2: DiscreteRV, y: DiscreteRV, epsilon: float, m: float,
                       growth: Callable[[float], float], tie_tol: float = 1e-12
                       ) -> EntropyRegularizationResult:
    """Entropy-increment algorithm: exhaustive minimization over refining pairs.

    Step 1 minimizes H(Y|Z'1,Z'2) + H(Z'1,Z'2)/F(H(Z1,Z2)) over all pairs of
    partitions of the X_i alphabets refining the current Z_i; Step 2 accepts the
    minimizer while it lowers H(Y|Z) by more than epsilon.  Ties go to the
    first pair in canonical order.
    """
    _same_base(x1, x2, y)
    if epsilon <= 0:
        raise PreconditionError("epsilon must be positive")
    hy = entropy(y)
    if hy > m + AGREE_TOL:
        raise PreconditionError(f"H(Y) = {hy:.6g} exceeds m = {m:g}")
    for x in (x1, x2):
        if len(x.alphabet) > ALPHABET_CAPACITY:
            raise CapacityError(f"exhaustive minimization limited to {ALPHABET_CAPACITY} symbols "
                                f"per side (got {len(x.alphabet)})")
    table = _joint_table(x1, x2, y)
    k1, k2 = len(x1.alphabet), len(x2.alphabet)
    z1 = np.zeros(k1, dtype=np.int64)
    z2 = np.zeros(k2, dtype=np.int64)
    objective, incumbent, conditional = [], [], []
    iterations = 0
    while True:
        c1 = refinements(_blocks(z1))
        c2 = refinements(_blocks(z2))
        lab1, lab2 = _labels(c1, k1), _labels(c2, k2)
        hyz, hz = _objective_terms(table, lab1, lab2)
        h_coarse_joint = _objective_terms(table, z1[None], z2[None])
        f = growth(float(h_coarse_joint[1][0, 0]))
        obj = hyz + hz / f
        best = obj.min()
        p, q = np.argwhere(obj <= best + tie_tol)[0]
        zp1, zp2 = lab1[p], lab2[q]
        h_y_coarse = float(h_coarse_joint[0][0, 0])
        objective.append(float(obj[p, q]))
        incumbent.append(h_y_coarse + float(h_coarse_joint[1][0, 0]) / f)
        conditional.append(h_y_coarse)
        if h_y_coarse - float(hyz[p, q]) > epsilon:
            z1, z2 = zp1, zp2
            iterations += 1
            continue
        return EntropyRegularizationResult(
            (_lift(x1, z1), _lift(x2, z2)), (_lift(x1, zp1), _lift(x2, zp2)), iterations,
            tuple(objective), tuple(incumbent), tuple(conditional),
            (tuple(map(tuple, _blocks(z1))), tuple(map(tuple, _blocks(z2)))),
            (tuple(map(tuple, _blocks(zp1))), tuple(map(tuple, _blocks(zp2)))), f)


@dataclass(frozen=True)
class EntropyChecks:
    determinism: bool
    coarse_entropy: float
    fine_entropy: float
    entropy_bound: float          # H(Z) + m F(H(Z))
    closeness: float              # I(Y : Z' | Z)
    worst_fine_gap: float | None  # max over W of I(Y:W|Z') - H(W)/F(H(Z)); None if unverified
    iterations_bound: float

    def holds(self, epsilon: float, tol: float = AGREE_TOL) -> bool:
        return (self.determinism and self.fine_entropy <= self.entropy_bound + tol
                and self.coarse_entropy <= self.fine_entropy + tol and self.closeness <= epsilon + tol
                and (self.worst_fine_gap is None or self.worst_fine_gap <= tol))


def verify_entropy_result(x1: DiscreteRV, x2: DiscreteRV, y: DiscreteRV, res: EntropyRegularizationResult,
                          epsilon: float, m: float, exhaustive_limit: int = ALPHABET_CAPACITY
                          ) -> EntropyChecks:
    """Evaluate the four conclusions directly with the entropy calculus.

    The fine-optimality bound is checked over every pair (W1, W2) of functions
    of X1 and X2 (set partitions of their alphabets) when both alphabets have at
    most ``exhaustive_limit`` symbols.
    """
    (z1, z2), (zp1, zp2) = res.Z, res.Zp
    det = x1.determines(zp1) and zp1.determines(z1) and x2.determines(zp2) and zp2.determines(z2)
    zc, zf = joint(z1, z2), joint(zp1, zp2)
    h_c, h_f = entropy(zc), entropy(zf)
    f = res.growth_at_halt
    close = conditional_mutual_information(y, zf, zc)
    worst = None
    if max(len(x1.alphabet), len(x2.alphabet)) <= exhaustive_limit:
        ws1 = [_lift(x1, row) for row in _labels(list(set_partitions(range(len(x1.alphabet)))), len(x1.alphabet))]
        ws2 = [_lift(x2, row) for row in _labels(list(set_partitions(range(len(x2.alphabet)))), len(x2.alphabet))]
        worst = -math.inf
        for w1 in ws1:
            for w2 in ws2:
                w = joint(w1, w2)
                gap = conditional_mutual_information(y, w, zf) - entropy(w) / f
                worst = max(worst, gap)
    return EntropyChecks(det, h_c, h_f, h_c + m * f, close, worst, m / epsilon)
