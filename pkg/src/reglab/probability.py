"""Finite probability spaces, partitions as sigma-algebras, conditional expectation and energy.

Everything here is immutable once built.  Scalar reductions go through
``math.fsum`` so results do not depend on summation order.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import reduce
from typing import Any, Hashable, Iterable, Sequence

import numpy as np

from .errors import InputError, PreconditionError, StructuralError

WEIGHT_TOL = 1e-12


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def encode(values: Iterable[Hashable]) -> tuple[np.ndarray, tuple]:
    """Integer codes for ``values`` in order of first appearance, plus the distinct values."""
    index: dict[Hashable, int] = {}
    codes = [index.setdefault(v, len(index)) for v in values]
    return np.asarray(codes, dtype=np.int64), tuple(index)


def canonical_ids(raw: np.ndarray) -> np.ndarray:
    """Relabel integer ids so that they are numbered by first occurrence."""
    raw = np.asarray(raw)
    if raw.size == 0:
        return raw.astype(np.int64)
    _, first, inverse = np.unique(raw, return_index=True, return_inverse=True)
    rank = np.empty(first.size, dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(first.size)
    return rank[inverse.reshape(-1)]


@dataclass(frozen=True, eq=False)
class FactorSide:
    """One coordinate projection of a product-structured space.

    ``labels`` holds the coordinate value of every outcome; ``values`` lists the
    distinct labels in order of first appearance and ``codes`` indexes into it.
    """

    side_index: int
    labels: tuple
    codes: np.ndarray = field(repr=False)
    values: tuple = field(repr=False)

    @classmethod
    def from_labels(cls, side_index: int, labels: Sequence[Hashable]) -> "FactorSide":
        labels = tuple(labels)
        codes, values = encode(labels)
        return cls(side_index, labels, _frozen(codes), values)

    @property
    def n_labels(self) -> int:
        return len(self.values)

    def codes_of(self, subset: Iterable[Hashable]) -> list[int]:
        lookup = {v: k for k, v in enumerate(self.values)}
        try:
            return sorted(lookup[v] for v in subset)
        except KeyError as exc:
            raise InputError(f"label {exc.args[0]!r} not in range of side {self.side_index}") from None


@dataclass(frozen=True, eq=False)
class SampleSpace:
    """A finite weighted outcome set, optionally with product coordinates."""

    outcomes: tuple
    weights: np.ndarray = field(repr=False)
    sides: tuple[FactorSide, ...] = ()

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).reshape(-1)
        object.__setattr__(self, "weights", _frozen(w))
        object.__setattr__(self, "outcomes", tuple(self.outcomes))
        if len(self.outcomes) != w.size:
            raise StructuralError("one weight per outcome required")
        if w.size == 0:
            raise InputError("sample space must have at least one outcome")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise InputError("weights must be finite and nonnegative")
        if abs(math.fsum(w) - 1.0) > WEIGHT_TOL:
            raise InputError(f"weights sum to {math.fsum(w)!r}, not 1")
        if len(set(self.outcomes)) != len(self.outcomes):
            raise InputError("outcome identifiers must be distinct")
        seen = set()
        for s in self.sides:
            if len(s.labels) != w.size:
                raise StructuralError(f"side {s.side_index} needs one label per outcome")
            if s.side_index in seen:
                raise StructuralError(f"duplicate side index {s.side_index}")
            seen.add(s.side_index)

    @classmethod
    def uniform(cls, outcomes: Sequence[Hashable], sides: Sequence[FactorSide] = ()) -> "SampleSpace":
        n = len(outcomes)
        return cls(tuple(outcomes), np.full(n, 1.0 / n), tuple(sides))

    @classmethod
    def product(cls, *coordinates: Sequence[Hashable], weights=None) -> "SampleSpace":
        """Cartesian product of coordinate ranges in row-major order.

        Side ``i`` is the projection onto the ``i``-th coordinate.  Uniform
        weights unless ``weights`` is given.
        """
        outcomes = list(itertools.product(*coordinates))
        sides = [FactorSide.from_labels(i, [o[i] for o in outcomes]) for i in range(len(coordinates))]
        if weights is None:
            return cls.uniform(outcomes, sides)
        return cls(tuple(outcomes), np.asarray(weights, dtype=float), tuple(sides))

    @property
    def size(self) -> int:
        return len(self.outcomes)

    def side(self, side_index: int) -> FactorSide:
        for s in self.sides:
            if s.side_index == side_index:
                return s
        raise StructuralError(f"space has no side {side_index}")

    @property
    def side_indices(self) -> tuple[int, ...]:
        return tuple(s.side_index for s in self.sides)

    def compatible(self, other: "SampleSpace") -> bool:
        return self is other or (
            self.outcomes == other.outcomes and np.array_equal(self.weights, other.weights)
        )


def _check_same_space(a: SampleSpace, b: SampleSpace) -> None:
    if not a.compatible(b):
        raise StructuralError(f"objects live on different sample spaces ({a.size} vs {b.size} outcomes)")


@dataclass(frozen=True, eq=False)
class RandomVariable:
    """A real-valued function on the outcomes of ``space``."""

    space: SampleSpace
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(-1)
        if v.size != self.space.size:
            raise StructuralError("random variable needs one value per outcome")
        object.__setattr__(self, "values", _frozen(v))

    @classmethod
    def constant(cls, space: SampleSpace, c: float) -> "RandomVariable":
        return cls(space, np.full(space.size, float(c)))

    def mean(self) -> float:
        return math.fsum(self.space.weights * self.values)

    def norm(self) -> float:
        """L2 norm with respect to the space's measure."""
        return math.sqrt(math.fsum(self.space.weights * self.values**2))

    def __sub__(self, other: "RandomVariable") -> "RandomVariable":
        _check_same_space(self.space, other.space)
        return RandomVariable(self.space, self.values - other.values)


class Partition:
    """A finite sub-sigma-algebra stored as a labelling of outcomes by atom.

    Atom ids are canonical (numbered by first outcome), so two partitions with
    the same atoms compare equal.  ``generator_count`` is an upper bound on the
    complexity; ``side`` marks partitions measurable in one coordinate.
    """

    __slots__ = ("space", "atom_of", "generator_count", "side")

    def __init__(self, space: SampleSpace, atom_of, generator_count: int | None = None,
                 side: int | None = None):
        ids = np.asarray(atom_of)
        if ids.shape != (space.size,):
            raise StructuralError("partition needs one atom id per outcome")
        ids = _frozen(canonical_ids(ids))
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "atom_of", ids)
        object.__setattr__(self, "side", side)
        exact = self.exact_complexity()
        if generator_count is None:
            generator_count = exact
        if generator_count < exact:
            raise StructuralError(
                f"generator_count {generator_count} below exact complexity {exact}")
        object.__setattr__(self, "generator_count", int(generator_count))
        if side is not None:
            codes = space.side(side).codes
            # atom_of must factor through the side's labels
            first = np.full(space.side(side).n_labels, -1)
            first[codes[::-1]] = ids[::-1]
            if not np.array_equal(first[codes], ids):
                raise StructuralError(f"partition is not measurable in side {side}")

    def __setattr__(self, name, value):
        raise AttributeError("Partition is immutable")

    @classmethod
    def trivial(cls, space: SampleSpace, side: int | None = None) -> "Partition":
        return cls(space, np.zeros(space.size, dtype=np.int64), 0, side)

    @classmethod
    def discrete(cls, space: SampleSpace) -> "Partition":
        return cls(space, np.arange(space.size))

    @classmethod
    def from_side_labels(cls, space: SampleSpace, side: int, block_of_label,
                         generator_count: int | None = None) -> "Partition":
        """Lift a partition of one side's labels; ``block_of_label`` maps label -> block key."""
        fs = space.side(side)
        keys = [block_of_label(v) if callable(block_of_label) else block_of_label[v] for v in fs.values]
        block_codes, _ = encode(keys)
        return cls(space, block_codes[fs.codes], generator_count, side)

    # --- structure -----------------------------------------------------
    @property
    def n_atoms(self) -> int:
        return int(self.atom_of.max()) + 1 if self.atom_of.size else 0

    def atom_masses(self) -> np.ndarray:
        return np.bincount(self.atom_of, weights=self.space.weights, minlength=self.n_atoms)

    def positive_atoms(self) -> int:
        return int(np.count_nonzero(self.atom_masses() > 0))

    def exact_complexity(self) -> int:
        """Least number of generating events: ceil(log2 #positive-weight atoms)."""
        k = self.positive_atoms()
        return 0 if k <= 1 else (k - 1).bit_length()

    def atoms(self) -> list[np.ndarray]:
        return [np.flatnonzero(self.atom_of == a) for a in range(self.n_atoms)]

    def label_blocks(self) -> list[list]:
        """Blocks of side labels (in label order) for a side-measurable partition."""
        if self.side is None:
            raise StructuralError("partition is not tied to a side")
        fs = self.space.side(self.side)
        atom_of_label = np.empty(fs.n_labels, dtype=np.int64)
        atom_of_label[fs.codes] = self.atom_of
        blocks: dict[int, list] = {}
        for code, a in enumerate(atom_of_label):
            blocks.setdefault(int(a), []).append(fs.values[code])
        return [blocks[a] for a in sorted(blocks)]

    def refines(self, other: "Partition") -> bool:
        """True when every atom of ``self`` lies inside one atom of ``other``."""
        _check_same_space(self.space, other.space)
        img = np.full(self.n_atoms, -1)
        img[self.atom_of] = other.atom_of
        return bool(np.array_equal(img[self.atom_of], other.atom_of))

    def same_atoms(self, other: "Partition") -> bool:
        return self.space.compatible(other.space) and np.array_equal(self.atom_of, other.atom_of)

    def with_generator_count(self, generator_count: int) -> "Partition":
        return Partition(self.space, self.atom_of, generator_count, self.side)

    def __eq__(self, other):
        if not isinstance(other, Partition):
            return NotImplemented
        return self.same_atoms(other) and self.generator_count == other.generator_count

    def __hash__(self):
        return hash((self.atom_of.tobytes(), self.generator_count))

    def __repr__(self):
        return (f"Partition(atoms={self.n_atoms}, generator_count={self.generator_count}, "
                f"side={self.side})")


def join(p: Partition, q: Partition) -> Partition:
    """The coarsest common refinement; generator counts add."""
    _check_same_space(p.space, q.space)
    pair = p.atom_of * max(q.n_atoms, 1) + q.atom_of
    side = p.side if p.side == q.side else None
    return Partition(p.space, pair, p.generator_count + q.generator_count, side)


def join_all(parts: Iterable[Partition]) -> Partition:
    return reduce(join, parts)


def conditional_expectation(x: RandomVariable, b: Partition) -> RandomVariable:
    """Atomwise weighted average of ``x``; null atoms get 0."""
    _check_same_space(x.space, b.space)
    w = x.space.weights
    mass = np.bincount(b.atom_of, weights=w, minlength=b.n_atoms)
    total = np.bincount(b.atom_of, weights=w * x.values, minlength=b.n_atoms)
    means = np.zeros_like(mass)
    np.divide(total, mass, out=means, where=mass > 0)
    return RandomVariable(x.space, means[b.atom_of])


def energy(x: RandomVariable, b: Partition) -> float:
    """Squared L2 norm of E(x|b)."""
    e = conditional_expectation(x, b).values
    return math.fsum(x.space.weights * e * e)


def pythagoras_residual(x: RandomVariable, coarse: Partition, fine: Partition) -> float:
    """||E(x|fine) - E(x|coarse)||^2 for a refining pair."""
    if not fine.refines(coarse):
        raise PreconditionError("fine partition does not refine coarse partition")
    d = conditional_expectation(x, fine).values - conditional_expectation(x, coarse).values
    return math.fsum(x.space.weights * d * d)


def lift_event(space: SampleSpace, side: int, subset: Iterable[Hashable]) -> RandomVariable:
    """Indicator of the outcomes whose ``side`` coordinate lies in ``subset``."""
    fs = space.side(side)
    chosen = np.zeros(fs.n_labels, dtype=bool)
    chosen[fs.codes_of(subset)] = True
    return RandomVariable(space, chosen[fs.codes].astype(float))


def event_partition(space: SampleSpace, side: int, subset: Iterable[Hashable]) -> Partition:
    """The sigma-algebra {empty, A, complement, everything} for a side event A."""
    ind = lift_event(space, side, subset).values.astype(np.int64)
    return Partition(space, ind, 1, side)


def indicator(space: SampleSpace, mask: Any) -> RandomVariable:
    return RandomVariable(space, np.asarray(mask, dtype=bool).astype(float))
