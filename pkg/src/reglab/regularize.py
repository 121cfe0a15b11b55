"""Energy-increment regularization of a random variable on a product space.

``regularize`` runs the double loop: the inner loop refines the fine
partitions along witnesses of irregularity; once the energy has climbed by
more than epsilon**2 over the coarse partitions, the refinement is promoted to
both coarse and fine and the accuracy threshold 1/F(M) is recomputed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .errors import InputError, PreconditionError, StructuralError
from .growth import GrowthFunction
from .probability import (Partition, RandomVariable, SampleSpace, energy, event_partition, join,
                          join_all, pythagoras_residual)
from .witness import Witness, check_capacity, find_witness_exact, find_witness_heuristic

SLACK = 1e-12

Oracle = Callable[[RandomVariable, Sequence[Partition], SampleSpace], Witness]


@dataclass(frozen=True)
class RegularizationConfig:
    epsilon: float
    m: float = 0.0
    growth: GrowthFunction = field(default_factory=GrowthFunction.linear)
    oracle_mode: str = "exact"
    heuristic_restarts: int = 16
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.epsilon <= 1:
            raise InputError(f"epsilon must lie in (0, 1], got {self.epsilon}")
        if self.m < 0:
            raise InputError(f"m must be nonnegative, got {self.m}")
        if self.oracle_mode not in ("exact", "heuristic"):
            raise InputError(f"oracle mode must be exact or heuristic, got {self.oracle_mode!r}")
        if self.heuristic_restarts < 1:
            raise InputError("heuristic_restarts must be positive")


@dataclass(frozen=True)
class HistoryEntry:
    event: str          # "start", "refine", "promote" or "halt"
    outer: int          # index of the outer pass the event belongs to
    energy: float       # energy of the join of the fine partitions after the event
    M: float
    correlation: float | None = None


@dataclass(frozen=True)
class RegularizationResult:
    coarse: tuple[Partition, ...]
    fine: tuple[Partition, ...]
    M: float
    iterations_outer: int
    iterations_inner_total: int
    certificate: str
    history: tuple[HistoryEntry, ...]
    inner_per_pass: tuple[int, ...]
    halt_correlation: float
    epsilon: float
    threshold: float

    def coarse_join(self) -> Partition:
        return join_all(self.coarse)

    def fine_join(self) -> Partition:
        return join_all(self.fine)

    def coarse_fine_distance(self, x: RandomVariable) -> float:
        """||E(x|fine) - E(x|coarse)||, which the run keeps below epsilon."""
        return math.sqrt(pythagoras_residual(x, self.coarse_join(), self.fine_join()))


def refine_by_witness(fine: Sequence[Partition], w: Witness, space: SampleSpace) -> tuple[Partition, ...]:
    """Join each fine partition with the two-atom algebra of its side's event."""
    out = []
    for p in fine:
        if p.side is None:
            raise StructuralError("per-side partitions must carry their side index")
        out.append(join(p, event_partition(space, p.side, w.event(p.side))))
    return tuple(out)


def m_upper_bound(m: float, epsilon: float, growth: Callable[[float], float]) -> float:
    """floor(1/eps^2) iterations of M -> M + F(M)^2/eps^2 + 1 starting from m."""
    bound = m
    for _ in range(math.floor(1 / epsilon**2)):
        try:
            bound = bound + growth(bound) ** 2 / epsilon**2 + 1
        except OverflowError:
            return math.inf
        if math.isinf(bound):
            break
    return bound


def _default_oracle(space: SampleSpace, cfg: RegularizationConfig) -> tuple[Oracle, str]:
    if len(space.sides) != 2:
        raise StructuralError("built-in oracles handle exactly two sides; pass oracle=")
    if cfg.oracle_mode == "exact":
        check_capacity(space)
        return find_witness_exact, "exact"

    def heuristic(x, fine, sp):
        return find_witness_heuristic(x, fine, sp, cfg.heuristic_restarts, cfg.seed)

    return heuristic, "heuristic"


def regularize(x: RandomVariable, space: SampleSpace, cfg: RegularizationConfig,
               oracle: Oracle | None = None, certificate: str = "exact") -> RegularizationResult:
    """Find coarse and fine per-side partitions satisfying both regularity bounds.

    A custom ``oracle`` (for spaces with more than two sides) must return a
    witness maximizing, or at least exceeding the threshold whenever possible;
    ``certificate`` records how much its halting verdict can be trusted.
    """
    if x.space is not space and not x.space.compatible(space):
        raise StructuralError("x does not live on the given space")
    if x.norm() > 1 + SLACK:
        raise PreconditionError(f"||x||_2 = {x.norm():.6g} exceeds 1")
    if len(space.sides) < 2:
        raise PreconditionError("space needs at least two factor sides")
    if oracle is None:
        oracle, certificate = _default_oracle(space, cfg)

    eps = cfg.epsilon
    sides = space.side_indices
    coarse = tuple(Partition.trivial(space, side=i) for i in sides)
    fine = coarse
    history: list[HistoryEntry] = []
    passes: list[int] = []
    outer = inner_total = 0
    max_outer = math.floor(1 / eps**2)

    while True:
        # Step 1
        M = max(cfg.m, max(p.generator_count for p in coarse))
        F = cfg.growth(M)
        threshold = 1.0 / F
        coarse_energy = energy(x, join_all(coarse))
        max_inner = F**2 / eps**2 + 1
        history.append(HistoryEntry("start", outer, energy(x, join_all(fine)), M))
        inner = 0
        while True:
            # Step 2
            w = oracle(x, fine, space)
            if abs(w.correlation) <= threshold + SLACK:
                passes.append(inner)
                history.append(HistoryEntry("halt", outer, energy(x, join_all(fine)), M, w.correlation))
                return RegularizationResult(coarse, fine, M, outer, inner_total, certificate,
                                            tuple(history), tuple(passes), w.correlation, eps,
                                            threshold)
            refined = refine_by_witness(fine, w, space)
            inner += 1
            inner_total += 1
            if inner > max_inner:
                raise RuntimeError("inner loop exceeded its theoretical bound")
            e_new = energy(x, join_all(refined))
            # Step 3
            if e_new <= coarse_energy + eps**2:
                fine = refined
                history.append(HistoryEntry("refine", outer, e_new, M, w.correlation))
            else:
                coarse = fine = refined
                passes.append(inner)
                history.append(HistoryEntry("promote", outer, e_new, M, w.correlation))
                outer += 1
                if outer > max_outer:
                    raise RuntimeError("outer loop exceeded its theoretical bound")
                break
