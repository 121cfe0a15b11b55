"""Bipartite graphs: loading, the product space, vertex partitions and pair regularity."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import CapacityError, InputError, PreconditionError
from .growth import GrowthFunction
from .parallel import ordered_map
from .probability import Partition, RandomVariable, SampleSpace, conditional_expectation
from .regularize import RegularizationConfig, RegularizationResult, regularize
from .witness import EXACT_CAPACITY, Witness, find_witness_exact, find_witness_heuristic

SLACK = 1e-12
EXCEPTIONAL_CONSTANT = 2.0


@dataclass(frozen=True)
class BipartiteGraph:
    n1: int
    n2: int
    edges: frozenset = field(repr=False)

    def __post_init__(self):
        if self.n1 < 0 or self.n2 < 0:
            raise InputError("side sizes must be nonnegative")
        for u, v in self.edges:
            if not (0 <= u < self.n1 and 0 <= v < self.n2):
                raise InputError(f"edge ({u}, {v}) out of range for a {self.n1}x{self.n2} graph")

    @classmethod
    def from_edges(cls, n1: int, n2: int, edges: Iterable[tuple[int, int]]) -> "BipartiteGraph":
        seen = set()
        for u, v in edges:
            e = (int(u), int(v))
            if e in seen:
                raise InputError(f"duplicate edge {e}")
            seen.add(e)
        return cls(n1, n2, frozenset(seen))

    @classmethod
    def from_matrix(cls, adj) -> "BipartiteGraph":
        a = np.asarray(adj)
        if a.ndim != 2:
            raise InputError("adjacency must be a 2-D matrix")
        us, vs = np.nonzero(a)
        return cls(a.shape[0], a.shape[1], frozenset(zip(us.tolist(), vs.tolist())))

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n1, self.n2), dtype=np.uint8)
        if self.edges:
            us, vs = zip(*self.edges)
            a[list(us), list(vs)] = 1
        return a

    def induced(self, cell1: Sequence[int], cell2: Sequence[int]) -> "BipartiteGraph":
        return BipartiteGraph.from_matrix(self.adjacency()[np.ix_(list(cell1), list(cell2))])


# --- file formats ------------------------------------------------------------

def _content_lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line


def _header(lines) -> tuple[int, int]:
    try:
        lineno, line = next(lines)
    except StopIteration:
        raise InputError("empty graph file") from None
    parts = line.split()
    try:
        n1, n2 = (int(p) for p in parts)
    except ValueError:
        raise InputError(f"line {lineno}: expected header 'n1 n2'") from None
    return n1, n2


def parse_edgelist(text: str) -> BipartiteGraph:
    """Header ``n1 n2`` then one ``u v`` pair per line, 0-indexed, ``#`` comments."""
    lines = _content_lines(text)
    n1, n2 = _header(lines)
    edges = []
    for lineno, line in lines:
        parts = line.split()
        try:
            u, v = (int(p) for p in parts)
        except ValueError:
            raise InputError(f"line {lineno}: expected 'u v'") from None
        edges.append((u, v))
    return BipartiteGraph.from_edges(n1, n2, edges)


def parse_matrix(text: str) -> BipartiteGraph:
    """Header ``n1 n2`` then ``n1`` rows of ``n2`` characters from {0,1}."""
    lines = _content_lines(text)
    n1, n2 = _header(lines)
    rows = []
    for lineno, line in lines:
        if len(line) != n2 or set(line) - {"0", "1"}:
            raise InputError(f"line {lineno}: expected {n2} characters from {{0,1}}")
        rows.append([c == "1" for c in line])
    if len(rows) != n1:
        raise InputError(f"expected {n1} matrix rows, got {len(rows)}")
    return BipartiteGraph.from_matrix(np.array(rows, dtype=bool).reshape(n1, n2))


def load_graph(path: str | Path, fmt: str = "edgelist") -> BipartiteGraph:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    if fmt == "edgelist":
        return parse_edgelist(text)
    if fmt == "matrix":
        return parse_matrix(text)
    raise InputError(f"unknown graph format {fmt!r}")


def format_edgelist(g: BipartiteGraph) -> str:
    lines = [f"{g.n1} {g.n2}"] + [f"{u} {v}" for u, v in sorted(g.edges)]
    return "\n".join(lines) + "\n"


def random_bipartite(n1: int, n2: int, p: float, seed: int) -> BipartiteGraph:
    rng = np.random.default_rng(seed)
    return BipartiteGraph.from_matrix(rng.random((n1, n2)) < p)


def half_graph(n: int) -> BipartiteGraph:
    """Edge (u, v) iff u < v."""
    return BipartiteGraph.from_matrix(np.triu(np.ones((n, n), dtype=bool), k=1))


# --- product space -----------------------------------------------------------

def build_product_space(g: BipartiteGraph) -> tuple[SampleSpace, RandomVariable]:
    """Uniform measure on V1 x V2 with the two projections as sides, and X = 1_E."""
    if g.n1 < 1 or g.n2 < 1:
        raise InputError("both vertex classes must be nonempty")
    space = SampleSpace.product(range(g.n1), range(g.n2))
    return space, RandomVariable(space, g.adjacency().reshape(-1).astype(float))


# --- vertex partition --------------------------------------------------------

@dataclass(frozen=True)
class SzemerediPartition:
    J: int
    cells: tuple[tuple[tuple[int, ...], ...], ...]   # per side, J cells
    exceptional: tuple[tuple[int, ...], ...]         # per side
    densities: np.ndarray = field(repr=False)
    cell_size: tuple[int, ...] = ()


def _cut_side(blocks: list[list[int]], n: int, J: int) -> tuple[list[tuple[int, ...]], list[int], int]:
    size = n // J
    if size == 0:
        raise CapacityError(f"side has {n} vertices but J = {J} cells are needed; "
                            f"need at least {J} vertices per side")
    # shrink the cell size until the atoms yield J cells
    while sum(len(b) // size for b in blocks) < J:
        size -= 1
    cells, leftover = [], []
    for block in blocks:
        block = sorted(block)
        k = len(block) // size
        cells += [tuple(block[i * size:(i + 1) * size]) for i in range(k)]
        leftover += block[k * size:]
    for surplus in cells[J:]:
        leftover += surplus
    return cells[:J], sorted(leftover), size


def nearest_int(v: float) -> int:
    return int(math.floor(v + 0.5))


def derive_vertex_partition(g: BipartiteGraph, res: RegularizationResult, epsilon: float) -> SzemerediPartition:
    """Cut every coarse atom into equal consecutive cells; leftovers are exceptional."""
    m_star = max(p.exact_complexity() for p in res.coarse)
    J = max(1, nearest_int(2**m_star / epsilon))
    cells, exceptional, sizes = [], [], []
    for p, n in zip(res.coarse, (g.n1, g.n2)):
        c, exc, size = _cut_side(p.label_blocks(), n, J)
        cells.append(tuple(c))
        exceptional.append(tuple(exc))
        sizes.append(size)
    adj = g.adjacency().astype(np.int64)
    dens = np.empty((J, J))
    for j1, c1 in enumerate(cells[0]):
        rows = adj[list(c1)]
        for j2, c2 in enumerate(cells[1]):
            dens[j1, j2] = rows[:, list(c2)].sum() / (len(c1) * len(c2))
    dens.setflags(write=False)
    return SzemerediPartition(J, tuple(cells), tuple(exceptional), dens, tuple(sizes))


# --- pair regularity ---------------------------------------------------------

@dataclass(frozen=True)
class PairVerdict:
    status: str                 # "regular", "irregular" or "unchecked"
    mode: str                   # oracle used, or "capacity" when unchecked
    density: float
    discrepancy: float | None   # largest |correlation| found, normalized by the pair size
    witness: Witness | None = None


def check_pair_regularity(g: BipartiteGraph, cell1: Sequence[int], cell2: Sequence[int], epsilon: float,
                          mode: str = "exact", seed: int = 0, restarts: int = 16) -> PairVerdict:
    """Is | |E n (A1 x A2)| - d |A1||A2| | <= eps |cell1||cell2| for all subsets?

    In heuristic mode a "regular" verdict only means no violation was found.
    """
    cell1, cell2 = list(cell1), list(cell2)
    if not cell1 or not cell2:
        raise PreconditionError("cells must be nonempty")
    sub = g.induced(cell1, cell2)
    space, x = build_product_space(sub)
    density = x.mean()
    fine = [Partition.trivial(space, side=0), Partition.trivial(space, side=1)]
    if mode == "exact":
        if min(len(cell1), len(cell2)) > EXACT_CAPACITY:
            return PairVerdict("unchecked", "capacity", density, None)
        w = find_witness_exact(x, fine, space)
    elif mode == "heuristic":
        w = find_witness_heuristic(x, fine, space, restarts, seed)
    else:
        raise InputError(f"unknown mode {mode!r}")
    if abs(w.correlation) > epsilon + SLACK:
        mapped = Witness(w.sides, (frozenset(cell1[i] for i in w.events[0]),
                                   frozenset(cell2[i] for i in w.events[1])), w.correlation)
        return PairVerdict("irregular", mode, density, abs(w.correlation), mapped)
    return PairVerdict("regular", mode, density, abs(w.correlation))


# --- pipeline ----------------------------------------------------------------

@dataclass(frozen=True)
class RegularityReport:
    epsilon: float
    pairs: dict = field(repr=False)     # (j1, j2) -> PairVerdict, 0-based
    irregular_fraction: float
    certificate: str
    proxy: np.ndarray = field(repr=False)
    proxy_threshold: float = 0.0
    proxy_failures: int = 0


def driver_settings(cfg: RegularizationConfig) -> RegularizationConfig:
    """Parameters the energy-increment driver runs with when partitioning a graph.

    The exponential preset is instantiated at the graph epsilon and the
    driver gets epsilon**1.5; other presets run at epsilon unchanged.
    """
    if cfg.growth.kind == "exponential":
        return replace(cfg, epsilon=cfg.epsilon**1.5,
                       growth=GrowthFunction.exponential(cfg.epsilon))
    return cfg


def pair_proxies(x: RandomVariable, res: RegularizationResult, part: SzemerediPartition,
                 n2: int) -> np.ndarray:
    """E(|E(X|fine) - E(X|coarse)|^2 1_{cell pair}) for every pair of cells."""
    diff = (conditional_expectation(x, res.fine_join()).values
            - conditional_expectation(x, res.coarse_join()).values)
    sq = (diff * diff).reshape(-1, n2) * x.space.weights.reshape(-1, n2)
    out = np.empty((part.J, part.J))
    for j1, c1 in enumerate(part.cells[0]):
        rows = sq[list(c1)]
        for j2, c2 in enumerate(part.cells[1]):
            out[j1, j2] = math.fsum(rows[:, list(c2)].reshape(-1))
    return out


def regularize_graph(g: BipartiteGraph, cfg: RegularizationConfig,
                     exceptional_constant: float = EXCEPTIONAL_CONSTANT
                     ) -> tuple[SzemerediPartition, RegularityReport, RegularizationResult]:
    space, x = build_product_space(g)
    res = regularize(x, space, driver_settings(cfg))
    part = derive_vertex_partition(g, res, cfg.epsilon)
    for side, (exc, n) in enumerate(zip(part.exceptional, (g.n1, g.n2))):
        if len(exc) > exceptional_constant * cfg.epsilon * n + SLACK:
            raise CapacityError(
                f"exceptional set of side {side + 1} has {len(exc)} vertices, above "
                f"{exceptional_constant:g}*eps*n = {exceptional_constant * cfg.epsilon * n:g}; "
                f"graph too small for epsilon = {cfg.epsilon:g}")

    index = [(j1, j2) for j1 in range(part.J) for j2 in range(part.J)]

    def verify(jj):
        c1, c2 = part.cells[0][jj[0]], part.cells[1][jj[1]]
        mode = "exact" if min(len(c1), len(c2)) <= EXACT_CAPACITY else "heuristic"
        return check_pair_regularity(g, c1, c2, cfg.epsilon, mode, cfg.seed, cfg.heuristic_restarts)

    verdicts = dict(zip(index, ordered_map(verify, index)))
    irregular = sum(v.status == "irregular" for v in verdicts.values())
    modes = {v.mode for v in verdicts.values()} | {res.certificate}
    certificate = modes.pop() if len(modes) == 1 else "mixed"
    proxy = pair_proxies(x, res, part, g.n2)
    threshold = cfg.epsilon**2 / part.J**2
    report = RegularityReport(cfg.epsilon, verdicts, irregular / part.J**2, certificate, proxy,
                              threshold, int(np.count_nonzero(proxy > threshold + SLACK)))
    return part, report, res


def report_document(part: SzemerediPartition, report: RegularityReport,
                    res: RegularizationResult) -> dict:
    """The JSON report; cell indices j1, j2 are 1-based (0 is the exceptional set)."""
    pairs = []
    for (j1, j2), v in report.pairs.items():
        entry = {"j1": j1 + 1, "j2": j2 + 1, "status": v.status, "density": v.density,
                 "discrepancy": v.discrepancy, "proxy": float(report.proxy[j1, j2])}
        if v.witness is not None:
            entry["witness"] = {"A1": sorted(v.witness.events[0]), "A2": sorted(v.witness.events[1]),
                                "correlation": v.witness.correlation}
        pairs.append(entry)
    return {
        "epsilon": report.epsilon,
        "J": part.J,
        "M": res.M,
        "certificate": report.certificate,
        "cells": [[list(c) for c in side] for side in part.cells],
        "exceptional": [list(e) for e in part.exceptional],
        "densities": part.densities.tolist(),
        "pairs": pairs,
        "irregular_fraction": report.irregular_fraction,
        "history": [{"event": h.event, "outer": h.outer, "energy": h.energy, "M": h.M,
                     "correlation": h.correlation} for h in res.history],
    }
