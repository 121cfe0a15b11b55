import json
from importlib import resources

import jsonschema
import numpy as np
import pytest

from oracles import brute_cut_discrepancy, brute_is_regular, exhaustive_pair_check
from reglab import (BipartiteGraph, CapacityError, GrowthFunction, InputError, Partition,
                    RegularizationConfig, RegularizationResult, build_product_space,
                    check_pair_regularity, derive_vertex_partition, regularize_graph)
from reglab.graph import (format_edgelist, half_graph, load_graph, parse_edgelist, parse_matrix,
                          random_bipartite, report_document)

SCHEMA = json.loads(resources.files("reglab").joinpath("report_schema.json").read_text())


def fake_result(g, blocks1, blocks2):
    space, _ = build_product_space(g)
    coarse = tuple(Partition.from_side_labels(space, side, {v: b for b, blk in enumerate(blocks) for v in blk})
                   for side, blocks in enumerate((blocks1, blocks2)))
    return RegularizationResult(coarse, coarse, 0.0, 0, 0, "exact", (), (0,), 0.0, 0.5, 1.0)


# --- parsing ---------------------------------------------------------------

def test_parse_edgelist_and_matrix_agree():
    g = parse_edgelist("# toy\n2 3\n0 0\n1 2  # trailing\n\n0 1\n")
    assert g.n1 == 2 and g.n2 == 3 and g.edges == {(0, 0), (1, 2), (0, 1)}
    assert parse_matrix("2 3\n110\n001\n") == g
    assert parse_edgelist(format_edgelist(g)) == g


@pytest.mark.parametrize("text", ["2 2\n0 0\n0 0\n", "2 2\n2 0\n", "2\n", "2 2\n0\n", "a b\n", "", "2 2\n0 x\n"])
def test_bad_edgelists(text):
    with pytest.raises(InputError):
        parse_edgelist(text)


@pytest.mark.parametrize("text", ["2 2\n10\n", "2 2\n10\n012\n", "2 2\n10\n02\n", "2 2\n10\n01\n11\n"])
def test_bad_matrices(text):
    with pytest.raises(InputError):
        parse_matrix(text)


def test_load_graph_errors(tmp_path):
    with pytest.raises(InputError):
        load_graph(tmp_path / "missing.txt")
    path = tmp_path / "g.txt"
    path.write_text("1 1\n0 0\n")
    with pytest.raises(InputError):
        load_graph(path, "csv")
    assert load_graph(path).edges == {(0, 0)}


# --- product space -----------------------------------------------------------

def test_product_space_examples():
    space, x = build_product_space(BipartiteGraph.from_edges(1, 1, [(0, 0)]))
    assert space.size == 1 and x.values.tolist() == [1.0]
    _, x = build_product_space(BipartiteGraph.from_edges(3, 3, []))
    assert not x.values.any() and x.mean() == 0
    _, x = build_product_space(BipartiteGraph.from_edges(2, 2, [(0, 0), (1, 1)]))
    assert x.mean() == 0.5
    with pytest.raises(InputError):
        build_product_space(BipartiteGraph.from_edges(0, 3, []))


# --- vertex partition --------------------------------------------------------

def test_trivial_coarse_gives_two_cells():
    g = random_bipartite(9, 10, 0.5, seed=1)
    part = derive_vertex_partition(g, fake_result(g, [range(9)], [range(10)]), 0.5)
    assert part.J == 2
    assert part.cells[0] == ((0, 1, 2, 3), (4, 5, 6, 7)) and part.exceptional[0] == (8,)
    assert part.cells[1] == ((0, 1, 2, 3, 4), (5, 6, 7, 8, 9)) and part.exceptional[1] == ()


def test_aligned_atoms_leave_no_exceptional_vertices():
    g = random_bipartite(8, 8, 0.5, seed=2)
    part = derive_vertex_partition(g, fake_result(g, [range(4), range(4, 8)], [[0, 2, 4, 6], [1, 3, 5, 7]]), 0.5)
    assert part.J == 4 and part.exceptional == ((), ())
    assert part.cells[1] == ((0, 2), (4, 6), (1, 3), (5, 7))


def test_atom_of_seven_with_cells_of_three():
    g = random_bipartite(15, 15, 0.5, seed=3)
    blocks = [range(7), range(7, 15)]
    part = derive_vertex_partition(g, fake_result(g, blocks, blocks), 0.5)
    assert part.J == 4 and part.cell_size == (3, 3)
    assert part.cells[0] == ((0, 1, 2), (3, 4, 5), (7, 8, 9), (10, 11, 12))
    assert part.exceptional[0] == (6, 13, 14)


def test_side_too_small_for_J():
    g = random_bipartite(3, 8, 0.5, seed=4)
    with pytest.raises(CapacityError, match="at least 4"):
        derive_vertex_partition(g, fake_result(g, [range(3)], [range(8)]), 0.25)


def check_partition_invariants(g, part, res, eps):
    m_star = max(p.exact_complexity() for p in res.coarse)
    adj = g.adjacency().astype(int)
    for side, n in enumerate((g.n1, g.n2)):
        cells = part.cells[side]
        assert len(cells) == part.J
        assert len({len(c) for c in cells}) == 1
        flat = [v for c in cells for v in c] + list(part.exceptional[side])
        assert sorted(flat) == list(range(n))
        atom_of = {v: a for a, blk in enumerate(res.coarse[side].label_blocks()) for v in blk}
        assert all(len({atom_of[v] for v in c}) == 1 for c in cells)
        assert len(part.exceptional[side]) <= eps * n + 2**m_star * n / part.J + part.J
    inside = sum(part.densities[j1, j2] * len(c1) * len(c2)
                 for j1, c1 in enumerate(part.cells[0]) for j2, c2 in enumerate(part.cells[1]))
    exc1, exc2 = list(part.exceptional[0]), list(part.exceptional[1])
    touching = adj[exc1].sum() + adj[:, exc2].sum() - adj[np.ix_(exc1, exc2)].sum()
    assert round(inside) + touching == len(g.edges)
    assert abs(inside - round(inside)) < 1e-9


# --- pair regularity ---------------------------------------------------------

def test_complete_pair_is_regular():
    g = BipartiteGraph.from_matrix(np.ones((5, 7)))
    for eps in (1e-6, 0.1):
        v = check_pair_regularity(g, range(5), range(7), eps)
        assert v.status == "regular" and v.discrepancy <= 1e-15 and v.density == 1


def test_half_graph_is_irregular():
    g = half_graph(8)
    v = check_pair_regularity(g, range(8), range(8), 0.1)
    assert v.status == "irregular"
    a1, a2 = sorted(v.witness.events[0]), sorted(v.witness.events[1])
    assert a1 == [0, 1, 2, 3, 4] and a2 == [3, 4, 5, 6, 7]
    adj = g.adjacency()
    d = adj.mean()
    excess = adj[np.ix_(a1, a2)].sum() - d * len(a1) * len(a2)
    assert excess / 64 == pytest.approx(v.witness.correlation, abs=1e-15)
    assert abs(excess) > 0.1 * 64
    assert v.discrepancy == pytest.approx(brute_cut_discrepancy(adj), abs=1e-15)


def test_six_by_six_verdicts_match_brute_force():
    for seed in range(40):
        g = random_bipartite(6, 6, 0.5, seed=seed)
        for eps in (0.05, 0.1, 0.15):
            v = check_pair_regularity(g, range(6), range(6), eps)
            assert (v.status == "regular") == brute_is_regular(g.adjacency(), eps)


def test_sub_pair_verdicts_match_brute_force():
    g = random_bipartite(10, 10, 0.4, seed=9)
    cell1, cell2 = [1, 4, 5, 8, 9], [0, 2, 3, 6, 7, 9]
    v = check_pair_regularity(g, cell1, cell2, 0.1)
    assert (v.status == "regular") == exhaustive_pair_check(g.adjacency(), cell1, cell2, 0.1)
    if v.witness is not None:
        assert v.witness.events[0] <= set(cell1) and v.witness.events[1] <= set(cell2)


def test_pair_capacity_and_heuristic():
    g = random_bipartite(30, 30, 0.5, seed=0)
    v = check_pair_regularity(g, range(30), range(30), 0.1)
    assert v.status == "unchecked" and v.mode == "capacity"
    h = check_pair_regularity(g, range(30), range(30), 0.1, mode="heuristic")
    assert h.status in ("regular", "irregular") and h.mode == "heuristic"


# --- pipeline ----------------------------------------------------------------

def test_empty_graph_pipeline():
    g = BipartiteGraph.from_edges(12, 12, [])
    part, report, res = regularize_graph(g, RegularizationConfig(0.5))
    assert part.J == 2
    assert all(v.status == "regular" and v.density == 0 for v in report.pairs.values())
    assert report.irregular_fraction == 0
    check_partition_invariants(g, part, res, 0.5)


def test_block_graph_pipeline():
    n = 40
    adj = np.zeros((n, n), dtype=int)
    adj[: n // 2, : n // 2] = 1
    g = BipartiteGraph.from_matrix(adj)
    part, report, res = regularize_graph(g, RegularizationConfig(0.1, m=10, oracle_mode="heuristic"))
    assert part.J == 20 and part.exceptional == ((), ())
    assert set(np.unique(part.densities)) == {0.0, 1.0}
    assert report.irregular_fraction == 0 and all(v.mode == "exact" for v in report.pairs.values())
    check_partition_invariants(g, part, res, 0.1)


def test_random_sixteen_pipeline():
    g = random_bipartite(16, 16, 0.5, seed=0)
    eps = 0.25
    part, report, res = regularize_graph(g, RegularizationConfig(eps))
    check_partition_invariants(g, part, res, eps)
    adj = g.adjacency()
    checked = 0
    for (j1, j2), v in report.pairs.items():
        c1, c2 = part.cells[0][j1], part.cells[1][j2]
        assert v.mode == "exact" and len(c1) + len(c2) <= 12
        assert (v.status == "regular") == exhaustive_pair_check(adj, c1, c2, eps)
        checked += 1
    assert checked == part.J**2 and report.irregular_fraction <= eps
    doc = report_document(part, report, res)
    jsonschema.validate(doc, SCHEMA)
    assert set(doc) == {"epsilon", "J", "M", "certificate", "cells", "exceptional", "densities",
                        "pairs", "irregular_fraction", "history"}


def test_exponential_preset_on_block_graph():
    n = 64
    adj = np.zeros((n, n), dtype=int)
    adj[:24, 40:] = 1
    g = BipartiteGraph.from_matrix(adj)
    eps = 0.5
    cfg = RegularizationConfig(eps, growth=GrowthFunction.exponential(eps), oracle_mode="heuristic")
    part, report, res = regularize_graph(g, cfg)
    assert res.epsilon == pytest.approx(eps**1.5)
    assert report.proxy_failures <= eps * part.J**2
    assert report.proxy.sum() <= res.epsilon**2 + 1e-12
    check_partition_invariants(g, part, res, eps)


def test_proxy_count_bound_on_random_graphs():
    for seed in range(3):
        g = random_bipartite(20, 20, 0.5, seed=seed)
        cfg = RegularizationConfig(0.5, m=3, oracle_mode="exact")
        part, report, res = regularize_graph(g, cfg)
        # the proxies add up to at most the squared coarse/fine distance
        assert report.proxy.sum() <= res.coarse_fine_distance(build_product_space(g)[1]) ** 2 + 1e-12
        assert report.proxy_failures <= res.epsilon**2 / report.proxy_threshold


def test_exceptional_bound_violation_is_capacity_error():
    g = random_bipartite(13, 13, 0.5, seed=0)
    with pytest.raises(CapacityError, match="exceptional"):
        regularize_graph(g, RegularizationConfig(0.3), exceptional_constant=0.1)
