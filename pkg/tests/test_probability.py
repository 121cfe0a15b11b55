import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import loop_conditional_expectation, loop_energy
from reglab import (InputError, Partition, PreconditionError, RandomVariable, SampleSpace,
                    StructuralError, conditional_expectation, energy, join, join_all, lift_event,
                    pythagoras_residual)
from reglab.probability import event_partition


@pytest.fixture
def four():
    return SampleSpace.uniform(range(4))


def test_join_with_trivial_is_identity(four):
    q = Partition(four, [0, 0, 1, 1])
    j = join(Partition.trivial(four), q)
    assert j.same_atoms(q) and j.generator_count == q.generator_count


def test_join_even_odd_with_low_high(four):
    parity = Partition(four, [0, 1, 0, 1])
    low_high = Partition(four, [0, 0, 1, 1])
    j = join(parity, low_high)
    assert j.same_atoms(Partition.discrete(four))
    assert j.generator_count == 2


def test_join_idempotent_on_atoms(four):
    p = Partition(four, [0, 1, 1, 0])
    j = join(p, p)
    assert j.same_atoms(p) and j.generator_count == 2 * p.generator_count


def test_join_rejects_other_space(four):
    with pytest.raises(StructuralError):
        join(Partition.trivial(four), Partition.trivial(SampleSpace.uniform(range(3))))


def test_conditional_expectation_examples(four):
    x = RandomVariable(four, [0.0, 1.0, 2.0, 3.0])
    assert np.allclose(conditional_expectation(x, Partition.trivial(four)).values, 1.5)
    e = conditional_expectation(x, Partition(four, [0, 0, 1, 1]))
    assert e.values.tolist() == [0.5, 0.5, 2.5, 2.5]
    ind = RandomVariable(four, [0.0, 0.0, 1.0, 0.0])
    assert conditional_expectation(ind, Partition(four, [0, 0, 1, 2])).values.tolist() == [0, 0, 1, 0]


def test_null_atoms_get_zero():
    space = SampleSpace(tuple(range(3)), np.array([0.5, 0.5, 0.0]))
    e = conditional_expectation(RandomVariable(space, [1.0, 3.0, 7.0]), Partition(space, [0, 0, 1]))
    assert e.values.tolist() == [2.0, 2.0, 0.0]


def test_energy_examples(four):
    x = RandomVariable(four, [0.0, 1.0, 2.0, 3.0])
    assert energy(x, Partition(four, [0, 0, 1, 1])) == pytest.approx(3.25, abs=1e-15)
    ind = RandomVariable(four, [1.0, 0.0, 0.0, 0.0])
    assert energy(ind, Partition.trivial(four)) == pytest.approx(0.0625, abs=1e-15)
    assert energy(x, Partition.discrete(four)) == pytest.approx(x.norm() ** 2, abs=1e-12)


def test_pythagoras_examples(four):
    x = RandomVariable(four, [1.0, 0.0, 0.0, 0.0])
    p = Partition(four, [0, 0, 1, 1])
    assert pythagoras_residual(x, p, p) == 0.0
    d = 0.25
    assert pythagoras_residual(x, Partition.trivial(four), Partition.discrete(four)) == pytest.approx(d * (1 - d))
    with pytest.raises(PreconditionError):
        pythagoras_residual(x, Partition(four, [0, 1, 0, 1]), p)


def test_pythagoras_random_chain_on_eight():
    rng = np.random.default_rng(7)
    space = SampleSpace.uniform(range(8))
    x = RandomVariable(space, rng.normal(size=8))
    coarse = Partition(space, [0, 0, 0, 0, 1, 1, 1, 1])
    fine = Partition(space, [0, 0, 1, 1, 2, 2, 3, 4])
    gap = loop_energy(x.values, space.weights, fine.atom_of) - loop_energy(x.values, space.weights, coarse.atom_of)
    assert pythagoras_residual(x, coarse, fine) == pytest.approx(gap, abs=1e-9)


def test_lift_event_examples():
    space = SampleSpace.product(range(2), range(2))
    assert lift_event(space, 0, []).values.tolist() == [0, 0, 0, 0]
    assert lift_event(space, 0, [0, 1]).values.tolist() == [1, 1, 1, 1]
    assert lift_event(space, 0, [0]).values.tolist() == [1, 1, 0, 0]
    with pytest.raises(InputError):
        lift_event(space, 0, [5])


def test_sample_space_validation():
    with pytest.raises(InputError):
        SampleSpace((0, 1), np.array([0.5, 0.6]))
    with pytest.raises(InputError):
        SampleSpace((0, 1), np.array([1.5, -0.5]))
    with pytest.raises(InputError):
        SampleSpace((0, 0), np.array([0.5, 0.5]))


def test_partition_validation():
    space = SampleSpace.product(range(2), range(2))
    with pytest.raises(StructuralError):
        Partition(space, [0, 1, 2, 3], generator_count=1)
    with pytest.raises(StructuralError):
        Partition(space, [0, 1, 0, 1], side=0)
    p = Partition(space, [0, 0, 1, 1], side=0)
    assert p.label_blocks() == [[0], [1]]
    assert Partition(space, [5, 5, 2, 2]) == Partition(space, [0, 0, 1, 1])
    assert event_partition(space, 1, [1]).generator_count == 1


def test_exact_complexity():
    space = SampleSpace.uniform(range(5))
    assert Partition.trivial(space).exact_complexity() == 0
    assert Partition(space, [0, 1, 1, 1, 1]).exact_complexity() == 1
    assert Partition(space, [0, 1, 2, 2, 2]).exact_complexity() == 2
    assert Partition.discrete(space).exact_complexity() == 3


# --- properties -------------------------------------------------------------

@st.composite
def spaces(draw, max_n=12):
    n = draw(st.integers(1, max_n))
    raw = draw(st.lists(st.integers(0, 5), min_size=n, max_size=n))
    if sum(raw) == 0:
        raw[0] = 1
    w = np.array(raw, dtype=float) / sum(raw)
    return SampleSpace(tuple(range(n)), w)


@st.composite
def space_with_partitions(draw, count=3):
    space = draw(spaces())
    parts = [Partition(space, draw(st.lists(st.integers(0, 4), min_size=space.size, max_size=space.size)))
             for _ in range(count)]
    x = draw(st.lists(st.floats(-1, 1), min_size=space.size, max_size=space.size))
    return space, parts, RandomVariable(space, x)


@settings(max_examples=200, deadline=None)
@given(space_with_partitions())
def test_join_lattice_properties(data):
    space, (p, q, r), _ = data
    assert join(p, q).same_atoms(join(q, p))
    assert join(join(p, q), r).same_atoms(join(p, join(q, r)))
    pq = join(p, q)
    assert pq.refines(p) and pq.refines(q)
    assert pq.exact_complexity() <= p.exact_complexity() + q.exact_complexity()


@settings(max_examples=200, deadline=None)
@given(space_with_partitions())
def test_projection_properties(data):
    space, (p, q, _), x = data
    coarse, fine = p, join(p, q)
    e_fine = conditional_expectation(x, fine)
    assert np.allclose(conditional_expectation(e_fine, coarse).values,
                       conditional_expectation(x, coarse).values, atol=1e-12)
    assert conditional_expectation(x, coarse).mean() == pytest.approx(x.mean(), abs=1e-12)
    assert np.allclose(conditional_expectation(x, fine).values,
                       loop_conditional_expectation(x.values, space.weights, fine.atom_of), atol=1e-12)
    e_c, e_f = energy(x, coarse), energy(x, fine)
    assert e_f == pytest.approx(e_c + pythagoras_residual(x, coarse, fine), abs=1e-9)
    assert e_f >= e_c - 1e-12


@settings(max_examples=200, deadline=None)
@given(space_with_partitions())
def test_energy_bounds_for_unit_ball(data):
    space, parts, x = data
    norm = x.norm()
    if norm > 1:
        x = RandomVariable(space, x.values / norm)
    for b in parts + [join_all(parts), Partition.discrete(space), Partition.trivial(space)]:
        assert -1e-12 <= energy(x, b) <= 1 + 1e-12
