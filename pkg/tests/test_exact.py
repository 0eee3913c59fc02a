from fractions import Fraction

import numpy as np
import pytest

from icebox.errors import BudgetExceeded, NotAPartition, NotIrreducible
from icebox.exact import (
    brute_force_count, conductance, detailed_balance_error, enumerate_states, gibbs,
    is_strongly_connected, load_state_space, log_partition_function, partition_function,
    save_state_space, stationarity_error, stationary_distribution, transition_matrix,
    verify_three_step_recipe,
)
from icebox.lattice import build_lattice
from icebox.peierls import fault_states
from icebox.state import WeightParams, weight_exact
from icebox.topology import PartitionClass, classify


def _class_mask(space, cls):
    return np.array([classify(s) is cls for s in space.states])


@pytest.mark.parametrize("n,bc,count", [(1, "free", 6), (2, "free", 82), (3, "free", 2604),
                                        (2, "periodic", 18), (1, "periodic", 4)])
def test_counts(n, bc, count):
    assert len(enumerate_states(build_lattice(n, bc))) == count


@pytest.mark.parametrize("n,bc", [(1, "free"), (2, "free"), (1, "periodic"), (2, "periodic")])
def test_brute_force_agrees(n, bc):
    g = build_lattice(n, bc)
    assert brute_force_count(g) == len(enumerate_states(g))


def test_near_perfect_sizes(space2_full, torus2_full):
    assert len(space2_full) == 3318 and space2_full.num_perfect == 82
    assert len(torus2_full) == 306
    assert len(enumerate_states(build_lattice(1), include_near_perfect=True)) == 30


def test_enumeration_is_sorted_and_unique(space3):
    keys = [s.key for s in space3.states]
    assert keys == sorted(keys)
    assert len(set(keys)) == len(keys)


def test_budget():
    with pytest.raises(BudgetExceeded):
        enumerate_states(build_lattice(5), budget=1000)


def test_partition_function_small():
    sp = enumerate_states(build_lattice(1))
    assert partition_function(sp, WeightParams(1, 1, 1), exact=True) == 6
    assert partition_function(sp, WeightParams(2, 3, 5), exact=True) == 20


def test_partition_function_rational(space2):
    p = WeightParams(1, 1, 3)
    z = sum((weight_exact(s, p) for s in space2.states), Fraction(0))
    assert partition_function(space2, p, exact=True) == z
    assert np.exp(log_partition_function(space2, p)) == pytest.approx(float(z), rel=1e-12)


def test_gibbs(space2):
    pi = gibbs(space2, WeightParams(1, 2, 3))
    assert pi.sum() == pytest.approx(1.0, abs=1e-14)
    assert np.allclose(gibbs(space2, WeightParams(1, 1, 1)), 1 / 82)


@pytest.mark.parametrize("chain", ["glauber", "loop"])
@pytest.mark.parametrize("abc", [(1, 1, 1), (1, 1, 3), (1, 2, 6)])
def test_kernel_properties(space2_full, chain, abc):
    p = WeightParams(*abc)
    k = transition_matrix(space2_full, chain, p)
    size = k.matrix.shape[0]
    pi = gibbs(space2_full, p)[:size]
    T = k.dense()
    assert np.abs(T.sum(axis=1) - 1).max() < 1e-12
    assert (T >= 0).all()
    assert k.diagonal.min() >= 0.5 - 1e-12
    assert stationarity_error(k, pi) < 1e-12
    assert detailed_balance_error(k, pi) < 1e-12
    assert is_strongly_connected(k)


def test_glauber_uses_perfect_states_only(space2_full):
    k = transition_matrix(space2_full, "glauber", WeightParams(1, 1, 1))
    assert k.matrix.shape == (82, 82)


def test_loop_kernel_periodic(torus2_full):
    p = WeightParams(1, 1, 3)
    k = transition_matrix(torus2_full, "loop", p)
    assert detailed_balance_error(k, gibbs(torus2_full, p)) < 1e-12
    assert is_strongly_connected(k)
    with pytest.raises(NotIrreducible):
        transition_matrix(torus2_full, "glauber", p)


def test_stationary_distribution_uniform(space2):
    k = transition_matrix(space2, "glauber", WeightParams(1, 1, 1))
    pi = stationary_distribution(k)
    assert np.abs(pi - 1 / 82).max() < 1e-10


def test_conductance_trend(space2):
    S = _class_mask(space2, PartitionClass.GREEN_CROSS)
    phis = []
    for c in (1, 4):
        p = WeightParams(1, 1, c)
        cut = conductance(space2, transition_matrix(space2, "glauber", p), S)
        assert abs(cut.Q - cut.Q_reverse) < 1e-12
        phis.append(cut.phi)
    assert phis[1] < phis[0]


def test_conductance_disconnected():
    # a kernel on two uncoupled blocks
    sp = enumerate_states(build_lattice(2, "periodic"))
    full = enumerate_states(build_lattice(2, "periodic"), include_near_perfect=True)
    k = transition_matrix(full, "loop", WeightParams(1, 1, 1))
    from dataclasses import replace
    m = k.dense()
    m[:9, 9:] = 0
    m[9:, :9] = 0
    np.fill_diagonal(m, 0)
    m += np.diag(1 - m.sum(axis=1))
    mask = np.zeros(len(full), dtype=bool)
    mask[:9] = True
    cut = conductance(replace(k, matrix=m), S=mask)
    assert cut.phi == 0 and cut.disconnected
    assert cut.mixing_lower_bound == float("inf")
    assert len(sp) == 18


def test_conductance_rejects_trivial_cut(space2):
    k = transition_matrix(space2, "glauber", WeightParams(1, 1, 1))
    with pytest.raises(ValueError):
        conductance(k, S=np.ones(82, dtype=bool))


def _recipe_sets(space):
    cg = _class_mask(space, PartitionClass.GREEN_CROSS)
    mid = fault_states(space) & ~cg
    return cg, mid, ~(cg | mid)


def test_three_step_recipe(space3):
    left, mid, right = _recipe_sets(space3)
    r3 = verify_three_step_recipe(space3, transition_matrix(space3, "glauber", WeightParams(1, 1, 3)),
                                  left, mid, right)
    assert r3.passed and r3.direct_transitions == 0
    r1 = verify_three_step_recipe(space3, transition_matrix(space3, "glauber", WeightParams(1, 1, 1)),
                                  left, mid, right)
    assert r1.ratio > r3.ratio


def test_recipe_degenerate(space2):
    k = transition_matrix(space2, "glauber", WeightParams(1, 1, 1))
    left = _class_mask(space2, PartitionClass.GREEN_CROSS)
    empty = np.zeros(82, dtype=bool)
    rep = verify_three_step_recipe(space2, k, left, empty, ~left)
    assert not rep.passed
    with pytest.raises(NotAPartition):
        verify_three_step_recipe(space2, k, left, left, ~left)


def test_cache_roundtrip(tmp_path, space2_full):
    path = tmp_path / "s.txt"
    save_state_space(space2_full, path)
    back = load_state_space(path)
    assert back.digest() == space2_full.digest() and back.num_perfect == 82
    path.write_text(path.read_text().replace("+", "-", 1))
    with pytest.raises(ValueError):
        load_state_space(path)
