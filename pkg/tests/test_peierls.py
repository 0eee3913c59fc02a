import math

import numpy as np
import pytest

from icebox.errors import BudgetExceeded
from icebox.exact import enumerate_states
from icebox.lattice import build_lattice
from icebox.peierls import (
    BOUNDARY, MU_HAT, MU_REF, ORIGIN, count_saw, fault_mass_exact, fault_states,
    naive_saw_count, peierls_upper_bound, saw_table,
)
from icebox.state import WeightParams
from icebox.topology import Direction, find_almost_fault_line

# published square-lattice walk counts
KNOWN = [1, 4, 12, 36, 100, 284, 780, 2172, 5916, 16268, 44100, 120292, 324932,
         881500, 2374444, 6416596, 17245332, 46466676, 124658732, 335116620, 897697164]


def test_small_counts():
    assert count_saw(1) == 4 and count_saw(2) == 12
    assert count_saw(8) == naive_saw_count(8)
    assert count_saw(0, BOUNDARY) == 1


def test_matches_published_series():
    assert list(saw_table(20).counts) == KNOWN


@pytest.mark.parametrize("rooting", [ORIGIN, BOUNDARY])
def test_naive_oracle(rooting):
    t = saw_table(12, rooting)
    for l in range(13):
        assert t.counts[l] == naive_saw_count(l, rooting)


def test_submultiplicative_and_growth():
    t = saw_table(20)
    assert t.submultiplicative_violations() == []
    assert min(t.growth(l) for l in range(1, 21)) >= 2.638
    assert t.growth(20) > MU_REF


def test_boundary_walks_are_fewer():
    o, b = saw_table(20), saw_table(20, BOUNDARY)
    assert all(b.counts[l] <= o.counts[l] for l in range(21))
    # mirror symmetry: even counts past length 0
    assert all(c % 2 == 0 for c in b.counts[1:])


def test_caps():
    with pytest.raises(BudgetExceeded):
        count_saw(25)
    with pytest.raises(BudgetExceeded):
        saw_table(21)
    with pytest.raises(ValueError):
        count_saw(-1)


def test_csv():
    text = saw_table(3).to_csv()
    assert text.splitlines()[0] == "l,c_l,c_l^(1/l)"
    assert text.splitlines()[2].startswith("1,4,4")


def test_bound_decays_in_afe_phase():
    p = WeightParams(1, 1, 3)
    for exact in (False, True):
        vals = [peierls_upper_bound(n, p, use_exact_saw=exact).value for n in range(8, 14)]
        assert all(b < a for a, b in zip(vals, vals[1:]))


def test_bound_small_n_not_monotone():
    # the polynomial prefactor beats (MU_HAT/3)^n up to n = 8
    p = WeightParams(1, 1, 3)
    vals = [peierls_upper_bound(n, p, use_exact_saw=False).value for n in range(1, 9)]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_bound_at_threshold_does_not_decay():
    p = WeightParams(1, 1, MU_HAT)
    vals = [peierls_upper_bound(n, p, use_exact_saw=False).value for n in range(2, 10)]
    assert all(b / a >= 0.99 for a, b in zip(vals, vals[1:]))


def test_sharp_below_plain():
    p = WeightParams(1, 1, 3)
    for n in range(1, 6):
        b = peierls_upper_bound(n, p)
        assert b.sharp <= b.plain and b.value == b.sharp
        assert set(b.to_dict()) == {"n", "a", "b", "c", "B_plain", "B_sharp"}


def test_fault_mass_small():
    sp = enumerate_states(build_lattice(1))
    mask = fault_states(sp)
    direct = [any(find_almost_fault_line(s, d) is not None for d in Direction) for s in sp.states]
    assert mask.tolist() == direct
    m = fault_mass_exact(sp, WeightParams(1, 1, 3), mask)
    assert 0 <= m <= 1


def test_fault_mass_ordering(space3):
    mask = fault_states(space3)
    hi, lo = fault_mass_exact(space3, WeightParams(1, 1, 1), mask), fault_mass_exact(space3, WeightParams(1, 1, 3), mask)
    assert 0 <= lo < hi <= 1


@pytest.mark.parametrize("abc", [(1, 1, 3), (1, 1, 4), (1, 2, 6)])
def test_mass_below_bound(space2, space3, abc):
    p = WeightParams(*abc)
    for sp in (space2, space3):
        assert fault_mass_exact(sp, p) <= peierls_upper_bound(sp.geom.n, p).value


def test_no_fault_states_edge_case():
    sp = enumerate_states(build_lattice(2))
    assert fault_mass_exact(sp, WeightParams(1, 1, 3), np.zeros(sp.num_perfect, dtype=bool)) == 0.0
