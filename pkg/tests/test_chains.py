import math
from collections import Counter

import numpy as np
import pytest

from icebox.chains import (
    CAP_EXCEEDED, ChainKind, ChainState, MoveKind, directed_loop_neighbors, directed_loop_step,
    glauber_step, hitting_time, hitting_times, make_rng, neighbor_count, replica_seeds,
    run_trajectory, step,
)
from icebox.errors import NotIrreducible
from icebox.exact import transition_matrix
from icebox.lattice import build_lattice
from icebox.state import (
    RED, Configuration, WeightParams, edge_colors, is_eulerian, reference_state_green,
)
from icebox.topology import PartitionClass, classify, has_cross

P3 = WeightParams(1, 1, 3)


def test_cap_sentinel():
    assert not CAP_EXCEEDED
    assert repr(CAP_EXCEEDED) == "CapExceeded"
    assert ChainKind.parse("Loop") is ChainKind.DIRECTED_LOOP
    with pytest.raises(ValueError):
        ChainKind.parse("metropolis")


def test_replica_seeds_deterministic():
    a, b = replica_seeds(7, 5), replica_seeds(7, 5)
    assert a == b and len(set(a)) == 5
    assert replica_seeds(7, 6)[:5] == a


def test_bulk_flip_probability(space2):
    # bulk face of tau_G at n=2: every corner drops from c to a
    g = build_lattice(2)
    k = transition_matrix(space2, "glauber", P3)
    t = reference_state_green(g)
    f = g.face_id(1, 1)
    bits = t.bits.copy()
    for e in g.face_edges[f]:
        bits[e] ^= 1
    i, j = space2.id_of(t), space2.id_of(Configuration(g, bits))
    assert k.dense()[i, j] == pytest.approx(0.5 / g.num_faces / (1 + 3**4), rel=1e-12)


def test_uniform_heat_bath(space2):
    k = transition_matrix(space2, "glauber", WeightParams(1, 1, 1)).dense()
    off = k - np.diag(np.diag(k))
    vals = set(np.round(off[off > 0], 15))
    assert vals == {round(0.5 / 9 / 2, 15)}


def test_reject_on_inconsistent_face():
    g = build_lattice(3)
    t = reference_state_green(g)
    s = ChainState.start(t, 1)
    kinds = Counter()
    for _ in range(3000):
        out = glauber_step(s, P3, debug=True)
        kinds[out.move_kind] += 1
    assert kinds[MoveKind.LAZY] > 0 and kinds[MoveKind.REJECT] > 0
    assert is_eulerian(s.cfg)


def test_glauber_refuses_torus():
    g = build_lattice(2, "periodic")
    with pytest.raises(NotIrreducible):
        glauber_step(ChainState.start(reference_state_green(g), 0), P3)


@pytest.mark.parametrize("chain", ["glauber", "loop"])
def test_zero_steps_and_determinism(chain):
    g = build_lattice(3)
    t = reference_state_green(g)
    s, log = run_trajectory(ChainState.start(t, 5), 0, chain, P3)
    assert s.cfg == t and log == []
    a, _ = run_trajectory(ChainState.start(t, 5), 2000, chain, P3)
    b, _ = run_trajectory(ChainState.start(t, 5), 2000, chain, P3)
    assert a.cfg == b.cfg and a.step_count == 2000


def test_single_steps_match_bulk_run():
    g = build_lattice(4)
    t = reference_state_green(g)
    p = WeightParams(1, 1, 1.5)
    s1 = ChainState.start(t, 11)
    trail = []
    for _ in range(4000):
        glauber_step(s1, p)
        trail.append(s1.cfg.key)
    s2, log = run_trajectory(ChainState.start(t, 11), 4000, "glauber", p,
                             observer=lambda s: s.cfg.key, stride=1000)
    assert s1.cfg == s2.cfg
    assert log == [trail[i] for i in (999, 1999, 2999, 3999)]


def test_observer_stride():
    g = build_lattice(2)
    s = ChainState.start(reference_state_green(g), 0)
    _, log = run_trajectory(s, 250, "glauber", P3, observer=lambda s: s.step_count, stride=100)
    assert log == [100, 200, 250]


def test_loop_moves():
    g = build_lattice(2)
    s = ChainState.start(reference_state_green(g), 3)
    seen = Counter()
    for _ in range(20000):
        before = s.cfg
        out = directed_loop_step(s, WeightParams(1, 1, 1))
        seen[out.move_kind] += 1
        assert is_eulerian(s.cfg)
        if out.move_kind is MoveKind.DEFECT_CREATE:
            assert before.is_perfect and len(s.cfg.defects) == 2
            assert {p for _, p in s.cfg.defects} == {"toward", "away"}
        if out.move_kind is MoveKind.DEFECT_MERGE:
            assert not before.is_perfect and s.cfg.is_perfect
    for kind in (MoveKind.DEFECT_CREATE, MoveKind.DEFECT_SHIFT, MoveKind.DEFECT_MERGE):
        assert seen[kind] > 0


def test_neighbor_counts(space2_full):
    for s in space2_full.states[::41]:
        assert neighbor_count(s) == len(directed_loop_neighbors(s))
    t = reference_state_green(build_lattice(2))
    assert neighbor_count(t) == 8 * 4


def test_uniform_acceptance_equal_neighbors(space2_full):
    # at (1,1,1) a move between states with equal neighbour counts is never rejected
    k = transition_matrix(space2_full, "loop", WeightParams(1, 1, 1)).csr()
    for x in range(0, len(space2_full), 53):
        cx = space2_full.states[x]
        nx = neighbor_count(cx)
        for nb in directed_loop_neighbors(cx):
            y = space2_full.id_of(nb)
            if neighbor_count(nb) == nx:
                assert k[x, y] == pytest.approx(0.5 / nx, rel=1e-12)


def _empirical_row(space, chain, p, x, samples, seed):
    """Sample ``samples`` single steps from state ``x`` and count landing states."""
    base = space.states[x]
    rng = make_rng(seed)
    counts = Counter()
    for _ in range(samples):
        s = ChainState(base.copy(), 0, rng)
        step(s, chain, p)
        counts[space.id_of(s.cfg)] += 1
    return counts


@pytest.mark.parametrize("chain,samples", [("glauber", 200_000), ("loop", 60_000)])
def test_sampler_matches_kernel(space2_full, chain, samples):
    p = WeightParams(1, 2, 3)
    k = transition_matrix(space2_full, chain, p)
    for x in (0, 17):
        row = k.row(x)
        counts = _empirical_row(space2_full, chain, p, x, samples, seed=99 + x)
        assert set(counts) <= set(np.flatnonzero(row))
        for y in np.flatnonzero(row):
            q = row[y]
            z = (counts[y] - samples * q) / math.sqrt(samples * q * (1 - q) + 1e-300)
            assert abs(z) < 5, (chain, x, y, counts[y], samples * q)


def test_hitting_time_zero_when_started_inside():
    g = build_lattice(3)
    red = Configuration(g, 1 - reference_state_green(g).bits)
    assert hitting_time(red, "red_cross", 100, "glauber", P3, seed=0) == 0
    assert hitting_time(red, lambda c: True, 100, "loop", P3, seed=0) == 0


def test_hitting_time_small_disordered():
    g = build_lattice(2)
    t = hitting_time(reference_state_green(g), "red_cross", 10**6, "glauber", WeightParams(1, 1, 1), seed=4)
    assert t is not CAP_EXCEEDED and t > 0


def test_compiled_target_matches_predicate():
    g = build_lattice(3)
    t = reference_state_green(g)
    pred = lambda c: has_cross(c, RED)
    for seed in range(4):
        a = hitting_time(t, "red_cross", 10**5, "glauber", P3, seed, stride=10)
        b = hitting_time(t, pred, 10**5, "glauber", P3, seed, stride=10)
        assert a == b


def test_cap_exceeded():
    g = build_lattice(6)
    r = hitting_time(reference_state_green(g), "red_cross", 1000, "glauber", P3, seed=0)
    assert r is CAP_EXCEEDED


def test_loop_hits_on_torus():
    g = build_lattice(2, "periodic")
    r = hitting_time(reference_state_green(g), "red_cross", 10**5, "loop", WeightParams(1, 1, 1), seed=2)
    assert r is not CAP_EXCEEDED


def test_replicas_ordered_and_thread_independent():
    g = build_lattice(3)
    t = reference_state_green(g)
    a = hitting_times(t, "red_cross", 10**5, "glauber", P3, seed=8, replicas=6, stride=10)
    b = hitting_times(t, "red_cross", 10**5, "glauber", P3, seed=8, replicas=6, stride=10, workers=1)
    assert a == b
    assert [i for i, _, _ in a] == list(range(6))


@pytest.mark.slow
def test_metastable_green_cross():
    # n=8 at (1,1,3) escapes within ~2e4 steps, so pin a deeper point of the phase
    g = build_lattice(12)
    s, _ = run_trajectory(ChainState.start(reference_state_green(g), 2024), 10**6, "glauber",
                          WeightParams(1, 1, 5))
    assert classify(s.cfg) is PartitionClass.GREEN_CROSS
    assert (edge_colors(s.cfg) == RED).sum() < g.num_edges // 2
