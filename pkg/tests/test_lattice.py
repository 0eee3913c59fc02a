from collections import deque

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from icebox.lattice import build_lattice, HORIZONTAL, VERTICAL


@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_free_counts(n):
    g = build_lattice(n)
    assert g.num_vertices == (n + 2) ** 2
    assert g.num_internal == n * n
    assert g.num_edges == 2 * n * (n + 1)
    assert g.num_faces == (n + 1) ** 2


@pytest.mark.parametrize("n", [1, 2, 4])
def test_periodic_counts(n):
    g = build_lattice(n, "periodic")
    assert g.num_vertices == g.num_internal == n * n
    assert g.num_edges == 2 * n * n
    assert g.num_faces == n * n
    assert (g.face_edges >= 0).all()


def test_smallest_free_region():
    g = build_lattice(1)
    assert g.num_internal == 1 and g.num_edges == 4
    real = [(row >= 0).any() for row in g.face_edges]
    assert sum(real) == 4


def test_build_is_cached():
    assert build_lattice(3) is build_lattice(3, "free")


@pytest.mark.parametrize("bad", [0, -1, 1.5, True])
def test_bad_side(bad):
    with pytest.raises(ValueError):
        build_lattice(bad)


@pytest.mark.parametrize("bc", ["free", "periodic"])
@given(n=st.integers(1, 6))
@settings(max_examples=12, deadline=None)
def test_slots_are_incident(bc, n):
    if bc == "periodic" and n == 1:
        n = 2  # the 1x1 torus has self-loop edges
    g = build_lattice(n, bc)
    for v in g.internal_vertices:
        slots = g.vertex_slots[v]
        assert len(set(slots.tolist())) == 4
        for q, e in enumerate(slots):
            end = g.edge_head[e] if g.slot_is_head[v, q] else g.edge_tail[e]
            assert end == v
        # left/right slots horizontal, top/bottom vertical
        assert g.edge_axis[slots[0]] == g.edge_axis[slots[2]] == HORIZONTAL
        assert g.edge_axis[slots[1]] == g.edge_axis[slots[3]] == VERTICAL


def test_boundary_vertices_have_degree_one():
    g = build_lattice(3)
    deg = np.bincount(np.concatenate([g.edge_tail, g.edge_head]), minlength=g.num_vertices)
    for v in range(g.num_vertices):
        r, c = g.vertex_rc[v]
        corner = r in (0, 4) and c in (0, 4)
        if g.vertex_internal[v]:
            assert deg[v] == 4
        else:
            assert deg[v] == (0 if corner else 1)


def _components(nodes, edges):
    adj = {x: set() for x in nodes}
    for a, b in edges:
        adj[a].add(b)
        adj[b].add(a)
    seen, comps = set(), []
    for x in nodes:
        if x in seen:
            continue
        comp, dq = set(), deque([x])
        seen.add(x)
        while dq:
            y = dq.popleft()
            comp.add(y)
            for z in adj[y] - seen:
                seen.add(z)
                dq.append(z)
        comps.append(comp)
    return comps


@pytest.mark.parametrize("n,bc", [(2, "free"), (3, "free"), (2, "periodic"), (4, "periodic")])
def test_diagonal_incidence(n, bc):
    g = build_lattice(n, bc)
    d = g.diagonal
    assert d.num_edges == 2 * g.num_internal
    for v in g.internal_vertices:
        d0, d1 = d.diag_at_vertex[v]
        assert d.edge_vertex[d0] == d.edge_vertex[d1] == v
        assert d.edge_sublattice[d0] != d.edge_sublattice[d1]
    for k, (a, b) in enumerate(d.edge_ends):
        assert d.sublattice[a] == d.sublattice[b]
        if not g.periodic:
            dr, dc = d.vertex_rc[b] - d.vertex_rc[a]
            assert abs(dr) == 1 and abs(dc) == 1


def test_diagonal_sublattices_connected():
    g = build_lattice(3)
    d = g.diagonal
    for s in (0, 1):
        nodes = [f for f in range(d.num_vertices) if d.sublattice[f] == s]
        edges = [tuple(e) for e in d.edge_ends if d.sublattice[e[0]] == s]
        assert len(_components(nodes, edges)) == 1


def test_medial_graph():
    g1 = build_lattice(1)
    m = g1.medial
    assert m.num_vertices == 4 and m.num_edges == 4
    assert all(len(a) == 2 for a in m.adjacency)
    assert build_lattice(2).medial.num_edges == 16
    m3 = build_lattice(3).medial
    assert m3.num_vertices == build_lattice(3).num_edges
    assert max(len(a) for a in m3.adjacency) <= 4


def test_medial_cut_labels():
    g = build_lattice(2)
    m, d = g.medial, g.diagonal
    for x in range(m.num_edges):
        assert d.edge_vertex[m.edge_cut_by[x]] == m.edge_vertex[x]


def test_geometry_is_frozen():
    g = build_lattice(2)
    with pytest.raises(ValueError):
        g.edge_tail[0] = 3


def test_to_dict_roundtrip_counts():
    g = build_lattice(2)
    d = g.to_dict()
    assert len(d["edges"]) == g.num_edges + len(g.virtual_edges)
    assert sum(e["real"] for e in d["edges"]) == 12
    assert len(d["faces"]) == 9
