"""Square-lattice regions, the shifted diagonal lattice and the medial graph.

Coordinates are ``(row, col)`` with row 0 at the top.  For the free boundary
the vertex grid is ``(n+2) x (n+2)``: rows/cols ``1..n`` are internal, the
outer ring holds boundary vertices (degree 1, the four corners degree 0).
On the torus the grid is ``n x n`` and every vertex is internal.

Each real edge carries a *canonical direction*: rightward for horizontal
edges, upward for vertical ones.  The canonical tail of a vertical edge is
therefore its lower endpoint.  Around every vertex the incident edges are
listed in the fixed rotational order (left, top, right, bottom).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import cached_property, lru_cache

import numpy as np

from .errors import UnsupportedGeometry

__all__ = [
    "BoundaryCondition",
    "LatticeGeometry",
    "DiagonalLattice",
    "MedialGraph",
    "build_lattice",
    "build_diagonal_lattice",
    "build_medial_graph",
    "HORIZONTAL",
    "VERTICAL",
    "SLOT_NAMES",
]

HORIZONTAL = 0
VERTICAL = 1

# rotational slot order at a vertex
SLOT_L, SLOT_T, SLOT_R, SLOT_B = range(4)
SLOT_NAMES = ("left", "top", "right", "bottom")

# face sides, clockwise from the top
SIDE_TOP, SIDE_RIGHT, SIDE_BOTTOM, SIDE_LEFT = range(4)

# diagonal kinds: BACK is "\" (NW-SE), FWD is "/" (NE-SW)
BACK, FWD = 0, 1

# face ports, clockwise from NW
PORT_NW, PORT_NE, PORT_SE, PORT_SW = range(4)
PORT_DISP = ((-1, -1), (-1, 1), (1, 1), (1, -1))


class BoundaryCondition(str, Enum):
    FREE = "free"
    PERIODIC = "periodic"

    @classmethod
    def parse(cls, value) -> "BoundaryCondition":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown boundary condition {value!r}") from None


def _frozen(a) -> np.ndarray:
    a = np.asarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class LatticeGeometry:
    """Indexed vertices, edges and faces of the region.

    Real edges are ``0..num_edges-1``; virtual edges (free boundary only)
    are numbered after them and never carry an orientation.
    """

    n: int
    bc: BoundaryCondition
    side: int
    vertex_rc: np.ndarray
    vertex_internal: np.ndarray
    internal_vertices: np.ndarray
    internal_index: np.ndarray
    edge_tail: np.ndarray
    edge_head: np.ndarray
    edge_axis: np.ndarray
    edge_anchor: np.ndarray
    virtual_edges: np.ndarray
    vertex_slots: np.ndarray
    slot_is_head: np.ndarray
    face_rc: np.ndarray
    face_edges: np.ndarray
    face_virtual: np.ndarray
    face_corners: np.ndarray
    odd_torus: bool

    @property
    def periodic(self) -> bool:
        return self.bc is BoundaryCondition.PERIODIC

    @property
    def num_vertices(self) -> int:
        return len(self.vertex_rc)

    @property
    def num_internal(self) -> int:
        return len(self.internal_vertices)

    @property
    def num_edges(self) -> int:
        return len(self.edge_tail)

    @property
    def num_faces(self) -> int:
        return len(self.face_rc)

    def vertex_id(self, r: int, c: int) -> int:
        if self.periodic:
            return (r % self.n) * self.n + (c % self.n)
        return r * self.side + c

    def edge_id(self, axis: int, r: int, c: int) -> int:
        """Real edge anchored (top/left endpoint) at ``(r, c)``, or -1."""
        return _edge_index(self.n, self.periodic, axis, r, c)

    def face_id(self, i: int, j: int) -> int:
        if self.periodic:
            return (i % self.n) * self.n + (j % self.n)
        return i * (self.n + 1) + j

    def edge_endpoints(self, e: int) -> tuple[int, int]:
        return int(self.edge_tail[e]), int(self.edge_head[e])

    # boundary sides (free only): real edges touching the given side
    @cached_property
    def boundary_edges(self) -> dict[str, np.ndarray]:
        if self.periodic:
            empty = _frozen(np.zeros(0, dtype=np.int64))
            return {k: empty for k in ("left", "right", "top", "bottom")}
        n = self.n
        left = [self.edge_id(HORIZONTAL, r, 0) for r in range(1, n + 1)]
        right = [self.edge_id(HORIZONTAL, r, n) for r in range(1, n + 1)]
        top = [self.edge_id(VERTICAL, 0, c) for c in range(1, n + 1)]
        bottom = [self.edge_id(VERTICAL, n, c) for c in range(1, n + 1)]
        return {
            "left": _frozen(np.array(left, dtype=np.int64)),
            "right": _frozen(np.array(right, dtype=np.int64)),
            "top": _frozen(np.array(top, dtype=np.int64)),
            "bottom": _frozen(np.array(bottom, dtype=np.int64)),
        }

    @cached_property
    def boundary_half_edges(self) -> np.ndarray:
        """``(edge, is_head)`` for every real half-edge sitting at a boundary vertex."""
        out = []
        for e in range(self.num_edges):
            if not self.vertex_internal[self.edge_tail[e]]:
                out.append((e, 0))
            if not self.vertex_internal[self.edge_head[e]]:
                out.append((e, 1))
        return _frozen(np.array(out, dtype=np.int64).reshape(-1, 2))

    @cached_property
    def diagonal(self) -> "DiagonalLattice":
        return build_diagonal_lattice(self)

    @cached_property
    def medial(self) -> "MedialGraph":
        return build_medial_graph(self)

    def to_dict(self) -> dict:
        """Plain-JSON view used by ``icebox geom``."""
        vertices = [
            {"id": v, "rc": [int(r), int(c)], "internal": bool(self.vertex_internal[v])}
            for v, (r, c) in enumerate(self.vertex_rc)
        ]
        edges = [
            {
                "id": e,
                "tail": int(self.edge_tail[e]),
                "head": int(self.edge_head[e]),
                "axis": "horizontal" if self.edge_axis[e] == HORIZONTAL else "vertical",
                "real": True,
            }
            for e in range(self.num_edges)
        ]
        for k, (u, w) in enumerate(self.virtual_edges):
            edges.append(
                {"id": self.num_edges + k, "tail": int(u), "head": int(w), "real": False}
            )
        faces = [
            {
                "id": f,
                "rc": [int(i), int(j)],
                "edges": [int(x) for x in self.face_edges[f]],
                "virtual": [int(x) for x in self.face_virtual[f]],
                "corners": [int(x) for x in self.face_corners[f]],
            }
            for f, (i, j) in enumerate(self.face_rc)
        ]
        return {
            "n": self.n,
            "bc": self.bc.value,
            "odd_torus": self.odd_torus,
            "vertices": vertices,
            "edges": edges,
            "faces": faces,
        }


def _edge_index(n: int, periodic: bool, axis: int, r: int, c: int) -> int:
    if periodic:
        r, c = r % n, c % n
        return (r * n + c) if axis == HORIZONTAL else n * n + r * n + c
    if axis == HORIZONTAL:
        if 1 <= r <= n and 0 <= c <= n:
            return (r - 1) * (n + 1) + c
        return -1
    if 0 <= r <= n and 1 <= c <= n:
        return n * (n + 1) + r * n + (c - 1)
    return -1


@lru_cache(maxsize=64)
def _build(n: int, bc: BoundaryCondition) -> LatticeGeometry:
    periodic = bc is BoundaryCondition.PERIODIC
    side = n if periodic else n + 2

    rc = np.array([(r, c) for r in range(side) for c in range(side)], dtype=np.int64)
    if periodic:
        internal = np.ones(len(rc), dtype=bool)
    else:
        internal = (rc[:, 0] >= 1) & (rc[:, 0] <= n) & (rc[:, 1] >= 1) & (rc[:, 1] <= n)
    internal_vertices = np.flatnonzero(internal)
    internal_index = np.full(len(rc), -1, dtype=np.int64)
    internal_index[internal_vertices] = np.arange(len(internal_vertices))

    def vid(r, c):
        if periodic:
            return (r % n) * n + (c % n)
        return r * side + c

    # real edges: all horizontal (row-major by anchor), then all vertical
    tails, heads, axes, anchors = [], [], [], []
    if periodic:
        h_anchors = [(r, c) for r in range(n) for c in range(n)]
        v_anchors = [(r, c) for r in range(n) for c in range(n)]
    else:
        h_anchors = [(r, c) for r in range(1, n + 1) for c in range(n + 1)]
        v_anchors = [(r, c) for r in range(n + 1) for c in range(1, n + 1)]
    for r, c in h_anchors:
        tails.append(vid(r, c))
        heads.append(vid(r, c + 1))
        axes.append(HORIZONTAL)
        anchors.append((r, c))
    for r, c in v_anchors:
        tails.append(vid(r + 1, c))  # canonical direction is upward
        heads.append(vid(r, c))
        axes.append(VERTICAL)
        anchors.append((r, c))
    m = len(tails)

    virtual = []
    vindex = {}
    if not periodic:
        for j in range(n + 1):
            vindex[(HORIZONTAL, 0, j)] = len(virtual)
            virtual.append((vid(0, j), vid(0, j + 1)))
            vindex[(HORIZONTAL, n + 1, j)] = len(virtual)
            virtual.append((vid(n + 1, j), vid(n + 1, j + 1)))
        for i in range(n + 1):
            vindex[(VERTICAL, i, 0)] = len(virtual)
            virtual.append((vid(i + 1, 0), vid(i, 0)))
            vindex[(VERTICAL, i, n + 1)] = len(virtual)
            virtual.append((vid(i + 1, n + 1), vid(i, n + 1)))

    def eid(axis, r, c):
        return _edge_index(n, periodic, axis, r, c)

    def edge_or_virtual(axis, r, c):
        e = eid(axis, r, c)
        if e >= 0:
            return e, -1
        return -1, m + vindex[(axis, r, c)]

    slots = np.full((len(rc), 4), -1, dtype=np.int64)
    is_head = np.zeros((len(rc), 4), dtype=bool)
    for v in internal_vertices:
        r, c = rc[v]
        slots[v] = (
            eid(HORIZONTAL, r, c - 1),
            eid(VERTICAL, r - 1, c),
            eid(HORIZONTAL, r, c),
            eid(VERTICAL, r, c),
        )
        # left edge ends here; top edge starts here (upward); right starts; bottom ends
        is_head[v] = (True, False, False, True)
    if not periodic:
        # boundary vertices: the single real edge goes into the slot facing inward
        for e in range(m):
            for end, v in ((0, tails[e]), (1, heads[e])):
                if internal[v]:
                    continue
                r, c = rc[v]
                if axes[e] == HORIZONTAL:
                    slot = SLOT_R if c == 0 else SLOT_L
                else:
                    slot = SLOT_B if r == 0 else SLOT_T
                slots[v, slot] = e
                is_head[v, slot] = bool(end)

    nf = n if periodic else n + 1
    face_rc = np.array([(i, j) for i in range(nf) for j in range(nf)], dtype=np.int64)
    face_edges = np.full((len(face_rc), 4), -1, dtype=np.int64)
    face_virtual = np.full((len(face_rc), 4), -1, dtype=np.int64)
    face_corners = np.zeros((len(face_rc), 4), dtype=np.int64)
    for f, (i, j) in enumerate(face_rc):
        sides = (
            (HORIZONTAL, i, j),
            (VERTICAL, i, j + 1),
            (HORIZONTAL, i + 1, j),
            (VERTICAL, i, j),
        )
        for s, key in enumerate(sides):
            if periodic:
                face_edges[f, s] = eid(*key)
            else:
                face_edges[f, s], face_virtual[f, s] = edge_or_virtual(*key)
        face_corners[f] = (vid(i, j), vid(i, j + 1), vid(i + 1, j + 1), vid(i + 1, j))

    return LatticeGeometry(
        n=n,
        bc=bc,
        side=side,
        vertex_rc=_frozen(rc),
        vertex_internal=_frozen(internal),
        internal_vertices=_frozen(internal_vertices),
        internal_index=_frozen(internal_index),
        edge_tail=_frozen(np.array(tails, dtype=np.int64)),
        edge_head=_frozen(np.array(heads, dtype=np.int64)),
        edge_axis=_frozen(np.array(axes, dtype=np.int64)),
        edge_anchor=_frozen(np.array(anchors, dtype=np.int64)),
        virtual_edges=_frozen(np.array(virtual, dtype=np.int64).reshape(-1, 2)),
        vertex_slots=_frozen(slots),
        slot_is_head=_frozen(is_head),
        face_rc=_frozen(face_rc),
        face_edges=_frozen(face_edges),
        face_virtual=_frozen(face_virtual),
        face_corners=_frozen(face_corners),
        odd_torus=bool(periodic and n % 2 == 1),
    )


def build_lattice(n: int, bc="free") -> LatticeGeometry:
    """Build (or fetch from cache) the region with side ``n``.

    A torus with odd ``n`` builds fine but has ``odd_torus`` set: it has no
    pair of all-``c`` ground states, so analyses that need them refuse it.
    """
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise ValueError(f"side length must be a positive integer, got {n!r}")
    return _build(int(n), BoundaryCondition.parse(bc))


@dataclass(frozen=True, eq=False)
class DiagonalLattice:
    """The lattice of face centres, joined by diagonals through internal vertices.

    Vertex ``f`` of this lattice is the centre of face ``f`` of the region.
    Edge ``2k`` is the ``\\`` diagonal and ``2k+1`` the ``/`` diagonal through
    internal vertex number ``k``.  ``edge_ends[d]`` lists the upper endpoint
    first and ``edge_disp[d]`` is the (row, col) step from it to the lower one.
    """

    geom: LatticeGeometry
    vertex_rc: np.ndarray
    sublattice: np.ndarray
    on_top: np.ndarray
    on_bottom: np.ndarray
    on_left: np.ndarray
    on_right: np.ndarray
    edge_ends: np.ndarray
    edge_vertex: np.ndarray
    edge_kind: np.ndarray
    edge_sublattice: np.ndarray
    edge_disp: np.ndarray
    ports: np.ndarray
    diag_at_vertex: np.ndarray

    @property
    def num_vertices(self) -> int:
        return len(self.vertex_rc)

    @property
    def num_edges(self) -> int:
        return len(self.edge_ends)

    def boundary_mask(self, side: str) -> np.ndarray:
        return {"top": self.on_top, "bottom": self.on_bottom,
                "left": self.on_left, "right": self.on_right}[side]

    def neighbors(self, f: int):
        """Yield ``(edge, other_face, port)`` for every diagonal at face ``f``."""
        for port in range(4):
            d = self.ports[f, port]
            if d < 0:
                continue
            a, b = self.edge_ends[d]
            yield int(d), int(b if port in (PORT_SE, PORT_SW) else a), port

    def center(self, f: int) -> tuple[float, float]:
        i, j = self.vertex_rc[f]
        return float(i) + 0.5, float(j) + 0.5


def build_diagonal_lattice(geom: LatticeGeometry) -> DiagonalLattice:
    n = geom.n
    F = geom.num_faces
    face_rc = geom.face_rc
    sub = (face_rc[:, 0] + face_rc[:, 1]) % 2
    if geom.periodic:
        z = np.zeros(F, dtype=bool)
        top = bottom = left = right = z
    else:
        top = face_rc[:, 0] == 0
        bottom = face_rc[:, 0] == n
        left = face_rc[:, 1] == 0
        right = face_rc[:, 1] == n

    nint = geom.num_internal
    ends = np.zeros((2 * nint, 2), dtype=np.int64)
    vert = np.zeros(2 * nint, dtype=np.int64)
    kind = np.zeros(2 * nint, dtype=np.int64)
    disp = np.zeros((2 * nint, 2), dtype=np.int64)
    ports = np.full((F, 4), -1, dtype=np.int64)
    at_vertex = np.full((geom.num_vertices, 2), -1, dtype=np.int64)
    for k, v in enumerate(geom.internal_vertices):
        r, c = geom.vertex_rc[v]
        nw = geom.face_id(r - 1, c - 1)
        ne = geom.face_id(r - 1, c)
        se = geom.face_id(r, c)
        sw = geom.face_id(r, c - 1)
        d0, d1 = 2 * k, 2 * k + 1
        ends[d0] = (nw, se)
        ends[d1] = (ne, sw)
        vert[d0] = vert[d1] = v
        kind[d0], kind[d1] = BACK, FWD
        disp[d0] = (1, 1)
        disp[d1] = (1, -1)
        # seen from each face, the diagonal leaves through the port facing v
        ports[se, PORT_NW] = d0
        ports[nw, PORT_SE] = d0
        ports[sw, PORT_NE] = d1
        ports[ne, PORT_SW] = d1
        at_vertex[v] = (d0, d1)
    esub = sub[ends[:, 0]]
    return DiagonalLattice(
        geom=geom,
        vertex_rc=geom.face_rc,
        sublattice=_frozen(sub),
        on_top=_frozen(top),
        on_bottom=_frozen(bottom),
        on_left=_frozen(left),
        on_right=_frozen(right),
        edge_ends=_frozen(ends),
        edge_vertex=_frozen(vert),
        edge_kind=_frozen(kind),
        edge_sublattice=_frozen(esub),
        edge_disp=_frozen(disp),
        ports=_frozen(ports),
        diag_at_vertex=_frozen(at_vertex),
    )


@dataclass(frozen=True, eq=False)
class MedialGraph:
    """Vertices are real edges; edges join rotationally adjacent pairs.

    Medial edge ``4k+q`` sits at internal vertex ``k`` and joins slots
    ``(q, q+1 mod 4)`` of the order (left, top, right, bottom).  The pairs
    (left, top) and (right, bottom) are cut by the ``\\`` diagonal, the other
    two by ``/``.
    """

    geom: LatticeGeometry
    edge_ends: np.ndarray
    edge_vertex: np.ndarray
    edge_cut_by: np.ndarray
    on_left: np.ndarray
    on_right: np.ndarray
    on_top: np.ndarray
    on_bottom: np.ndarray
    adjacency: tuple

    @property
    def num_vertices(self) -> int:
        return self.geom.num_edges

    @property
    def num_edges(self) -> int:
        return len(self.edge_ends)

    def side_mask(self, side: str) -> np.ndarray:
        return {"top": self.on_top, "bottom": self.on_bottom,
                "left": self.on_left, "right": self.on_right}[side]


def build_medial_graph(geom: LatticeGeometry) -> MedialGraph:
    m = geom.num_edges
    nint = geom.num_internal
    ends = np.zeros((4 * nint, 2), dtype=np.int64)
    vert = np.zeros(4 * nint, dtype=np.int64)
    cut = np.zeros(4 * nint, dtype=np.int64)
    adj = [[] for _ in range(m)]
    for k, v in enumerate(geom.internal_vertices):
        s = geom.vertex_slots[v]
        for q in range(4):
            x = 4 * k + q
            a, b = int(s[q]), int(s[(q + 1) % 4])
            ends[x] = (a, b)
            vert[x] = v
            cut[x] = 2 * k + (BACK if q in (0, 2) else FWD)
            adj[a].append((b, x))
            adj[b].append((a, x))
    masks = {}
    for side in ("left", "right", "top", "bottom"):
        mask = np.zeros(m, dtype=bool)
        mask[geom.boundary_edges[side]] = True
        masks[side] = _frozen(mask)
    return MedialGraph(
        geom=geom,
        edge_ends=_frozen(ends),
        edge_vertex=_frozen(vert),
        edge_cut_by=_frozen(cut),
        on_left=masks["left"],
        on_right=masks["right"],
        on_top=masks["top"],
        on_bottom=masks["bottom"],
        adjacency=tuple(tuple(a) for a in adj),
    )


def require_free(geom: LatticeGeometry, what: str) -> None:
    if geom.periodic:
        raise UnsupportedGeometry(f"{what} needs the free boundary condition")
