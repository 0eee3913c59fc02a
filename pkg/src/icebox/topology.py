"""Bridges, crosses, fault lines and the Peierls reversal map.

Colours are relative to the green reference state.  Diagonal paths live on
the face-centre lattice (:class:`~icebox.lattice.DiagonalLattice`): path
vertices are face ids and path edges are diagonal ids.  For near-perfect
states the two straight segments across the defect edges get labels
``num_diagonals + defect_edge``.

Directions follow one convention throughout: a *horizontal* bridge or fault
line joins the left and right sides, a *vertical* one joins top and bottom.
A vertical fault line therefore rules out horizontal bridges.
"""

from __future__ import annotations

import enum
import json
from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import InvalidWitness, UnsupportedGeometry
from .lattice import (
    HORIZONTAL,
    PORT_NE,
    PORT_NW,
    PORT_SE,
    PORT_SW,
    SLOT_B,
    SLOT_L,
    SLOT_R,
    SLOT_T,
    VERTICAL,
    BoundaryCondition,
    LatticeGeometry,
    require_free,
)
from .state import (
    GREEN,
    RED,
    Configuration,
    ground_state_bits,
    half_edge_colors,
    is_eulerian,
)

__all__ = [
    "Direction",
    "PartitionClass",
    "Bridge",
    "LtauGraph",
    "FaultPath",
    "slot_colors",
    "has_bridge",
    "find_bridge",
    "has_cross",
    "build_L_tau",
    "M_tau",
    "find_fault_line",
    "fault_line_exists",
    "canonical_fault_line",
    "find_almost_fault_line",
    "canonical_almost_fault_line",
    "canonical_path",
    "is_fault_line",
    "is_almost_fault_line",
    "classify",
    "one_flip_neighbors",
    "is_one_flip_from_CG",
    "left_side_edges",
    "peierls_map",
    "has_homology_cross",
    "torus_cross_and_cycles",
]


class Direction(str, enum.Enum):
    HORIZONTAL = "horizontal"
    VERTICAL = "vertical"

    @classmethod
    def parse(cls, value) -> "Direction":
        if isinstance(value, cls):
            return value
        return cls(str(value).lower())

    @property
    def other(self) -> "Direction":
        return Direction.VERTICAL if self is Direction.HORIZONTAL else Direction.HORIZONTAL


class PartitionClass(str, enum.Enum):
    GREEN_CROSS = "GreenCross"
    RED_CROSS = "RedCross"
    FAULT_LINE = "FaultLine"


def _sides(direction: Direction) -> tuple[str, str]:
    return ("left", "right") if direction is Direction.HORIZONTAL else ("top", "bottom")


def _color_value(color) -> int:
    if isinstance(color, str):
        return {"green": GREEN, "red": RED}[color.lower()]
    return int(color)


# ---------------------------------------------------------------------------
# colours and bridges

def slot_colors(cfg: Configuration) -> np.ndarray:
    """``(V, 4)`` colours of the half-edges at each vertex in slot order; -1 when empty."""
    geom = cfg.geom
    hc = half_edge_colors(cfg)
    slots = geom.vertex_slots
    out = np.full(slots.shape, -1, dtype=np.int64)
    ok = slots >= 0
    out[ok] = hc[slots[ok], geom.slot_is_head[ok].astype(np.int64)]
    return out


@dataclass(frozen=True)
class Bridge:
    color: int
    direction: Direction
    edges: tuple

    def to_json(self) -> str:
        return json.dumps({"color": "green" if self.color == GREEN else "red",
                           "direction": self.direction.value, "edges": list(self.edges)})


def find_bridge(cfg: Configuration, color, direction) -> Bridge | None:
    """Shortest monochromatic path of real edges between opposite boundary sides."""
    geom = cfg.geom
    require_free(geom, "bridges")
    color = _color_value(color)
    direction = Direction.parse(direction)
    start, goal = _sides(direction)
    col = (cfg.bits == ground_state_bits(geom)).astype(np.int64)
    if cfg.defects:
        raise ValueError("bridges are defined for perfect states")
    goal_set = set(int(e) for e in geom.boundary_edges[goal])
    adj = geom.medial.adjacency
    parent = {}
    q = deque()
    for e in geom.boundary_edges[start]:
        e = int(e)
        if col[e] == color:
            parent[e] = -1
            q.append(e)
    while q:
        e = q.popleft()
        if e in goal_set:
            path = [e]
            while parent[path[-1]] >= 0:
                path.append(parent[path[-1]])
            return Bridge(color, direction, tuple(reversed(path)))
        for g, _ in adj[e]:
            if g not in parent and col[g] == color:
                parent[g] = e
                q.append(g)
    return None


def has_bridge(cfg: Configuration, color, direction) -> bool:
    return find_bridge(cfg, color, direction) is not None


def has_cross(cfg: Configuration, color) -> bool:
    return (has_bridge(cfg, color, Direction.HORIZONTAL)
            and has_bridge(cfg, color, Direction.VERTICAL))


def M_tau(cfg: Configuration) -> np.ndarray:
    """Ids of medial edges whose two underlying edges have the same colour."""
    med = cfg.geom.medial
    col = (cfg.bits == ground_state_bits(cfg.geom)).astype(np.int64)
    a, b = med.edge_ends[:, 0], med.edge_ends[:, 1]
    return np.flatnonzero(col[a] == col[b])


# ---------------------------------------------------------------------------
# L_tau

@dataclass(frozen=True, eq=False)
class LtauGraph:
    """Diagonals (and defect segments) separating green from red half-edges."""

    geom: LatticeGeometry
    diagonals: tuple
    segments: tuple  # (defect_edge, face_a, face_b, (dr, dc))
    adjacency: tuple  # per face: ((label, other_face, (dr, dc)), ...)

    @property
    def labels(self) -> frozenset:
        D = self.geom.diagonal.num_edges
        return frozenset(self.diagonals) | frozenset(D + s[0] for s in self.segments)

    def degree(self, f: int) -> int:
        return len(self.adjacency[f])

    def __contains__(self, label) -> bool:
        return label in self.labels


def _edge_faces(geom: LatticeGeometry, e: int):
    """The two faces on either side of real edge ``e`` and the step between them."""
    r, c = geom.edge_anchor[e]
    if geom.edge_axis[e] == HORIZONTAL:
        return geom.face_id(r - 1, c), geom.face_id(r, c), (1, 0)
    return geom.face_id(r, c - 1), geom.face_id(r, c), (0, 1)


def _ltau_diagonals(geom: LatticeGeometry, sc: np.ndarray) -> list:
    out = []
    diag = geom.diagonal
    for k, v in enumerate(geom.internal_vertices):
        L, T, R, B = sc[v, SLOT_L], sc[v, SLOT_T], sc[v, SLOT_R], sc[v, SLOT_B]
        if L == T and R == B and L != R:
            out.append(int(diag.diag_at_vertex[v, 1]))  # "/" separates (L,T) from (R,B)
        elif T == R and B == L and T != B:
            out.append(int(diag.diag_at_vertex[v, 0]))
    return out


def build_L_tau(cfg: Configuration) -> LtauGraph:
    geom = cfg.geom
    diag = geom.diagonal
    ds = _ltau_diagonals(geom, slot_colors(cfg))
    adj = [[] for _ in range(geom.num_faces)]
    for d in ds:
        a, b = (int(x) for x in diag.edge_ends[d])
        dr, dc = (int(x) for x in diag.edge_disp[d])
        adj[a].append((d, b, (dr, dc)))
        adj[b].append((d, a, (-dr, -dc)))
    segs = []
    D = diag.num_edges
    for e, _ in cfg.defects:
        a, b, (dr, dc) = _edge_faces(geom, e)
        segs.append((e, a, b, (dr, dc)))
        adj[a].append((D + e, b, (dr, dc)))
        adj[b].append((D + e, a, (-dr, -dc)))
    adj = tuple(tuple(sorted(x)) for x in adj)
    return LtauGraph(geom, tuple(sorted(ds)), tuple(segs), adj)


# ---------------------------------------------------------------------------
# fault paths

@dataclass(frozen=True)
class FaultPath:
    """A path of face centres; ``missing`` lists positions of edges not in L_tau."""

    faces: tuple
    edges: tuple
    direction: Direction | None
    missing: tuple = ()
    winding: tuple | None = None

    @property
    def length(self) -> int:
        return len(self.edges)

    @property
    def missing_count(self) -> int:
        return len(self.missing)

    def to_dict(self, geom: LatticeGeometry | None = None) -> dict:
        d = {
            "direction": None if self.direction is None else self.direction.value,
            "faces": list(self.faces),
            "edges": list(self.edges),
            "missing": list(self.missing),
        }
        if self.winding is not None:
            d["winding"] = list(self.winding)
        if geom is not None:
            diag = geom.diagonal
            d["points"] = [list(diag.center(f)) for f in self.faces]
        return d

    def to_json(self, geom: LatticeGeometry | None = None) -> str:
        return json.dumps(self.to_dict(geom))


def _ring(geom: LatticeGeometry, side: str) -> np.ndarray:
    return geom.diagonal.boundary_mask(side)


def _path_from_parents(parent, end):
    faces, edges = [end[0]], []
    node = end
    while parent[node] is not None:
        prev, label = parent[node]
        edges.append(label)
        faces.append(prev[0])
        node = prev
    return faces[::-1], edges[::-1]


def _bfs_path(lt: LtauGraph, direction: Direction, allowed=None):
    """Shortest path in L_tau (optionally restricted to ``allowed`` labels) across the region."""
    geom = lt.geom
    s, t = _sides(direction)
    start, goal = _ring(geom, s), _ring(geom, t)
    parent = {}
    q = deque()
    for f in np.flatnonzero(start):
        node = (int(f), 0)
        parent[node] = None
        q.append(node)
    while q:
        node = q.popleft()
        f = node[0]
        if goal[f]:
            faces, edges = _path_from_parents(parent, node)
            return FaultPath(tuple(faces), tuple(edges), direction)
        for label, g, _ in lt.adjacency[f]:
            if allowed is not None and label not in allowed:
                continue
            nxt = (g, 0)
            if nxt not in parent:
                parent[nxt] = (node, label)
                q.append(nxt)
    return None


def fault_line_exists(cfg: Configuration, direction) -> bool:
    """Brute-force reachability between the two rings in L_tau."""
    require_free(cfg.geom, "fault lines")
    direction = Direction.parse(direction)
    return _bfs_path(build_L_tau(cfg), direction) is not None


def find_fault_line(cfg: Configuration, direction, lt: LtauGraph | None = None) -> FaultPath | None:
    """A fault line in ``direction``, or None.

    Perfect states use the cutset argument: collect the edges reachable from
    one side through monochromatic rotational adjacency, take the medial edges
    leaving that set and follow their dual diagonals from ring to ring.
    Near-perfect states fall back to a direct search in the extended L_tau.
    """
    geom = cfg.geom
    require_free(geom, "fault lines")
    direction = Direction.parse(direction)
    if lt is None:
        lt = build_L_tau(cfg)
    if cfg.defects:
        return _bfs_path(lt, direction)
    # a vertical fault line separates left from right, so grow from the left
    grow_from = "left" if direction is Direction.VERTICAL else "top"
    med = geom.medial
    col = (cfg.bits == ground_state_bits(geom)).astype(np.int64)
    reached = np.zeros(geom.num_edges, dtype=bool)
    q = deque()
    for e in geom.boundary_edges[grow_from]:
        reached[e] = True
        q.append(int(e))
    while q:
        e = q.popleft()
        for g, _ in med.adjacency[e]:
            if not reached[g] and col[g] == col[e]:
                reached[g] = True
                q.append(g)
    a, b = med.edge_ends[:, 0], med.edge_ends[:, 1]
    cut = np.flatnonzero(reached[a] != reached[b])
    duals = set(int(d) for d in med.edge_cut_by[cut])
    return _bfs_path(lt, direction, allowed=duals)


def _gap_ok(geom: LatticeGeometry, sc: np.ndarray, d: int) -> bool:
    """A diagonal may be the missing edge only at a monochromatic vertex."""
    v = geom.diagonal.edge_vertex[d]
    cs = sc[v]
    return bool(cs[0] == cs[1] == cs[2] == cs[3])


def find_almost_fault_line(cfg: Configuration, direction, lt: LtauGraph | None = None) -> FaultPath | None:
    """Shortest path that uses L_tau edges plus at most one missing diagonal.

    The missing diagonal must pass through a vertex whose four edges share a
    colour; that is the case in which reversing one side leaves a valid
    vertex.  Search is a breadth-first walk over (face, gap used) pairs.
    """
    geom = cfg.geom
    require_free(geom, "almost fault lines")
    direction = Direction.parse(direction)
    if lt is None:
        lt = build_L_tau(cfg)
    diag = geom.diagonal
    sc = slot_colors(cfg)
    in_lt = lt.labels
    s, t = _sides(direction)
    start, goal = _ring(geom, s), _ring(geom, t)
    parent = {}
    q = deque()
    for f in np.flatnonzero(start):
        node = (int(f), 0)
        parent[node] = None
        q.append(node)
    while q:
        node = q.popleft()
        f, used = node
        if goal[f]:
            faces, edges = _path_from_parents(parent, node)
            missing = tuple(i for i, x in enumerate(edges) if x not in in_lt)
            return FaultPath(tuple(faces), tuple(edges), direction, missing)
        for label, g, _ in lt.adjacency[f]:
            nxt = (g, used)
            if nxt not in parent:
                parent[nxt] = (node, label)
                q.append(nxt)
        if used:
            continue
        for d, g, _ in diag.neighbors(f):
            if d in in_lt or not _gap_ok(geom, sc, d):
                continue
            nxt = (g, 1)
            if nxt not in parent:
                parent[nxt] = (node, d)
                q.append(nxt)
    return None


def canonical_path(cfg: Configuration, direction, max_missing: int = 0,
                   lt: LtauGraph | None = None) -> FaultPath | None:
    """Lexicographically least crossing path (as a face-id sequence).

    ``max_missing`` is 0 for fault lines and 1 for almost fault lines.
    Depth-first search in increasing face order; the first path to reach the
    far ring is the least one, because a path ending there is smaller than
    any extension of it.
    """
    geom = cfg.geom
    require_free(geom, "fault lines")
    direction = Direction.parse(direction)
    if lt is None:
        lt = build_L_tau(cfg)
    diag = geom.diagonal
    sc = slot_colors(cfg)
    in_lt = lt.labels
    s, t = _sides(direction)
    start, goal = _ring(geom, s), _ring(geom, t)
    steps = []
    for f in range(geom.num_faces):
        opts = [(g, label, 0) for label, g, _ in lt.adjacency[f]]
        if max_missing:
            opts += [(g, d, 1) for d, g, _ in diag.neighbors(f)
                     if d not in in_lt and _gap_ok(geom, sc, d)]
        steps.append(sorted(opts))

    # faces from which the far ring is reachable at all (ignoring simplicity);
    # anything else is a dead end and can be skipped
    live = np.zeros(geom.num_faces, dtype=bool)
    q = deque(int(f) for f in np.flatnonzero(goal))
    live[goal] = True
    while q:
        f = q.popleft()
        for g, _, _ in steps[f]:
            if not live[g]:
                live[g] = True
                q.append(g)

    on_path = np.zeros(geom.num_faces, dtype=bool)
    faces, edges, miss = [], [], []

    def dfs(f, budget):
        faces.append(f)
        on_path[f] = True
        if goal[f]:
            return True
        for g, label, cost in steps[f]:
            if on_path[g] or not live[g] or cost > budget:
                continue
            edges.append(label)
            if cost:
                miss.append(len(edges) - 1)
            if dfs(g, budget - cost):
                return True
            if cost:
                miss.pop()
            edges.pop()
        faces.pop()
        on_path[f] = False
        return False

    for f in np.flatnonzero(start):
        f = int(f)
        if live[f] and dfs(f, max_missing):
            return FaultPath(tuple(faces), tuple(edges), direction, tuple(miss))
    return None


def canonical_fault_line(cfg: Configuration, direction, lt=None) -> FaultPath | None:
    return canonical_path(cfg, direction, 0, lt)


def canonical_almost_fault_line(cfg: Configuration, direction, lt=None) -> FaultPath | None:
    return canonical_path(cfg, direction, 1, lt)


def _check_path(cfg: Configuration, gamma: FaultPath, max_missing: int) -> str | None:
    """Reason why ``gamma`` is not a crossing path with at most ``max_missing`` gaps."""
    geom = cfg.geom
    diag = geom.diagonal
    if gamma.direction is None:
        return "path has no direction"
    if len(gamma.faces) != len(gamma.edges) + 1 or not gamma.edges:
        return "faces and edges do not match up"
    if len(set(gamma.faces)) != len(gamma.faces):
        return "path is not self-avoiding"
    s, t = _sides(gamma.direction)
    if not _ring(geom, s)[gamma.faces[0]] or not _ring(geom, t)[gamma.faces[-1]]:
        return "path does not join the required sides"
    lt = build_L_tau(cfg)
    in_lt = lt.labels
    sc = slot_colors(cfg)
    D = diag.num_edges
    missing = []
    for i, label in enumerate(gamma.edges):
        f, g = gamma.faces[i], gamma.faces[i + 1]
        if label < D:
            a, b = (int(x) for x in diag.edge_ends[label])
        else:
            e = label - D
            if (e, "toward") not in cfg.defects and (e, "away") not in cfg.defects:
                return f"edge {label} is not a defect segment"
            a, b, _ = _edge_faces(geom, e)
        if {a, b} != {f, g}:
            return f"edge {label} does not join faces {f} and {g}"
        if label not in in_lt:
            if label >= D or not _gap_ok(geom, sc, label):
                return f"edge {label} is missing from L_tau at a non-monochromatic vertex"
            missing.append(i)
    if len(missing) > max_missing:
        return f"{len(missing)} edges missing from L_tau"
    return None


def is_fault_line(cfg: Configuration, gamma: FaultPath) -> bool:
    return _check_path(cfg, gamma, 0) is None


def is_almost_fault_line(cfg: Configuration, gamma: FaultPath) -> bool:
    return _check_path(cfg, gamma, 1) is None


# ---------------------------------------------------------------------------
# classification

def classify(cfg: Configuration) -> PartitionClass:
    """Green cross, red cross or (by elimination) fault line.

    On the torus crosses are homology crosses and the third class holds the
    states with a winding pair of L_tau cycles.
    """
    if cfg.defects:
        raise ValueError("classification is defined for perfect states")
    cross = has_homology_cross if cfg.geom.periodic else has_cross
    if cross(cfg, GREEN):
        return PartitionClass.GREEN_CROSS
    if cross(cfg, RED):
        return PartitionClass.RED_CROSS
    return PartitionClass.FAULT_LINE


def one_flip_neighbors(cfg: Configuration) -> list:
    """States reachable by reversing one consistently oriented face."""
    geom = cfg.geom
    cw = np.array([1, 0, 0, 1], dtype=np.uint8)
    out = []
    for f in range(geom.num_faces):
        idx = geom.face_edges[f]
        real = idx >= 0
        cur = cfg.bits[idx[real]]
        if np.array_equal(cur, cw[real]) or np.array_equal(cur, 1 - cw[real]):
            bits = cfg.bits.copy()
            bits[idx[real]] ^= 1
            out.append(Configuration(geom, bits))
    return out


def is_one_flip_from_CG(cfg: Configuration, geom: LatticeGeometry | None = None, classifier=classify) -> bool:
    return any(classifier(y) is PartitionClass.GREEN_CROSS for y in one_flip_neighbors(cfg))


# ---------------------------------------------------------------------------
# Peierls map

def left_side_edges(geom: LatticeGeometry, gamma: FaultPath) -> np.ndarray:
    """Mask of real edges on the left of a vertical path (above a horizontal one).

    Flood fill through rotational adjacency, never crossing a medial edge cut
    by one of the path's diagonals, starting from the left (top) boundary.
    """
    med = geom.medial
    D = geom.diagonal.num_edges
    blocked = set(int(d) for d in gamma.edges if d < D)
    from_side, far_side = ("left", "right") if gamma.direction is Direction.VERTICAL else ("top", "bottom")
    mask = np.zeros(geom.num_edges, dtype=bool)
    q = deque()
    for e in geom.boundary_edges[from_side]:
        mask[e] = True
        q.append(int(e))
    while q:
        e = q.popleft()
        for g, x in med.adjacency[e]:
            if mask[g] or int(med.edge_cut_by[x]) in blocked:
                continue
            mask[g] = True
            q.append(g)
    if mask[geom.boundary_edges[far_side]].any():
        raise InvalidWitness("path does not separate the two sides")
    return mask


def peierls_map(cfg: Configuration, gamma: FaultPath) -> Configuration:
    """Reverse every edge on the left (upper) side of ``gamma``."""
    require_free(cfg.geom, "the Peierls map")
    if cfg.defects:
        raise ValueError("the Peierls map is applied to perfect states")
    why = _check_path(cfg, gamma, 1)
    if why is not None:
        raise InvalidWitness(why)
    mask = left_side_edges(cfg.geom, gamma)
    bits = cfg.bits.copy()
    bits[mask] ^= 1
    out = Configuration(cfg.geom, bits)
    chk = is_eulerian(out)
    if not chk:
        raise InvalidWitness(f"reversal breaks the ice rule at vertex {chk.vertex}")
    return out


# ---------------------------------------------------------------------------
# torus

_OFF2 = {SLOT_L: (0, -1), SLOT_T: (-1, 0), SLOT_R: (0, 1), SLOT_B: (1, 0)}


def _rank(vectors) -> int:
    if not vectors:
        return 0
    return int(np.linalg.matrix_rank(np.array(vectors, dtype=float)))


def _color_windings(cfg: Configuration, color: int) -> list:
    """Per monochromatic component, the winding vectors of its cycles."""
    geom = cfg.geom
    n = geom.n
    col = (cfg.bits == ground_state_bits(geom)).astype(np.int64)
    med = geom.medial
    pos = {}
    comps = []
    for root in range(geom.num_edges):
        if col[root] != color or root in pos:
            continue
        pos[root] = (0, 0)
        windings = []
        q = deque([root])
        while q:
            e = q.popleft()
            for g, x in med.adjacency[e]:
                if col[g] != color:
                    continue
                qa, qb = x % 4, (x + 1) % 4
                if int(med.edge_ends[x][0]) != e:
                    qa, qb = qb, qa
                da, db = _OFF2[qa], _OFF2[qb]
                want = (pos[e][0] - da[0] + db[0], pos[e][1] - da[1] + db[1])
                if g not in pos:
                    pos[g] = want
                    q.append(g)
                elif want != pos[g]:
                    dr, dc = want[0] - pos[g][0], want[1] - pos[g][1]
                    windings.append((dr // (2 * n), dc // (2 * n)))
        comps.append(windings)
    return comps


def _ltau_cycles(cfg: Configuration) -> list:
    """Trace L_tau into closed curves, pairing NW-NE and SE-SW at degree-4 faces."""
    geom = cfg.geom
    lt = build_L_tau(cfg)
    diag = geom.diagonal
    n = geom.n
    port_of = {}
    for f in range(geom.num_faces):
        for p in range(4):
            d = diag.ports[f, p]
            if d >= 0:
                port_of[(f, int(d))] = p
    used = set()
    cycles = []
    partner = {PORT_NW: PORT_NE, PORT_NE: PORT_NW, PORT_SE: PORT_SW, PORT_SW: PORT_SE}
    in_lt = set(lt.diagonals)
    for d0 in lt.diagonals:
        if d0 in used:
            continue
        f0 = int(diag.edge_ends[d0][0])
        f, d = f0, d0
        total = [0, 0]
        edges = []
        while True:
            used.add(d)
            edges.append(d)
            a, b = (int(x) for x in diag.edge_ends[d])
            dr, dc = (int(x) for x in diag.edge_disp[d])
            if f == a:
                g, step = b, (dr, dc)
            else:
                g, step = a, (-dr, -dc)
            total[0] += step[0]
            total[1] += step[1]
            p_in = port_of[(g, d)]
            live = [p for p in range(4) if diag.ports[g, p] >= 0 and int(diag.ports[g, p]) in in_lt
                    and p != p_in]
            if len(live) == 1:
                p_out = live[0]
            else:
                p_out = partner[p_in]
            d = int(diag.ports[g, p_out])
            f = g
            if d == d0 and f == f0:
                break
            if d in used:
                break
        cycles.append((tuple(edges), (total[0] // n, total[1] // n)))
    return cycles


def _ltau_winding_rank(cfg: Configuration) -> int:
    """Largest rank of the winding lattice over connected components of L_tau.

    Unlike the traced cycle list this does not depend on how degree-4 faces
    are resolved.
    """
    geom = cfg.geom
    n = geom.n
    lt = build_L_tau(cfg)
    pos = {}
    best = 0
    for root in range(geom.num_faces):
        if root in pos or not lt.adjacency[root]:
            continue
        pos[root] = (0, 0)
        windings = []
        q = deque([root])
        while q:
            f = q.popleft()
            for _, g, (dr, dc) in lt.adjacency[f]:
                want = (pos[f][0] + dr, pos[f][1] + dc)
                if g not in pos:
                    pos[g] = want
                    q.append(g)
                elif want != pos[g]:
                    windings.append(((want[0] - pos[g][0]) // n, (want[1] - pos[g][1]) // n))
        best = max(best, _rank(windings))
    return best


def _require_even_torus(cfg: Configuration) -> None:
    geom = cfg.geom
    if not geom.periodic:
        raise UnsupportedGeometry("torus analysis needs the periodic boundary condition")
    if geom.n % 2:
        raise UnsupportedGeometry("torus analysis needs even n")
    if cfg.defects:
        raise ValueError("torus analysis is defined for perfect states")


def has_homology_cross(cfg: Configuration, color) -> bool:
    """Two same-coloured cycles with independent windings (torus only)."""
    _require_even_torus(cfg)
    return any(_rank(w) == 2 for w in _color_windings(cfg, _color_value(color)))


def torus_cross_and_cycles(cfg: Configuration) -> dict:
    """Homology crosses of both colours and the non-contractible L_tau cycles.

    ``ltau_noncontractible_cycles`` comes from tracing L_tau with the fixed
    pairing NW-NE / SE-SW at faces of degree four.  Another pairing can merge
    two parallel cycles into a contractible one, so only the parity of the
    count is intrinsic.  ``fault_pair`` is the resolution-free statement that
    some component of L_tau winds around the torus.
    """
    _require_even_torus(cfg)
    out = {}
    for name, color in (("green_cross", GREEN), ("red_cross", RED)):
        out[name] = has_homology_cross(cfg, color)
    cycles = _ltau_cycles(cfg)
    out["ltau_winding_rank"] = _ltau_winding_rank(cfg)
    out["fault_pair"] = out["ltau_winding_rank"] > 0
    out["ltau_noncontractible_cycles"] = [
        {"edges": list(edges), "winding": list(w)} for edges, w in cycles if w != (0, 0)
    ]
    return out
