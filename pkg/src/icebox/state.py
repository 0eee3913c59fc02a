"""Six-vertex configurations, vertex types, Gibbs weights and ground states.

An orientation is stored as one bit per real edge: 1 when the edge points in
its canonical direction (rightward / upward), 0 otherwise.  Near-perfect
states additionally carry exactly two defect records.  A defect edge has its
two half-edges pointing *toward* each other or *away* from each other; its
stored bit is normalised to 1 and carries no meaning.

Vertex types, read off the in/out pattern in slot order (left, top, right,
bottom):

====  =====================================  ======
type  pattern                                weight
====  =====================================  ======
1     all arrows right / up                  a
2     all arrows left / down                 a
3     arrows right / down                    b
4     arrows left / up                       b
5     horizontal arrows in, vertical out     c
6     vertical arrows in, horizontal out     c
====  =====================================  ======
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .errors import IceRuleViolation, UnsupportedGeometry
from .lattice import BoundaryCondition, LatticeGeometry, build_lattice

__all__ = [
    "WeightParams",
    "Configuration",
    "TOWARD",
    "AWAY",
    "GREEN",
    "RED",
    "MIXED",
    "reference_state_green",
    "reference_state_red",
    "ground_state_bits",
    "total_reversal",
    "vertex_type",
    "vertex_types",
    "type_counts",
    "weight",
    "log_weight",
    "weight_exact",
    "is_eulerian",
    "edge_colors",
    "half_edge_colors",
    "pattern_of",
    "TYPE_OF_PATTERN",
]

TOWARD = "toward"
AWAY = "away"

GREEN = 1
RED = 0
MIXED = 2

# in-pattern code = 8*in_L + 4*in_T + 2*in_R + in_B  ->  vertex type (0 = not ice)
TYPE_OF_PATTERN = np.zeros(16, dtype=np.int64)
for _code, _t in ((0b1001, 1), (0b0110, 2), (0b1100, 3), (0b0011, 4), (0b1010, 5), (0b0101, 6)):
    TYPE_OF_PATTERN[_code] = _t
TYPE_OF_PATTERN.setflags(write=False)


@dataclass(frozen=True)
class WeightParams:
    """Zero-field vertex weights ``a`` (types 1,2), ``b`` (3,4), ``c`` (5,6)."""

    a: float
    b: float
    c: float

    def __post_init__(self):
        for name in ("a", "b", "c"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float, Fraction)) and v > 0 and math.isfinite(v)):
                raise ValueError(f"weight {name} must be a positive finite number, got {v!r}")

    def phase(self) -> str:
        a, b, c = self.a, self.b, self.c
        if a > b + c or b > a + c:
            return "FE"
        if c > a + b:
            return "AFE"
        if a < b + c and b < a + c and c < a + b:
            return "DO"
        return "boundary"

    @property
    def type_weights(self) -> np.ndarray:
        """Weights indexed by vertex type; index 0 is unused."""
        return np.array([np.nan, self.a, self.a, self.b, self.b, self.c, self.c], dtype=float)

    @cached_property
    def log_type_weights(self) -> np.ndarray:
        w = self.type_weights
        out = np.full(7, -np.inf)
        out[1:] = np.log(w[1:])
        out.setflags(write=False)
        return out

    def exact(self, t: int) -> Fraction:
        return Fraction(self.a if t <= 2 else self.b if t <= 4 else self.c)


class EulerCheck(NamedTuple):
    ok: bool
    vertex: int | None = None

    def __bool__(self) -> bool:
        return self.ok


class Configuration:
    """Orientation of every real edge, plus defect records for near-perfect states."""

    __slots__ = ("geom", "bits", "defects")

    def __init__(self, geom: LatticeGeometry, bits, defects=()):
        bits = np.array(bits, dtype=np.uint8)
        if bits.shape != (geom.num_edges,):
            raise ValueError(f"expected {geom.num_edges} edge bits, got shape {bits.shape}")
        if np.any(bits > 1):
            raise ValueError("edge bits must be 0 or 1")
        defects = tuple(sorted((int(e), str(p)) for e, p in defects))
        if defects:
            if len(defects) != 2:
                raise ValueError("a near-perfect state has exactly two defects")
            (e1, p1), (e2, p2) = defects
            if e1 == e2 or {p1, p2} != {TOWARD, AWAY}:
                raise ValueError("defects must sit on distinct edges with opposite polarity")
            for e, _ in defects:
                if not 0 <= e < geom.num_edges:
                    raise ValueError(f"defect edge {e} out of range")
                bits[e] = 1
        self.geom = geom
        self.bits = bits
        self.defects = defects

    # -- value semantics -------------------------------------------------
    @property
    def is_perfect(self) -> bool:
        return not self.defects

    @property
    def key(self) -> bytes:
        k = self.bits.tobytes()
        if self.defects:
            k += b"|" + ";".join(f"{e}{p[0]}" for e, p in self.defects).encode()
        return k

    @classmethod
    def _raw(cls, geom, bits, defects=()) -> "Configuration":
        # trusted constructor for hot loops: no validation, no copy
        c = cls.__new__(cls)
        c.geom = geom
        c.bits = bits
        c.defects = defects
        return c

    def copy(self) -> "Configuration":
        return Configuration._raw(self.geom, self.bits.copy(), self.defects)

    def __eq__(self, other):
        if not isinstance(other, Configuration):
            return NotImplemented
        return self.geom is other.geom and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __repr__(self):
        return f"Configuration(n={self.geom.n}, bc={self.geom.bc.value}, {self.to_line()!r})"

    # -- half-edge view ----------------------------------------------------
    def halves(self) -> np.ndarray:
        """``(num_edges, 2)`` array: 1 where the tail/head half points canonically."""
        h = np.repeat(self.bits[:, None], 2, axis=1)
        for e, p in self.defects:
            h[e] = (1, 0) if p == TOWARD else (0, 1)
        return h

    @classmethod
    def from_halves(cls, geom: LatticeGeometry, h: np.ndarray) -> "Configuration":
        h = np.asarray(h, dtype=np.uint8)
        bad = np.flatnonzero(h[:, 0] != h[:, 1])
        defects = [(int(e), TOWARD if h[e, 0] == 1 else AWAY) for e in bad]
        return cls(geom, h[:, 0], defects)

    # -- text format -------------------------------------------------------
    def to_line(self) -> str:
        s = "".join("+" if b else "-" for b in self.bits)
        for e, p in self.defects:
            s += f" D {e} {p}"
        return s

    def to_text(self) -> str:
        lines = [f"{self.geom.n} {self.geom.bc.value}", "".join("+" if b else "-" for b in self.bits)]
        lines += [f"D {e} {p}" for e, p in self.defects]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_line(cls, geom: LatticeGeometry, line: str) -> "Configuration":
        parts = line.split()
        if not parts:
            raise ValueError("empty configuration line")
        chars = parts[0]
        if len(chars) != geom.num_edges or set(chars) - {"+", "-"}:
            raise ValueError("malformed edge string")
        rest = parts[1:]
        if len(rest) % 3:
            raise ValueError("malformed defect records")
        defects = []
        for i in range(0, len(rest), 3):
            if rest[i] != "D" or rest[i + 2] not in (TOWARD, AWAY):
                raise ValueError(f"malformed defect record {rest[i:i + 3]}")
            defects.append((int(rest[i + 1]), rest[i + 2]))
        bits = np.frombuffer(chars.encode(), dtype=np.uint8) == ord("+")
        return cls(geom, bits.astype(np.uint8), defects)

    @classmethod
    def from_text(cls, text: str, geom: LatticeGeometry | None = None) -> "Configuration":
        lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
        n_str, bc_str = lines[0].split()
        g = build_lattice(int(n_str), BoundaryCondition.parse(bc_str))
        if geom is not None and geom is not g:
            raise ValueError("text header does not match the supplied geometry")
        return cls.from_line(g, " ".join(lines[1:]))


# ---------------------------------------------------------------------------
# local structure

def pattern_of(geom: LatticeGeometry, halves: np.ndarray, v: int) -> int:
    """In-pattern code of vertex ``v`` (bit 3 = left ... bit 0 = bottom)."""
    code = 0
    for q in range(4):
        e = geom.vertex_slots[v, q]
        end = int(geom.slot_is_head[v, q])
        inward = 1 - (int(halves[e, end]) ^ end)
        code = (code << 1) | inward
    return code


def _pattern_codes(cfg: Configuration) -> np.ndarray:
    g = cfg.geom
    iv = g.internal_vertices
    slots = g.vertex_slots[iv]
    heads = g.slot_is_head[iv].astype(np.uint8)
    if cfg.defects:
        h = cfg.halves()
        vals = h[slots, heads]
    else:
        vals = cfg.bits[slots]
    inward = 1 - (vals ^ heads)
    return (inward[:, 0] << 3) | (inward[:, 1] << 2) | (inward[:, 2] << 1) | inward[:, 3]


def vertex_types(cfg: Configuration, check: bool = True) -> np.ndarray:
    """Types of all internal vertices, in internal-vertex order (0 marks a violation)."""
    t = TYPE_OF_PATTERN[_pattern_codes(cfg)]
    if check:
        bad = np.flatnonzero(t == 0)
        if len(bad):
            v = int(cfg.geom.internal_vertices[bad[0]])
            raise IceRuleViolation(v, _in_degree(cfg, v))
    return t


def _in_degree(cfg: Configuration, v: int) -> int:
    return bin(pattern_of(cfg.geom, cfg.halves(), v)).count("1")


def vertex_type(cfg: Configuration, v: int) -> int:
    g = cfg.geom
    if not g.vertex_internal[v]:
        raise ValueError(f"vertex {v} is a boundary vertex and has no type")
    t = int(TYPE_OF_PATTERN[pattern_of(g, cfg.halves(), v)])
    if t == 0:
        raise IceRuleViolation(v, _in_degree(cfg, v))
    return t


def type_counts(cfg: Configuration) -> np.ndarray:
    """``n_1 .. n_6`` as a length-7 array (index 0 unused)."""
    return np.bincount(vertex_types(cfg), minlength=7)


def log_weight(cfg: Configuration, p: WeightParams) -> float:
    counts = type_counts(cfg)
    lw = p.log_type_weights
    return float(sum(counts[t] * lw[t] for t in range(1, 7) if counts[t]))


def weight(cfg: Configuration, p: WeightParams) -> float:
    """Product of vertex weights; may overflow to ``inf`` for big regions, use :func:`log_weight`."""
    counts = type_counts(cfg)
    w = p.type_weights
    return float(np.prod([w[t] ** counts[t] for t in range(1, 7)]))


def weight_exact(cfg: Configuration, p: WeightParams) -> Fraction:
    counts = type_counts(cfg)
    out = Fraction(1)
    for t in range(1, 7):
        if counts[t]:
            out *= p.exact(t) ** int(counts[t])
    return out


def is_eulerian(cfg: Configuration) -> EulerCheck:
    t = vertex_types(cfg, check=False)
    bad = np.flatnonzero(t == 0)
    if len(bad):
        return EulerCheck(False, int(cfg.geom.internal_vertices[bad[0]]))
    return EulerCheck(True, None)


# ---------------------------------------------------------------------------
# ground states and colouring

def ground_state_bits(geom: LatticeGeometry) -> np.ndarray:
    """Bits of the all-``c`` state used as the green reference.

    An edge anchored at grid point ``(r, c)`` points canonically iff
    ``r + c`` is even; horizontal and vertical edges both alternate, which
    makes every internal vertex type 5 or 6.
    """
    if geom.periodic and geom.n % 2:
        raise UnsupportedGeometry("the torus has all-c ground states only for even n")
    anchors = geom.edge_anchor
    return ((anchors[:, 0] + anchors[:, 1]) % 2 == 0).astype(np.uint8)


def reference_state_green(geom: LatticeGeometry) -> Configuration:
    return Configuration(geom, ground_state_bits(geom))


def reference_state_red(geom: LatticeGeometry) -> Configuration:
    return Configuration(geom, 1 - ground_state_bits(geom))


def total_reversal(cfg: Configuration) -> Configuration:
    if cfg.defects:
        raise ValueError("total reversal is only defined here for perfect states")
    return Configuration(cfg.geom, 1 - cfg.bits)


def edge_colors(cfg: Configuration) -> np.ndarray:
    """GREEN where the edge agrees with the green reference, RED otherwise, MIXED on defects."""
    ref = ground_state_bits(cfg.geom)
    col = (cfg.bits == ref).astype(np.uint8)
    for e, _ in cfg.defects:
        col[e] = MIXED
    return col


def half_edge_colors(cfg: Configuration) -> np.ndarray:
    """``(num_edges, 2)`` colours of the tail and head halves."""
    ref = ground_state_bits(cfg.geom)
    return (cfg.halves() == ref[:, None]).astype(np.uint8)
