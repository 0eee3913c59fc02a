"""Lazy Glauber dynamics and the directed-loop chain, with seeded runners.

Random numbers come from NumPy's PCG64.  Replica seeds are derived with
``SeedSequence(seed).spawn(k)``, each child reduced to a single 64-bit seed,
so that a replica can be rerun on its own from the seed printed in the output.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from . import _kernels as K
from .errors import NotIrreducible, UnsupportedGeometry
from .lattice import LatticeGeometry
from .state import (
    AWAY,
    TOWARD,
    TYPE_OF_PATTERN,
    Configuration,
    WeightParams,
    ground_state_bits,
    is_eulerian,
)

__all__ = [
    "ChainKind",
    "MoveKind",
    "ChainState",
    "StepOutcome",
    "CapExceeded",
    "CAP_EXCEEDED",
    "make_rng",
    "replica_seeds",
    "glauber_step",
    "directed_loop_step",
    "directed_loop_neighbors",
    "neighbor_count",
    "step",
    "run_trajectory",
    "hitting_time",
    "hitting_times",
]

BOUNDARY_SITE = -1


class ChainKind(str, enum.Enum):
    GLAUBER = "glauber"
    DIRECTED_LOOP = "loop"

    @classmethod
    def parse(cls, value) -> "ChainKind":
        if isinstance(value, cls):
            return value
        v = str(value).strip().lower().replace("-", "_")
        if v in ("glauber", "g"):
            return cls.GLAUBER
        if v in ("loop", "directed_loop", "directedloop", "d"):
            return cls.DIRECTED_LOOP
        raise ValueError(f"unknown chain {value!r}")


class MoveKind(str, enum.Enum):
    LAZY = "lazy"
    FACE_FLIP = "face_flip"
    DEFECT_CREATE = "defect_create"
    DEFECT_SHIFT = "defect_shift"
    DEFECT_MERGE = "defect_merge"
    REJECT = "reject"


class StepOutcome(NamedTuple):
    moved: bool
    move_kind: MoveKind
    touched: tuple


class _CapExceeded:
    """Sentinel returned by :func:`hitting_time` when the cap is reached."""

    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "CapExceeded"

    def __bool__(self):
        return False


CapExceeded = _CapExceeded
CAP_EXCEEDED = _CapExceeded()


def make_rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def replica_seeds(seed: int, count: int) -> list:
    """Independent 64-bit seeds for ``count`` replicas."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [int(c.generate_state(1, np.uint64)[0]) for c in children]


@dataclass
class ChainState:
    """Current configuration, number of steps taken and the generator."""

    cfg: Configuration
    step_count: int = 0
    rng: np.random.Generator = field(default=None)
    seed: int | None = None

    def __post_init__(self):
        if self.rng is None:
            self.rng = make_rng(self.seed)

    @classmethod
    def start(cls, cfg: Configuration, seed: int) -> "ChainState":
        return cls(cfg.copy(), 0, make_rng(seed), seed)

    def copy(self) -> "ChainState":
        rng = make_rng(0)
        rng.bit_generator.state = self.rng.bit_generator.state
        return ChainState(self.cfg.copy(), self.step_count, rng, self.seed)


# ---------------------------------------------------------------------------
# Glauber

_TABLE_CACHE: dict = {}
_PY_TABLE_CACHE: dict = {}


def _tables(geom: LatticeGeometry):
    key = (geom.n, geom.bc)
    if key not in _TABLE_CACHE:
        _TABLE_CACHE[key] = K.glauber_tables(geom)
    return _TABLE_CACHE[key]


def _py_tables(geom: LatticeGeometry):
    """Per-face lists ``[(edge, clockwise_bit), ...]`` and internal corners, plus vertex slots."""
    key = (geom.n, geom.bc)
    if key not in _PY_TABLE_CACHE:
        cw = (1, 0, 0, 1)
        faces = []
        for f in range(geom.num_faces):
            real = [(int(e), cw[k]) for k, e in enumerate(geom.face_edges[f]) if e >= 0]
            corners = [int(v) for v in geom.face_corners[f] if geom.vertex_internal[v]]
            faces.append((real, corners))
        slots = {int(v): [(int(geom.vertex_slots[v, q]), int(geom.slot_is_head[v, q])) for q in range(4)]
                 for v in geom.internal_vertices}
        _PY_TABLE_CACHE[key] = (faces, slots)
    return _PY_TABLE_CACHE[key]


def _bits_type(bits, slots) -> int:
    code = 0
    for e, end in slots:
        code = code * 2 + (1 - (int(bits[e]) ^ end))
    return int(TYPE_OF_PATTERN[code])


def _require_glauber(cfg: Configuration):
    if cfg.geom.periodic:
        raise NotIrreducible("Glauber dynamics is not irreducible with periodic boundary")
    if cfg.defects:
        raise ValueError("Glauber dynamics runs on perfect states only")


def glauber_step(s: ChainState, p: WeightParams, debug: bool = False) -> StepOutcome:
    """One lazy heat-bath face step, in place.

    Consumes random draws exactly like the compiled bulk runner, so single
    steps and bulk runs from the same seed follow the same trajectory.
    """
    cfg = s.cfg
    _require_glauber(cfg)
    faces, slots = _py_tables(cfg.geom)
    rng = s.rng
    s.step_count += 1
    if rng.random() < 0.5:
        return StepOutcome(False, MoveKind.LAZY, ())
    F = len(faces)
    f = min(int(rng.random() * F), F - 1)
    real, corners = faces[f]
    bits = cfg.bits
    first = int(bits[real[0][0]]) == real[0][1]
    for e, b in real:
        if (int(bits[e]) == b) != first:
            return StepOutcome(False, MoveKind.REJECT, ())
    lw = p.log_type_weights
    before = 0.0
    for v in corners:
        before += lw[_bits_type(bits, slots[v])]
    new = bits.copy()
    for e, _ in real:
        new[e] ^= 1
    after = 0.0
    for v in corners:
        after += lw[_bits_type(new, slots[v])]
    if rng.random() >= 1.0 / (1.0 + math.exp(before - after)):
        return StepOutcome(False, MoveKind.REJECT, ())
    s.cfg = Configuration._raw(cfg.geom, new)
    if debug:
        chk = is_eulerian(s.cfg)
        assert chk, f"Glauber step broke the ice rule at {chk.vertex}"
    return StepOutcome(True, MoveKind.FACE_FLIP, tuple(e for e, _ in real))


def _glauber_advance(s: ChainState, p: WeightParams, steps: int) -> None:
    _require_glauber(s.cfg)
    fe, corners, slots, is_head, internal, *_ = _tables(s.cfg.geom)
    bits = np.array(s.cfg.bits, dtype=np.uint8)
    K.glauber_run_kernel(bits, fe, corners, slots, is_head, internal,
                         p.log_type_weights, steps, s.rng)
    s.cfg = Configuration._raw(s.cfg.geom, bits)
    s.step_count += steps


# ---------------------------------------------------------------------------
# directed loop
#
# A site is an internal vertex or, for the free boundary, the whole boundary
# taken as one vertex.  A move reverses two half-edges at one site, one
# pointing into the site and one pointing out, provided the result has zero
# or two defects.  That single rule yields defect creation, shift and merge.

class _LoopGeometry:
    def __init__(self, geom: LatticeGeometry):
        if geom.periodic and geom.n < 2:
            raise UnsupportedGeometry("directed-loop moves need n >= 2 on the torus")
        self.geom = geom
        self.sites = {}
        for v in geom.internal_vertices:
            v = int(v)
            self.sites[v] = [(int(geom.vertex_slots[v, q]), int(geom.slot_is_head[v, q]))
                             for q in range(4)]
        if not geom.periodic:
            self.sites[BOUNDARY_SITE] = [(int(e), int(h)) for e, h in geom.boundary_half_edges]
        self.site_of = {}
        for site, halves in self.sites.items():
            for half in halves:
                self.site_of[half] = site
        self.internal = [int(v) for v in geom.internal_vertices]

    def perfect_count(self, h) -> int:
        total = 4 * len(self.internal)
        if BOUNDARY_SITE in self.sites:
            k_in = sum(_inward(h, e, end) for e, end in self.sites[BOUNDARY_SITE])
            total += k_in * (len(self.sites[BOUNDARY_SITE]) - k_in)
        return total


_LOOP_CACHE: dict = {}


def _loop_geom(geom: LatticeGeometry) -> _LoopGeometry:
    key = (geom.n, geom.bc)
    if key not in _LOOP_CACHE:
        _LOOP_CACHE[key] = _LoopGeometry(geom)
    return _LOOP_CACHE[key]


def _inward(h, e, end) -> int:
    return 1 - (int(h[e, end]) ^ end)


def _site_type(lg: _LoopGeometry, h, site) -> int:
    if site == BOUNDARY_SITE:
        return 0
    code = 0
    for e, end in lg.sites[site]:
        code = code * 2 + _inward(h, e, end)
    return int(TYPE_OF_PATTERN[code])


def _near_perfect_moves(lg: _LoopGeometry, h, defects) -> list:
    """Moves ``(site, half1, half2)`` out of a near-perfect state.

    One of the two reversed halves must belong to a defect edge, otherwise
    four defects would result.  Every such pair is valid: pairing with a
    consistent edge shifts the defect (its polarity is kept), pairing the two
    defect halves merges them.
    """
    moves = []
    merges = set()
    for e in defects:
        for end in (0, 1):
            half = (e, end)
            site = lg.site_of.get(half)
            if site is None:
                continue
            here = _inward(h, e, end)
            for other in lg.sites[site]:
                if other == half or _inward(h, *other) == here:
                    continue
                if other[0] in defects:
                    key = (site, *sorted((half, other)))
                    if key not in merges:
                        merges.add(key)
                        moves.append(key)
                else:
                    moves.append((site, half, other))
    return moves


def _perfect_move(lg: _LoopGeometry, h, k: int):
    """Decode move index ``k`` of a perfect state."""
    ni = len(lg.internal)
    if k < 4 * ni:
        site = lg.internal[k // 4]
        halves = lg.sites[site]
        ins = [x for x in halves if _inward(h, *x)]
        outs = [x for x in halves if not _inward(h, *x)]
        j = k % 4
        return site, ins[j // 2], outs[j % 2]
    k -= 4 * ni
    halves = lg.sites[BOUNDARY_SITE]
    ins = [x for x in halves if _inward(h, *x)]
    outs = [x for x in halves if not _inward(h, *x)]
    return BOUNDARY_SITE, ins[k // len(outs)], outs[k % len(outs)]


def _count_neighbors(lg: _LoopGeometry, h, defects) -> int:
    if not defects:
        return lg.perfect_count(h)
    return len(_near_perfect_moves(lg, h, defects))


def neighbor_count(cfg: Configuration) -> int:
    """Number of distinct directed-loop neighbours of ``cfg``."""
    lg = _loop_geom(cfg.geom)
    return _count_neighbors(lg, cfg.halves(), [e for e, _ in cfg.defects])


def directed_loop_neighbors(cfg: Configuration) -> list:
    """All neighbouring configurations, each listed once.

    Reference enumeration: tries every in/out half pair at every site and keeps
    the results that are perfect or near-perfect.  The sampler uses a faster
    route; the exact kernels are built from this one.
    """
    lg = _loop_geom(cfg.geom)
    h = cfg.halves()
    out = {}
    for site, halves in lg.sites.items():
        for i, x in enumerate(halves):
            for y in halves[i + 1:]:
                if _inward(h, *x) == _inward(h, *y):
                    continue
                h2 = h.copy()
                h2[x] ^= 1
                h2[y] ^= 1
                bad = np.flatnonzero(h2[:, 0] != h2[:, 1])
                if len(bad) == 0 or (len(bad) == 2 and h2[bad[0], 0] != h2[bad[1], 0]):
                    nb = Configuration.from_halves(cfg.geom, h2)
                    out.setdefault(nb.key, nb)
    return list(out.values())


def directed_loop_step(s: ChainState, p: WeightParams) -> StepOutcome:
    """One lazy Metropolis-Hastings step over perfect and near-perfect states, in place.

    The proposal is uniform over the current neighbour set and accepted with
    ``min(1, w(y) |N(x)| / (w(x) |N(y)|))``.
    """
    cfg = s.cfg
    lg = _loop_geom(cfg.geom)
    rng = s.rng
    s.step_count += 1
    if rng.random() < 0.5:
        return StepOutcome(False, MoveKind.LAZY, ())
    h = cfg.halves()
    defects = [e for e, _ in cfg.defects]
    if not defects:
        nx = lg.perfect_count(h)
        site, h1, h2 = _perfect_move(lg, h, min(int(rng.random() * nx), nx - 1))
    else:
        moves = _near_perfect_moves(lg, h, defects)
        nx = len(moves)
        site, h1, h2 = moves[min(int(rng.random() * nx), nx - 1)]
    before = _site_type(lg, h, site)
    h[h1] ^= 1
    h[h2] ^= 1
    after = _site_type(lg, h, site)
    if not defects:
        new_defects = [h1[0], h2[0]]
    else:
        new_defects = [e for e in (*defects, h1[0], h2[0]) if h[e, 0] != h[e, 1]]
        new_defects = sorted(set(new_defects))
    ny = _count_neighbors(lg, h, new_defects)
    log_ratio = math.log(nx) - math.log(ny)
    if site != BOUNDARY_SITE:
        lw = p.log_type_weights
        log_ratio += lw[after] - lw[before]
    if log_ratio < 0 and math.log(rng.random()) >= log_ratio:
        return StepOutcome(False, MoveKind.REJECT, ())
    if not defects:
        kind = MoveKind.DEFECT_CREATE
    elif not new_defects:
        kind = MoveKind.DEFECT_MERGE
    else:
        kind = MoveKind.DEFECT_SHIFT
    recs = tuple(sorted((int(e), TOWARD if h[e, 0] == 1 else AWAY) for e in new_defects))
    bits = h[:, 0].copy()
    for e in new_defects:
        bits[e] = 1
    s.cfg = Configuration._raw(cfg.geom, bits, recs)
    return StepOutcome(True, kind, (h1[0], h2[0]))


# ---------------------------------------------------------------------------
# runners

def step(s: ChainState, chain, p: WeightParams) -> StepOutcome:
    if ChainKind.parse(chain) is ChainKind.GLAUBER:
        return glauber_step(s, p)
    return directed_loop_step(s, p)


def run_trajectory(s: ChainState, steps: int, chain, p: WeightParams,
                   observer: Callable | None = None, stride: int = 1):
    """Apply exactly ``steps`` steps; ``observer(state)`` runs every ``stride`` steps.

    Returns ``(state, log)`` where ``log`` collects the observer's non-None
    return values.  The state is advanced in place.
    """
    if steps < 0:
        raise ValueError("steps must be >= 0")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    kind = ChainKind.parse(chain)
    log = []
    done = 0
    while done < steps:
        todo = min(stride, steps - done)
        if kind is ChainKind.GLAUBER:
            _glauber_advance(s, p, todo)
        else:
            for _ in range(todo):
                directed_loop_step(s, p)
        done += todo
        if observer is not None and (done % stride == 0 or done == steps):
            rec = observer(s)
            if rec is not None:
                log.append(rec)
    return s, log


_NAMED_TARGETS = {"red_cross": K.TARGET_RED_CROSS, "green_cross": K.TARGET_GREEN_CROSS}


def _named_predicate(name: str) -> Callable:
    from .state import GREEN, RED
    from .topology import has_cross, has_homology_cross

    color = RED if name == "red_cross" else GREEN

    def pred(cfg):
        if not cfg.is_perfect:
            return False
        if cfg.geom.periodic:
            return has_homology_cross(cfg, color)
        return has_cross(cfg, color)

    return pred


def hitting_time(start: Configuration, target, cap: int, chain, p: WeightParams,
                 seed: int, stride: int = 1):
    """Steps until ``target`` first holds (checked every ``stride`` steps), or ``CAP_EXCEEDED``.

    ``target`` is a predicate on configurations or one of ``"red_cross"``,
    ``"green_cross"``; named targets with Glauber run entirely compiled.
    """
    if cap < 1:
        raise ValueError("cap must be >= 1")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    kind = ChainKind.parse(chain)
    if isinstance(target, str):
        if target not in _NAMED_TARGETS:
            raise ValueError(f"unknown target {target!r}")
        if kind is ChainKind.GLAUBER:
            _require_glauber(start)
            return _glauber_hit(start, _NAMED_TARGETS[target], cap, p, seed, stride)
        target = _named_predicate(target)
    s = ChainState.start(start, seed)
    if target(s.cfg):
        return 0
    while s.step_count < cap:
        todo = min(stride, cap - s.step_count)
        run_trajectory(s, todo, kind, p)
        if target(s.cfg):
            return s.step_count
    return CAP_EXCEEDED


def _glauber_hit(start: Configuration, target: int, cap: int, p: WeightParams, seed: int, stride: int):
    geom = start.geom
    fe, corners, slots, is_head, internal, ends, left, right, top, bottom = _tables(geom)
    ground = ground_state_bits(geom)
    bits = np.array(start.bits, dtype=np.uint8)
    t = K.glauber_hit_kernel(bits, ground, fe, corners, slots, is_head, internal, ends,
                             left, right, top, bottom, p.log_type_weights, int(cap), int(stride),
                             target, make_rng(seed))
    return CAP_EXCEEDED if t < 0 else int(t)


def hitting_times(start: Configuration, target, cap: int, chain, p: WeightParams,
                  seed: int, replicas: int, stride: int = 1, workers: int | None = None) -> list:
    """Run independent replicas; returns ``[(replica, seed, result), ...]`` in replica order.

    Compiled Glauber runs release the GIL, so they are spread over threads.
    """
    seeds = replica_seeds(seed, replicas)

    def one(i):
        return hitting_time(start, target, cap, chain, p, seeds[i], stride)

    threaded = isinstance(target, str) and ChainKind.parse(chain) is ChainKind.GLAUBER
    if threaded and replicas > 1:
        if workers is None:
            import os
            workers = min(replicas, os.cpu_count() or 1)
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(one, range(replicas)))
    else:
        results = [one(i) for i in range(replicas)]
    return [(i, seeds[i], r) for i, r in enumerate(results)]
