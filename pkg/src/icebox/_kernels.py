"""Compiled inner loops for Glauber dynamics and crossing tests.

All kernels take plain arrays (see :func:`glauber_tables`) plus a
``numpy.random.Generator``; numba advances the same PCG64 stream NumPy would.
"""

import numpy as np
from numba import njit

from .state import TYPE_OF_PATTERN

LAZY, REJECT, FLIP = 0, 1, 2

TARGET_NONE, TARGET_RED_CROSS, TARGET_GREEN_CROSS = 0, 1, 2

_CW = np.array([1, 0, 0, 1], dtype=np.uint8)


def glauber_tables(geom):
    """Bundle the geometry arrays the kernels need, in a fixed order."""
    ends = geom.edge_tail, geom.edge_head
    bnd = geom.boundary_edges
    return (
        np.ascontiguousarray(geom.face_edges, dtype=np.int64),
        np.ascontiguousarray(geom.face_corners, dtype=np.int64),
        np.ascontiguousarray(geom.vertex_slots, dtype=np.int64),
        np.ascontiguousarray(geom.slot_is_head, dtype=np.uint8),
        np.ascontiguousarray(geom.vertex_internal, dtype=np.uint8),
        np.ascontiguousarray(np.stack(ends, axis=1), dtype=np.int64),
        _mask(geom.num_edges, bnd["left"]),
        _mask(geom.num_edges, bnd["right"]),
        _mask(geom.num_edges, bnd["top"]),
        _mask(geom.num_edges, bnd["bottom"]),
    )


def _mask(m, ids):
    out = np.zeros(m, dtype=np.uint8)
    out[np.asarray(ids, dtype=np.int64)] = 1
    return out


_TYPES = np.asarray(TYPE_OF_PATTERN, dtype=np.int64)


@njit(cache=True, nogil=True)
def _vertex_type(bits, v, slots, is_head, types):
    code = 0
    for q in range(4):
        e = slots[v, q]
        inward = 1 - (bits[e] ^ is_head[v, q])
        code = code * 2 + inward
    return types[code]


@njit(cache=True, nogil=True)
def _flippable(bits, f, face_edges):
    """+1 if the face is clockwise, -1 if counter-clockwise, 0 otherwise."""
    cw = True
    ccw = True
    for k in range(4):
        e = face_edges[f, k]
        if e < 0:
            continue
        b = bits[e]
        if b != _CW[k]:
            cw = False
        if b == _CW[k]:
            ccw = False
    if cw:
        return 1
    if ccw:
        return -1
    return 0


@njit(cache=True, nogil=True)
def _glauber_once(bits, face_edges, corners, slots, is_head, internal, log_tw, types, rng):
    if rng.random() < 0.5:
        return LAZY, -1
    F = face_edges.shape[0]
    f = int(rng.random() * F)
    if f >= F:
        f = F - 1
    if _flippable(bits, f, face_edges) == 0:
        return REJECT, f
    before = 0.0
    for k in range(4):
        v = corners[f, k]
        if internal[v]:
            before += log_tw[_vertex_type(bits, v, slots, is_head, types)]
    for k in range(4):
        e = face_edges[f, k]
        if e >= 0:
            bits[e] ^= 1
    after = 0.0
    for k in range(4):
        v = corners[f, k]
        if internal[v]:
            after += log_tw[_vertex_type(bits, v, slots, is_head, types)]
    p_flip = 1.0 / (1.0 + np.exp(before - after))
    if rng.random() < p_flip:
        return FLIP, f
    for k in range(4):
        e = face_edges[f, k]
        if e >= 0:
            bits[e] ^= 1
    return REJECT, f


@njit(cache=True, nogil=True)
def glauber_step_kernel(bits, face_edges, corners, slots, is_head, internal, log_tw, rng):
    return _glauber_once(bits, face_edges, corners, slots, is_head, internal, log_tw, _TYPES, rng)


@njit(cache=True, nogil=True)
def glauber_run_kernel(bits, face_edges, corners, slots, is_head, internal, log_tw, steps, rng):
    """Advance ``steps`` steps in place; returns the number of accepted flips."""
    flips = 0
    for _ in range(steps):
        kind, _f = _glauber_once(bits, face_edges, corners, slots, is_head, internal, log_tw, _TYPES, rng)
        if kind == FLIP:
            flips += 1
    return flips


@njit(cache=True, nogil=True)
def _bridge(bits, ground, want_green, start_mask, goal_mask, ends, slots, internal, queue, seen):
    m = bits.shape[0]
    head = 0
    tail = 0
    for e in range(m):
        seen[e] = 0
        green = bits[e] == ground[e]
        if start_mask[e] and green == want_green:
            seen[e] = 1
            queue[tail] = e
            tail += 1
    while head < tail:
        e = queue[head]
        head += 1
        if goal_mask[e]:
            return True
        for side in range(2):
            v = ends[e, side]
            if not internal[v]:
                continue
            for q in range(4):
                g = slots[v, q]
                if seen[g]:
                    continue
                if (bits[g] == ground[g]) == want_green:
                    seen[g] = 1
                    queue[tail] = g
                    tail += 1
    return False


@njit(cache=True, nogil=True)
def has_cross_kernel(bits, ground, want_green, ends, slots, internal, left, right, top, bottom):
    m = bits.shape[0]
    queue = np.empty(m, dtype=np.int64)
    seen = np.zeros(m, dtype=np.uint8)
    if not _bridge(bits, ground, want_green, left, right, ends, slots, internal, queue, seen):
        return False
    return _bridge(bits, ground, want_green, top, bottom, ends, slots, internal, queue, seen)


@njit(cache=True, nogil=True)
def glauber_hit_kernel(bits, ground, face_edges, corners, slots, is_head, internal, ends,
                       left, right, top, bottom, log_tw, cap, stride, target, rng):
    """Run until ``target`` holds at a multiple of ``stride`` or ``cap`` steps pass.

    Returns the step count at the hit, or -1 when capped.
    """
    want_green = target == TARGET_GREEN_CROSS
    if has_cross_kernel(bits, ground, want_green, ends, slots, internal, left, right, top, bottom):
        return 0
    t = 0
    while t < cap:
        todo = stride
        if cap - t < todo:
            todo = cap - t
        for _ in range(todo):
            _glauber_once(bits, face_edges, corners, slots, is_head, internal, log_tw, _TYPES, rng)
        t += todo
        if has_cross_kernel(bits, ground, want_green, ends, slots, internal, left, right, top, bottom):
            return t
    return -1
