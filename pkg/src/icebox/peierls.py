"""Self-avoiding walk counts and the Peierls bound on the fault-line mass."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numba import njit

from .errors import BudgetExceeded
from .state import WeightParams

__all__ = [
    "MU_HAT",
    "MU_REF",
    "SAW_CAP",
    "SawTable",
    "PeierlsBound",
    "count_saw",
    "saw_table",
    "naive_saw_count",
    "peierls_upper_bound",
    "fault_mass_exact",
    "fault_states",
]

MU_REF = 2.638158
MU_HAT = 2.639
SAW_CAP = 20

ORIGIN = "origin"
BOUNDARY = "boundary"

_AXIS_STEPS = np.array([(0, 1), (1, 0), (0, -1), (-1, 0)], dtype=np.int64)
# diagonal-lattice steps as (row, col); the first two go away from the top ring
_DIAG_STEPS = np.array([(1, 1), (1, -1), (-1, -1), (-1, 1)], dtype=np.int64)


@njit(cache=True)
def _dfs_counts(L, steps, first, half_plane, prefix_r, prefix_c):
    """Walk counts by depth for all walks extending a fixed prefix.

    ``half_plane`` keeps the row coordinate >= 0.  Iterative DFS over an
    occupancy grid wide enough for ``L`` steps in any direction.
    """
    W = 2 * L + 3
    off = L + 1
    grid = np.zeros((W, W), dtype=np.uint8)
    counts = np.zeros(L + 1, dtype=np.int64)
    k0 = prefix_r.shape[0] - 1
    for i in range(k0 + 1):
        grid[prefix_r[i] + off, prefix_c[i] + off] = 1
    counts[k0] = 1
    if k0 == L:
        return counts
    path_r = np.zeros(L + 1, dtype=np.int64)
    path_c = np.zeros(L + 1, dtype=np.int64)
    nxt = np.zeros(L + 1, dtype=np.int64)
    path_r[k0] = prefix_r[k0]
    path_c[k0] = prefix_c[k0]
    nxt[k0] = first
    depth = k0
    ns = steps.shape[0]
    while depth >= k0:
        if nxt[depth] >= ns or depth == L:
            if depth > k0:
                grid[path_r[depth] + off, path_c[depth] + off] = 0
            depth -= 1
            continue
        s = nxt[depth]
        nxt[depth] += 1
        r = path_r[depth] + steps[s, 0]
        c = path_c[depth] + steps[s, 1]
        if half_plane and r < 0:
            continue
        if grid[r + off, c + off]:
            continue
        depth += 1
        path_r[depth] = r
        path_c[depth] = c
        nxt[depth] = 0
        grid[r + off, c + off] = 1
        counts[depth] += 1
    return counts


@lru_cache(maxsize=8)
def _table(L: int, rooting: str) -> tuple:
    if rooting == ORIGIN:
        # walks whose first step is +col; those that go straight then turn up
        # mirror those that turn down
        counts = np.zeros(L + 1, dtype=np.int64)
        counts[0] = 1
        if L == 0:
            return tuple(int(x) for x in counts)
        for k in range(1, L + 1):
            pr = np.zeros(k + 1, dtype=np.int64)
            pc = np.arange(k + 1, dtype=np.int64)
            straight = np.zeros(L + 1, dtype=np.int64)
            straight[k] = 1
            if k < L:
                # turn "up" (row -1) after k straight steps
                pr2 = np.concatenate([pr, [-1]])
                pc2 = np.concatenate([pc, [k]])
                turned = _dfs_counts(L, _AXIS_STEPS, 0, False, pr2, pc2)
            else:
                turned = np.zeros(L + 1, dtype=np.int64)
            counts += 4 * (straight + 2 * turned)
        counts[0] = 1
        return tuple(int(x) for x in counts)
    if rooting == BOUNDARY:
        # first step must leave the ring; the two choices are mirror images
        if L == 0:
            return (1,)
        pr = np.array([0, 1], dtype=np.int64)
        pc = np.array([0, 1], dtype=np.int64)
        half = _dfs_counts(L, _DIAG_STEPS, 0, True, pr, pc)
        counts = 2 * half
        counts[0] = 1
        return tuple(int(x) for x in counts)
    raise ValueError(f"unknown rooting {rooting!r}")


def count_saw(l: int, rooting: str = ORIGIN, cap: int = SAW_CAP) -> int:
    """Number of self-avoiding walks with ``l`` steps.

    ``origin``: walks from the origin of the square lattice.
    ``boundary``: walks on the face-centre lattice that start on the top ring
    and never go above it (diagonal steps, row stays >= 0).
    """
    if l < 0:
        raise ValueError("length must be >= 0")
    if l > cap:
        raise BudgetExceeded(f"walk length {l} exceeds cap {cap}")
    return _table(cap, rooting)[l]


def naive_saw_count(l: int, rooting: str = ORIGIN) -> int:
    """Unpruned recursive enumeration, independent of the compiled counter."""
    steps = [tuple(s) for s in (_AXIS_STEPS if rooting == ORIGIN else _DIAG_STEPS)]

    def rec(pos, seen, k):
        if k == 0:
            return 1
        total = 0
        for dr, dc in steps:
            nxt = (pos[0] + dr, pos[1] + dc)
            if nxt in seen or (rooting == BOUNDARY and nxt[0] < 0):
                continue
            seen.add(nxt)
            total += rec(nxt, seen, k - 1)
            seen.remove(nxt)
        return total

    return rec((0, 0), {(0, 0)}, l)


@dataclass(frozen=True)
class SawTable:
    rooting: str
    counts: tuple

    @property
    def cap(self) -> int:
        return len(self.counts) - 1

    def growth(self, l: int) -> float:
        return self.counts[l] ** (1.0 / l)

    def submultiplicative_violations(self) -> list:
        out = []
        for l in range(1, self.cap + 1):
            for m in range(1, self.cap - l + 1):
                if self.counts[l + m] > self.counts[l] * self.counts[m]:
                    out.append((l, m))
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["l", "c_l", "c_l^(1/l)"])
        for l, c in enumerate(self.counts):
            w.writerow([l, c, "" if l == 0 else f"{c ** (1.0 / l):.12g}"])
        return buf.getvalue()


def saw_table(cap: int = SAW_CAP, rooting: str = ORIGIN) -> SawTable:
    if cap < 1:
        raise ValueError("cap must be >= 1")
    if cap > SAW_CAP:
        raise BudgetExceeded(f"cap {cap} exceeds the supported maximum {SAW_CAP}")
    return SawTable(rooting, _table(cap, rooting))


# ---------------------------------------------------------------------------
# Peierls bound

@dataclass(frozen=True)
class PeierlsBound:
    n: int
    params: WeightParams
    plain: float
    sharp: float
    use_exact_saw: bool

    @property
    def value(self) -> float:
        return self.sharp if self.use_exact_saw else self.plain

    def to_dict(self) -> dict:
        return {"n": self.n, "a": self.params.a, "b": self.params.b, "c": self.params.c,
                "B_plain": self.plain, "B_sharp": self.sharp}


def _bound(n: int, p: WeightParams, walks) -> float:
    lo, hi, c = min(p.a, p.b), max(p.a, p.b), p.c
    total = 0.0
    for l in range(n, n * n + 1):
        total += walks(l) * (c / lo) * (hi / c) ** (l - 1)
    return 2 * n * total


def peierls_upper_bound(n: int, p: WeightParams, use_exact_saw: bool = True,
                        cap: int = SAW_CAP) -> PeierlsBound:
    """``sum_{l=n}^{n^2} 2n w_l (c/min(a,b)) (max(a,b)/c)^(l-1)``.

    The plain variant takes ``w_l = MU_HAT**l``; the sharp one uses exact
    boundary-rooted walk counts up to ``cap`` and ``MU_HAT**l`` beyond.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    table = saw_table(cap, BOUNDARY).counts
    plain = _bound(n, p, lambda l: MU_HAT ** l)
    sharp = _bound(n, p, lambda l: table[l] if l <= cap else MU_HAT ** l)
    return PeierlsBound(n, p, plain, sharp, use_exact_saw)


def fault_states(space) -> np.ndarray:
    """Mask of perfect states with a fault line or almost fault line in either direction."""
    from .topology import Direction, build_L_tau, find_almost_fault_line

    mask = np.zeros(space.num_perfect, dtype=bool)
    for i, s in enumerate(space.states[: space.num_perfect]):
        lt = build_L_tau(s)
        mask[i] = any(find_almost_fault_line(s, d, lt) is not None for d in Direction)
    return mask


def fault_mass_exact(space, p: WeightParams, mask: np.ndarray | None = None) -> float:
    """Exact Gibbs mass of ``C_FL ∪ C_AFL`` over the perfect states."""
    from scipy.special import logsumexp

    if mask is None:
        mask = fault_states(space)
    lw = space.log_weights(p)[: space.num_perfect]
    if not mask.any():
        return 0.0
    return float(math.exp(logsumexp(lw[mask]) - logsumexp(lw)))
