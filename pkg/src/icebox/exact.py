"""Exhaustive state spaces, exact Gibbs measures, transition matrices and conductance."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy import sparse
from scipy.special import logsumexp

from .errors import BudgetExceeded, NotAPartition, NotIrreducible
from .lattice import BoundaryCondition, LatticeGeometry, build_lattice
from .state import AWAY, TOWARD, Configuration, WeightParams, type_counts

__all__ = [
    "StateSpace",
    "ChainKernel",
    "CutReport",
    "RecipeReport",
    "DEFAULT_BUDGET",
    "estimate_state_count",
    "enumerate_states",
    "brute_force_count",
    "partition_function",
    "log_partition_function",
    "gibbs",
    "transition_matrix",
    "stationarity_error",
    "detailed_balance_error",
    "stationary_distribution",
    "is_strongly_connected",
    "conductance",
    "verify_three_step_recipe",
    "save_state_space",
    "load_state_space",
]

DEFAULT_BUDGET = 10**7
KERNEL_BUDGET = 2 * 10**4


@dataclass(eq=False)
class StateSpace:
    """Indexed list of configurations; perfect states come first."""

    geom: LatticeGeometry
    states: list
    index: dict
    num_perfect: int
    _counts: np.ndarray | None = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.states)

    @property
    def includes_near_perfect(self) -> bool:
        return self.num_perfect < len(self.states)

    def id_of(self, cfg: Configuration) -> int:
        return self.index[cfg.key]

    @property
    def type_counts(self) -> np.ndarray:
        """``(len, 7)`` matrix of vertex-type counts."""
        if self._counts is None:
            self._counts = np.array([type_counts(s) for s in self.states], dtype=np.int64)
        return self._counts

    def log_weights(self, p: WeightParams) -> np.ndarray:
        lw = p.log_type_weights.copy()
        lw[0] = 0.0
        return self.type_counts @ lw

    def digest(self) -> str:
        h = hashlib.sha256()
        for s in self.states:
            h.update(s.to_line().encode())
            h.update(b"\n")
        return h.hexdigest()


def estimate_state_count(geom: LatticeGeometry, include_near_perfect: bool = False) -> float:
    """Crude size estimate: random orientations times the ice-rule pass rate per vertex."""
    m, k = geom.num_edges, geom.num_internal
    est = 2.0**m * (6 / 16) ** k
    if include_near_perfect:
        est *= 1 + m * (m - 1)
    return est


def _dfs_orientations(geom: LatticeGeometry, fixed: dict) -> list:
    """All bit vectors obeying the ice rule, with ``fixed`` edges' halves preset.

    ``fixed`` maps edge -> (tail_half, head_half).
    """
    m = geom.num_edges
    internal = geom.vertex_internal
    tails, heads = geom.edge_tail, geom.edge_head
    inn = np.zeros(geom.num_vertices, dtype=np.int64)
    left = np.zeros(geom.num_vertices, dtype=np.int64)
    for e in range(m):
        for v in (tails[e], heads[e]):
            if internal[v]:
                left[v] += 1
    for e, (ht, hh) in fixed.items():
        for v, end, hv in ((tails[e], 0, ht), (heads[e], 1, hh)):
            if internal[v]:
                left[v] -= 1
                inn[v] += 1 - (hv ^ end)
    for v in np.flatnonzero(internal):
        if inn[v] > 2 or inn[v] + left[v] < 2:
            return []
    free = [e for e in range(m) if e not in fixed]
    rank = {int(v): i for i, v in enumerate(geom.internal_vertices)}

    def last_vertex(e):
        return max(rank.get(int(tails[e]), -1), rank.get(int(heads[e]), -1))

    order = sorted(free, key=lambda e: (last_vertex(e), e))
    ends = [
        [(int(v), end) for v, end in ((tails[e], 0), (heads[e], 1)) if internal[v]]
        for e in order
    ]
    bits = np.zeros(m, dtype=np.uint8)
    for e, (ht, _) in fixed.items():
        bits[e] = 1
    out = []
    inn_l = inn.tolist()
    left_l = left.tolist()

    def rec(i):
        if i == len(order):
            out.append(bits.copy())
            return
        e = order[i]
        for b in (0, 1):
            ok = True
            touched = []
            for v, end in ends[i]:
                inward = 1 - (b ^ end)
                inn_l[v] += inward
                left_l[v] -= 1
                touched.append((v, inward))
                if inn_l[v] > 2 or inn_l[v] + left_l[v] < 2:
                    ok = False
            if ok:
                bits[e] = b
                rec(i + 1)
            for v, inward in touched:
                inn_l[v] -= inward
                left_l[v] += 1
        bits[e] = 0

    rec(0)
    return out


def enumerate_states(
    geom: LatticeGeometry, include_near_perfect: bool = False, budget: int = DEFAULT_BUDGET
) -> StateSpace:
    """Depth-first enumeration with ice-rule pruning.

    Raises :class:`BudgetExceeded` when the size estimate is above ``budget``.
    """
    est = estimate_state_count(geom, include_near_perfect)
    if est > budget:
        raise BudgetExceeded(
            f"estimated {est:.3g} states for n={geom.n} {geom.bc.value}; budget is {budget}"
        )
    perfect = [Configuration(geom, b) for b in _dfs_orientations(geom, {})]
    perfect.sort(key=lambda c: c.key)
    states = list(perfect)
    if include_near_perfect:
        near = []
        m = geom.num_edges
        for et in range(m):
            for ea in range(m):
                if ea == et:
                    continue
                fixed = {et: (1, 0), ea: (0, 1)}
                for b in _dfs_orientations(geom, fixed):
                    near.append(Configuration(geom, b, [(et, TOWARD), (ea, AWAY)]))
        near.sort(key=lambda c: c.key)
        states += near
    index = {s.key: i for i, s in enumerate(states)}
    if len(index) != len(states):
        raise AssertionError("duplicate states in enumeration")
    return StateSpace(geom=geom, states=states, index=index, num_perfect=len(perfect))


def brute_force_count(geom: LatticeGeometry) -> int:
    """Count Eulerian orientations by testing all ``2^m`` bit vectors (tiny regions only)."""
    m = geom.num_edges
    if m > 22:
        raise BudgetExceeded("brute force limited to 22 edges")
    codes = np.arange(2**m, dtype=np.int64)
    bits = ((codes[:, None] >> np.arange(m)) & 1).astype(np.uint8)
    ok = np.ones(len(codes), dtype=bool)
    for v in geom.internal_vertices:
        deg_in = np.zeros(len(codes), dtype=np.int64)
        for q in range(4):
            e = geom.vertex_slots[v, q]
            end = int(geom.slot_is_head[v, q])
            deg_in += 1 - (bits[:, e] ^ end)
        ok &= deg_in == 2
    return int(ok.sum())


# ---------------------------------------------------------------------------
# Gibbs measure

def log_partition_function(space: StateSpace, p: WeightParams) -> float:
    return float(logsumexp(space.log_weights(p)))


def partition_function(space: StateSpace, p: WeightParams, exact: bool = False):
    """``Z`` as a float, or as an exact :class:`~fractions.Fraction` with ``exact=True``."""
    if exact:
        tw = [Fraction(0)] + [p.exact(t) for t in range(1, 7)]
        total = Fraction(0)
        for row in space.type_counts:
            w = Fraction(1)
            for t in range(1, 7):
                if row[t]:
                    w *= tw[t] ** int(row[t])
            total += w
        return total
    return math.exp(log_partition_function(space, p))


def gibbs(space: StateSpace, p: WeightParams) -> np.ndarray:
    lw = space.log_weights(p)
    return np.exp(lw - logsumexp(lw))


# ---------------------------------------------------------------------------
# transition matrices

@dataclass(eq=False)
class ChainKernel:
    """Row-stochastic transition matrix over a state space (dense or CSR)."""

    space: StateSpace
    chain: str
    params: WeightParams
    matrix: object

    def dense(self) -> np.ndarray:
        if sparse.issparse(self.matrix):
            return self.matrix.toarray()
        return np.asarray(self.matrix)

    def csr(self) -> sparse.csr_matrix:
        return sparse.csr_matrix(self.matrix)

    def row(self, i: int) -> np.ndarray:
        if sparse.issparse(self.matrix):
            return self.matrix.getrow(i).toarray().ravel()
        return np.asarray(self.matrix[i]).ravel()

    @property
    def diagonal(self) -> np.ndarray:
        if sparse.issparse(self.matrix):
            return self.matrix.diagonal()
        return np.diag(self.matrix)


def _glauber_entries(space: StateSpace, p: WeightParams):
    geom = space.geom
    lw = space.log_weights(p)
    F = geom.num_faces
    cw = np.array([1, 0, 0, 1], dtype=np.uint8)  # top right bottom left, clockwise
    rows, cols, vals = [], [], []
    for x, cfg in enumerate(space.states[: space.num_perfect]):
        stay = 1.0
        for f in range(F):
            idx = geom.face_edges[f]
            real = idx >= 0
            cur = cfg.bits[idx[real]]
            if np.array_equal(cur, cw[real]):
                new = 1 - cw[real]
            elif np.array_equal(cur, 1 - cw[real]):
                new = cw[real]
            else:
                continue
            bits = cfg.bits.copy()
            bits[idx[real]] = new
            y = space.index[Configuration(geom, bits).key]
            pr = 0.5 / F / (1.0 + math.exp(lw[x] - lw[y]))
            rows.append(x)
            cols.append(y)
            vals.append(pr)
            stay -= pr
        rows.append(x)
        cols.append(x)
        vals.append(stay)
    return rows, cols, vals


def _loop_entries(space: StateSpace, p: WeightParams):
    from .chains import directed_loop_neighbors

    lw = space.log_weights(p)
    nbrs = []
    for cfg in space.states:
        ids = sorted({space.index[y.key] for y in directed_loop_neighbors(cfg)})
        nbrs.append(ids)
    rows, cols, vals = [], [], []
    for x, ids in enumerate(nbrs):
        stay = 1.0
        dx = len(ids)
        for y in ids:
            log_acc = min(0.0, lw[y] - lw[x] + math.log(dx) - math.log(len(nbrs[y])))
            pr = 0.5 / dx * math.exp(log_acc)
            rows.append(x)
            cols.append(y)
            vals.append(pr)
            stay -= pr
        rows.append(x)
        cols.append(x)
        vals.append(stay)
    return rows, cols, vals


def transition_matrix(space: StateSpace, chain: str, p: WeightParams, dense: bool | None = None) -> ChainKernel:
    """Exact one-step kernel (laziness included) of Glauber or directed-loop dynamics.

    The Glauber kernel lives on the perfect states only.  Matrices are dense
    up to a few thousand states and CSR above that unless ``dense`` is given.
    """
    chain = _chain_name(chain)
    if chain == "glauber":
        if space.geom.periodic:
            raise NotIrreducible("Glauber dynamics is not irreducible on the torus")
        size = space.num_perfect
        sub = StateSpace(space.geom, space.states[:size],
                         {s.key: i for i, s in enumerate(space.states[:size])}, size,
                         None if space._counts is None else space._counts[:size])
        rows, cols, vals = _glauber_entries(sub, p)
        target = sub
    else:
        if not space.includes_near_perfect:
            raise ValueError("directed-loop kernel needs near-perfect states in the space")
        size = len(space)
        rows, cols, vals = _loop_entries(space, p)
        target = space
    if size > KERNEL_BUDGET:
        raise BudgetExceeded(f"{size} states exceeds kernel budget {KERNEL_BUDGET}")
    mat = sparse.coo_matrix((vals, (rows, cols)), shape=(size, size)).tocsr()
    if dense is None:
        dense = size <= 4000
    return ChainKernel(target, chain, p, mat.toarray() if dense else mat)


def _chain_name(chain) -> str:
    c = str(getattr(chain, "value", chain)).lower()
    if c in ("glauber", "g"):
        return "glauber"
    if c in ("loop", "directed_loop", "directedloop", "directed-loop", "d"):
        return "loop"
    raise ValueError(f"unknown chain {chain!r}")


def stationarity_error(kernel: ChainKernel, pi: np.ndarray) -> float:
    """``max |pi T - pi|``."""
    m = kernel.matrix
    out = (m.T @ pi) if sparse.issparse(m) else pi @ m
    return float(np.max(np.abs(np.asarray(out).ravel() - pi)))


def detailed_balance_error(kernel: ChainKernel, pi: np.ndarray) -> float:
    """``max |pi(x)T(x,y) - pi(y)T(y,x)|`` over all pairs."""
    flow = sparse.diags(pi) @ kernel.csr()
    diff = flow - flow.T
    return float(abs(diff).max()) if diff.nnz else 0.0


def stationary_distribution(kernel: ChainKernel, tol: float = 1e-13, max_iter: int = 200_000) -> np.ndarray:
    """Left eigenvector for eigenvalue 1 by a direct solve (dense) or power iteration."""
    n = kernel.matrix.shape[0]
    if not sparse.issparse(kernel.matrix) and n <= 4000:
        A = kernel.dense().T - np.eye(n)
        A[-1, :] = 1.0
        rhs = np.zeros(n)
        rhs[-1] = 1.0
        return np.linalg.solve(A, rhs)
    T = kernel.csr().T.tocsr()
    pi = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nxt = T @ pi
        if np.max(np.abs(nxt - pi)) < tol:
            return nxt
        pi = nxt
    return pi


def is_strongly_connected(kernel: ChainKernel) -> bool:
    from scipy.sparse.csgraph import connected_components

    m = kernel.csr().copy()
    m.setdiag(0)
    m.eliminate_zeros()
    k, _ = connected_components(m, directed=True, connection="strong")
    return k == 1


# ---------------------------------------------------------------------------
# conductance

@dataclass(frozen=True)
class CutReport:
    S: tuple
    pi_S: float
    Q: float
    Q_reverse: float
    phi: float
    mixing_lower_bound: float
    swapped: bool
    disconnected: bool

    def to_dict(self) -> dict:
        return {
            "size": len(self.S),
            "pi_S": self.pi_S,
            "Q": self.Q,
            "Q_reverse": self.Q_reverse,
            "phi": self.phi,
            "mixing_lower_bound": self.mixing_lower_bound,
            "swapped": self.swapped,
            "disconnected": self.disconnected,
        }


def _as_mask(n: int, S) -> np.ndarray:
    S = np.asarray(S)
    if S.dtype == bool:
        if S.shape != (n,):
            raise ValueError("boolean state set has the wrong length")
        return S.copy()
    mask = np.zeros(n, dtype=bool)
    mask[S.astype(np.int64)] = True
    return mask


def conductance(space_or_kernel, kernel: ChainKernel | None = None, S=None, pi: np.ndarray | None = None) -> CutReport:
    """Edge flow ``Q(S, S̄) / pi(S)`` of the cut, with ``S`` swapped to the lighter side.

    Call as ``conductance(space, kernel, S)`` or ``conductance(kernel, S=S)``.
    """
    if isinstance(space_or_kernel, ChainKernel):
        kernel = space_or_kernel
    if kernel is None or S is None:
        raise TypeError("conductance needs a kernel and a state set")
    size = kernel.matrix.shape[0]
    mask = _as_mask(size, S)
    if not mask.any() or mask.all():
        raise ValueError("the cut must be a non-empty proper subset")
    if pi is None:
        pi = gibbs(kernel.space, kernel.params)[:size]
    swapped = False
    if pi[mask].sum() > 0.5:
        mask = ~mask
        swapped = True
    T = kernel.csr()
    flow = sparse.diags(pi) @ T
    Q = float(flow[mask][:, ~mask].sum())
    Qr = float(flow[~mask][:, mask].sum())
    pS = float(pi[mask].sum())
    phi = Q / pS
    return CutReport(
        S=tuple(int(i) for i in np.flatnonzero(mask)),
        pi_S=pS,
        Q=Q,
        Q_reverse=Qr,
        phi=phi,
        mixing_lower_bound=math.inf if phi == 0 else 1.0 / (4.0 * phi),
        swapped=swapped,
        disconnected=phi == 0,
    )


@dataclass(frozen=True)
class RecipeReport:
    direct_transitions: int
    max_direct_probability: float
    pi_left: float
    pi_middle: float
    pi_right: float
    ratio: float

    @property
    def passed(self) -> bool:
        return self.direct_transitions == 0

    def to_dict(self) -> dict:
        return {**self.__dict__, "passed": self.passed}


def verify_three_step_recipe(space: StateSpace, kernel: ChainKernel, left, middle, right,
                             pi: np.ndarray | None = None) -> RecipeReport:
    """Check that no single step jumps from ``left`` straight into ``right``.

    Also reports ``pi(middle) / min(pi(left), pi(right))``.
    """
    size = kernel.matrix.shape[0]
    L, M, R = (_as_mask(size, s) for s in (left, middle, right))
    if np.any(L & M) or np.any(L & R) or np.any(M & R) or not np.all(L | M | R):
        raise NotAPartition("left, middle and right must partition the state space")
    if pi is None:
        pi = gibbs(kernel.space, kernel.params)[:size]
    block = kernel.csr()[L][:, R]
    direct = int((block > 0).sum())
    mx = float(block.max()) if block.nnz else 0.0
    pl, pm, pr = float(pi[L].sum()), float(pi[M].sum()), float(pi[R].sum())
    denom = min(pl, pr)
    return RecipeReport(direct, mx, pl, pm, pr, pm / denom if denom > 0 else math.inf)


# ---------------------------------------------------------------------------
# disk cache

def save_state_space(space: StateSpace, path) -> None:
    g = space.geom
    lines = [f"# icebox-statespace n={g.n} bc={g.bc.value} count={len(space)} "
             f"perfect={space.num_perfect} hash={space.digest()}"]
    lines += [s.to_line() for s in space.states]
    Path(path).write_text("\n".join(lines) + "\n")


def load_state_space(path) -> StateSpace:
    text = Path(path).read_text().splitlines()
    header = dict(tok.split("=", 1) for tok in text[0].split()[2:])
    geom = build_lattice(int(header["n"]), BoundaryCondition.parse(header["bc"]))
    states = [Configuration.from_line(geom, ln) for ln in text[1:] if ln.strip()]
    space = StateSpace(geom, states, {s.key: i for i, s in enumerate(states)}, int(header["perfect"]))
    if len(states) != int(header["count"]) or space.digest() != header["hash"]:
        raise ValueError(f"state space cache {path} is corrupt")
    return space
