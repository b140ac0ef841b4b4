"""Gaussian belief propagation for ``A x = b`` with symmetric ``A``.

Messages live on the directed edges of ``A``'s off-diagonal support (see
:class:`~gabp_mud.matrix.SparseSymmetricMatrix` for the edge index). For an
edge ``i -> j`` the engine keeps a precision message ``P_ij`` and a mean
message ``mu_ij``; node ``i`` has prior precision ``A_ii`` and prior mean
``b_i / A_ii``. One sweep computes, for every edge,

    cavity precision   P_i\\j  = A_ii + sum_{k in N(i)\\j} P_ki
    cavity mean        mu_i\\j = (b_i + sum_{k in N(i)\\j} P_ki mu_ki) / P_i\\j
    new messages       P_ij = -A_ij^2 / P_i\\j,   mu_ij = -A_ij mu_i\\j / P_ij

Nothing here assumes positive precisions: the augmented detection matrix is
indefinite and its chip-side messages are negative.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .matrix import SparseSymmetricMatrix, as_vector


class SolverError(ArithmeticError):
    """A sweep produced a zero cavity precision or a non-finite message."""

    def __init__(self, message, iteration=None, edge=None):
        super().__init__(message)
        self.iteration = iteration
        self.edge = edge


class ZeroDiagonalError(ValueError):
    def __init__(self, index):
        super().__init__(f"zero diagonal entry A[{index},{index}]; GaBP needs A_ii != 0")
        self.index = index


@dataclass(frozen=True)
class SolverConfig:
    """Iteration controls.

    ``tolerance`` bounds the per-sweep change of every message, measured as
    ``|new - old| / max(1, |new|)``; for messages of magnitude up to one this
    is the plain absolute change. ``workers`` only splits the synchronous
    edge update across threads and never changes the result.
    """

    tolerance: float = 1e-10
    max_iterations: int = 10_000
    schedule: str = "synchronous"
    damping: float = 0.0
    workers: int = 1

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if int(self.max_iterations) < 1:
            raise ValueError("max_iterations must be a positive integer")
        if self.schedule not in ("synchronous", "sequential"):
            raise ValueError(f"unknown schedule {self.schedule!r}")
        if not 0.0 <= self.damping < 1.0:
            raise ValueError("damping must lie in [0, 1)")
        if int(self.workers) < 1:
            raise ValueError("workers must be positive")


@dataclass(frozen=True)
class NodePriors:
    precision: np.ndarray
    mean: np.ndarray


@dataclass
class MessageState:
    """Precision and mean messages indexed like ``A.src``/``A.dst``."""

    precision: np.ndarray
    mean: np.ndarray

    def copy(self):
        return MessageState(self.precision.copy(), self.mean.copy())

    def as_dict(self, A: SparseSymmetricMatrix):
        """``{(i, j): (P_ij, mu_ij)}`` for inspection and tests."""
        return {(int(i), int(j)): (float(p), float(m))
                for i, j, p, m in zip(A.src, A.dst, self.precision, self.mean)}


@dataclass(frozen=True)
class SolveResult:
    means: np.ndarray
    precisions: np.ndarray
    converged: bool
    iterations: int
    residual_history: list = field(default_factory=list)
    messages: MessageState | None = field(default=None, repr=False, compare=False)


def check_system(A, b):
    b = as_vector(b, "b")
    if b.shape[0] != A.dim:
        raise ValueError(f"b has {b.shape[0]} entries, A has dimension {A.dim}")
    zero = np.flatnonzero(A.diagonal == 0)
    if zero.size:
        raise ZeroDiagonalError(int(zero[0]))
    return b


def initialize(A: SparseSymmetricMatrix, b):
    """Node priors ``(A_ii, b_i / A_ii)`` and all-zero edge messages."""
    b = check_system(A, b)
    priors = NodePriors(A.diagonal.copy(), b / A.diagonal)
    m = A.num_directed_edges
    return MessageState(np.zeros(m), np.zeros(m)), priors


def infer(A: SparseSymmetricMatrix, b, state: MessageState):
    """Posterior means and precisions from the current messages."""
    b = as_vector(b, "b")
    P = A.diagonal + np.bincount(A.dst, weights=state.precision, minlength=A.dim)
    h = b + np.bincount(A.dst, weights=state.precision * state.mean, minlength=A.dim)
    zero = np.flatnonzero(P == 0)
    if zero.size:
        raise SolverError(f"posterior precision of node {int(zero[0])} is zero")
    return h / P, P


def _change(new, old):
    if new.size == 0:
        return 0.0
    return float(np.max(np.abs(new - old) / np.maximum(1.0, np.abs(new))))


def _edge(A, e):
    return int(A.src[e]), int(A.dst[e])


def _check_finite(A, iteration, *arrays):
    for arr in arrays:
        bad = np.flatnonzero(~np.isfinite(arr))
        if bad.size:
            i, j = _edge(A, int(bad[0]))
            raise SolverError(
                f"non-finite message on edge {i}->{j} at iteration {iteration}",
                iteration, (i, j))


def _zero_cavity(A, iteration, offset, cav_P):
    i, j = _edge(A, offset + int(np.flatnonzero(cav_P == 0)[0]))
    raise SolverError(
        f"zero cavity precision on edge {i}->{j} at iteration {iteration}",
        iteration, (i, j))


class _Sweeper:
    """Holds the per-system constants used by every sweep."""

    def __init__(self, A, b, config):
        self.A = A
        self.b = b
        self.config = config
        self.a2 = A.weight * A.weight
        self.iteration = 0
        # run() skips the per-sweep scan and checks the residual instead
        self.check_finite = True

    def _edge_update(self, sl, Ptot, htot, P, H):
        A = self.A
        src = A.src[sl]
        rev = A.reverse[sl]
        cav_P = Ptot[src] - P[rev]
        if np.any(cav_P == 0):
            _zero_cavity(A, self.iteration, sl.start, cav_P)
        cav_mu = (htot[src] - H[rev]) / cav_P
        new_P = -self.a2[sl] / cav_P
        new_mu = -A.weight[sl] * cav_mu / new_P
        return new_P, new_mu

    def synchronous(self, state, pool=None):
        A = self.A
        P, mu = state.precision, state.mean
        H = P * mu
        Ptot = A.diagonal + np.bincount(A.dst, weights=P, minlength=A.dim)
        htot = self.b + np.bincount(A.dst, weights=H, minlength=A.dim)
        m = P.size
        if pool is None:
            new_P, new_mu = self._edge_update(slice(0, m), Ptot, htot, P, H)
        else:
            bounds = np.linspace(0, m, self.config.workers + 1).astype(int)
            parts = list(pool.map(
                lambda s: self._edge_update(slice(s[0], s[1]), Ptot, htot, P, H),
                zip(bounds[:-1], bounds[1:])))
            new_P = np.concatenate([p[0] for p in parts])
            new_mu = np.concatenate([p[1] for p in parts])
        return self._finish(state, new_P, new_mu)

    def sequential(self, state):
        """Node-ordered sweep; node ``i`` reads messages already refreshed by nodes ``< i``."""
        A = self.A
        P = state.precision.copy()
        mu = state.mean.copy()
        d = self.config.damping
        for i in range(A.dim):
            sl = slice(A.out_ptr[i], A.out_ptr[i + 1])
            if sl.start == sl.stop:
                continue
            incoming = A.reverse[sl]
            p_in = P[incoming]
            h_in = p_in * mu[incoming]
            cav_P = A.diagonal[i] + p_in.sum() - p_in
            if np.any(cav_P == 0):
                _zero_cavity(A, self.iteration, sl.start, cav_P)
            cav_mu = (self.b[i] + h_in.sum() - h_in) / cav_P
            new_P = -self.a2[sl] / cav_P
            new_mu = -A.weight[sl] * cav_mu / new_P
            if d:
                new_P = d * P[sl] + (1.0 - d) * new_P
                new_mu = d * mu[sl] + (1.0 - d) * new_mu
            P[sl] = new_P
            mu[sl] = new_mu
        if self.check_finite:
            _check_finite(A, self.iteration, P, mu)
        return MessageState(P, mu)

    def _finish(self, state, new_P, new_mu):
        d = self.config.damping
        if d:
            new_P = d * state.precision + (1.0 - d) * new_P
            new_mu = d * state.mean + (1.0 - d) * new_mu
        if self.check_finite:
            _check_finite(self.A, self.iteration, new_P, new_mu)
        return MessageState(new_P, new_mu)


def iterate_once(A: SparseSymmetricMatrix, b, state: MessageState, config=None):
    """One sweep of message updates; returns a new :class:`MessageState`."""
    config = config or SolverConfig()
    b = check_system(A, b)
    sweeper = _Sweeper(A, b, config)
    sweeper.iteration = 1
    with np.errstate(over="ignore", invalid="ignore"):
        if config.schedule == "sequential":
            return sweeper.sequential(state)
        return sweeper.synchronous(state)


def message_change(new: MessageState, old: MessageState) -> float:
    """Largest scaled change over both message families."""
    # np.max, unlike the builtin, propagates NaN
    return float(np.max([_change(new.precision, old.precision), _change(new.mean, old.mean)]))


def run(A: SparseSymmetricMatrix, b, config: SolverConfig | None = None, state=None):
    """Iterate until every message settles, then infer means and precisions.

    Non-convergence is reported through ``converged=False``; arithmetic
    breakdown (zero cavity precision, overflow) raises :class:`SolverError`.
    """
    config = config or SolverConfig()
    b = check_system(A, b)
    if state is None:
        state, _ = initialize(A, b)
    sweeper = _Sweeper(A, b, config)
    sweeper.check_finite = False
    history = []
    converged = A.num_directed_edges == 0
    pool = None
    if config.schedule == "synchronous" and config.workers > 1:
        pool = ThreadPoolExecutor(max_workers=config.workers)
    try:
        # overflow surfaces as a SolverError from the finiteness check
        with np.errstate(over="ignore", invalid="ignore"):
            while not converged and sweeper.iteration < config.max_iterations:
                sweeper.iteration += 1
                if config.schedule == "sequential":
                    new = sweeper.sequential(state)
                else:
                    new = sweeper.synchronous(state, pool)
                r = message_change(new, state)
                if not np.isfinite(r):
                    # a NaN or Inf message always poisons the scaled change
                    _check_finite(A, sweeper.iteration, new.precision, new.mean)
                history.append(r)
                state = new
                converged = r <= config.tolerance
    finally:
        if pool is not None:
            pool.shutdown()
    means, precisions = infer(A, b, state)
    return SolveResult(means, precisions, converged, sweeper.iteration, history, state)


def decide(means, clip="sign"):
    """Apply the clipping function elementwise.

    ``clip`` is ``"sign"`` (ties at zero go to +1), ``"identity"`` or any
    callable mapping an array to an array.
    """
    means = np.asarray(means, dtype=np.float64)
    if callable(clip):
        return np.asarray(clip(means), dtype=np.float64)
    if clip == "sign":
        return np.where(means >= 0, 1.0, -1.0)
    if clip == "identity":
        return means.copy()
    raise ValueError(f"unknown clipping function {clip!r}")
