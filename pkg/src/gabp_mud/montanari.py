"""Montanari's CDMA message passing, written in real arithmetic.

Montanari's model couples user ``i`` and chip ``a`` through
``exp(-j s_ai omega_a x_i / sqrt(N))``. Every update multiplies two such
couplings, ``(-j s/sqrt(N))^2 = -s^2/N``, so the imaginary unit never
survives and the rules are equivalent to real GaBP on

    [[ I_K,  S^T/sqrt(N) ],
     [ S/sqrt(N), -sigma2 I_N ]]

with right-hand side ``[0, y]``. Under that mapping (``i`` a user, ``a`` a
chip, ``s = s_ai``):

    lam[i, a]       = P_{i\\a}                  left cavity precision
    lam_hat[i, a]   = -P_{a\\i}                 right cavity precision, sign flipped
    gamma[i, a]     = P_{i\\a} mu_{i\\a}        left cavity information
    gamma_hat[i, a] = P_{a\\i} mu_{a\\i}        right cavity information

and the GaBP edge messages follow as ``P_{i->a} = -s^2/(N lam)``,
``P_{a->i} = s^2/(N lam_hat)``, ``mu_{i->a} = sqrt(N) gamma / s`` and
``mu_{a->i} = sqrt(N) gamma_hat / s``. Both mean rules carry ``1/sqrt(N)``;
with ``1/N`` in either of them the lockstep match with GaBP breaks.

All four arrays are indexed ``[user, chip]`` regardless of message direction.
A state whose precisions are all zero means "no messages sent yet".
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gabp import MessageState, SolverConfig, infer, initialize, iterate_once, message_change
from .matrix import SparseSymmetricMatrix, as_rectangular, as_vector, build_augmented, build_augmented_rhs


@dataclass
class MontanariState:
    lam: np.ndarray
    lam_hat: np.ndarray
    gamma: np.ndarray
    gamma_hat: np.ndarray

    @classmethod
    def empty(cls, k, n):
        z = np.zeros((k, n))
        return cls(z.copy(), z.copy(), z.copy(), z.copy())

    @property
    def is_empty(self):
        return not (np.any(self.lam) or np.any(self.lam_hat))

    def arrays(self):
        return self.lam, self.lam_hat, self.gamma, self.gamma_hat

    def max_abs_diff(self, other):
        return max(float(np.max(np.abs(a - b))) for a, b in zip(self.arrays(), other.arrays()))


def _check_spreading(S):
    S = as_rectangular(S)
    if not np.all(np.abs(S) == 1.0):
        raise ValueError("Montanari's rules take unnormalized +-1 spreading entries")
    return S


def _check_sigma2(sigma2):
    if np.ndim(sigma2) != 0:
        raise ValueError("Montanari's rules use a single noise variance; "
                         "per-chip variances need the general GaBP path")
    sigma2 = float(sigma2)
    if not sigma2 > 0:
        raise ValueError("sigma2 must be positive")
    return sigma2


def _exclusive(terms, axis):
    """``sum_{b != a} terms[..., b]`` along ``axis`` without subtracting."""
    m = terms.shape[axis]
    mask = 1.0 - np.eye(m)
    return terms @ mask if axis == 1 else mask @ terms


def _reciprocal(values, what):
    bad = np.argwhere(values == 0)
    if bad.size:
        i, a = (int(v) for v in bad[0])
        raise ZeroDivisionError(f"{what} is zero on edge user {i} / chip {a}")
    return 1.0 / values


def montanari_iterate(S, sigma2, y, state: MontanariState) -> MontanariState:
    """One synchronous sweep of all four message families."""
    S = _check_spreading(S)
    sigma2 = _check_sigma2(sigma2)
    y = as_vector(y, "y")
    n, k = S.shape
    s = S.T  # [user, chip]
    root_n = np.sqrt(n)
    if state.is_empty:
        inv_lam = np.zeros((k, n))
        inv_lam_hat = np.zeros((k, n))
    else:
        inv_lam = _reciprocal(state.lam, "lambda")
        inv_lam_hat = _reciprocal(state.lam_hat, "lambda_hat")

    # user i -> chip a: sums over chips b != a
    lam = 1.0 + _exclusive(s * s * inv_lam_hat, axis=1) / n
    gamma = _exclusive(s * inv_lam_hat * state.gamma_hat, axis=1) / root_n
    # chip a -> user i: sums over users k != i
    lam_hat = sigma2 + _exclusive(s * s * inv_lam, axis=0) / n
    gamma_hat = y[None, :] - _exclusive(s * inv_lam * state.gamma, axis=0) / root_n
    return MontanariState(lam, lam_hat, gamma, gamma_hat)


def montanari_infer(state: MontanariState, S, sigma2):
    """Posterior means ``G/L`` and precisions ``L`` of the user nodes."""
    S = _check_spreading(S)
    _check_sigma2(sigma2)
    n, k = S.shape
    s = S.T
    if state.is_empty:
        inv = np.zeros((k, n))
    else:
        inv = _reciprocal(state.lam_hat, "lambda_hat")
    G = (s * inv * state.gamma_hat).sum(axis=1) / np.sqrt(n)
    L = 1.0 + (s * s * inv).sum(axis=1) / n
    if np.any(L == 0):
        raise ZeroDivisionError("posterior precision L is zero")
    return G / L, L


@dataclass(frozen=True)
class NotationMap:
    """Translation between GaBP edge messages and Montanari messages.

    ``S`` holds the unnormalized +-1 entries; the GaBP side lives on
    ``build_augmented(S / sqrt(N), sigma2)``.
    """

    S: np.ndarray
    sigma2: float

    def __post_init__(self):
        object.__setattr__(self, "S", _check_spreading(self.S))
        object.__setattr__(self, "sigma2", _check_sigma2(self.sigma2))

    @property
    def k(self):
        return self.S.shape[1]

    @property
    def n(self):
        return self.S.shape[0]

    def augmented(self) -> SparseSymmetricMatrix:
        return build_augmented(self.S / np.sqrt(self.n), np.full(self.n, self.sigma2))

    def rhs(self, y):
        return build_augmented_rhs(y, self.k)

    def _edge_positions(self, A):
        """Directed-edge indices of user->chip and chip->user messages as [user, chip] grids."""
        k, n = self.k, self.n
        if A.dim != k + n or A.num_directed_edges != 2 * k * n:
            raise ValueError("GaBP state does not live on the complete user/chip bipartite support")
        fwd = np.empty((k, n), dtype=np.int64)
        bwd = np.empty((k, n), dtype=np.int64)
        users = A.src < k
        fwd[A.src[users], A.dst[users] - k] = np.flatnonzero(users)
        bwd[A.dst[~users], A.src[~users] - k] = np.flatnonzero(~users)
        return fwd, bwd

    def to_montanari(self, state: MessageState, A=None) -> MontanariState:
        A = A or self.augmented()
        if state.precision.size != A.num_directed_edges:
            raise ValueError("message state does not match the augmented support")
        fwd, bwd = self._edge_positions(A)
        P, mu = state.precision, state.mean
        if not np.any(P):
            if np.any(mu):
                raise ValueError("mean messages without precision messages have no counterpart")
            return MontanariState.empty(self.k, self.n)
        if np.any(P == 0):
            raise ValueError("partially initialized GaBP state has no Montanari counterpart")
        s = self.S.T
        c = s * s / self.n
        root_n = np.sqrt(self.n)
        return MontanariState(
            lam=-c / P[fwd],
            lam_hat=c / P[bwd],
            gamma=s * mu[fwd] / root_n,
            gamma_hat=s * mu[bwd] / root_n,
        )

    def to_gabp(self, mstate: MontanariState, A=None) -> MessageState:
        A = A or self.augmented()
        fwd, bwd = self._edge_positions(A)
        m = A.num_directed_edges
        P = np.zeros(m)
        mu = np.zeros(m)
        if mstate.is_empty:
            if np.any(mstate.gamma) or np.any(mstate.gamma_hat):
                raise ValueError("mean messages without precision messages have no counterpart")
            return MessageState(P, mu)
        s = self.S.T
        c = s * s / self.n
        root_n = np.sqrt(self.n)
        P[fwd] = -c / mstate.lam
        P[bwd] = c / mstate.lam_hat
        mu[fwd] = root_n * mstate.gamma / s
        mu[bwd] = root_n * mstate.gamma_hat / s
        return MessageState(P, mu)


def translate_messages(gabp: MessageState, notation: NotationMap) -> MontanariState:
    return notation.to_montanari(gabp)


@dataclass(frozen=True)
class LockstepReport:
    iterations: int
    message_discrepancy: list
    mean_discrepancy: float
    gabp_means: np.ndarray
    montanari_means: np.ndarray
    converged: bool

    @property
    def max_discrepancy(self):
        return max(self.message_discrepancy, default=0.0)


def lockstep(S, sigma2, y, iterations=100, tol=1e-12):
    """Run GaBP and Montanari side by side from empty messages.

    After every sweep the GaBP state is translated and compared with the
    Montanari state; the per-sweep maximum absolute difference is recorded.
    Stops early once GaBP messages settle below ``tol``.
    """
    nm = NotationMap(S, sigma2)
    y = as_vector(y, "y")
    A = nm.augmented()
    b = nm.rhs(y)
    config = SolverConfig(tolerance=tol)
    gstate, _ = initialize(A, b)
    mstate = MontanariState.empty(nm.k, nm.n)
    diffs = []
    converged = False
    for _ in range(iterations):
        new = iterate_once(A, b, gstate, config)
        mstate = montanari_iterate(nm.S, nm.sigma2, y, mstate)
        diffs.append(nm.to_montanari(new, A).max_abs_diff(mstate))
        converged = message_change(new, gstate) <= tol
        gstate = new
        if converged:
            break
    g_means = infer(A, b, gstate)[0][:nm.k]
    m_means = montanari_infer(mstate, nm.S, nm.sigma2)[0]
    return LockstepReport(len(diffs), diffs, float(np.max(np.abs(g_means - m_means))),
                          g_means, m_means, converged)


def montanari_run(S, sigma2, y, tol=1e-10, max_iterations=10_000):
    """Iterate Montanari's rules to a fixed point; returns ``(means, precisions, converged, iterations)``."""
    S = _check_spreading(S)
    state = MontanariState.empty(S.shape[1], S.shape[0])
    for t in range(1, max_iterations + 1):
        new = montanari_iterate(S, sigma2, y, state)
        delta = new.max_abs_diff(state) if not state.is_empty else np.inf
        state = new
        if delta <= tol:
            means, prec = montanari_infer(state, S, sigma2)
            return means, prec, True, t
    means, prec = montanari_infer(state, S, sigma2)
    return means, prec, False, max_iterations
