"""Sufficient convergence conditions for GaBP on a symmetric system."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .matrix import SparseSymmetricMatrix, as_noise, as_rectangular, build_augmented


@dataclass(frozen=True)
class DiagnosticsReport:
    is_diagonally_dominant: bool
    dd_margin: float
    noise_threshold_satisfied: bool
    noise_threshold_value: float
    walk_summable: bool
    spectral_radius_estimate: float
    regularization: np.ndarray | None = None


def column_slack(A: SparseSymmetricMatrix) -> np.ndarray:
    """``|A_jj| - sum_{i != j} |A_ij|`` for every column."""
    return np.abs(A.diagonal) - A.column_abs_sums()


def check_diagonal_dominance(A: SparseSymmetricMatrix) -> tuple[bool, float]:
    """Strict column diagonal dominance and the minimum column slack."""
    margin = float(column_slack(A).min())
    return margin > 0.0, margin


def noise_threshold_check(S, psi) -> tuple[bool, float]:
    """Compare the smallest chip noise variance with the largest absolute row sum of ``S``.

    For ``+-1/sqrt(n)`` spreading every row sum equals ``k/sqrt(n)``. When
    every variance exceeds the threshold, the chip columns of the augmented
    matrix are strictly dominant.
    """
    S = as_rectangular(S)
    psi = as_noise(psi, S.shape[0])
    threshold = float(np.abs(S).sum(axis=1).max())
    return bool(psi.min() > threshold), threshold


def regularize_dd(A: SparseSymmetricMatrix, eps: float):
    """Enlarge diagonal magnitudes until every column slack is at least ``eps``.

    Returns the new matrix and the per-column change of the diagonal (zero
    where the column already had enough slack). A zero diagonal entry is
    grown in the positive direction.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    off = A.column_abs_sums()
    deficit = off + eps - np.abs(A.diagonal)
    sign = np.where(A.diagonal < 0, -1.0, 1.0)
    target = np.where(deficit > 0, sign * (off + eps), A.diagonal)
    added = target - A.diagonal
    return A.with_diagonal(target), added


def normalized_abs_offdiag(A: SparseSymmetricMatrix):
    """Edge weights of ``|D|^{-1/2} |A - D| |D|^{-1/2}`` as ``(src, dst, weight)``."""
    d = np.abs(A.diagonal)
    zero = np.flatnonzero(d == 0)
    if zero.size:
        raise ValueError(f"zero diagonal entry at index {int(zero[0])}")
    scale = 1.0 / np.sqrt(d)
    w = np.abs(A.weight) * scale[A.src] * scale[A.dst]
    return A.src, A.dst, w


def walk_summability_check(A: SparseSymmetricMatrix, tol=1e-13, max_iter=200_000):
    """Spectral radius of the normalized absolute off-diagonal matrix.

    The matrix is nonnegative and symmetric, so its Perron root is the top
    eigenvalue. Power iteration runs on ``M + c*I`` with ``c`` the largest row
    sum, which makes the iteration matrix positive semidefinite (no +-rho
    oscillation on bipartite graphs) and the Rayleigh quotient monotone.
    """
    src, dst, w = normalized_abs_offdiag(A)
    if w.size == 0:
        return True, 0.0
    n = A.dim
    shift = float(np.bincount(src, weights=w, minlength=n).max())
    x = np.full(n, 1.0 / np.sqrt(n))
    rho = 0.0
    for _ in range(max_iter):
        mx = np.bincount(src, weights=w * x[dst], minlength=n)
        rq = float(x @ mx)
        y = mx + shift * x
        x = y / np.linalg.norm(y)
        if abs(rq - rho) <= tol * max(1.0, abs(rq)):
            rho = rq
            break
        rho = rq
    return rho < 1.0, rho


def diagnose(S, psi, eps=1e-3) -> DiagnosticsReport:
    """Run every check on the augmented system built from ``S`` and ``psi``.

    The walk-summability entry is NaN when a zero noise variance leaves a
    zero on the diagonal.
    """
    A = build_augmented(S, psi)
    dd, margin = check_diagonal_dominance(A)
    ok, threshold = noise_threshold_check(S, psi)
    if np.any(A.diagonal == 0):
        ws, rho = False, float("nan")
    else:
        ws, rho = walk_summability_check(A)
    _, added = regularize_dd(A, eps)
    return DiagnosticsReport(dd, margin, ok, threshold, ws, rho, added)
