"""Linear multiuser detectors.

Observations ``y`` are raw chip samples, ``y = S x + noise`` with ``S`` of
shape (n chips, k users). The matched filter applies the bank ``S^T``
itself. MMSE, decorrelator and pseudoinverse detection all run GaBP on the
augmented system, so ``S^T S`` is never formed.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .gabp import SolveResult, SolverConfig, decide, run
from .matrix import as_noise, as_rectangular, as_vector, build_augmented, build_augmented_rhs

#: Stand-in chip variance for the noiseless detectors; the augmented
#: diagonal must be nonzero for GaBP's prior means to exist.
ETA = 1e-9

KINDS = ("mf", "zf", "mmse", "pinv")
_ALIASES = {"decorrelator": "zf", "pseudoinverse": "pinv", "matched-filter": "mf"}


@dataclass(frozen=True)
class DetectorSpec:
    kind: str = "mmse"
    clipping: str = "sign"

    def __post_init__(self):
        kind = _ALIASES.get(self.kind, self.kind)
        if kind not in KINDS:
            raise ValueError(f"unknown detector {self.kind!r}; choose from {', '.join(KINDS)}")
        object.__setattr__(self, "kind", kind)


class Detection(NamedTuple):
    estimates: np.ndarray
    raw: np.ndarray
    result: SolveResult | None


def _check(S, y):
    S = as_rectangular(S)
    y = as_vector(y, "y")
    if y.shape[0] != S.shape[0]:
        raise ValueError(f"y has {y.shape[0]} entries but S has {S.shape[0]} rows")
    return S, y


def detect_mf(S, y, clip="sign"):
    S, y = _check(S, y)
    raw = S.T @ y
    return Detection(decide(raw, clip), raw, None)


def _augmented_solve(S, psi, y, clip, config):
    k = S.shape[1]
    A = build_augmented(S, psi)
    result = run(A, build_augmented_rhs(y, k), config or SolverConfig())
    raw = result.means[:k]
    return Detection(decide(raw, clip), raw, result)


def detect_mmse(S, psi, y, clip="sign", config=None):
    """``(S^T S + Psi)^{-1} S^T y`` from the first ``k`` GaBP means.

    ``psi`` is a scalar variance or one variance per chip, all positive.
    """
    S, y = _check(S, y)
    psi = as_noise(psi, S.shape[0])
    if np.any(psi <= 0):
        raise ValueError("MMSE detection needs positive noise variances; "
                         "use detect_pseudoinverse for the noiseless case")
    return _augmented_solve(S, psi, y, clip, config)


def detect_pseudoinverse(S, y, config=None, clip="identity", eta=ETA):
    """``S^+ y`` for full-column-rank ``S``, via the augmented system with ``Psi = eta I``.

    The result differs from the exact pseudoinverse by O(eta).
    """
    S, y = _check(S, y)
    return _augmented_solve(S, np.full(S.shape[0], eta), y, clip, config)


def detect_decorrelator(S, y, clip="sign", config=None, eta=ETA):
    return detect_pseudoinverse(S, y, config, clip, eta)


def detect(spec: DetectorSpec, S, psi, y, config=None):
    """Dispatch on ``spec.kind``; ``psi`` is ignored by every kind but MMSE."""
    if spec.kind == "mf":
        return detect_mf(S, y, spec.clipping)
    if spec.kind == "mmse":
        return detect_mmse(S, psi, y, spec.clipping, config)
    return detect_pseudoinverse(S, y, config, spec.clipping)


def dense_oracle(kind, S, psi, y):
    """Direct-solve reference for each detector (test and audit use only).

    With per-chip variances the augmented system solves
    ``x = S^T (S S^T + Psi)^{-1} y``, which equals ``(S^T S + s2 I)^{-1} S^T y``
    when ``Psi = s2 I``.
    """
    S, y = _check(S, y)
    if kind == "mf":
        return S.T @ y
    if kind == "mmse":
        psi = as_noise(psi, S.shape[0])
        if np.all(psi == psi[0]):
            return np.linalg.solve(S.T @ S + psi[0] * np.eye(S.shape[1]), S.T @ y)
        return S.T @ np.linalg.solve(S @ S.T + np.diag(psi), y)
    return np.linalg.solve(S.T @ S, S.T @ y)
