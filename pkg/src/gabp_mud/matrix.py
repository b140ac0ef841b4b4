"""Matrix types and the augmented symmetric construction.

Spreading matrices are stored chips x users, i.e. ``S`` has ``n`` rows and
``k`` columns so that ``S @ x`` lives in chip space. The augmented system
orders its variables as ``k`` user nodes followed by ``n`` chip nodes::

    R = [[ I_k,  S^T ],
         [ S,   -Psi ]]

and the right-hand side is ``[0_k, y]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def as_vector(values, name="vector"):
    """Return ``values`` as a finite 1-D float64 array."""
    v = np.asarray(values, dtype=np.float64)
    if v.ndim == 0:
        v = v.reshape(1)
    if v.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains NaN or Inf")
    return v


def as_rectangular(values, name="S"):
    """Return ``values`` as a finite 2-D float64 array with positive dimensions."""
    m = np.asarray(values, dtype=np.float64)
    if m.ndim == 1:
        m = m.reshape(-1, 1)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise ValueError(f"{name} must be a non-empty 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains NaN or Inf")
    return m


def as_noise(psi, n):
    """Expand a scalar variance or validate a per-chip variance vector of length ``n``."""
    p = np.asarray(psi, dtype=np.float64)
    if p.ndim == 0:
        p = np.full(n, float(p))
    p = as_vector(p, "noise covariance")
    if p.shape[0] != n:
        raise ValueError(f"noise covariance has {p.shape[0]} entries, expected {n}")
    if np.any(p < 0):
        raise ValueError("noise variances must be nonnegative")
    return p


def _frozen(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SparseSymmetricMatrix:
    """Symmetric matrix stored as a diagonal plus upper-triangle coordinates.

    Each stored ``(rows[e], cols[e], values[e])`` with ``rows[e] < cols[e]``
    stands for both ``A[i, j]`` and ``A[j, i]``. Explicit zeros are dropped.

    The directed-edge index used by the message-passing engine is built once
    here: directed edge ``e`` goes ``src[e] -> dst[e]`` with weight
    ``weight[e]``, ``reverse[e]`` is the index of ``dst[e] -> src[e]`` and
    edges leaving node ``i`` occupy ``out_ptr[i]:out_ptr[i + 1]``.
    """

    dim: int
    diagonal: np.ndarray
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray
    src: np.ndarray = field(init=False, repr=False, compare=False)
    dst: np.ndarray = field(init=False, repr=False, compare=False)
    weight: np.ndarray = field(init=False, repr=False, compare=False)
    reverse: np.ndarray = field(init=False, repr=False, compare=False)
    out_ptr: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        dim = int(self.dim)
        if dim < 1:
            raise ValueError("dim must be positive")
        diag = as_vector(self.diagonal, "diagonal")
        if diag.shape[0] != dim:
            raise ValueError(f"diagonal has {diag.shape[0]} entries, expected {dim}")
        rows = np.asarray(self.rows, dtype=np.int64).reshape(-1)
        cols = np.asarray(self.cols, dtype=np.int64).reshape(-1)
        vals = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if not (rows.shape == cols.shape == vals.shape):
            raise ValueError("rows, cols and values must have equal length")
        if not np.all(np.isfinite(vals)):
            raise ValueError("off-diagonal values contain NaN or Inf")
        lo, hi = np.minimum(rows, cols), np.maximum(rows, cols)
        if np.any(lo == hi):
            raise ValueError("off-diagonal triplets must have i != j")
        if rows.size and (lo.min() < 0 or hi.max() >= dim):
            raise ValueError("off-diagonal index out of range")
        keep = vals != 0.0
        lo, hi, vals = lo[keep], hi[keep], vals[keep]
        order = np.lexsort((hi, lo))
        lo, hi, vals = lo[order], hi[order], vals[order]
        if lo.size > 1:
            dup = (lo[1:] == lo[:-1]) & (hi[1:] == hi[:-1])
            if np.any(dup):
                e = int(np.argmax(dup))
                raise ValueError(f"duplicate entry ({lo[e]}, {hi[e]})")

        src = np.concatenate([lo, hi])
        dst = np.concatenate([hi, lo])
        w = np.concatenate([vals, vals])
        order = np.lexsort((dst, src))
        src, dst, w = src[order], dst[order], w[order]
        m = lo.size
        # position of each undirected pair's two directions after sorting
        inv = np.empty(2 * m, dtype=np.int64)
        inv[order] = np.arange(2 * m)
        reverse = np.empty(2 * m, dtype=np.int64)
        reverse[inv[:m]] = inv[m:]
        reverse[inv[m:]] = inv[:m]
        out_ptr = np.zeros(dim + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=dim), out=out_ptr[1:])

        set_ = object.__setattr__
        set_(self, "dim", dim)
        set_(self, "diagonal", _frozen(diag.copy()))
        set_(self, "rows", _frozen(lo))
        set_(self, "cols", _frozen(hi))
        set_(self, "values", _frozen(vals))
        set_(self, "src", _frozen(src))
        set_(self, "dst", _frozen(dst))
        set_(self, "weight", _frozen(w))
        set_(self, "reverse", _frozen(reverse))
        set_(self, "out_ptr", _frozen(out_ptr))

    @classmethod
    def from_dense(cls, a, atol=0.0):
        """Build from a dense symmetric array; asymmetry beyond ``atol`` is an error."""
        a = np.asarray(a, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {a.shape}")
        if not np.allclose(a, a.T, rtol=0.0, atol=atol):
            raise ValueError("matrix is not symmetric")
        r, c = np.nonzero(np.triu(a, 1))
        return cls(a.shape[0], np.diag(a).copy(), r, c, a[r, c])

    @classmethod
    def from_triplets(cls, dim, triplets):
        """Build from ``(i, j, value)`` triplets; ``i == j`` entries set the diagonal."""
        diag = np.zeros(dim)
        rows, cols, vals = [], [], []
        for i, j, v in triplets:
            if i == j:
                diag[i] = v
            else:
                rows.append(i)
                cols.append(j)
                vals.append(v)
        return cls(dim, diag, rows, cols, vals)

    @property
    def nnz_pairs(self):
        """Number of stored undirected off-diagonal pairs."""
        return int(self.rows.size)

    @property
    def num_directed_edges(self):
        return int(self.src.size)

    def neighbors(self, i):
        return self.dst[self.out_ptr[i]:self.out_ptr[i + 1]]

    def get(self, i, j):
        if i == j:
            return float(self.diagonal[i])
        lo, hi = min(i, j), max(i, j)
        start, stop = self.out_ptr[lo], self.out_ptr[lo + 1]
        k = np.searchsorted(self.dst[start:stop], hi)
        if k < stop - start and self.dst[start + k] == hi:
            return float(self.weight[start + k])
        return 0.0

    def to_dense(self):
        a = np.diag(self.diagonal)
        a[self.rows, self.cols] = self.values
        a[self.cols, self.rows] = self.values
        return a

    def matvec(self, x):
        x = np.asarray(x, dtype=np.float64)
        return self.diagonal * x + np.bincount(
            self.src, weights=self.weight * x[self.dst], minlength=self.dim)

    def column_abs_sums(self):
        """Off-diagonal absolute sum of every column."""
        return np.bincount(self.src, weights=np.abs(self.weight), minlength=self.dim)

    def with_diagonal(self, diagonal):
        return SparseSymmetricMatrix(self.dim, diagonal, self.rows, self.cols, self.values)


def build_augmented(S, psi):
    """Embed ``S`` (n x k) and chip noise ``psi`` into the (k+n) symmetric system.

    Only the nonzero entries of ``S`` become edges, so a dense ``S`` yields
    ``n*k`` stored pairs and ``2*n*k`` directed message slots.
    """
    S = as_rectangular(S)
    n, k = S.shape
    psi = as_noise(psi, n)
    a, i = np.nonzero(S)
    diag = np.concatenate([np.ones(k), 0.0 - psi])
    return SparseSymmetricMatrix(k + n, diag, i, k + a, S[a, i])


def build_augmented_rhs(y, k):
    """Right-hand side ``[0_k, y]`` of the augmented system."""
    y = as_vector(y, "y")
    if int(k) < 1:
        raise ValueError("k must be positive")
    return np.concatenate([np.zeros(int(k)), y])
