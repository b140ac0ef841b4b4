import numpy as np
import pytest
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from gabp_mud.matrix import SparseSymmetricMatrix


def random_dd_system(rng, dim, density=0.5, slack=(0.1, 1.0)):
    """Random strictly diagonally dominant symmetric system with mixed-sign entries."""
    a = np.zeros((dim, dim))
    iu = np.triu_indices(dim, 1)
    mask = rng.random(iu[0].size) < density
    a[iu[0][mask], iu[1][mask]] = rng.uniform(-1, 1, mask.sum())
    a = a + a.T
    off = np.abs(a).sum(axis=1)
    sign = rng.choice([-1.0, 1.0], dim)
    np.fill_diagonal(a, sign * (off + rng.uniform(*slack, dim)))
    b = rng.uniform(-5, 5, dim)
    return a, b


def binary_spreading(rng, n, k):
    return rng.choice([-1.0, 1.0], size=(n, k)) / np.sqrt(n)


def reference_sweep(a, b, P, mu, fresh=False):
    """Table I stage 2 written out with explicit exclusion sums over a dense matrix.

    ``P[k, i]``/``mu[k, i]`` hold the message k -> i. With ``fresh`` the
    messages are overwritten in place node by node (sequential schedule).
    """
    d = a.shape[0]
    newP, newmu = (P, mu) if fresh else (P.copy(), mu.copy())
    src_P, src_mu = (newP, newmu) if fresh else (P, mu)
    for i in range(d):
        outs = [j for j in range(d) if j != i and a[i, j] != 0]
        cav = {}
        for j in outs:
            nbrs = [k for k in range(d) if k != i and a[k, i] != 0 and k != j]
            Pc = a[i, i] + sum(src_P[k, i] for k in nbrs)
            hc = b[i] + sum(src_P[k, i] * src_mu[k, i] for k in nbrs)
            cav[j] = (Pc, hc / Pc)
        for j, (Pc, muc) in cav.items():
            newP[i, j] = -a[i, j] * a[j, i] / Pc
            newmu[i, j] = -a[i, j] * muc / newP[i, j]
    return newP, newmu


def reference_infer(a, b, P, mu):
    d = a.shape[0]
    means, precs = np.empty(d), np.empty(d)
    for i in range(d):
        nbrs = [k for k in range(d) if k != i and a[k, i] != 0]
        Pi = a[i, i] + sum(P[k, i] for k in nbrs)
        precs[i] = Pi
        means[i] = (b[i] + sum(P[k, i] * mu[k, i] for k in nbrs)) / Pi
    return means, precs


def state_to_dense(A: SparseSymmetricMatrix, state):
    P = np.zeros((A.dim, A.dim))
    mu = np.zeros((A.dim, A.dim))
    P[A.src, A.dst] = state.precision
    mu[A.src, A.dst] = state.mean
    return P, mu


@st.composite
def symmetric_matrices(draw, max_dim=12, nonzero_diagonal=False):
    dim = draw(st.integers(1, max_dim))
    vals = draw(hnp.arrays(np.float64, (dim, dim),
                           elements=st.floats(-3, 3, allow_nan=False).map(lambda v: round(v, 3))))
    keep = draw(hnp.arrays(np.bool_, (dim, dim)))
    a = np.where(keep, vals, 0.0)
    a = np.triu(a) + np.triu(a, 1).T
    if nonzero_diagonal:
        mags = draw(hnp.arrays(np.float64, dim, elements=st.floats(0.05, 3).map(lambda v: round(v, 3))))
        signs = draw(hnp.arrays(np.float64, dim, elements=st.sampled_from([-1.0, 1.0])))
        np.fill_diagonal(a, mags * signs)
    return a


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


#: (criterion number, passed, detail) tuples filled in by test_acceptance.py
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, ok, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
