import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coversol.eigen import (ConvergenceError, eigh_tridiagonal_ql, householder_tridiagonal,
                            lanczos_lowest)


def random_symmetric(rng, n, repeats=False):
    if repeats:
        q, _ = np.linalg.qr(rng.standard_normal((n, n)))
        vals = np.repeat(rng.standard_normal((n + 2) // 3), 3)[:n]
        return (q * vals) @ q.T
    a = rng.standard_normal((n, n))
    return a + a.T


@pytest.mark.parametrize("n", [1, 2, 3, 10, 57, 200])
def test_ql_matches_lapack(n, rng):
    a = random_symmetric(rng, n)
    vals, vecs = eigh_tridiagonal_ql(a)
    ref = np.linalg.eigh(a)[0]
    scale = 1 + np.abs(ref).max()
    assert np.abs(vals - ref).max() <= 1e-12 * scale
    assert np.abs(vecs.T @ vecs - np.eye(n)).max() <= 1e-12
    assert np.abs(a @ vecs - vecs * vals).max() <= 1e-11 * scale


def test_ql_repeated_eigenvalues(rng):
    a = random_symmetric(rng, 30, repeats=True)
    vals, vecs = eigh_tridiagonal_ql(a)
    assert np.abs(vals - np.linalg.eigh(a)[0]).max() <= 1e-12
    assert np.abs(a @ vecs - vecs * vals).max() <= 1e-12


def test_householder_reduction(rng):
    a = random_symmetric(rng, 12)
    d, e, q = householder_tridiagonal(a)
    t = np.diag(d) + np.diag(e[:-1], 1) + np.diag(e[:-1], -1)
    assert np.abs(q.T @ a @ q - t).max() <= 1e-12 * np.abs(a).max()


def test_ql_reports_index_on_failure(rng):
    a = random_symmetric(rng, 8)
    with pytest.raises(ConvergenceError) as info:
        eigh_tridiagonal_ql(a, max_sweeps=0)
    assert info.value.index is not None


def test_lanczos_recovers_multiplicities():
    n = 12
    c = 2 * np.eye(n) - np.roll(np.eye(n), 1, 0) - np.roll(np.eye(n), -1, 0)
    vals, vecs, res = lanczos_lowest(lambda x: c @ x, n, 5)
    ref = np.sort(2 - 2 * np.cos(2 * np.pi * np.arange(n) / n))[:5]
    assert np.abs(vals - ref).max() <= 1e-9
    assert res.max() <= 1e-9


def test_lanczos_nonconvergence_carries_residual(rng):
    a = random_symmetric(rng, 200)
    with pytest.raises(ConvergenceError) as info:
        lanczos_lowest(lambda x: a @ x, 200, 3, tol=1e-30, krylov_dim=5, max_restarts=3)
    assert info.value.residual is not None and info.value.residual > 0


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 40), st.integers(0, 2**32 - 1))
def test_ql_property(n, seed):
    rng = np.random.default_rng(seed)
    a = random_symmetric(rng, n, repeats=bool(seed % 2))
    vals, vecs = eigh_tridiagonal_ql(a)
    scale = 1 + np.abs(a).sum(axis=1).max()
    assert np.all(np.diff(vals) >= 0)
    assert np.abs(vals - np.linalg.eigvalsh(a)).max() <= 1e-12 * scale
    assert np.abs(vecs.T @ vecs - np.eye(n)).max() <= 1e-12
