import numpy as np
import pytest
from scipy import linalg

from coversol import samples
from coversol.groups import modular_chain, sl2_chain
from coversol.spectral import (SpectrumLevel, check_commutation, cluster, eigendecompose,
                               laplacian, lift_eigenfunction, lowest_eigenpairs, multiset_gap,
                               operator_checks, solver_agreement, spectral_containment,
                               spectrum_checks)
from coversol.tower import VoltageAssignment, WeightedGraph, build_tower


def fourier(n):
    return np.sort(2 - 2 * np.cos(2 * np.pi * np.arange(n) / n))


def cycle_tower(n):
    base = WeightedGraph.from_lists(1, [(0, 0, 1)])
    return build_tower(base, VoltageAssignment([1]), modular_chain([n]))


def dense_stiffness(graph):
    """Independent assembly of sum_e w_e (f(u) - f(v))^2 as a matrix."""
    n = graph.vertex_count
    k = np.zeros((n, n))
    for (u, v), w in zip(graph.edges, graph.weights):
        if u == v:
            continue
        k[u, u] += w
        k[v, v] += w
        k[u, v] -= w
        k[v, u] -= w
    return k


@pytest.mark.parametrize("n", range(2, 25))
def test_cycle_spectrum_fourier(n):
    spec = eigendecompose(laplacian(cycle_tower(n), 1))
    assert np.abs(spec.eigenvalues - fourier(n)).max() <= 1e-12


def test_small_cycles(square):
    assert np.allclose(eigendecompose(laplacian(square, 1)).eigenvalues, [0, 4], atol=1e-13)
    assert np.allclose(eigendecompose(laplacian(square, 2)).eigenvalues, [0, 2, 2, 4], atol=1e-13)


def test_uniform_measure_gives_two_minus_adjacency(loop3):
    op = laplacian(loop3, 3)
    adj = -dense_stiffness(loop3.level(3).graph)
    np.fill_diagonal(adj, 0)
    assert np.abs(op.matrix.toarray() - (2 * np.eye(12) - adj)).max() == 0


def test_weighted_spectrum_matches_generalized_problem():
    for seed in range(5):
        _, tw = samples.random_tower(seed)
        for i in range(1, tw.depth + 1):
            graph = tw.level(i).graph
            rho = tw.base.vertex_measure[tw.down_map(i, 0)]
            ref = linalg.eigh(dense_stiffness(graph), np.diag(rho), eigvals_only=True)
            spec = eigendecompose(laplacian(tw, i))
            assert np.abs(spec.eigenvalues - ref).max() <= 1e-9 * (1 + spec.norm)


def test_operator_checks_on_random_towers():
    for seed in range(8):
        _, tw = samples.random_tower(seed)
        for i in range(0, tw.depth + 1):
            assert operator_checks(laplacian(tw, i, verify=False)).passed


def test_lowest_eigenpairs_c12(loop3):
    spec = lowest_eigenpairs(laplacian(loop3, 3), 3)
    expected = [0.0, 2 - 2 * np.cos(np.pi / 6), 2 - 2 * np.cos(np.pi / 6)]
    assert np.abs(spec.eigenvalues - expected).max() <= 1e-9
    assert not spec.complete


def test_lanczos_at_1152_certified_by_residuals():
    base = WeightedGraph.from_lists(1, [(0, 0, 1), (0, 0, 1)])
    tw = build_tower(base, VoltageAssignment(["S", "T"]), sl2_chain(3))
    op = laplacian(tw, 3)
    spec = lowest_eigenpairs(op, 5)
    rep = spectrum_checks(spec, op)
    assert rep.passed, str(rep)
    assert spec.eigenvalues[0] == pytest.approx(0, abs=1e-10)
    assert spec.eigenvalues[1] > 1e-6


def test_dense_and_iterative_agree(sl2_tower2):
    assert solver_agreement(laplacian(sl2_tower2, 2), 8) <= 1e-8


def test_spectrum_checks_pass(loop3_spectra, loop3):
    for s in loop3_spectra:
        assert spectrum_checks(s, laplacian(loop3, s.level)).passed


def test_corrupted_eigenvectors_fail_residual_check(loop3_spectra, loop3):
    s = loop3_spectra[2]
    vecs = s.eigenvectors.copy()
    vecs[:, [3, 7]] = vecs[:, [7, 3]]
    bad = SpectrumLevel(s.level, s.eigenvalues, vecs, s.residuals, s.mu, s.norm)
    rep = spectrum_checks(bad, laplacian(loop3, 3))
    assert not rep["residuals <= 1e-9 (1 + ||L||)"].passed


def test_commutation_cyclic(loop3):
    for i in (1, 2, 3):
        for j in range(i, 4):
            assert check_commutation(loop3, i, j) <= 1e-13


def test_commutation_sl2(sl2_tower2):
    assert check_commutation(sl2_tower2, 1, 2) <= 1e-12


def test_commutation_random_measures():
    for seed in range(8):
        _, tw = samples.random_tower(seed)
        for i in range(1, tw.depth):
            norm = laplacian(tw, tw.depth, verify=False).norm
            assert check_commutation(tw, i, tw.depth) <= 1e-12 * (1 + norm)


def test_lift_eigenfunction(square):
    value, vec, res = lift_eigenfunction(4.0, np.array([1.0, -1.0]), square, 1, 2)
    assert value == 4.0
    assert np.array_equal(vec, [1, -1, 1, -1])
    assert res <= 1e-13


def test_containment_along_tower(loop3_spectra):
    a, b, c = loop3_spectra
    assert spectral_containment(a, b) <= 1e-12
    assert spectral_containment(b, c) <= 1e-12
    assert multiset_gap(c.eigenvalues, a.eigenvalues, 1e-8) == np.inf


def test_cluster_snaps_zero_and_groups():
    groups = cluster(np.array([1e-12, 1.0, 1.0 + 1e-10, 2.0]), 1e-8)
    assert [g[0] for g in groups][0] == 0.0
    assert [len(g[1]) for g in groups] == [1, 2, 1]


def test_dense_cap_enforced(loop3):
    with pytest.raises(ValueError, match="dense cap"):
        eigendecompose(laplacian(loop3, 3), dense_cap=10)


def test_tower_spectra_sizes(sl2_spectra2):
    assert [len(s) for s in sl2_spectra2] == [6, 144]
    assert sl2_spectra2[0].eigenvalues[1] == pytest.approx(2.0, abs=1e-12)
