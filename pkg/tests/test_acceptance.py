"""Acceptance criteria, one test each.

Every test prints a single ``criterion N: PASS|FAIL ...`` line.  The module
also runs as a script: ``python tests/test_acceptance.py``.
"""

import math
import time

import numpy as np
import pytest

from coversol import samples
from coversol.measure import level_measure, measure_consistency
from coversol.solenoid import (SpectralMeasureTrunc, circle_tower_analytic, density_report,
                               direct_resolution, new_spectrum_multiset_check,
                               pullback_spectral_commute_check, pvm_axioms_check,
                               random_interval_set, selberg_gap_report, telescope)
from coversol.spectral import check_commutation, laplacian, tower_spectra

CORPUS_SIZE = 20


class Corpus:
    def __init__(self):
        t = time.perf_counter()
        self.items = []
        for name, tw in samples.corpus(CORPUS_SIZE):
            spectra = tower_spectra(tw)
            self.items.append((name, tw, spectra, telescope(tw, spectra)))
        self.build_seconds = time.perf_counter() - t


_corpus = None


def get_corpus():
    global _corpus
    if _corpus is None:
        _corpus = Corpus()
    return _corpus


def report(n, passed, detail, capsys=None):
    line = f"criterion {n}: {'PASS' if passed else 'FAIL'}  {detail}"
    if capsys is None:
        print(line)
    else:
        with capsys.disabled():
            print("\n" + line)
    return passed


def criterion_1():
    t = time.perf_counter()
    corpus = get_corpus()
    worst, ok = 0.0, True
    for _, tw, spectra, decomp in corpus.items:
        assert tw.base.vertex_count <= 12 and tw.depth <= 4 and max(tw.chain.orders) <= 64
        for k in range(1, tw.depth + 1):
            gap = new_spectrum_multiset_check(decomp, spectra, k)   # raises on cardinality
            limit = 1e-8 * (1 + spectra[k - 1].norm)
            ok &= gap <= limit
            worst = max(worst, gap / limit)
    seconds = corpus.build_seconds + time.perf_counter() - t
    ok &= seconds <= 120 and len(corpus.items) >= 20
    return ok, f"{len(corpus.items)} towers, worst gap/limit {worst:.2e}, {seconds:.1f} s"


def criterion_2():
    worst = 0.0
    for seed, (_, tw, spectra, decomp) in enumerate(get_corpus().items):
        measure = SpectralMeasureTrunc(tw, decomp, tw.depth)
        rng = np.random.default_rng(100 + seed)
        top = spectra[-1].norm + 1
        for _ in range(50):
            omega = random_interval_set(rng, -0.5, top)
            diff = measure.operator(omega) - direct_resolution(spectra[-1], omega)
            worst = max(worst, float(np.linalg.norm(diff)))
    return worst <= 1e-8, f"max Frobenius distance {worst:.2e} (limit 1e-8)"


def criterion_3():
    worst, ok = 0.0, True
    for seed, (_, tw, _, decomp) in enumerate(get_corpus().items):
        for k in range(1, tw.depth + 1):
            rep = pvm_axioms_check(SpectralMeasureTrunc(tw, decomp, k), trials=10, seed=seed)
            ok &= rep.passed
            worst = max(worst, max(c.value for c in rep.checks))
    return ok, f"all depths, max relative defect {worst:.2e} (limit 1e-9)"


def criterion_4():
    rng = np.random.default_rng(4)
    iso = cons = 0.0
    exact_ok, exact_count = True, 0
    for _, tw, _, _ in get_corpus().items:
        k = tw.depth
        for i in range(0, k):
            cons = max(cons, measure_consistency(tw, i, k))
        for i in range(1, k):
            mu_i, mu_k = level_measure(tw, i).weights, level_measure(tw, k).weights
            down = tw.down_map(k, i)
            f = rng.standard_normal((len(mu_i), 5)) + 1j * rng.standard_normal((len(mu_i), 5))
            g = rng.standard_normal((len(mu_i), 5)) + 1j * rng.standard_normal((len(mu_i), 5))
            lo = np.sum(f * np.conj(g) * mu_i[:, None], 0)
            hi = np.sum(f[down] * np.conj(g[down]) * mu_k[:, None], 0)
            nf = np.sum(abs(f) ** 2 * mu_i[:, None], 0)
            ng = np.sum(abs(g) ** 2 * mu_i[:, None], 0)
            iso = max(iso, float(np.max(np.abs(np.sum(abs(f[down]) ** 2 * mu_k[:, None], 0) - nf) / nf)))
            iso = max(iso, float(np.max(np.abs(hi - lo) / np.sqrt(nf * ng))))
        total = tw.base.vertex_count + sum(tw.level(i).vertex_count for i in range(1, k + 1))
        if total <= 200:
            exact_count += 1
            exact_ok &= all(measure_consistency(tw, i, j, exact=True) == 0
                            for i in range(0, k) for j in range(i + 1, k + 1))
    ok = iso <= 1e-13 and cons <= 1e-12 and exact_ok and exact_count > 0
    return ok, (f"isometry/inner product {iso:.2e} (1e-13), consistency {cons:.2e} (1e-12), "
                f"exact zero on {exact_count} small towers: {exact_ok}")


def criterion_5():
    rng = np.random.default_rng(5)
    lap = proj = 0.0
    for _, tw, spectra, _ in get_corpus().items:
        for j in range(2, tw.depth + 1):
            norm = laplacian(tw, j, verify=False).norm
            for i in range(1, j):
                lap = max(lap, check_commutation(tw, i, j) / (1 + norm))
        for i in range(1, tw.depth):
            for _ in range(5):
                omega = random_interval_set(rng, -0.5, spectra[i].norm + 1)
                proj = max(proj, pullback_spectral_commute_check(tw, spectra, i, omega))
    ok = lap <= 1e-12 and proj <= 1e-9
    return ok, f"Laplacian {lap:.2e} (1e-12 scaled), projector {proj:.2e} (1e-9)"


def criterion_6():
    t = time.perf_counter()
    deep = circle_tower_analytic(7, 40.0)
    shallow = circle_tower_analytic(1, 40.0)
    d_deep, d_shallow = density_report(deep, 40.0, 0.1), density_report(shallow, 40.0, 0.1)
    seconds = time.perf_counter() - t
    step = 2 * math.pi / 840
    bound = 2 * math.sqrt(40.0) * step + step ** 2
    ok = (deep.diagnostics["circumferences"][-1] == 840 and shallow.diagnostics["circumferences"][-1] == 2
          and d_deep["dense"] and not d_shallow["dense"] and d_deep["max_gap"] <= bound
          and seconds < 1.0)
    return ok, (f"l=840 max gap {d_deep['max_gap']:.4f} (bound {bound:.4f}), "
                f"l=2 max gap {d_shallow['max_gap']:.2f}, {seconds * 1000:.0f} ms")


def criterion_7():
    tw = samples.square_tower()
    spectra = tower_spectra(tw)
    decomp = telescope(tw, spectra)
    # 4 x 4 brute force: Laplacian of the 4-cycle
    c4 = 2 * np.eye(4) - np.roll(np.eye(4), 1, 0) - np.roll(np.eye(4), -1, 0)
    c2 = np.array([[2.0, -2.0], [-2.0, 2.0]])
    errs = [
        np.abs(spectra[0].eigenvalues - [0, 4]).max(),
        np.abs(spectra[1].eigenvalues - [0, 2, 2, 4]).max(),
        np.abs(np.linalg.eigvalsh(c4) - spectra[1].eigenvalues).max(),
        np.abs(np.linalg.eigvalsh(c2) - spectra[0].eigenvalues).max(),
        np.abs(np.sort(decomp.piece(2).new_eigenvalues) - [2, 2]).max(),
    ]
    lifted = np.array([1.0, -1.0])[tw.down_map(2, 1)]
    errs.append(np.abs(lifted - [1, -1, 1, -1]).max())
    errs.append(np.abs(c4 @ lifted - 4 * lifted).max())
    worst = float(max(errs))
    return worst <= 1e-10, f"max deviation {worst:.2e} (limit 1e-10)"


def criterion_8():
    t = time.perf_counter()
    rows = selberg_gap_report(3)
    seconds = time.perf_counter() - t
    sizes = [r.vertices for r in rows]
    ok = sizes == [6, 144, 1152] and seconds <= 300
    ok &= all(r.lambda_1 > 1e-6 for r in rows)
    ok &= all(r.dense_agreement <= 1e-8 for r in rows if r.dense_agreement is not None)
    ok &= all(b.running_inf <= a.running_inf for a, b in zip(rows, rows[1:]))
    gaps = ", ".join(f"{r.lambda_1:.6f}" for r in rows)
    return ok, f"sizes {sizes}, lambda_1 [{gaps}], {seconds:.1f} s"


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4,
            criterion_5, criterion_6, criterion_7, criterion_8]


@pytest.mark.parametrize("n", range(1, 9))
def test_criterion(n, capsys):
    passed, detail = CRITERIA[n - 1]()
    report(n, passed, detail, capsys)
    assert passed, detail


if __name__ == "__main__":
    results = [report(n, *fn()) for n, fn in enumerate(CRITERIA, start=1)]
    raise SystemExit(0 if all(results) else 1)
