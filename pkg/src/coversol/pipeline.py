"""Work behind the command-line subcommands: artifacts, cached spectra, suites, reports."""

from __future__ import annotations

import hashlib
import json
import logging
from pathlib import Path

import numpy as np

from .cache import CacheError, EigenCache, atomic_write, cache_key
from .config import ConfigError, RunConfig
from .groups import verify_chain
from .measure import level_measure, measure_consistency
from .report import Report
from .solenoid import (SpectralMeasureTrunc, TelescopeError, density_report, direct_resolution,
                       new_spectrum_multiset_check, pullback_spectral_commute_check,
                       pvm_axioms_check, random_interval_set, solenoid_spectrum, telescope,
                       telescope_checks)
from .spectral import (SpectrumLevel, check_commutation, eigendecompose, laplacian,
                       lowest_eigenpairs, multiset_gap, residuals, spectrum_checks)
from .tower import CoverTower, check_covering, check_principal

log = logging.getLogger("coversol")

ORACLE_TRIALS = 50


def _dump(path: Path, obj) -> None:
    atomic_write(path, (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode())


def config_digest(cfg: RunConfig) -> str:
    return hashlib.sha256(cfg.digest_source().encode()).hexdigest()


# -- build ---------------------------------------------------------------------

def build_checks(tower: CoverTower) -> Report:
    rep = Report("tower build")
    rep.extend(verify_chain(tower.chain), "chain: ")
    for i in range(1, tower.depth + 1):
        rep.extend(check_covering(tower, i), f"level {i} covering: ")
        rep.extend(check_principal(tower, i), f"level {i} principal: ")
    return rep


def write_tower(tower: CoverTower, cfg: RunConfig, rep: Report) -> None:
    out = cfg.out
    levels = []
    for i in range(1, tower.depth + 1):
        lv = tower.level(i)
        mu = level_measure(tower, i).weights
        path = out / "levels" / f"level_{i}.npz"
        path.parent.mkdir(parents=True, exist_ok=True)
        np.savez(path, edges=lv.graph.edges, weights=lv.graph.weights, measure=mu,
                 base_vertex=lv.base_vertex, element=lv.element,
                 down=lv.down if lv.down is not None else np.zeros(0, dtype=np.int64))
        levels.append({"level": i, "group": repr(lv.group), "group_order": lv.group.order,
                       "vertices": lv.vertex_count, "edges": lv.graph.edge_count,
                       "file": f"levels/level_{i}.npz"})
    _dump(out / "tower.json", {
        "config_digest": config_digest(cfg),
        "base": cfg.raw["base"],
        "chain": cfg.raw["chain"],
        "depth": tower.depth,
        "levels": levels,
    })
    _dump(out / "build_report.json", rep.as_dict())


def require_artifact(cfg: RunConfig) -> dict:
    path = cfg.out / "tower.json"
    if not path.exists():
        raise ConfigError(f"no tower artifact at {path}; run the build command first")
    meta = json.loads(path.read_text())
    if meta.get("config_digest") != config_digest(cfg):
        raise ConfigError(f"tower artifact at {path} was built from a different config; rebuild it")
    return meta


# -- spectra -------------------------------------------------------------------

def _solve(op, cfg: RunConfig) -> SpectrumLevel:
    if cfg.mode == "dense" and op.dimension <= cfg.dense_cap:
        return eigendecompose(op, cfg.dense_cap)
    if cfg.mode == "dense":
        log.warning("level %d has %d vertices, above the dense cap; using Lanczos with m=%d",
                    op.level, op.dimension, cfg.m)
    return lowest_eigenpairs(op, min(cfg.m, op.dimension), cfg.tol)


def solver_settings(cfg: RunConfig, n: int) -> dict:
    if cfg.mode == "dense" and n <= cfg.dense_cap:
        return {"mode": "dense"}
    return {"mode": "iterative", "m": min(cfg.m, n), "tol": cfg.tol}


def level_spectra(tower: CoverTower, cfg: RunConfig) -> tuple[list[SpectrumLevel], list[str]]:
    """Spectra of every level, served from the cache when a valid entry exists.

    Returns the spectra and, per level, "cache" or "computed".
    """
    cache = EigenCache(cfg.cache)
    spectra, sources = [], []
    for i in range(1, tower.depth + 1):
        op = laplacian(tower, i)
        settings = solver_settings(cfg, op.dimension)
        key = cache_key(tower.level(i).graph, op.mu, settings)
        try:
            hit = cache.load(key)
        except CacheError as exc:
            log.warning("level %d: ignoring cache file %s (%s); recomputing",
                        i, cache.path(key), exc)
            hit = None
        if hit is not None and hit[1].shape[0] == op.dimension:
            vals, vecs = hit
            spec = SpectrumLevel(i, vals, vecs, residuals(op, vals, vecs), op.mu, op.norm,
                                 vecs.shape[1] == op.dimension, settings["mode"], dict(settings))
            sources.append("cache")
        else:
            spec = _solve(op, cfg)
            cache.store(key, spec.eigenvalues, spec.eigenvectors)
            sources.append("computed")
        spectra.append(spec)
    return spectra, sources


def write_spectra(spectra: list[SpectrumLevel], sources: list[str], cfg: RunConfig) -> Report:
    lines = ["level\tindex\teigenvalue\tresidual"]
    for s in spectra:
        for k, (val, res) in enumerate(zip(s.eigenvalues, s.residuals)):
            lines.append(f"{s.level}\t{k}\t{val:.17g}\t{res:.6e}")
    atomic_write(cfg.out / "spectra.tsv", ("\n".join(lines) + "\n").encode())
    rep = Report("spectra")
    for s in spectra:
        bound = 1e-9 * (1 + s.norm)
        rep.bound(f"level {s.level}: max residual", float(s.residuals.max(initial=0.0)), bound)
    payload = rep.as_dict()
    payload["levels"] = [{"level": s.level, "eigenpairs": len(s), "complete": s.complete,
                          "solver": s.solver, "source": src} for s, src in zip(spectra, sources)]
    _dump(cfg.out / "spectra_report.json", payload)
    return rep


# -- verification suite ----------------------------------------------------------

def _measure_suite(tower: CoverTower, exact: bool, rng: np.random.Generator) -> Report:
    rep = Report("measures")
    k = tower.depth
    base_total = level_measure(tower, 0, exact).total()
    for i in range(0, k + 1):
        total = level_measure(tower, i, exact).total()
        if exact:
            rep.add(f"level {i}: total mass equals base (exact)", total == base_total,
                    float(abs(total - base_total)), 0.0)
        else:
            rep.bound(f"level {i}: total mass equals base", abs(total - base_total) / base_total, 1e-12)
        for j in range(i + 1, k + 1):
            gap = measure_consistency(tower, i, j, exact)
            if exact:
                rep.add(f"measure consistency {i}->{j} (exact)", gap == 0, float(gap), 0.0)
            else:
                rep.bound(f"measure consistency {i}->{j}", gap, 1e-12)
    for i in range(1, k + 1):
        mu_i = level_measure(tower, i).weights
        for j in range(i + 1, k + 1):
            mu_j = level_measure(tower, j).weights
            down = tower.down_map(j, i)
            f = rng.standard_normal((len(mu_i), 8)) + 1j * rng.standard_normal((len(mu_i), 8))
            g = rng.standard_normal((len(mu_i), 8)) + 1j * rng.standard_normal((len(mu_i), 8))
            lo = np.sum(f * np.conj(g) * mu_i[:, None], 0)
            hi = np.sum(f[down] * np.conj(g[down]) * mu_j[:, None], 0)
            scale = np.sqrt(np.sum(abs(f) ** 2 * mu_i[:, None], 0) * np.sum(abs(g) ** 2 * mu_i[:, None], 0))
            rep.bound(f"pullback preserves inner products {i}->{j}",
                      float(np.max(np.abs(hi - lo) / scale)), 1e-13)
            nf_lo = np.sum(abs(f) ** 2 * mu_i[:, None], 0)
            nf_hi = np.sum(abs(f[down]) ** 2 * mu_j[:, None], 0)
            rep.bound(f"pullback isometry {i}->{j}", float(np.max(np.abs(nf_hi - nf_lo) / nf_lo)), 1e-13)
    return rep


def verify_suite(tower: CoverTower, spectra: list[SpectrumLevel], exact: bool = False,
                 seed: int = 0) -> tuple[Report, list[str], dict]:
    """Every certificate the tower supports.

    Returns the report, the names of skipped checks and summary metrics
    (including the oracle-equivalence distance).
    """
    rng = np.random.default_rng(seed)
    k = tower.depth
    rep = Report("verification suite")
    skipped: list[str] = []
    metrics: dict = {}
    rep.extend(build_checks(tower))
    rep.extend(_measure_suite(tower, exact, rng), "measures: ")
    ops = [laplacian(tower, i) for i in range(1, k + 1)]
    for i in range(1, k + 1):
        for j in range(i + 1, k + 1):
            rep.bound(f"L_{j} P* = P* L_{i}", check_commutation(tower, i, j),
                      1e-12 * (1 + ops[j - 1].norm))
    for s, op in zip(spectra, ops):
        rep.extend(spectrum_checks(s, op), f"level {s.level} spectrum: ")
    for a in range(k):
        for b in range(a + 1, k):
            lo, hi = spectra[a], spectra[b]
            if hi.complete:
                gap = multiset_gap(lo.eigenvalues, hi.eigenvalues, 1e-8 * (1 + hi.norm))
                rep.bound(f"spectrum {a + 1} contained in spectrum {b + 1}", gap, 1e-8 * (1 + hi.norm))
    if not all(s.complete for s in spectra):
        skipped += ["telescoping decomposition", "multiset identity", "oracle equivalence",
                    "projection-valued measure axioms", "projector-pullback commutation"]
        return rep, skipped, metrics
    try:
        decomp = telescope(tower, spectra)
    except TelescopeError as exc:
        rep.add("telescoping decomposition", False, detail=str(exc))
        return rep, skipped, metrics
    rep.extend(telescope_checks(decomp, tower))
    for kk in range(1, k + 1):
        try:
            gap = new_spectrum_multiset_check(decomp, spectra, kk)
        except TelescopeError as exc:
            rep.add(f"depth {kk}: spectrum equals union of new spectra", False, detail=str(exc))
            continue
        rep.bound(f"depth {kk}: spectrum equals union of new spectra", gap,
                  1e-8 * (1 + ops[kk - 1].norm))
    measure = SpectralMeasureTrunc(tower, decomp, k)
    top = ops[-1].norm + 1.0
    worst = 0.0
    for _ in range(ORACLE_TRIALS):
        omega = random_interval_set(rng, -0.5, top)
        diff = measure.operator(omega) - direct_resolution(spectra[-1], omega)
        worst = max(worst, float(np.linalg.norm(diff)))
    metrics["oracle_equivalence_frobenius"] = worst
    rep.bound(f"depth {k}: telescoped E(omega) equals direct projector (Frobenius, "
              f"{ORACLE_TRIALS} interval sets)", worst, 1e-8)
    rep.extend(pvm_axioms_check(measure, seed=seed), "PVM: ")
    for i in range(1, k):
        worst = 0.0
        for _ in range(10):
            omega = random_interval_set(rng, -0.5, top)
            worst = max(worst, pullback_spectral_commute_check(tower, spectra, i, omega))
        rep.bound(f"P* E_{i}(omega) = E_{i + 1}(omega) P*", worst, 1e-9)
    return rep, skipped, metrics


def write_verify(rep: Report, skipped: list[str], metrics: dict, cfg: RunConfig) -> None:
    payload = rep.as_dict()
    payload["skipped"] = skipped
    payload["metrics"] = metrics
    _dump(cfg.out / "verify_report.json", payload)


# -- reports ---------------------------------------------------------------------

def _fmt(x: float) -> str:
    return f"{x:.12g}" if x != 0 else "0"


def union_report(tower: CoverTower, spectra: list[SpectrumLevel], cfg: RunConfig,
                 seed: int = 0) -> tuple[str, list[tuple[float, int]]]:
    """Sectioned text report and (eigenvalue, first level) plot data."""
    complete = all(s.complete for s in spectra)
    decomp = telescope(tower, spectra) if complete else None
    sol = solenoid_spectrum(spectra, decomp)
    dens = density_report(sol, cfg.lambda_max, cfg.epsilon)
    out = []
    out.append("== tower summary ==")
    out.append(f"base: {tower.base.vertex_count} vertices, {tower.base.edge_count} edges")
    out.append(f"chain: {cfg.raw['chain']['kind']}, depth {tower.depth}")
    for i in range(1, tower.depth + 1):
        lv = tower.level(i)
        out.append(f"level {i}: {lv.group!r}, |group| = {lv.group.order}, "
                   f"{lv.vertex_count} vertices, {lv.graph.edge_count} edges")
    out.append("")
    out.append("== per-level spectra ==")
    for s in spectra:
        kind = "complete" if s.complete else f"lowest {len(s)}"
        out.append(f"level {s.level} ({kind}, {s.solver}):")
        for value, idx in s.clusters():
            out.append(f"  {_fmt(value)} x{len(idx)}")
    out.append("")
    out.append("== new spectra ==")
    if decomp is None:
        out.append("unavailable: the telescoping decomposition needs complete spectra")
    else:
        for p in decomp.pieces:
            out.append(f"V_{p.level} (dim {p.dim_v}):")
            for value, idx in p.clusters():
                out.append(f"  {_fmt(value)} x{len(idx)}")
    out.append("")
    out.append("== union spectrum ==")
    out.append("eigenvalue\tfirst_level\tmultiplicity")
    for pt in sol.points:
        out.append(f"{_fmt(pt.value)}\t{pt.first_level}\t{pt.multiplicity}")
    if "route_hausdorff" in sol.diagnostics:
        out.append(f"distance between level-union and new-spectra routes: "
                   f"{sol.diagnostics['route_hausdorff']:.3e}")
    out.append("")
    out.append("== density diagnostics ==")
    out.append(f"window [0, {_fmt(dens['lambda_max'])}], epsilon {_fmt(dens['epsilon'])}")
    out.append(f"points in window: {dens['points_in_window']}")
    lo, hi = dens["max_gap_between"]
    out.append(f"largest gap: {_fmt(dens['max_gap'])} between {_fmt(lo)} and {_fmt(hi)}")
    out.append(f"epsilon-dense: {'yes' if dens['dense'] else 'no'}")
    inf = dens["infimum_positive"]
    out.append(f"smallest positive point in window: {'none in window' if inf is None else _fmt(inf)}")
    out.append("")
    out.append("== PVM checks ==")
    if decomp is None:
        out.append("unavailable: the telescoping decomposition needs complete spectra")
    else:
        pvm = pvm_axioms_check(SpectralMeasureTrunc(tower, decomp, tower.depth), seed=seed)
        for c in pvm.checks:
            out.append(f"{'PASS' if c.passed else 'FAIL'}  {c.name}: {c.value:.3e} (limit {c.limit:.1e})")
    plot = [(pt.value, pt.first_level) for pt in sol.points]
    return "\n".join(out) + "\n", plot


def write_plot(path: Path, rows: list[tuple[float, int]], header: str = "eigenvalue\tfirst_level") -> None:
    lines = [header] + [f"{v:.17g}\t{lvl}" for v, lvl in rows]
    atomic_write(path, ("\n".join(lines) + "\n").encode())


def circle_text(depth: int, lam_max: float, eps: float) -> tuple[str, list[tuple[float, int]]]:
    from .solenoid import circle_tower_analytic

    spec = circle_tower_analytic(depth, lam_max)
    dens = density_report(spec, lam_max, eps)
    out = ["== flat circle tower (closed form) =="]
    for n, (c, cnt) in enumerate(zip(spec.diagnostics["circumferences"],
                                     spec.diagnostics["level_counts"]), start=1):
        out.append(f"level {n}: circumference {c}, {cnt} frequencies in window")
    out.append(f"union points in [0, {_fmt(lam_max)}]: {dens['points_in_window']}")
    out.append(f"largest gap: {_fmt(dens['max_gap'])}")
    out.append(f"{_fmt(eps)}-dense: {'yes' if dens['dense'] else 'no'}")
    inf = dens["infimum_positive"]
    out.append(f"smallest positive point: {'none in window' if inf is None else _fmt(inf)}")
    return "\n".join(out) + "\n", [(p.value, p.first_level) for p in spec.points]


def selberg_text(depth: int) -> tuple[str, list]:
    from .solenoid import ANALOG_NOTE, selberg_gap_report

    rows = selberg_gap_report(depth)
    out = [ANALOG_NOTE, "", "level\tmodulus\tvertices\tlambda_1\trunning_inf\tsolver\tdense_agreement"]
    for r in rows:
        agree = "-" if r.dense_agreement is None else f"{r.dense_agreement:.1e}"
        out.append(f"{r.level}\t{r.modulus}\t{r.vertices}\t{r.lambda_1:.10f}\t"
                   f"{r.running_inf:.10f}\t{r.solver}\t{agree}")
    return "\n".join(out) + "\n", rows


def selberg_ok(rows) -> bool:
    ok = all(r.lambda_1 > 1e-6 for r in rows)
    ok &= all(r.dense_agreement is None or r.dense_agreement <= 1e-8 for r in rows)
    ok &= all(b.running_inf <= a.running_inf for a, b in zip(rows, rows[1:]))
    return bool(ok)
