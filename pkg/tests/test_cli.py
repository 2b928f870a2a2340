import json
import logging

import numpy as np
import pytest

from coversol import cache as C
from coversol.cli import main
from coversol.config import ConfigError, load_config, parse_config

LOOP = {
    "base": {"vertices": 1, "measure": [1],
             "edges": [{"u": 0, "v": 0, "weight": 1, "voltage": 1}]},
    "chain": {"kind": "cyclic", "depth": 3},
    "arithmetic": "rational",
}

SL2 = {
    "base": {"vertices": 1, "edges": [{"u": 0, "v": 0, "voltage": "S"},
                                      {"u": 0, "v": 0, "voltage": [[1, 1], [0, 1]]}]},
    "chain": {"kind": "sl2", "depth": 2},
}


@pytest.fixture
def run(tmp_path, monkeypatch):
    monkeypatch.delenv("COVERSOL_CACHE", raising=False)

    def write(cfg, name="cfg.json"):
        cfg = dict(cfg, out=str(tmp_path / "out"), cache=str(tmp_path / "cache"))
        path = tmp_path / name
        path.write_text(json.dumps(cfg, indent=2))
        return path

    return write


# -- cache container ----------------------------------------------------------------

def test_container_round_trip(rng):
    vals, vecs = rng.standard_normal(4), rng.standard_normal((6, 4))
    out_vals, out_vecs = C.decode(C.encode(vals, vecs))
    assert np.array_equal(vals, out_vals) and np.array_equal(vecs, out_vecs)


def test_container_layout(rng):
    blob = C.encode(np.arange(2.0), np.eye(3, 2))
    assert blob[:8] == C.MAGIC
    assert int.from_bytes(blob[8:12], "little") == C.VERSION
    assert int.from_bytes(blob[12:20], "little") == 3
    assert int.from_bytes(blob[20:28], "little") == 2
    assert np.frombuffer(blob[28:44], "<f8").tolist() == [0.0, 1.0]


@pytest.mark.parametrize("corrupt, message", [
    (lambda b: b"XXXXXXXX" + b[8:], "magic"),
    (lambda b: b[:8] + (99).to_bytes(4, "little") + b[12:], "version"),
    (lambda b: b[:40] + bytes([b[40] ^ 1]) + b[41:], "checksum"),
    (lambda b: b[:-5], "bytes"),
])
def test_container_rejects_corruption(corrupt, message, rng):
    blob = C.encode(rng.standard_normal(3), rng.standard_normal((3, 3)))
    with pytest.raises(C.CacheError, match=message):
        C.decode(corrupt(blob))


def test_cache_key_sensitivity(loop3):
    from coversol.spectral import laplacian
    g, mu = loop3.level(2).graph, laplacian(loop3, 2).mu
    k1 = C.cache_key(g, mu, {"mode": "iterative", "m": 3, "tol": 1e-10})
    k2 = C.cache_key(g, mu, {"mode": "iterative", "m": 3, "tol": 1e-9})
    k3 = C.cache_key(g, mu * 2, {"mode": "iterative", "m": 3, "tol": 1e-10})
    assert len({k1, k2, k3}) == 3
    assert k1 == C.cache_key(g, mu, {"tol": 1e-10, "m": 3, "mode": "iterative"})


# -- configuration -------------------------------------------------------------------

def test_config_field_diagnostics():
    with pytest.raises(ConfigError, match=r"base\.edges\[0\]"):
        parse_config(json.dumps({"base": {"vertices": 1, "edges": [{"u": 0, "v": 0}]},
                                 "chain": {"kind": "cyclic", "depth": 1}}))
    with pytest.raises(ConfigError, match="line 2"):
        parse_config('{\n "base": ,}')
    with pytest.raises(ConfigError, match="lambda_max"):
        parse_config(json.dumps(dict(LOOP, lambda_max=-1)))
    with pytest.raises(ConfigError, match="out of range"):
        parse_config(json.dumps({"base": {"vertices": 1, "edges": [{"u": 0, "v": 3, "voltage": 1}]},
                                 "chain": {"kind": "cyclic", "depth": 1}}))


def test_env_overrides_cache_only(run, monkeypatch, tmp_path):
    path = run(LOOP)
    monkeypatch.setenv("COVERSOL_CACHE", str(tmp_path / "elsewhere"))
    cfg = load_config(path)
    assert cfg.cache == tmp_path / "elsewhere"
    assert cfg.out == tmp_path / "out"
    assert load_config(path, cache="flag").cache.name == "flag"


# -- commands -------------------------------------------------------------------------

def test_build_cyclic(run, tmp_path, capsys):
    assert main(["build", "--config", str(run(LOOP))]) == 0
    meta = json.loads((tmp_path / "out" / "tower.json").read_text())
    assert [lv["vertices"] for lv in meta["levels"]] == [2, 6, 12]
    assert json.loads((tmp_path / "out" / "build_report.json").read_text())["passed"]


def test_build_voltage_outside_group(run, capsys):
    bad = json.loads(json.dumps(SL2))
    bad["base"]["edges"][1]["voltage"] = [[1, 2], [3, 4]]
    assert main(["build", "--config", str(run(bad))]) == 2
    assert "voltage on edge 1" in capsys.readouterr().err


def test_build_unknown_field(run, capsys):
    assert main(["build", "--config", str(run(dict(LOOP, colour="red")))]) == 2
    assert "colour" in capsys.readouterr().err


def test_usage_errors():
    assert main([]) == 2
    assert main(["circle"]) == 2


def test_build_sl2_writes_levels(run, tmp_path):
    assert main(["build", "--config", str(run(SL2))]) == 0
    files = sorted(p.name for p in (tmp_path / "out" / "levels").iterdir())
    assert files == ["level_1.npz", "level_2.npz"]
    data = np.load(tmp_path / "out" / "levels" / "level_2.npz")
    assert data["measure"].shape == (144,)


def test_spectra_requires_artifact(run, capsys):
    assert main(["spectra", "--config", str(run(LOOP))]) == 2
    assert "build" in capsys.readouterr().err


def test_spectra_cache_cycle(run, tmp_path, capsys):
    path = str(run(LOOP))
    main(["build", "--config", path])
    assert main(["spectra", "--config", path]) == 0
    first = capsys.readouterr().out
    assert first.count("(computed)") == 3
    assert main(["spectra", "--config", path]) == 0
    assert capsys.readouterr().out.count("(cache)") == 3
    lines = (tmp_path / "out" / "spectra.tsv").read_text().splitlines()
    assert lines[0].split("\t") == ["level", "index", "eigenvalue", "residual"]
    assert len(lines) == 1 + 2 + 6 + 12
    level, index, value, residual = lines[-1].split("\t")
    assert (int(level), int(index)) == (3, 11) and float(value) == pytest.approx(4.0)


def test_changed_tolerance_misses_cache(run, capsys):
    cfg = dict(LOOP, solver={"mode": "iterative", "m": 3, "tol": 1e-10})
    main(["build", "--config", str(run(cfg))])
    main(["spectra", "--config", str(run(cfg))])
    capsys.readouterr()
    cfg["solver"]["tol"] = 1e-9
    main(["build", "--config", str(run(cfg))])
    assert main(["spectra", "--config", str(run(cfg))]) == 0
    assert capsys.readouterr().out.count("(computed)") == 3


def test_verify_cyclic_passes(run, tmp_path):
    path = str(run(LOOP))
    main(["build", "--config", path])
    assert main(["verify", "--config", path]) == 0
    report = json.loads((tmp_path / "out" / "verify_report.json").read_text())
    assert report["passed"]
    assert "oracle_equivalence_frobenius" in report["metrics"]
    names = [c["name"] for c in report["checks"]]
    assert any("telescoped E(omega) equals direct projector" in n for n in names)
    assert any("(exact)" in n for n in names)


def test_verify_iterative_skips_telescope(run, tmp_path):
    path = str(run(dict(LOOP, solver={"mode": "iterative", "m": 2})))
    main(["build", "--config", path])
    assert main(["verify", "--config", path]) == 0
    report = json.loads((tmp_path / "out" / "verify_report.json").read_text())
    assert "multiset identity" in report["skipped"]


def _cache_files(tmp_path):
    return sorted((tmp_path / "cache").glob("*.eig"))


def test_wrong_but_well_formed_cache_fails_verify(run, tmp_path):
    path = str(run(LOOP))
    main(["build", "--config", path])
    main(["spectra", "--config", path])
    for f in _cache_files(tmp_path):
        vals, vecs = C.decode(f.read_bytes())
        if vecs.shape[0] == 12:
            C.atomic_write(f, C.encode(vals, vecs[:, ::-1].copy()))
    assert main(["verify", "--config", path]) == 1
    report = json.loads((tmp_path / "out" / "verify_report.json").read_text())
    failed = [c["name"] for c in report["checks"] if not c["passed"]]
    assert any("residuals" in n for n in failed)


def test_damaged_cache_is_recomputed(run, tmp_path, caplog):
    path = str(run(LOOP))
    main(["build", "--config", path])
    main(["spectra", "--config", path])
    for f in _cache_files(tmp_path):
        blob = bytearray(f.read_bytes())
        blob[30] ^= 0xFF
        f.write_bytes(bytes(blob))
    with caplog.at_level(logging.WARNING, logger="coversol"):
        assert main(["verify", "--config", path]) == 0
    assert "checksum" in caplog.text
    for f in _cache_files(tmp_path):
        C.decode(f.read_bytes())


def test_report_is_deterministic(run, tmp_path):
    path = str(run(LOOP))
    main(["build", "--config", path])
    assert main(["report", "--config", path]) == 0
    first = (tmp_path / "out" / "report.txt").read_bytes()
    assert main(["report", "--config", path]) == 0
    assert (tmp_path / "out" / "report.txt").read_bytes() == first
    text = first.decode()
    for section in ("tower summary", "per-level spectra", "new spectra", "union spectrum",
                    "density diagnostics", "PVM checks"):
        assert f"== {section} ==" in text
    plot = (tmp_path / "out" / "union_spectrum.tsv").read_text().splitlines()
    assert plot[0] == "eigenvalue\tfirst_level" and len(plot) == 8


def test_report_depth_one_is_base_spectrum(run, tmp_path):
    path = str(run(LOOP))
    main(["build", "--config", path, "--depth", "1"])
    assert main(["report", "--config", path, "--depth", "1"]) == 0
    rows = (tmp_path / "out" / "union_spectrum.tsv").read_text().splitlines()[1:]
    assert [float(r.split("\t")[0]) for r in rows] == pytest.approx([0.0, 4.0], abs=1e-12)


def test_stale_artifact_rejected(run, capsys):
    path = str(run(LOOP))
    main(["build", "--config", path])
    assert main(["spectra", "--config", path, "--depth", "2"]) == 2


def test_circle_command(capsys, tmp_path):
    assert main(["circle", "--depth", "8", "--lambda-max", "40", "--out", str(tmp_path)]) == 0
    assert "0.1-dense: yes" in capsys.readouterr().out
    assert main(["circle", "--depth", "1"]) == 0
    assert "0.1-dense: no" in capsys.readouterr().out
    assert main(["circle", "--depth", "1", "--epsilon", "-1"]) == 2
    assert (tmp_path / "circle_spectrum.tsv").exists()


def test_selberg_command(capsys):
    assert main(["selberg", "--depth", "2"]) == 0
    out = capsys.readouterr().out
    rows = [ln for ln in out.splitlines() if ln[:1].isdigit()]
    assert len(rows) == 2
    assert "do not bear on" in out


def test_selberg_cap(capsys):
    assert main(["selberg", "--depth", "6"]) == 2
