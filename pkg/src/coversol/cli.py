"""Command-line front end.

Exit status: 0 on success, 1 when a verification check fails, 2 for usage or
configuration errors.  The COVERSOL_CACHE environment variable overrides the
cache directory and nothing else.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import pipeline
from .config import ConfigError, config_tower, load_config
from .groups import GroupCapError

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="coversol", description="Covering towers, level spectra "
                                "and their telescoping decomposition.")
    sub = p.add_subparsers(dest="command", required=True)

    def configured(name: str, help_text: str) -> argparse.ArgumentParser:
        s = sub.add_parser(name, help=help_text)
        s.add_argument("--config", required=True, help="JSON run configuration")
        s.add_argument("--depth", type=int, help="truncation depth (default: from config)")
        s.add_argument("--out", help="output directory")
        s.add_argument("--cache", help="eigendecomposition cache directory")
        s.add_argument("--mode", choices=["dense", "iterative"], help="eigensolver")
        s.add_argument("--lambda-max", type=float, dest="lambda_max", help="spectral window")
        s.add_argument("--epsilon", type=float, help="density threshold")
        return s

    configured("build", "build and verify the tower")
    configured("spectra", "compute or load per-level spectra")
    configured("verify", "run the full verification suite")
    configured("report", "union spectrum report and plot data")
    c = sub.add_parser("circle", help="closed-form flat circle tower")
    c.add_argument("--depth", type=int, required=True)
    c.add_argument("--lambda-max", type=float, dest="lambda_max", default=40.0)
    c.add_argument("--epsilon", type=float, default=0.1)
    c.add_argument("--out")
    s = sub.add_parser("selberg", help="spectral gaps of the SL(2, Z/l(n)Z) Cayley-graph tower")
    s.add_argument("--depth", type=int, required=True)
    s.add_argument("--out")
    return p


def _load(args):
    cfg = load_config(args.config, depth=args.depth, mode=args.mode, out=args.out,
                      cache=args.cache, lambda_max=args.lambda_max, epsilon=args.epsilon)
    return cfg, config_tower(cfg)


def cmd_build(args) -> int:
    cfg, tower = _load(args)
    rep = pipeline.build_checks(tower)
    pipeline.write_tower(tower, cfg, rep)
    print(rep)
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_spectra(args) -> int:
    cfg, tower = _load(args)
    pipeline.require_artifact(cfg)
    spectra, sources = pipeline.level_spectra(tower, cfg)
    rep = pipeline.write_spectra(spectra, sources, cfg)
    for s, src in zip(spectra, sources):
        print(f"level {s.level}: {len(s)} eigenpairs ({src})")
    print(rep)
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_verify(args) -> int:
    cfg, tower = _load(args)
    pipeline.require_artifact(cfg)
    spectra, _ = pipeline.level_spectra(tower, cfg)
    rep, skipped, metrics = pipeline.verify_suite(tower, spectra, cfg.arithmetic == "rational")
    pipeline.write_verify(rep, skipped, metrics, cfg)
    print(rep)
    for name in skipped:
        print(f"  [skip] {name}")
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_report(args) -> int:
    cfg, tower = _load(args)
    pipeline.require_artifact(cfg)
    spectra, _ = pipeline.level_spectra(tower, cfg)
    text, plot = pipeline.union_report(tower, spectra, cfg)
    cfg.out.mkdir(parents=True, exist_ok=True)
    pipeline.atomic_write(cfg.out / "report.txt", text.encode())
    pipeline.write_plot(cfg.out / "union_spectrum.tsv", plot)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_circle(args) -> int:
    if args.depth < 1 or not args.lambda_max > 0 or not args.epsilon > 0:
        raise ConfigError("need depth >= 1, lambda-max > 0 and epsilon > 0")
    text, plot = pipeline.circle_text(args.depth, args.lambda_max, args.epsilon)
    if args.out:
        out = Path(args.out)
        pipeline.atomic_write(out / "circle_report.txt", text.encode())
        pipeline.write_plot(out / "circle_spectrum.tsv", plot)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_selberg(args) -> int:
    if args.depth < 1:
        raise ConfigError("depth must be >= 1")
    text, rows = pipeline.selberg_text(args.depth)
    if args.out:
        pipeline.atomic_write(Path(args.out) / "selberg.tsv", text.encode())
    sys.stdout.write(text)
    return EXIT_OK if pipeline.selberg_ok(rows) else EXIT_FAIL


COMMANDS = {"build": cmd_build, "spectra": cmd_spectra, "verify": cmd_verify,
            "report": cmd_report, "circle": cmd_circle, "selberg": cmd_selberg}


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, GroupCapError, OverflowError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
