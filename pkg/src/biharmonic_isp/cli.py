"""Command-line front end: ``biharm-isp {forward,measure,invert,ergodic,selftest}``.

Exit codes: 0 success, 2 configuration error, 3 missing input, 4 numerical
failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time

import numpy as np

from . import __version__, figures
from .config import ConfigError, ExperimentConfig, parse_frequency_range
from .estimators import MeasurementTable
from .experiments import (
    ergodic_run,
    exact_measurements,
    peak_offset,
    reconstruct,
    relative_error,
    synthesize_measurements,
    true_strength,
)
from .forward import PreconditionError, sweep
from .inverse import AssemblyError, LinearSolveError, invert_ergodic
from .randsrc import ConfigurationError
from .specfun import DomainError

EXIT_OK, EXIT_CONFIG, EXIT_MISSING, EXIT_NUMERIC = 0, 2, 3, 4


class MissingInput(FileNotFoundError):
    pass


def blob_hash(path) -> str:
    """Content hash in git's blob format: sha1(b"blob <size>\\0" + data)."""
    with open(path, "rb") as fh:
        data = fh.read()
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


class Run:
    """Output directory bookkeeping; writes the manifest last."""

    def __init__(self, out, command, cfg: ExperimentConfig | None, argv):
        self.out = out
        self.command = command
        self.cfg = cfg
        self.argv = argv
        self.files = []
        os.makedirs(out, exist_ok=True)

    def path(self, name):
        self.files.append(name)
        return os.path.join(self.out, name)

    def manifest(self, extra=None):
        lines = [
            f"biharmonic_isp {__version__}",
            f"command: {self.command}",
            f"argv: {json.dumps(self.argv)}",
            f"numpy: {np.__version__}",
        ]
        if self.cfg is not None:
            lines.append(f"seed: {self.cfg.seed}")
        for key, val in (extra or {}).items():
            lines.append(f"{key}: {val}")
        if self.cfg is not None:
            lines.append("config:")
            lines.append(self.cfg.to_json())
        lines.append("outputs:")
        for name in self.files:
            lines.append(f"{blob_hash(os.path.join(self.out, name))}  {name}")
        with open(os.path.join(self.out, "manifest.txt"), "w") as fh:
            fh.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# stages

def _need_2d(cfg, what):
    if cfg.dim != 2:
        raise ConfigError(f"{what} uses the two-dimensional measurement kernel; set dim to 2")


def run_forward(cfg: ExperimentConfig, run: Run, args):
    grid, field, rec = cfg.grid(), cfg.strength(), cfg.receivers()
    t0 = time.perf_counter()
    samples = sweep(rec, cfg.frequencies, field, grid, cfg.paths, cfg.seed)
    samples.to_csv(run.path("wave_samples.csv"))
    print(f"forward: {len(rec)} receivers x {cfg.paths} paths x {len(cfg.frequencies)} frequencies "
          f"in {time.perf_counter() - t0:.1f} s")
    run.manifest()


def _measurements(cfg, args):
    grid, field, rec = cfg.grid(), cfg.strength(), cfg.receivers()
    kind = cfg.raw["inversion"]["data"]
    return synthesize_measurements(rec, grid, field, cfg.frequencies, cfg.paths, cfg.seed, kind)


def run_measure(cfg: ExperimentConfig, run: Run, args):
    _need_2d(cfg, "measure")
    t0 = time.perf_counter()
    table = _measurements(cfg, args)
    table.to_csv(run.path("measurements.csv"))
    print(f"measure: {table.values.size} entries ({table.kind}) in {time.perf_counter() - t0:.1f} s")
    run.manifest()


def run_invert(cfg: ExperimentConfig, run: Run, args):
    _need_2d(cfg, "invert")
    grid, field, rec = cfg.grid(), cfg.strength(), cfg.receivers()
    inv = cfg.raw["inversion"]
    extra = {}
    if args.measurements:
        if not os.path.exists(args.measurements):
            raise MissingInput(f"measurement file not found: {args.measurements}")
        table = MeasurementTable.from_csv(args.measurements, rec, inv["data"])
        extra["measurements"] = f"{blob_hash(args.measurements)}  {args.measurements}"
    elif args.exact:
        table = exact_measurements(rec, grid, field, cfg.frequencies, inv["data"])
        extra["measurements"] = "exact expectation"
    else:
        table = _measurements(cfg, args)
        table.to_csv(run.path("measurements.csv"))
    t0 = time.perf_counter()
    res = reconstruct(table, rec, grid, inv["gamma"], inv["sweeps"], cfg.frequencies, inv["clamp"])
    if not np.all(np.isfinite(res.q)):
        raise LinearSolveError("reconstruction produced non-finite values")
    mu = true_strength(field, grid)
    err = relative_error(res.q, mu)
    off = peak_offset(res.q, grid, grid.nodes()[int(np.argmax(mu))])
    res.to_csv(run.path("reconstruction.csv"), grid, mu)
    res.history_to_csv(run.path("residuals.csv"))
    figures.write_pgm(run.path("mu_true.pgm"), figures.grid_image(mu, grid), "mu_true")
    figures.write_pgm(run.path("mu_rec.pgm"), figures.grid_image(res.q, grid), "mu_rec")
    if not args.no_png:
        figures.plot_strength(run.path("strength.png"), grid, mu, res.q,
                              f"k = {', '.join(f'{k:g}' for k in cfg.frequencies)}")
        figures.plot_residuals(run.path("residuals.png"), res.history)
    print(f"invert: frequencies {cfg.frequencies}, gamma={inv['gamma']:g}, L={inv['sweeps']} "
          f"in {time.perf_counter() - t0:.1f} s")
    print(f"relative l2 error: {err:.6f}")
    print(f"peak offset (cells): {off.tolist()}")
    extra["relative_error"] = repr(err)
    run.manifest(extra)
    return err


def run_ergodic(cfg: ExperimentConfig, run: Run, args):
    grid, field = cfg.grid(), cfg.strength()
    erg = cfg.raw["ergodic"]
    d = cfg.dim
    rec = cfg.receivers() if erg["invert"] else cfg.ergodic_receivers()
    t0 = time.perf_counter()
    est = ergodic_run(rec, grid, field, erg["T"], erg["nodes"], erg["m"], cfg.seed)
    est.to_csv(run.path("ergodic.csv"))
    ratio = est.values / est.reference
    print(f"ergodic: d={d}, m={erg['m']:g}, exponent m+{7 - d} = {est.exponent:g}, "
          f"band [{erg['T']:g}, {2 * erg['T']:g}] with {erg['nodes']} nodes, {len(rec)} receivers "
          f"in {time.perf_counter() - t0:.1f} s")
    if len(rec) <= 20:
        for p, r in zip(rec.points, ratio):
            print(f"  x={np.round(p, 4).tolist()}  ratio={r:.4f}")
    inside = np.mean((ratio >= 0.85) & (ratio <= 1.15))
    print(f"fraction of ratios in [0.85, 1.15]: {inside:.3f}")
    if not args.no_png:
        figures.plot_ergodic(run.path("ergodic.png"), est)
    extra = {"exponent": est.exponent}
    if erg["invert"]:
        res = invert_ergodic(est.values, grid, rec, d, erg["gamma"], erg["sweeps"], clamp=True)
        mu = true_strength(field, grid)
        res.to_csv(run.path("ergodic_reconstruction.csv"), grid, mu)
        res.history_to_csv(run.path("ergodic_residuals.csv"))
        figures.write_pgm(run.path("ergodic_mu_rec.pgm"), figures.grid_image(res.q, grid), "mu_rec")
        err = relative_error(res.q, mu)
        print(f"ergodic inversion relative l2 error: {err:.6f}")
        extra["relative_error"] = repr(err)
    run.manifest(extra)


def run_selftest_cmd(args):
    from .selftest import run_selftest

    return run_selftest(perturb_a0=args.debug_perturb_a0)


# ---------------------------------------------------------------------------
# argument handling

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON experiment configuration")
    common.add_argument("--preset", choices=("example1", "example2", "ergodic3d"),
                        help="built-in configuration used when --config is absent (default example1)")
    common.add_argument("--seed", type=int, help="override the configured seed")
    common.add_argument("--out", default="out", metavar="DIR", help="output directory (default ./out)")
    common.add_argument("--frequencies", metavar="a:b", help="inclusive integer range or comma list")
    common.add_argument("--paths", type=int, help="number of sample paths P")
    common.add_argument("--gamma", type=float, help="Kaczmarz regularization parameter")
    common.add_argument("--sweeps", type=int, help="Kaczmarz sweeps L per frequency")
    common.add_argument("--no-png", action="store_true", help="skip matplotlib figures (PGM still written)")

    p = argparse.ArgumentParser(prog="biharm-isp", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("forward", parents=[common], help="simulate wave samples at the receivers")
    sub.add_parser("measure", parents=[common], help="Monte Carlo measurement table")
    inv = sub.add_parser("invert", parents=[common], help="reconstruct the source strength")
    inv.add_argument("--measurements", metavar="PATH",
                     help="measurement CSV; synthesized inline when omitted")
    inv.add_argument("--exact", action="store_true", help="invert the noise-free expected data")
    sub.add_parser("ergodic", parents=[common], help="single-path frequency band average")
    st = sub.add_parser("selftest", help="fast invariant checks")
    st.add_argument("--debug-perturb-a0", type=float, default=0.0, help=argparse.SUPPRESS)
    return p


def load_config(args) -> ExperimentConfig:
    if args.config:
        if not os.path.exists(args.config):
            raise MissingInput(f"config file not found: {args.config}")
        cfg = ExperimentConfig.from_file(args.config)
    else:
        cfg = ExperimentConfig.from_preset(args.preset or "example1")
    freqs = parse_frequency_range(args.frequencies) if args.frequencies else None
    if args.paths is not None and args.paths < 1:
        raise ConfigError("--paths must be at least 1")
    return cfg.with_overrides(seed=args.seed, paths=args.paths, frequencies=freqs,
                              gamma=args.gamma, sweeps=args.sweeps)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    if args.command == "selftest":
        return EXIT_OK if run_selftest_cmd(args) else 1
    try:
        cfg = load_config(args)
        run = Run(args.out, args.command, cfg, argv)
        stage = {"forward": run_forward, "measure": run_measure, "invert": run_invert,
                 "ergodic": run_ergodic}[args.command]
        stage(cfg, run, args)
    except MissingInput as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except (ConfigError, ConfigurationError, PreconditionError, DomainError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (LinearSolveError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except AssemblyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
