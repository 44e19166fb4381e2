"""Command-line entry point: ``geotrack {params,bounds,run,verify,plot}``.

Settings come from an INI file (``--config``) whose values are overridden by
flags of the same name. Exit codes: 0 success, 1 verification failure,
2 configuration error, 3 I/O error, 4 data error.
"""

import argparse
import configparser
import csv
import json
import logging
import math
import os
import sys
import warnings
from pathlib import Path

from .bounds import (
    ProblemConstants,
    complexity_K,
    delta_bound,
    optimal_parameters,
)
from .errors import (
    CalibrationError,
    ConfigurationError,
    ContractError,
    DegenerateInputError,
    DomainError,
    ScheduleError,
    SolverError,
)
from .karcher import Drift, KarcherInstance, averaged_study
from .manifolds import SPD, Euclidean
from .optimizer import constant_schedule, make_doubling_schedule, optimal_schedule
from .plotting import log_plot_svg
from .rng import make_rng
from .verification import geometry_suites, negative_control_suite, oracle_suite

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_IO, EXIT_DATA = 0, 1, 2, 3, 4

CSV_HEADER = ["k", "e_mean", "e_stderr", "ebar_mean", "reg_track", "reg_est", "alpha_k", "eta_k", "VT_cum"]

DEFAULTS = {
    "experiment": {
        "manifold": "spd",
        "m": "3",
        "N": "10",
        "T": "2000",
        "runs": "20",
        "seed": "0",
        "drift": "constant_speed",
        "omega": "",
        "probes": "200",
    },
    "constants": {
        "L": "1.5",
        "sigma": "1.0",
        "delta": "0.001",
        "V": "0.5",
        "kappa": "-0.5",
        "R": "1.0",
        "G": "1.0",
        "zeta": "1.5",
    },
    "schedule": {"kind": "optimal", "alpha": "", "eta": "", "cbar": "1.0"},
    "output": {"dir": "out"},
}

# flag name -> (section, key)
OVERRIDES = {
    "seed": ("experiment", "seed"),
    "runs": ("experiment", "runs"),
    "T": ("experiment", "T"),
    "m": ("experiment", "m"),
    "N": ("experiment", "N"),
    "manifold": ("experiment", "manifold"),
    "drift": ("experiment", "drift"),
    "omega": ("experiment", "omega"),
    "L": ("constants", "L"),
    "sigma": ("constants", "sigma"),
    "delta": ("constants", "delta"),
    "V": ("constants", "V"),
    "kappa": ("constants", "kappa"),
    "R": ("constants", "R"),
    "G": ("constants", "G"),
    "zeta": ("constants", "zeta"),
    "schedule": ("schedule", "kind"),
    "alpha": ("schedule", "alpha"),
    "eta": ("schedule", "eta"),
    "cbar": ("schedule", "cbar"),
    "out": ("output", "dir"),
}

DRIFTS = {"constant_speed": "constant", "decaying_speed": "decaying"}


class Config:
    """Typed view over the merged INI settings."""

    def __init__(self, parser):
        self.p = parser

    def _get(self, section, key, conv):
        raw = self.p.get(section, key, fallback="").strip()
        try:
            return conv(raw)
        except ValueError as exc:
            raise ConfigurationError(f"[{section}] {key}={raw!r}: {exc}") from None

    def _opt_float(self, section, key):
        raw = self.p.get(section, key, fallback="").strip()
        if raw in ("", "auto", "none"):
            return None
        return self._get(section, key, float)

    @property
    def manifold(self):
        v = self.p.get("experiment", "manifold").strip()
        if v not in ("spd", "euclidean"):
            raise ConfigurationError(f"manifold must be 'spd' or 'euclidean', got {v!r}")
        return v

    @property
    def m(self):
        return self._get("experiment", "m", int)

    @property
    def d(self):
        m = self.m
        return m * (m + 1) // 2 if self.manifold == "spd" else m

    @property
    def seed(self):
        s = self._get("experiment", "seed", int)
        if not 0 <= s < 2**64:
            raise ConfigurationError("seed must be an unsigned 64-bit integer")
        return s

    @property
    def runs(self):
        return self._get("experiment", "runs", int)

    def make_manifold(self):
        m = self.m
        if m < 1:
            raise ConfigurationError("m must be >= 1")
        if self.manifold == "spd":
            return SPD(m, kappa=self._get("constants", "kappa", float))
        return Euclidean(m)

    def constants(self):
        g = lambda k: self._get("constants", k, float)  # noqa: E731
        try:
            return ProblemConstants(
                L=g("L"),
                sigma=g("sigma"),
                delta=g("delta"),
                V=g("V"),
                kappa=g("kappa"),
                R=g("R"),
                d=self.d,
                G=g("G"),
                zeta=self._opt_float("constants", "zeta"),
            )
        except (ContractError, DomainError) as exc:
            raise ConfigurationError(str(exc)) from None

    @property
    def schedule_kind(self):
        k = self.p.get("schedule", "kind").strip()
        if k not in ("optimal", "constant", "doubling"):
            raise ConfigurationError(f"schedule must be optimal, constant or doubling, got {k!r}")
        return k

    def schedule_factory(self):
        """Callable ``constants -> StepSchedule`` for the configured kind."""
        kind = self.schedule_kind
        if kind == "optimal":
            return optimal_schedule
        if kind == "doubling":
            cbar = self._get("schedule", "cbar", float)
            return lambda c: make_doubling_schedule(c, cbar)
        alpha = self._opt_float("schedule", "alpha")
        eta = self._opt_float("schedule", "eta")
        if alpha is None or eta is None:
            raise ConfigurationError("constant schedule needs alpha and eta")
        return lambda c: constant_schedule(alpha, eta)

    def instance(self):
        drift = self.p.get("experiment", "drift").strip()
        if drift not in DRIFTS:
            raise ConfigurationError(f"drift must be one of {sorted(DRIFTS)}, got {drift!r}")
        try:
            return KarcherInstance(
                m=self.m,
                N=self._get("experiment", "N", int),
                T=self._get("experiment", "T", int),
                drift=Drift(DRIFTS[drift], self._opt_float("experiment", "omega")),
                seed=self.seed,
            )
        except ContractError as exc:
            raise ConfigurationError(str(exc)) from None

    @property
    def probes(self):
        return self._get("experiment", "probes", int)

    @property
    def out(self):
        return Path(self.p.get("output", "dir").strip())


def load_config(args):
    p = configparser.ConfigParser()
    p.optionxform = str  # keep key case (L, V, N, T)
    p.read_dict(DEFAULTS)
    if getattr(args, "config", None):
        try:
            with open(args.config, encoding="utf-8") as fh:
                p.read_file(fh)
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {args.config}: {exc}") from None
        except configparser.Error as exc:
            raise ConfigurationError(f"malformed config: {exc}") from None
        for section in p.sections():
            if section not in DEFAULTS:
                raise ConfigurationError(f"unknown config section [{section}]")
            unknown = set(p[section]) - set(DEFAULTS[section])
            if unknown:
                raise ConfigurationError(f"unknown keys in [{section}]: {', '.join(sorted(unknown))}")
    for flag, (section, key) in OVERRIDES.items():
        v = getattr(args, flag, None)
        if v is not None:
            p.set(section, key, str(v))
    return Config(p)


def _g(v):
    return format(float(v), ".12g")


# -- subcommands ----------------------------------------------------------------


def cmd_params(cfg, args):
    c = cfg.constants()
    print(f"d = {c.d}  zeta = {c.zeta_R:.6g}")
    print(f"admissible alpha interval = (0, {c.alpha_max:.6g})")
    try:
        opt = optimal_parameters(c)
    except DegenerateInputError as exc:
        print(f"notice: {exc}", file=sys.stderr)
        return EXIT_OK
    print(f"eta_bar = {opt.eta:.6g}")
    print(f"alpha_bar = {opt.alpha:.6g}")
    print(f"Delta(alpha_bar, eta_bar) = {opt.Delta:.6g}")
    return EXIT_OK


def cmd_bounds(cfg, args):
    c = cfg.constants()
    kind = cfg.schedule_kind
    if kind == "doubling":
        s = cfg.schedule_factory()(c)
        print("m  T_m  alpha  eta  D  cbar/sqrt(T_m)  rho")
        for m in range(args.periods + 1):
            p = s.period(m)
            print(
                f"{m} {p.T} {p.alpha:.6g} {p.eta:.6g} {p.D:.6g} "
                f"{s.cbar / math.sqrt(p.T):.6g} {s.rho_at(p.T - 1):.8g}"
            )
        return EXIT_OK
    p = cfg.schedule_factory()(c).params_at(0)
    rep = delta_bound(c, p.alpha, p.eta)
    for name in ("alpha", "eta", "zeta_R", "rho", "theta1", "theta2", "D", "Delta"):
        print(f"{name} = {getattr(rep, name):.8g}")
    if args.e0 is not None:
        cb = complexity_K(c, rep, args.e0, args.epsilon)
        if cb.immediate:
            print("K = 0 (starting error already within Delta)")
        else:
            print(f"K = {cb.K}")
    return EXIT_OK


def _write_csv(path, arm):
    with open(path, "w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for k in range(len(arm.e_mean)):
            w.writerow(
                [
                    str(k),
                    _g(arm.e_mean[k]),
                    _g(arm.e_stderr[k]),
                    _g(arm.ebar_mean[k]),
                    _g(arm.reg_track[k]),
                    _g(arm.reg_est[k]),
                    _g(arm.alpha[k]),
                    _g(arm.eta[k]),
                    _g(arm.VT_cum[k]),
                ]
            )


def cmd_run(cfg, args):
    if cfg.manifold != "spd":
        raise ConfigurationError("the tracking study runs on the spd manifold only")
    inst = cfg.instance()
    c = cfg.constants()
    sched = cfg.schedule_factory()
    runs = cfg.runs
    if runs < 1:
        raise ConfigurationError("runs must be >= 1")
    out = cfg.out
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        print(f"error: cannot write to {out}: {exc}", file=sys.stderr)
        return EXIT_IO

    trace = averaged_study(inst, sched, runs, seed=cfg.seed, constants=c, probes=cfg.probes)
    try:
        for name, arm in trace.arms.items():
            _write_csv(out / f"{name}.csv", arm)
        header = {
            "seed": cfg.seed,
            "runs": runs,
            "m": inst.m,
            "N": inst.N,
            "T": inst.T,
            "drift": inst.drift.kind,
            "schedule": cfg.schedule_kind,
            "omega": trace.omegas,
            "domain_diameter": [k.R for k in trace.constants],
            "flagged_runs": trace.flagged,
        }
        (out / "run_header.json").write_text(json.dumps(header, indent=2) + "\n")
    except OSError as exc:
        print(f"error: writing results failed: {exc}", file=sys.stderr)
        return EXIT_IO

    z, f = trace["zeroth"].tail_mean(), trace["first"].tail_mean()
    bound = f"{trace.Delta:.6g}" if trace.Delta is not None else "n/a"
    print(f"tail-mean e_k: zeroth-order {z:.6g}, first-order {f:.6g}; Delta = {bound}")
    if trace.flagged:
        print(f"warning: runs {trace.flagged} exceed the declared delta or V", file=sys.stderr)
    return EXIT_OK


def cmd_verify(cfg, args):
    M = cfg.make_manifold()
    seed = cfg.seed
    if args.negative_control:
        oracle = negative_control_suite(samples=args.samples, rng=make_rng(seed, 1))
    else:
        oracle = oracle_suite(samples=args.samples, rng=make_rng(seed, 1))
    results = [oracle] + geometry_suites(M, rng=make_rng(seed, 2), triangles=args.triangles)
    for r in results:
        print(r.line())
    for cfg_, rep in oracle.details:
        d, delta, eta = cfg_
        print(f"  d={d} delta={delta:g} eta={eta:.4g}: {rep.summary()}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY


class DataError(Exception):
    pass


def read_trace_csv(path):
    """``(k, e_mean)`` columns of a CSV written by ``run``."""
    with open(path, newline="", encoding="ascii") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != CSV_HEADER:
        raise DataError(f"{path}: unexpected header")
    if len(rows) < 2:
        raise DataError(f"{path}: no data rows")
    ks, es = [], []
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(CSV_HEADER):
            raise DataError(f"{path}:{i}: expected {len(CSV_HEADER)} fields")
        try:
            ks.append(int(row[0]))
            es.append(float(row[1]))
        except ValueError:
            raise DataError(f"{path}:{i}: non-numeric value") from None
    return ks, es


def cmd_plot(cfg, args):
    try:
        series = [(Path(p).stem, *read_trace_csv(p)) for p in args.csv]
        svg = log_plot_svg(series, title="mean tracking error")
    except (DataError, ValueError, UnicodeDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    target = cfg.out
    if target.suffix.lower() != ".svg":
        target = target / "tracking_error.svg"
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(svg, encoding="utf-8")
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(target)
    return EXIT_OK


# -- parser -----------------------------------------------------------------------


def _common(p):
    p.add_argument("--config", help="INI configuration file")
    p.add_argument("--seed", type=int)
    p.add_argument("--runs", type=int)
    p.add_argument("--out", help="output directory (plot: directory or .svg path)")
    p.add_argument("--manifold", choices=("spd", "euclidean"))
    p.add_argument("--m", type=int, help="matrix size (spd) or dimension (euclidean)")
    p.add_argument("--N", type=int, help="matrices per time step")
    p.add_argument("--T", type=int, help="horizon")
    p.add_argument("--drift", choices=sorted(DRIFTS))
    p.add_argument("--omega", type=float, help="drift speed (default: calibrated)")
    for name in ("L", "sigma", "delta", "V", "kappa", "R", "G", "zeta", "alpha", "eta", "cbar"):
        p.add_argument(f"--{name}", type=float)
    p.add_argument("--schedule", choices=("optimal", "constant", "doubling"))


def build_parser():
    ap = argparse.ArgumentParser(prog="geotrack", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("params", help="optimal step size and precision")
    _common(p)
    p.set_defaults(func=cmd_params)

    p = sub.add_parser("bounds", help="tracking-bound report for the configured schedule")
    _common(p)
    p.add_argument("--e0", type=float, help="initial error for the iteration count")
    p.add_argument("--epsilon", type=float, default=1e-3)
    p.add_argument("--periods", type=int, default=12, help="doubling periods to list")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("run", help="run the averaged Karcher tracking study")
    _common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("verify", help="oracle-bound and geometry self-checks")
    _common(p)
    p.add_argument("--samples", type=int, default=100_000, help="oracle Monte-Carlo samples")
    p.add_argument("--triangles", type=int, default=10_000)
    p.add_argument("--negative-control", action="store_true", help="understate L by 2x")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("plot", help="SVG of e_mean against k")
    _common(p)
    p.add_argument("csv", nargs="+")
    p.set_defaults(func=cmd_plot)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    if not args.verbose:
        warnings.simplefilter("default")
    try:
        cfg = load_config(args)
        return args.func(cfg, args)
    except (ConfigurationError, ContractError, ScheduleError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DomainError, CalibrationError, SolverError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
