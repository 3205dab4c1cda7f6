"""Command-line driver: ``dyson kernel|relaxation|verify|simulate|correlate``.

Every run writes CSV output, optional SVG figures (``--plot``) and a JSON
manifest, which is written last. ``--config-file`` reads flat
``key = value`` lines that mirror the long flags; flags given on the
command line win.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import re
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import parse_configuration
from .errors import DysonError, InvalidParameter

EXIT_OK, EXIT_ASSERT, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


def parse_range(text: str) -> np.ndarray:
    """``a:b:h`` (inclusive of ``b`` up to rounding) or a comma list."""
    if ":" in text:
        parts = [float(p) for p in text.split(":")]
        if len(parts) != 3 or parts[2] <= 0 or parts[1] < parts[0]:
            raise argparse.ArgumentTypeError(f"bad range {text!r}; expected a:b:h")
        n = int(round((parts[1] - parts[0]) / parts[2])) + 1
        return np.round(parts[0] + parts[2] * np.arange(n), 12)
    return np.array([float(p) for p in text.split(",") if p.strip()])


def parse_list(text: str) -> list:
    return [float(p) for p in text.split(",") if p.strip()]


def _config(text: str):
    try:
        return parse_configuration(text)
    except DysonError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--plot", action="store_true", help="also write SVG figures")
    p.add_argument("--config-file", help="flat key=value file mirroring the flags")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dyson", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    k = sub.add_parser("kernel", help="evaluate a correlation kernel on a grid")
    k.add_argument("--family", required=True,
                   choices=["finite_contour", "finite_residue", "infinite_limit", "lattice_theta",
                            "lattice_lsum", "lattice_direct", "sine", "extended_sine", "cluster"])
    k.add_argument("--config", type=_config, default=None, help="configuration literal")
    k.add_argument("--s", type=float, default=0.5)
    k.add_argument("--t", type=float, default=0.5)
    k.add_argument("--grid", type=parse_range, default=None, help="x and y values, a:b:h")
    k.add_argument("--x", type=parse_range, default=None)
    k.add_argument("--y", type=parse_range, default=None)
    k.add_argument("--r", type=float, default=None, help="single separation y - x")
    k.add_argument("--density-grid", type=parse_range, default=None,
                   help="x values for the diagonal K(t,x;t,x) when s == t")
    k.add_argument("--quad-tol", type=float, default=1e-12)
    k.add_argument("--L-window", type=float, default=None)
    _common(k)

    r = sub.add_parser("relaxation", help="gap to the extended sine kernel from the lattice start")
    r.add_argument("--u", type=parse_list, default=[1.0, 2.0, 4.0, 8.0])
    r.add_argument("--s", type=float, default=0.5)
    r.add_argument("--t", type=float, default=0.5)
    r.add_argument("--grid", type=parse_range, default=parse_range("-1:1:0.25"))
    _common(r)

    v = sub.add_parser("verify", help="run a named property suite")
    v.add_argument("suite", choices=["biorth", "det-lemma", "intertwine", "forms-agree", "theta",
                                     "cluster", "mc-n2", "conditions"])
    _common(v)

    s = sub.add_parser("simulate", help="Monte Carlo paths of the finite system")
    s.add_argument("--config", type=_config, default=parse_configuration("points:-0.5^1,0.5^1"))
    s.add_argument("--times", type=parse_list, default=[0.5])
    s.add_argument("--paths", type=int, default=10_000)
    s.add_argument("--dt", type=float, default=1e-3)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--guard", type=float, default=1e-4)
    s.add_argument("--bins", type=parse_range, default=parse_range("-3:3:0.1"))
    s.add_argument("--export-paths", type=int, default=1000,
                   help="number of paths written to snapshots.csv")
    _common(s)

    c = sub.add_parser("correlate", help="multitime correlation determinants")
    c.add_argument("--config", type=_config, required=True)
    c.add_argument("--times", type=parse_list, required=True)
    c.add_argument("--points", required=True,
                   help="per-time point lists: 'x1,x2;y1' (one group per time)")
    c.add_argument("--family", default="finite_residue",
                   choices=["finite_contour", "finite_residue", "infinite_limit", "cluster",
                            "lattice_theta"])
    _common(c)
    return ap


def _expand_config_file(argv: list) -> list:
    """Insert ``--key value`` pairs from ``--config-file`` right after the
    subcommand so explicit flags (parsed later) override them."""
    if "--config-file" not in argv:
        return argv
    i = argv.index("--config-file")
    if i + 1 >= len(argv):
        return argv
    path = argv[i + 1]
    extra = []
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise InvalidParameter(f"cannot read config file: {exc}") from exc
    for ln in lines:
        ln = ln.split("#", 1)[0].strip()
        if not ln:
            continue
        if "=" not in ln:
            raise InvalidParameter(f"config line without '=': {ln!r}")
        key, val = (p.strip() for p in ln.split("=", 1))
        flag = "--" + key.replace("_", "-")
        if val.lower() in ("true", "yes", "on"):
            extra.append(flag)
        elif val.lower() in ("false", "no", "off"):
            continue
        else:
            extra.extend([flag, val])
    cmd_pos = next((j for j, a in enumerate(argv) if not a.startswith("-")), 0)
    return argv[: cmd_pos + 1] + extra + argv[cmd_pos + 1:]


class Run:
    """Collects emitted files and writes the manifest last."""

    def __init__(self, name: str, args: argparse.Namespace):
        self.name = name
        self.args = args
        self.out = Path(args.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.files: list = []
        self.t0 = time.time()

    def path(self, fname: str) -> Path:
        p = self.out / fname
        self.files.append(p)
        return p

    def finish(self, extra: dict | None = None) -> None:
        params = {k: (v.tolist() if isinstance(v, np.ndarray) else
                      str(v) if not isinstance(v, (int, float, str, bool, list, type(None))) else v)
                  for k, v in vars(self.args).items()}
        digests = {}
        for p in self.files:
            if p.exists():
                digests[p.name] = hashlib.sha256(p.read_bytes()).hexdigest()
        manifest = {"experiment": self.name, "parameters": params,
                    "tolerances": {k: params[k] for k in ("quad_tol",) if k in params},
                    "seed": params.get("seed"), "code_version": __version__,
                    "wall_time_s": round(time.time() - self.t0, 3), "outputs": digests}
        if extra:
            manifest.update(extra)
        (self.out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True),
                                                encoding="utf-8")


def cmd_kernel(args) -> int:
    from .kernels import (KernelSpec, SpaceTimePoint, evaluate, evaluate_grid, sine_kernel,
                          write_kernel_csv)
    if args.family == "sine" and args.r is not None:
        print(repr(float(sine_kernel(args.r))))
        return EXIT_OK
    needs_config = args.family in ("finite_contour", "finite_residue", "infinite_limit", "cluster")
    if needs_config and args.config is None:
        raise InvalidParameter(f"--config is required for family {args.family}")
    kspec = KernelSpec(args.family, args.config, quad_tol=args.quad_tol, L_window=args.L_window)
    run = Run("kernel", args)
    xs = args.x if args.x is not None else args.grid
    ys = args.y if args.y is not None else args.grid
    if args.r is not None:
        xs, ys = np.array([0.0]), np.array([args.r])
    extra = {}
    if xs is not None and ys is not None:
        rows = evaluate_grid(kspec, [args.s], [args.t], xs, ys)
        write_kernel_csv(rows, run.path("kernel.csv"))
        if args.plot:
            from .plotting import kernel_heatmap
            vals = np.array([r[4] for r in rows]).reshape(len(xs), len(ys))
            kernel_heatmap(np.sort(xs), np.sort(ys), vals, run.path("kernel.svg"),
                           title=f"{args.family}  s={args.s}  t={args.t}")
    if args.s == args.t and (args.density_grid is not None or needs_config):
        dx = args.density_grid
        if dx is None:
            pts = args.config.expanded() if args.config.is_finite else np.array([-3.0, 3.0])
            dx = parse_range(f"{pts.min() - 6}:{pts.max() + 6}:0.05")
        dens = [evaluate(kspec, SpaceTimePoint(args.s, x), SpaceTimePoint(args.t, x)).value
                for x in dx]
        trace = float(np.trapezoid(dens, dx))
        with open(run.path("density.csv"), "w", encoding="utf-8") as fh:
            fh.write("x,density\n")
            for x, d in zip(dx, dens):
                fh.write(f"{float(x)!r},{float(d)!r}\n")
        print(f"trace over [{dx[0]:g}, {dx[-1]:g}] = {trace:.8f}")
        extra["trace"] = trace
        if args.plot:
            from .plotting import kernel_lines
            kernel_lines(dx, {"K(t,x;t,x)": dens}, run.path("density.svg"), xlabel="x")
    if not run.files:
        raise InvalidParameter("nothing to evaluate: give --grid, --x/--y or --r")
    run.finish(extra)
    return EXIT_OK


def cmd_relaxation(args) -> int:
    from .kernels import relaxation_bound, relaxation_gap
    run = Run("relaxation", args)
    us = sorted(args.u)
    gaps = [relaxation_gap(u, args.s, args.t, args.grid, args.grid) for u in us]
    bounds = [relaxation_bound(u, args.s, args.t) for u in us]
    with open(run.path("relaxation.csv"), "w", encoding="utf-8") as fh:
        fh.write("u,gap,bound,gap_over_bound\n")
        for u, g, b in zip(us, gaps, bounds):
            fh.write(f"{u!r},{g!r},{b!r},{g / b!r}\n")
            print(f"u={u:g}  gap={g:.6e}  bound={b:.6e}")
    if args.plot:
        from .plotting import relaxation_plot
        relaxation_plot(us, gaps, bounds, run.path("relaxation.svg"))
    run.finish()
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import SUITES
    run = Run(f"verify-{args.suite}", args)
    checks = SUITES[args.suite]()
    with open(run.path("verify.csv"), "w", encoding="utf-8") as fh:
        fh.write("check,passed,value,threshold\n")
        for c in checks:
            print(c.line())
            fh.write(f"\"{c.name}\",{int(c.passed)},{c.value!r},{c.threshold!r}\n")
    ok = all(c.passed for c in checks)
    run.finish({"passed": ok})
    return EXIT_OK if ok else EXIT_ASSERT


def cmd_simulate(args) -> int:
    from .mcsim import (PRNG_NAME, SimPlan, estimate_density, simulate, write_field_csv,
                        write_snapshots_csv)
    cfg = args.config
    if not cfg.is_finite:
        raise InvalidParameter("simulation needs a finite configuration")
    plan = SimPlan(cfg, tuple(args.times), args.paths, dt=args.dt, seed=args.seed,
                   collision_guard=args.guard)
    run = Run("simulate", args)
    snaps = simulate(plan)
    write_snapshots_csv(snaps, run.path("snapshots.csv"), max_paths=args.export_paths)
    for t in plan.t_snapshots:
        fld = estimate_density(snaps, t, args.bins)
        write_field_csv(fld, run.path(f"density_t{t:g}.csv"))
        if args.plot:
            from .plotting import density_plot
            ref_x = ref = None
            if cfg.total <= 6:
                from .correlations import smn_kernel
                from .mhermite import MultiHermiteBasis
                b = MultiHermiteBasis(cfg)
                ref_x = np.linspace(args.bins[0], args.bins[-1], 301)
                ref = smn_kernel(t, t, ref_x, ref_x, b)
            density_plot(args.bins, fld.values, fld.se, ref_x, ref,
                         run.path(f"density_t{t:g}.svg"), title=f"t = {t:g}")
    print(f"{args.paths} paths, {snaps.stats.get('halvings', 0)} step halvings")
    run.finish({"prng": PRNG_NAME, "stats": snaps.stats})
    return EXIT_OK


def cmd_correlate(args) -> int:
    from .correlations import CorrelationRequest, correlation_det, write_correlation_csv
    from .kernels import KernelSpec
    groups = [parse_list(g) for g in args.points.split(";")]
    if len(groups) != len(args.times):
        raise InvalidParameter("--points needs one ';'-separated group per time")
    req = CorrelationRequest(tuple(args.times), tuple(groups), KernelSpec(args.family, args.config))
    value, cond = correlation_det(req, with_condition=True)
    run = Run("correlate", args)
    write_correlation_csv([(req.times, req.points, value)], run.path("correlation.csv"))
    print(f"rho = {value:.12g}  (condition number {cond:.3g})")
    run.finish({"condition_number": cond})
    return EXIT_OK


COMMANDS = {"kernel": cmd_kernel, "relaxation": cmd_relaxation, "verify": cmd_verify,
            "simulate": cmd_simulate, "correlate": cmd_correlate}


def _join_negative_values(argv: list) -> list:
    """``--grid -1:1:0.25`` would be read as two flags; rewrite it as
    ``--grid=-1:1:0.25``."""
    out = []
    i = 0
    while i < len(argv):
        a = argv[i]
        if (a.startswith("--") and "=" not in a and i + 1 < len(argv)
                and re.match(r"^-[\d.]", argv[i + 1])):
            out.append(f"{a}={argv[i + 1]}")
            i += 2
            continue
        out.append(a)
        i += 1
    return out


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        argv = _join_negative_values(_expand_config_file(argv))
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    except InvalidParameter as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DysonError as exc:
        diag = getattr(exc, "diagnostics", None)
        print(f"numeric failure: {exc}" + (f" {diag}" if diag else ""), file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
