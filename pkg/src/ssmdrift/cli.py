"""Command-line front end.

Subcommands: ``fit``, ``apply``, ``portrait``, ``greedy``, ``plan``,
``synth``, ``rtbp-check``.  Every option can also come from a flat
``key=value`` config file (``--config``); command-line flags win.  All
angles are radians and all times adimensional rotating-frame units
(one year = 2*pi units).

Exit codes: 0 ok, 2 bad input, 3 fit failure, 4 unreachable target,
5 livelock.
"""

from __future__ import annotations

import argparse
import sys

from . import grid as gridmod
from . import inner as innermod
from . import planner, rtbp, ssm, synth
from .integrate import IntegratorConfig

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_FIT = 3
EXIT_UNREACHABLE = 4
EXIT_LIVELOCK = 5


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _load_config(path) -> dict:
    cfg = {}
    try:
        with open(path, "r", encoding="ascii") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise CliError(
                        f"{path}:{lineno}: expected key=value", EXIT_INPUT
                    )
                key, val = line.split("=", 1)
                cfg[key.strip()] = val.strip()
    except OSError as exc:
        raise CliError(f"cannot read config: {exc}", EXIT_INPUT) from None
    return cfg


class Options:
    """Merged view of CLI flags over config-file values over defaults."""

    def __init__(self, args):
        self._args = vars(args)
        self._cfg = _load_config(args.config) if args.config else {}

    def get(self, key, cast, default=None, required=False):
        val = self._args.get(key.replace("-", "_"))
        if val is None:
            raw = self._cfg.get(key)
            if raw is not None:
                try:
                    val = cast(raw)
                except ValueError as exc:
                    raise CliError(
                        f"config value {key}={raw!r}: {exc}", EXIT_INPUT
                    ) from None
        if val is None:
            if required:
                raise CliError(f"missing required option '{key}'", EXIT_INPUT)
            return default
        return val


def _bool(text: str):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _point(text: str):
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("expected 'I,phi'")
    return (float(parts[0]), float(parts[1]))


def _float_list(text: str):
    return tuple(float(p) for p in text.split(","))


def _load_model(path):
    try:
        return ssm.load_model(path)
    except (OSError, ValueError) as exc:
        raise CliError(f"cannot load model {path}: {exc}", EXIT_INPUT) from None


def _load_inner(opts):
    path = opts.get("inner", str)
    if path is None:
        return innermod.default_inner_model()
    try:
        return innermod.load_inner_model(path)
    except (OSError, ValueError) as exc:
        raise CliError(
            f"cannot load inner model {path}: {exc}", EXIT_INPUT
        ) from None


def _time_model(opts, im):
    t_out = opts.get("t-out", float, innermod.T_OUT_MAX)
    try:
        return innermod.TimeModel.from_inner_model(im, t_out=t_out)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_INPUT) from None


# ---------------------------------------------------------------------------
# subcommands


def cmd_rtbp_check(opts) -> int:
    mu = opts.get("mu", float, rtbp.SUN_EARTH_MU)
    try:
        rtbp.check_mu(mu)
        x1 = rtbp.locate_L1(mu)
        gamma = x1 - (mu - 1.0)
        C = rtbp.jacobi_constant(rtbp.l1_state(mu), mu)
        fr = rtbp.linear_frequencies(mu)
    except (ValueError, RuntimeError) as exc:
        raise CliError(str(exc), EXIT_INPUT) from None
    print(f"mu      = {mu:.17g}")
    print(f"X(L1)   = {x1:.17g}")
    print(f"gamma   = {gamma:.17g}")
    print(f"C(L1)   = {C:.17g}")
    print(f"nu_h    = {fr.nu_h:.17g}")
    print(f"nu_p    = {fr.nu_p:.17g}")
    print(f"nu_v    = {fr.nu_v:.17g}")
    return EXIT_OK


def cmd_synth(opts) -> int:
    import os

    out_dir = opts.get("out-dir", str, required=True)
    seed = opts.get("seed", int, 0)
    samples = opts.get("samples", int, 128)
    tori = opts.get("tori", _float_list,
                    (1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0))
    os.makedirs(out_dir, exist_ok=True)
    for variant in (1, 2):
        model = synth.make_paper_magnitude_model(seed=seed, variant=variant)
        g = synth.generate_grid(model, tori, samples)
        gridmod.save_grid(g, os.path.join(out_dir, f"grid{variant}.csv"))
        ssm.save_model(model, os.path.join(out_dir, f"truth{variant}.model"))
    innermod.save_inner_model(innermod.default_inner_model(),
                              os.path.join(out_dir, "inner.csv"))
    print(f"wrote grid1/grid2, truth1/truth2 and inner table to {out_dir}")
    return EXIT_OK


def cmd_fit(opts) -> int:
    grid_path = opts.get("grid", str, required=True)
    out = opts.get("out", str, required=True)
    N = opts.get("n", int, 4)
    L = opts.get("l", int, 5)
    L_omega = opts.get("l-omega", int)
    try:
        g = gridmod.load_grid(grid_path)
    except (OSError, ValueError) as exc:
        raise CliError(f"cannot load grid: {exc}", EXIT_INPUT) from None
    try:
        model = ssm.fit_ssm(g, N, L, L_omega=L_omega)
        report = ssm.approximation_error(model, g)
    except (ssm.FitError, ssm.ConvergenceError) as exc:
        raise CliError(f"fit failed: {exc}", EXIT_FIT) from None
    ssm.save_model(model, out)
    print(f"model written to {out}")
    print(f"eps_I   = {report.eps_I:.6e}")
    print(f"eps_phi = {report.eps_phi:.6e}")
    print(f"odd_max = {model.fit_meta['odd_max']:.6e}")
    if opts.get("sweep", _bool, False):
        print("N,L,eps_I,eps_phi")
        for Ns in range(2, N + 1, 2):
            for Ls in range(0, L + 1):
                try:
                    ms = ssm.fit_ssm(g, Ns, Ls)
                    rs = ssm.approximation_error(ms, g)
                except (ssm.FitError, ssm.ConvergenceError):
                    continue
                print(f"{Ns},{Ls},{rs.eps_I:.6e},{rs.eps_phi:.6e}")
    return EXIT_OK


def cmd_apply(opts) -> int:
    model = _load_model(opts.get("model", str, required=True))
    I, phi = opts.get("point", _point, required=True)
    tol = opts.get("fp-tol", float, ssm.DEFAULT_FP_TOL)
    try:
        Ip, phip = ssm.apply_sm(model, I, phi, tol=tol)
    except (ssm.OutOfRangeError, ssm.ConvergenceError) as exc:
        raise CliError(str(exc), EXIT_INPUT) from None
    print(f"I'   = {Ip:.17g}")
    print(f"phi' = {phip:.17g}")
    return EXIT_OK


def cmd_portrait(opts) -> int:
    model = _load_model(opts.get("model", str, required=True))
    out = opts.get("out", str, required=True)
    n_orbits = opts.get("orbits", int, 100)
    n_iters = opts.get("iters", int, 1000)
    tol = opts.get("fp-tol", float, ssm.DEFAULT_FP_TOL)
    try:
        por = ssm.phase_portrait(model, n_orbits, n_iters, tol=tol)
    except ssm.ConvergenceError as exc:
        raise CliError(str(exc), EXIT_FIT) from None
    with open(out, "w", encoding="ascii") as fh:
        fh.write("orbit,iter,I,phi\n")
        for row in por.points:
            fh.write(f"{int(row[0])},{int(row[1])},{row[2]:.17g},"
                     f"{row[3]:.17g}\n")
    print(f"{por.points.shape[0]} rows written to {out}; "
          f"{len(por.left_domain)} orbit(s) left the domain")
    return EXIT_OK


def cmd_greedy(opts) -> int:
    model = _load_model(opts.get("model", str, required=True))
    im = _load_inner(opts)
    tm = _time_model(opts, im)
    out = opts.get("out", str, required=True)
    start = opts.get("start", _point, (1.0, 0.0))
    target = opts.get("target", float, 7.0)
    max_steps = opts.get("max-steps", int, 10000)
    label = opts.get("sigma-label", str, "S1")
    try:
        orbit = planner.greedy_drift(model, im, start, target,
                                     max_steps=max_steps, sigma_label=label)
    except planner.MaxStepsExceededError as exc:
        planner.save_orbit(exc.orbit, tm, out)
        raise CliError(f"greedy did not finish: {exc}", EXIT_INPUT) from None
    except (ssm.OutOfRangeError, ssm.ConvergenceError,
            innermod.InnerRangeError) as exc:
        raise CliError(str(exc), EXIT_INPUT) from None
    planner.save_orbit(orbit, tm, out)
    t = planner.drift_time(orbit, tm)
    print(f"n0={orbit.n0},n1={orbit.n1},n2={orbit.n2},t={t:.6f}")
    return EXIT_OK


def cmd_plan(opts) -> int:
    m1 = _load_model(opts.get("model1", str, required=True))
    m2 = _load_model(opts.get("model2", str, required=True))
    im = _load_inner(opts)
    tm = _time_model(opts, im)
    out = opts.get("out", str, required=True)
    start = opts.get("start", _point, (1.0, 1.5))
    goal = opts.get("goal", _point, (7.0, 1.5))
    radius = opts.get("radius", float, 0.25)
    m_cells = opts.get("m", int, 30)
    n_cells = opts.get("n", int, 30)
    cells = planner.CellGrid(m_cells, n_cells, I_top=m1.I_max)
    graph = planner.build_cell_graph(m1, m2, im, tm, cells)
    graph_out = opts.get("graph-out", str)
    if graph_out:
        planner.save_graph(graph, graph_out)
    try:
        orbit = planner.orbit_shortest_time(m1, m2, im, tm, cells, start,
                                            goal, radius=radius, graph=graph)
    except planner.UnreachableError as exc:
        raise CliError(str(exc), EXIT_UNREACHABLE) from None
    except planner.LivelockError as exc:
        raise CliError(str(exc), EXIT_LIVELOCK) from None
    except (ssm.OutOfRangeError, ssm.ConvergenceError,
            innermod.InnerRangeError) as exc:
        raise CliError(str(exc), EXIT_INPUT) from None
    planner.save_orbit(orbit, tm, out)
    t = planner.drift_time(orbit, tm)
    print(f"n0={orbit.n0},n1={orbit.n1},n2={orbit.n2},t={t:.6f}")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="ssmdrift",
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = top.add_subparsers(dest="command", required=True)

    def new(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="flat key=value defaults file")
        return p

    p = new("rtbp-check", "print mu, L1, C(L1) and the linear frequencies")
    p.add_argument("--mu", type=float)

    p = new("synth", "write synthetic grids, truth models and inner table")
    p.add_argument("--out-dir")
    p.add_argument("--seed", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--tori", type=_float_list)

    p = new("fit", "fit the series model to a grid file")
    p.add_argument("--grid")
    p.add_argument("--out")
    p.add_argument("--n", type=int)
    p.add_argument("--l", type=int)
    p.add_argument("--l-omega", type=int)
    p.add_argument("--sweep", action="store_const", const=True, default=None)

    p = new("apply", "apply a fitted map to one point")
    p.add_argument("--model")
    p.add_argument("--point", type=_point)
    p.add_argument("--fp-tol", type=float)

    p = new("portrait", "iterate seeds on the phi=0 line, dump the cloud")
    p.add_argument("--model")
    p.add_argument("--out")
    p.add_argument("--orbits", type=int)
    p.add_argument("--iters", type=int)
    p.add_argument("--fp-tol", type=float)

    p = new("greedy", "greedy gain-seeking drift orbit")
    p.add_argument("--model")
    p.add_argument("--inner")
    p.add_argument("--out")
    p.add_argument("--start", type=_point)
    p.add_argument("--target", type=float)
    p.add_argument("--max-steps", type=int)
    p.add_argument("--sigma-label", choices=planner.SIGMA_LABELS)
    p.add_argument("--t-out", type=float)

    p = new("plan", "shortest-time drift orbit via the cell graph")
    p.add_argument("--model1")
    p.add_argument("--model2")
    p.add_argument("--inner")
    p.add_argument("--out")
    p.add_argument("--graph-out")
    p.add_argument("--start", type=_point)
    p.add_argument("--goal", type=_point)
    p.add_argument("--radius", type=float)
    p.add_argument("--m", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--t-out", type=float)

    return top


_COMMANDS = {
    "rtbp-check": cmd_rtbp_check,
    "synth": cmd_synth,
    "fit": cmd_fit,
    "apply": cmd_apply,
    "portrait": cmd_portrait,
    "greedy": cmd_greedy,
    "plan": cmd_plan,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    opts = Options(args)
    try:
        return _COMMANDS[args.command](opts)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
