"""Scenario-driven command line front end.

Subcommands:

    modes      frequency table and sampled eigenfunctions
    assemble   dump Omega, B1, C1, F and the per-output gains
    simulate   error trajectory CSV (t, Delta_1..N, delta_1..N, W, norm_sq)
    resolvent  shift diagnostics: M norms, block norms, HS bound, density
    check      standing-assumption report
    sweep      decay metrics over the configured (gamma, N) grid

Every file is CSV with a ``# format=1`` first line or plain text; floats
go through repr() so identical inputs give byte-identical outputs.  Exit
status: 0 success, 1 numeric failure, 2 configuration failure, 3 when
``check`` finds a violated assumption.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, figures, output
from .errors import BeamObsError, ConfigurationError, ParameterError
from .modal import ModalSystem, SensorConfig, build_system, check_assumptions
from .observer import (
    ErrorState,
    assemble_error_generator,
    decay_metrics,
    propagate_error,
)
from .resolvent import (
    build_context,
    eigenvalue_density,
    hs_bound,
    hs_norm,
    hs_trend,
    resolvent_apply,
    resolvent_blocks,
)
from .scenario import load_scenario
from .spectral import eval_mode, find_modes

__all__ = ["main", "build_parser"]

EXIT_OK = 0
EXIT_NUMERIC = 1
EXIT_CONFIG = 2
EXIT_CHECK = 3

_SHAPE_SAMPLES = 201


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH",
                        help="scenario file (default: packaged scenario)")
    common.add_argument("--out", metavar="DIR", default="beamobs-out",
                        help="output directory, created if missing")
    common.add_argument("--n-modes", type=int, metavar="N",
                        help="override the truncation order")
    common.add_argument("--gamma", metavar="LIST",
                        help="override gains (comma-separated; for sweep, "
                             "replaces the gamma list)")
    common.add_argument("--t-end", type=float, metavar="S",
                        help="override the simulation horizon")
    common.add_argument("--samples", type=int, metavar="COUNT",
                        help="override the sample count")
    common.add_argument("--seed", type=int, default=0, metavar="INT",
                        help="seed for randomized residual probes")
    common.add_argument("--no-body-output", action="store_true",
                        help="drop the body displacement output row")
    common.add_argument("--no-figures", action="store_true",
                        help="skip PNG rendering")

    parser = argparse.ArgumentParser(
        prog="beamobs",
        description="modal observer construction and verification for a "
                    "flexible beam with an attached body",
    )
    parser.add_argument("--version", action="version",
                        version="%(prog)s " + __version__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("modes", parents=[common],
                   help="solve the eigenvalue problem and tabulate modes")
    sub.add_parser("assemble", parents=[common],
                   help="dump the truncated system matrices")
    sim = sub.add_parser("simulate", parents=[common],
                         help="propagate the observer error")
    sim.add_argument("--from-dump", metavar="DIR",
                     help="rebuild the system from an assemble dump instead "
                          "of the scenario")
    sub.add_parser("resolvent", parents=[common],
                   help="shift diagnostics and spectral density")
    sub.add_parser("check", parents=[common],
                   help="verify the standing assumptions")
    sub.add_parser("sweep", parents=[common],
                   help="decay metrics over the (gamma, N) grid")
    return parser


def _parse_gamma_list(raw):
    try:
        vals = tuple(float(tok) for tok in raw.split(","))
    except ValueError as exc:
        raise ConfigurationError("not a comma-separated float list: %r" % raw,
                                 field="--gamma") from exc
    if not vals or any(v <= 0.0 for v in vals):
        raise ConfigurationError("gains must be strictly positive",
                                 field="--gamma")
    return vals


def _apply_overrides(sc, args):
    changes = {}
    if args.n_modes is not None:
        if args.n_modes < 1:
            raise ConfigurationError("must be >= 1", field="--n-modes")
        changes["n_modes"] = args.n_modes
        changes["sweep_truncations"] = (args.n_modes,) if sc.sweep_truncations else ()
    if args.gamma is not None:
        vals = _parse_gamma_list(args.gamma)
        changes["gains"] = vals
        if sc.sweep_gammas:
            changes["sweep_gammas"] = vals
    if args.t_end is not None:
        if not args.t_end > 0.0:
            raise ConfigurationError("must be > 0", field="--t-end")
        changes["t_end"] = args.t_end
    if args.samples is not None:
        if args.samples < 2:
            raise ConfigurationError("must be >= 2", field="--samples")
        changes["samples"] = args.samples
    if args.no_body_output:
        try:
            changes["sensors"] = SensorConfig(
                body_output=False, positions=sc.sensors.positions
            )
        except ParameterError as exc:
            raise ConfigurationError(str(exc), field="--no-body-output") from exc
    return replace(sc, **changes) if changes else sc


def _build(sc):
    modes = find_modes(sc.beam, sc.n_modes)
    system = build_system(modes, sc.sensors, sc.gammas_for_outputs(),
                          actuators=sc.actuators)
    return modes, system


def _tag(value):
    """Filename-safe tag for a float: 0.8 -> '0p8', 1e-03 -> '0p001'."""
    return ("%g" % value).replace("-", "m").replace(".", "p")


def cmd_modes(sc, args, out):
    modes, _ = _build(sc)
    rows = [
        (m.index, m.mu, m.omega, *m.coeffs_left, *m.coeffs_right, m.norm_sq)
        for m in modes
    ]
    output.write_csv(
        out / "modes.csv",
        ["j", "mu", "omega", "a1", "b1", "a2", "b2", "norm_sq"],
        rows,
    )
    xs = np.linspace(0.0, sc.beam.length, _SHAPE_SAMPLES)
    shapes = np.column_stack([xs] + [eval_mode(m, xs) for m in modes])
    output.write_csv(
        out / "shapes.csv",
        ["x"] + ["W%d" % m.index for m in modes],
        shapes,
    )
    if not args.no_figures:
        figures.save_mode_shapes(modes, out / "modes.png")
    for m in modes:
        print("mode %2d: mu = %s, omega = %s" % (m.index, repr(m.mu), repr(m.omega)))
    return EXIT_OK


def cmd_assemble(sc, args, out):
    modes, system = _build(sc)
    output.write_csv(out / "omega.csv", ["j", "omega"],
                     [(j + 1, w) for j, w in enumerate(system.omegas)])
    output.write_matrix(out / "C1.csv", system.C1,
                        comments=["rows: outputs, columns: modes"])
    output.write_matrix(out / "B1.csv", system.B1,
                        comments=["rows: modes, columns: inputs"])
    output.write_matrix(out / "F.csv", system.F,
                        comments=["rows: 2N state, columns: outputs"])
    output.write_csv(out / "gammas.csv", ["s", "gamma"],
                     [(s + 1, g) for s, g in enumerate(system.gammas)])
    if not args.no_figures:
        figures.save_mode_shapes(modes, out / "modes.png")
    print("assembled N=%d, r=%d, inputs=%d"
          % (system.n_modes, system.n_outputs, system.n_inputs))
    return EXIT_OK


def _system_from_dump(dump_dir):
    d = Path(dump_dir)
    try:
        _, om = output.read_csv(d / "omega.csv")
        _, C1 = output.read_csv(d / "C1.csv")
        _, B1 = output.read_csv(d / "B1.csv")
        _, gm = output.read_csv(d / "gammas.csv")
        return ModalSystem(omegas=om[:, 1], C1=C1, gammas=gm[:, 1], B1=B1)
    except ConfigurationError:
        raise
    except (ParameterError, IndexError) as exc:
        raise ConfigurationError(str(exc), field=str(d)) from exc


def _write_trajectory(path, traj):
    n = traj.n_modes
    header = (
        ["t"]
        + ["Delta_%d" % (j + 1) for j in range(n)]
        + ["delta_%d" % (j + 1) for j in range(n)]
        + ["W", "norm_sq"]
    )
    table = np.column_stack(
        [traj.times, traj.states, traj.lyapunov, traj.norm_sq]
    )
    output.write_csv(path, header, table)


def cmd_simulate(sc, args, out):
    if getattr(args, "from_dump", None):
        system = _system_from_dump(args.from_dump)
        if system.n_modes != sc.n_modes:
            sc = replace(sc, n_modes=system.n_modes)
    else:
        _, system = _build(sc)
    e0 = sc.initial_error(system.omegas)
    traj = propagate_error(system, e0, sc.time_grid())
    _write_trajectory(out / "trajectory.csv", traj)
    report = decay_metrics(traj, system)
    (out / "metrics.txt").write_text(report.as_text())
    if not args.no_figures:
        figures.save_norm_decay(
            [("gamma=%s, N=%d" % (repr(float(sc.gains[0])), system.n_modes), traj)],
            out / "error_norm.png",
        )
        figures.save_error_components(traj, out / "error_components.png")
    sys.stdout.write(report.as_text())
    return EXIT_OK


def cmd_resolvent(sc, args, out):
    _, system = _build(sc)
    rng = np.random.default_rng(args.seed)
    A_hat = assemble_error_generator(system)
    eye = np.eye(2 * system.n_modes)
    rows = []
    for lam in sc.lambdas:
        ctx = build_context(system, lam)
        blocks = resolvent_blocks(ctx, system)
        hs = hs_norm(blocks)
        bound = hs_bound(system, lam)
        shifted = A_hat - lam * eye
        worst = 0.0
        for _ in range(3):
            rhs = ErrorState(
                Delta=rng.standard_normal(system.n_modes),
                delta=rng.standard_normal(system.n_modes),
            )
            sol = resolvent_apply(ctx, system, rhs)
            res = shifted @ sol.vector - rhs.vector
            worst = max(
                worst,
                float(np.linalg.norm(res) / np.linalg.norm(rhs.vector)),
            )
        rows.append(
            (lam, ctx.norm_m_minus_i, ctx.norm_m_inv, ctx.cond,
             hs, hs * hs, bound, worst)
        )
        print(
            "lambda=%s: hs=%s, bound=%s, residual=%s"
            % (repr(lam), repr(hs), repr(bound), repr(worst))
        )
    output.write_csv(
        out / "resolvent.csv",
        ["lambda", "norm_M_minus_I", "norm_M_inv", "cond_M",
         "hs_norm", "hs_norm_sq", "hs_bound", "roundtrip_residual"],
        rows,
    )

    trend = hs_trend(system, sc.lambdas[0])
    output.write_csv(out / "hs_trend.csv", ["n_modes", "hs_norm", "hs_bound"],
                     trend)

    try:
        window = sc.density_window
        if window <= 0.0:
            window = float(system.omegas[-1] - system.omegas[0]) / 6.0
        report = eigenvalue_density(system.omegas, window)
    except BeamObsError as exc:
        print("density: skipped (%s)" % exc)
    else:
        output.write_csv(out / "density.csv", ["y", "density"],
                         np.column_stack([report.y, report.density]))
        (out / "density.txt").write_text(report.as_text())
        if not args.no_figures:
            figures.save_density(report, out / "density.png")
        sys.stdout.write(report.as_text())
    return EXIT_OK


def cmd_check(sc, args, out):
    _, system = _build(sc)
    report = check_assumptions(system)
    (out / "assumptions.txt").write_text(report.as_text())
    output.write_csv(
        out / "partial_sums.csv",
        ["n", "partial_sum"],
        [(j + 1, v) for j, v in enumerate(report.partial_sums)],
    )
    sys.stdout.write(report.as_text())
    ok = report.ordering_ok and report.summable_ok and report.columns_ok
    return EXIT_OK if ok else EXIT_CHECK


def _sweep_entry(modes, sc, gamma, n):
    sub = modes[:n]
    system = build_system(sub, sc.sensors, np.full(sc.sensors.n_outputs, gamma),
                          actuators=sc.actuators)
    e0 = sc.initial_error(system.omegas)
    traj = propagate_error(system, e0, sc.time_grid())
    report = decay_metrics(traj, system)
    return system, traj, report


def cmd_sweep(sc, args, out):
    gammas = sc.sweep_gammas or tuple(sc.gains)
    truncations = sc.sweep_truncations or (sc.n_modes,)
    modes = find_modes(sc.beam, max(truncations))
    grid = [(g, n) for g in gammas for n in truncations]

    # entries are independent; compute concurrently, write in grid order
    with ThreadPoolExecutor(max_workers=min(4, len(grid))) as pool:
        results = list(pool.map(lambda gn: _sweep_entry(modes, sc, *gn), grid))

    rows = []
    labeled = []
    for (gamma, n), (system, traj, report) in zip(grid, results):
        rows.append(
            (gamma, n, report.w_initial, report.w_final, report.ratio,
             report.fitted_rate, report.slowest_eig_real)
        )
        label = "gamma=%s, N=%d" % (repr(float(gamma)), n)
        labeled.append((label, traj))
        output.write_csv(
            out / ("decay_gamma%s_N%d.csv" % (_tag(gamma), n)),
            ["t", "W"],
            np.column_stack([traj.times, traj.lyapunov]),
        )
        print(
            "gamma=%s N=%2d: ratio=%s rate=%s"
            % (repr(float(gamma)), n, repr(report.ratio),
               repr(report.fitted_rate))
        )
    output.write_csv(
        out / "sweep.csv",
        ["gamma", "n_modes", "W_initial", "W_final", "ratio",
         "fitted_rate", "slowest_eig_real"],
        rows,
    )
    if not args.no_figures:
        figures.save_norm_decay(labeled, out / "sweep.png",
                                title="decay across gains and truncations")
    return EXIT_OK


_COMMANDS = {
    "modes": cmd_modes,
    "assemble": cmd_assemble,
    "simulate": cmd_simulate,
    "resolvent": cmd_resolvent,
    "check": cmd_check,
    "sweep": cmd_sweep,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        sc = _apply_overrides(load_scenario(args.config), args)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        return _COMMANDS[args.command](sc, args, out)
    except ConfigurationError as exc:
        print("configuration error: %s" % exc, file=sys.stderr)
        return EXIT_CONFIG
    except BeamObsError as exc:
        print("error: %s: %s" % (type(exc).__name__, exc), file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
