"""Command-line entry points.

Subcommands:
    linear-check   verification suite for the linear steering machinery
    gramian-check  Gramian positivity and cross-validation report
    steer          one linear steering solve with the residual identity
    pullback       one pullback cell (largest delta, smallest alpha)
    sweep          full (delta, alpha) grid, written as CSV

Exit codes: 0 all checks passed, 1 a check failed, 2 invalid configuration.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

import numpy as np

from .config import load_experiment
from .dynamics import simulate
from .errors import BlowUpError, ConfigError, InvalidArgumentError
from .gramian import (
    ModeBlock,
    SteerWindow,
    assemble_gramian,
    gramian_mode_closedform,
    gramian_mode_quadrature,
    solve_regularized,
)
from .harness import (
    emit_csv,
    make_history,
    make_random_state,
    make_target,
    pullback_cell,
    run_linear_suite,
    run_pullback_experiment,
    suite_ok,
    summarize_rows,
)
from .semigroup import apply_semigroup
from .spectral import energy_coords, energy_norm
from .steering import SteeringProblem, steer_linear, synthesize_control


def _say(args, *text):
    if not args.quiet:
        print(*text)


def _cmd_linear_check(spec, args) -> int:
    results = run_linear_suite(spec)
    for r in results:
        _say(args, r.describe())
    return 0 if suite_ok(results) else 1


def _cmd_gramian_check(spec, args) -> int:
    modes = spec.config.modes()
    ok = True
    for delta in sorted(spec.deltas, reverse=True):
        window = SteerWindow(spec.config.tau, delta)
        gramians = assemble_gramian(modes, spec.config.beta, window)
        cross = max(
            np.abs(
                gramian_mode_closedform(ModeBlock(lam, spec.config.beta), window).matrix
                - gramian_mode_quadrature(ModeBlock(lam, spec.config.beta), window).matrix
            ).max()
            for lam in modes.lambdas
        )
        good = gramians.positive_definite and cross <= 1e-12
        ok = ok and good
        _say(
            args,
            f"{'PASS' if good else 'FAIL'} delta={delta:g}: "
            f"min_eig={gramians.min_eigenvalue:.3e} cross_path_diff={cross:.3e}",
        )
    return 0 if ok else 1


def _cmd_steer(spec, args) -> int:
    config = spec.config
    modes = config.modes()
    delta = max(spec.deltas)
    alpha = min(spec.alphas)
    window = SteerWindow(config.tau, delta)
    rng = np.random.default_rng(spec.seed)
    y0 = make_random_state(modes, rng, 1.0)
    z1 = make_target(spec.target_kind, modes, rng, spec.target_scale, spec.target_mode)
    gramians = assemble_gramian(modes, config.beta, window)
    control = synthesize_control(
        SteeringProblem(y0, z1, window, alpha), modes, config.beta, gramians=gramians
    )
    y_tau = steer_linear(y0, control, modes, config.beta)
    err = energy_norm(y_tau - z1, modes)
    d = energy_coords(z1, modes) - energy_coords(
        apply_semigroup(y0, delta, modes, config.beta), modes
    )
    formula = float(alpha * np.linalg.norm(solve_regularized(gramians, alpha, d)))
    gap = abs(err - formula)
    _say(args, f"steer: delta={delta:g} alpha={alpha:g}")
    _say(args, f"  terminal error        = {err:.6e}")
    _say(args, f"  residual formula      = {formula:.6e}")
    _say(args, f"  identity gap          = {gap:.3e}")
    return 0 if gap <= 1e-8 else 1


def _cmd_pullback(spec, args) -> int:
    config = spec.config
    modes = config.modes()
    rng = np.random.default_rng(spec.seed)
    history = make_history(
        spec.history_kind,
        spec.history_amplitude,
        config.delay,
        modes,
        rng,
        spec.history_mode,
    )
    config = replace(config, history=history)
    base = simulate(config, None)
    target = make_target(
        spec.target_kind, modes, rng, spec.target_scale, spec.target_mode,
        free_point=base.terminal(),
    )
    delta = max(spec.deltas)
    alpha = min(spec.alphas)
    row, _ = pullback_cell(config, target, delta, alpha, base)
    _say(args, f"pullback: delta={delta:g} alpha={alpha:g}")
    _say(args, f"  error_total = {row.error_total:.6e}  (epsilon = {spec.epsilon:g})")
    _say(args, f"  error_nl    = {row.error_nl:.6e}")
    _say(args, f"  error_lin   = {row.error_lin:.6e}")
    if args.out:
        emit_csv([row], args.out, seed=spec.seed)
        _say(args, f"  wrote {args.out}")
    return 0 if row.error_total < spec.epsilon else 1


def _cmd_sweep(spec, args) -> int:
    rows = run_pullback_experiment(spec)
    summary = summarize_rows(rows, spec.epsilon)
    out = args.out or spec.out_path
    if out:
        emit_csv(rows, out, seed=spec.seed)
        _say(args, f"wrote {len(rows)} rows to {out}")
    _say(args, f"best error_total      = {summary['best_error']:.6e}")
    _say(args, f"goal (< {spec.epsilon:g}) met    = {summary['goal_met']}")
    _say(args, f"error_lin monotone    = {summary['error_lin_monotone']}")
    _say(args, f"fitted error_nl slope = {summary['nl_slope']:.6e}")
    return 0 if summary["goal_met"] and summary["error_lin_monotone"] else 1


_COMMANDS = {
    "linear-check": _cmd_linear_check,
    "gramian-check": _cmd_gramian_check,
    "steer": _cmd_steer,
    "pullback": _cmd_pullback,
    "sweep": _cmd_sweep,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="beamsteer",
        description="Steering experiments for the damped beam with delay, memory and impulses.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="configuration file (INI)")
        p.add_argument("--out", default=None, help="output CSV path")
        p.add_argument("--seed", type=int, default=None, help="override the seed")
        p.add_argument("--quiet", action="store_true")
    args = parser.parse_args(argv)
    try:
        spec = load_experiment(args.config, seed_override=args.seed)
    except ConfigError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return 2
    try:
        return _COMMANDS[args.command](spec, args)
    except ConfigError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return 2
    except (InvalidArgumentError, BlowUpError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
