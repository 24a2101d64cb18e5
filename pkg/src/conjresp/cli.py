"""Batch front end: solve / verify / moser / sweep pipelines driven by a
JSON config, emitting machine-readable results and plot-ready tables.

    conjresp <solve|verify|moser|sweep> --config cfg.json --out dir
             [--quiet] [--format json|csv]

Exit codes: 0 ok, 2 validation failure, 3 convergence failure,
4 verification failure.  Identical configs produce byte-identical outputs
(fixed-step integrators, no randomness).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .config import build_grid, build_map, build_rho, build_strategy, load_config
from .dynamics import ConjugatedMap, DeformedMap
from .errors import (
    ConfigError,
    ConstructionError,
    ConvergenceError,
    NormalizationError,
    PositivityError,
    QualityError,
)
from .exactness import (
    MEAN_ZERO_TOL,
    add_closed_form,
    lie_derivative_density,
    multiply,
    solve_exactness,
    solve_for_field,
    solve_weighted_poisson,
)
from .fields import VolumeDensity, gradient, save_field
from .flow import moser_transport
from .verify import derivative_check, pushforward_density, response_check, transfer_check

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_CONVERGENCE = 3
EXIT_VERIFICATION = 4

__all__ = ["main"]


def _say(quiet: bool, message: str) -> None:
    if not quiet:
        print(message)


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")


def _scenario_id(cfg: dict) -> str:
    if "scenario_id" in cfg:
        return str(cfg["scenario_id"])
    kind = cfg.get("map", {}).get("kind", "run") if isinstance(cfg.get("map"), dict) else "run"
    return kind


def _checked_rho(rho, omega):
    weighted_mean = multiply(rho, omega.eta).mean
    if abs(weighted_mean) > MEAN_ZERO_TOL:
        raise NormalizationError(
            "rho violates the mean-zero requirement: its integral against the "
            f"invariant density is {weighted_mean!r} (must vanish; set "
            '"center": true in the rho section to project it out)',
            weighted_mean,
        )
    return rho


def cmd_solve(cfg: dict, out: Path, quiet: bool, fmt: str) -> int:
    grid = build_grid(cfg)
    torus_map = build_map(cfg, grid)
    omega = torus_map.density
    rho = _checked_rho(build_rho(cfg, grid, omega), omega)
    strategy = build_strategy(cfg, grid)
    prefix = cfg.get("output", {}).get("prefix", "solve")

    if strategy.kind == "gradient":
        u = solve_weighted_poisson(omega, -multiply(rho, omega.eta))
        X = gradient(u)
        save_field(u, out / f"{prefix}_u.{fmt}", fmt)
    else:
        theta = solve_exactness(rho, omega)
        if strategy.kind == "custom":
            theta = add_closed_form(theta, strategy)
        for i, component in enumerate(theta.components):
            save_field(component, out / f"{prefix}_theta{i}.{fmt}", fmt)
        X = solve_for_field(rho, omega, strategy)
    for i, component in enumerate(X.components):
        save_field(component, out / f"{prefix}_X{i}.{fmt}", fmt)

    target = multiply(rho, omega.eta)
    residual = (lie_derivative_density(X, omega) + target).max_abs
    scale = max(target.max_abs, 1e-300)
    _say(quiet, f"strategy {strategy.kind}: max|div(eta X) + rho eta| = "
                f"{residual:.3e} (relative {residual / scale:.3e})")
    return EXIT_OK


def cmd_verify(cfg: dict, out: Path, quiet: bool, fmt: str) -> int:
    grid = build_grid(cfg)
    torus_map = build_map(cfg, grid)
    omega = torus_map.density
    rho = _checked_rho(build_rho(cfg, grid, omega), omega)
    strategy = build_strategy(cfg, grid)
    verify_cfg = cfg.get("verify", {})
    if "t_values" not in verify_cfg:
        raise ConfigError("verify section needs 't_values'")
    t_values = verify_cfg["t_values"]
    steps = verify_cfg.get("steps", cfg.get("flow", {}).get("steps"))

    X = solve_for_field(rho, omega, strategy)
    response = response_check(omega, rho, X, t_values, steps=steps)
    derivative = derivative_check(torus_map, X, t_values, steps=steps)

    transfer = None
    transfer_passed = True
    if grid.dim == 1 and torus_map.expansion_margin() > 0.0:
        t_def = float(verify_cfg.get("transfer_t", 0.02))
        resolution = int(verify_cfg.get("transfer_resolution", 512))
        eta_t = pushforward_density(omega, X, t_def, steps=steps)
        residual = transfer_check(DeformedMap(torus_map, X, t_def, steps=steps),
                                  eta_t, resolution)
        transfer_passed = residual <= 1e-4
        transfer = {"t": t_def, "resolution": resolution, "residual": residual,
                    "passed": transfer_passed}

    passed = response.passed and derivative.passed and transfer_passed
    report = {
        "scenario_id": _scenario_id(cfg),
        "response": response.to_json(),
        "derivative": derivative.to_json(),
        "transfer": transfer,
        "passed": bool(passed),
    }
    _write_json(out / "report.json", report)
    _say(quiet, f"response: {'pass' if response.passed else 'FAIL'}")
    _say(quiet, f"derivative: {'pass' if derivative.passed else 'FAIL'}")
    _say(quiet, "transfer: skipped (map is not an expanding circle map)" if transfer is None
         else f"transfer: {'pass' if transfer_passed else 'FAIL'}")
    if not passed:
        failing = [n for n, ok in (("response", response.passed),
                                   ("derivative", derivative.passed),
                                   ("transfer", transfer_passed)) if not ok]
        print(f"verification failed: {', '.join(failing)}", file=sys.stderr)
        return EXIT_VERIFICATION
    return EXIT_OK


def cmd_moser(cfg: dict, out: Path, quiet: bool, fmt: str) -> int:
    grid = build_grid(cfg)
    moser_cfg = cfg.get("moser", {})
    if "eta1_modes" not in moser_cfg:
        raise ConfigError("moser section needs 'eta1_modes' (the target density)")
    omega0 = (VolumeDensity.from_modes(grid, moser_cfg["eta0_modes"])
              if moser_cfg.get("eta0_modes") else VolumeDensity.lebesgue(grid))
    omega1 = VolumeDensity.from_modes(grid, moser_cfg["eta1_modes"])
    steps = int(moser_cfg.get("steps", 256))
    pushforward_tol = float(moser_cfg.get("pushforward_tol", 1e-6))
    transfer_tol = float(moser_cfg.get("transfer_tol", 1e-4))

    transport = moser_transport(omega0, omega1, steps=steps)
    pushed = transport.pushforward_density()
    residual = float(np.max(np.abs(pushed.eta.values - omega1.eta.values)))
    _say(quiet, f"pushforward residual max|psi_* eta0 - eta1| = {residual:.3e}")

    transfer = None
    transfer_ok = True
    if moser_cfg.get("check_conjugated", False):
        torus_map = build_map(cfg, grid)
        conjugated = ConjugatedMap.from_moser(torus_map, transport)
        resolution = int(moser_cfg.get("transfer_resolution", 512))
        transfer_residual = transfer_check(conjugated, omega1, resolution)
        transfer_ok = transfer_residual <= transfer_tol
        transfer = {"resolution": resolution, "residual": transfer_residual,
                    "passed": transfer_ok}
        _say(quiet, f"conjugated-map transfer residual = {transfer_residual:.3e}")

    passed = residual <= pushforward_tol and transfer_ok
    report = {
        "scenario_id": _scenario_id(cfg),
        "steps": steps,
        "pushforward_residual": residual,
        "pushforward_tol": pushforward_tol,
        "transfer": transfer,
        "passed": bool(passed),
    }
    _write_json(out / "moser_report.json", report)
    if not passed:
        print(f"transport residual above threshold "
              f"({residual:.3e} > {pushforward_tol:.1e} or transfer failed)",
              file=sys.stderr)
        return EXIT_CONVERGENCE
    return EXIT_OK


def cmd_sweep(cfg: dict, out: Path, quiet: bool, fmt: str) -> int:
    verify_cfg = cfg.get("verify", {})
    t_values = verify_cfg.get("t_values", [])
    if not t_values:
        raise ConfigError("sweep needs a non-empty verify.t_values list")
    base_resolution = build_grid(cfg).resolution[0]
    resolutions = [int(n) for n in verify_cfg.get("resolutions", [base_resolution])]
    scenario = _scenario_id(cfg)

    rows = []
    for n in resolutions:
        grid = build_grid(cfg, resolution_override=n)
        torus_map = build_map(cfg, grid)
        omega = torus_map.density
        rho = _checked_rho(build_rho(cfg, grid, omega), omega)
        strategy = build_strategy(cfg, grid)
        steps = verify_cfg.get("steps", cfg.get("flow", {}).get("steps"))
        X = solve_for_field(rho, omega, strategy)
        response = response_check(omega, rho, X, t_values, steps=steps)
        derivative = derivative_check(torus_map, X, t_values, steps=steps)
        fitted = response.fitted_order if response.fitted_order is not None else float("nan")
        expanding = grid.dim == 1 and torus_map.expansion_margin() > 0.0
        resolution = int(verify_cfg.get("transfer_resolution", 256))
        for t, response_error, derivative_error in zip(
                response.t_values, response.errors, derivative.errors):
            if expanding:
                eta_t = pushforward_density(omega, X, t, steps=steps)
                transfer_residual = transfer_check(
                    DeformedMap(torus_map, X, t, steps=steps), eta_t, resolution)
            else:
                transfer_residual = float("nan")
            rows.append((scenario, n, t, response_error, derivative_error,
                         transfer_residual, fitted))

    lines = ["scenario_id,N,t,response_error,derivative_error,transfer_residual,fitted_order"]
    for scenario_id, n, t, re_, de, tr, fo in rows:
        lines.append(
            f"{scenario_id},{n},{t:.17g},{re_:.17g},{de:.17g},{tr:.17g},{fo:.17g}"
        )
    (out / "sweep.csv").write_text("\n".join(lines) + "\n")
    _say(quiet, f"wrote {len(rows)} sweep rows to {out / 'sweep.csv'}")
    return EXIT_OK


_COMMANDS = {"solve": cmd_solve, "verify": cmd_verify, "moser": cmd_moser,
             "sweep": cmd_sweep}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="conjresp",
        description="Construct and verify conjugacy deformations of "
                    "measure-preserving torus maps.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in _COMMANDS.items():
        p = sub.add_parser(name, help=fn.__doc__)
        p.add_argument("--config", required=True, help="path to the JSON run config")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--quiet", action="store_true", help="suppress progress prints")
        p.add_argument("--format", choices=("json", "csv"), default=None,
                       help="field file format (default: output.format or json)")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        fmt = args.format or cfg.get("output", {}).get("format", "json")
        if fmt not in ("json", "csv"):
            raise ConfigError(f"unknown output format {fmt!r}")
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        return _COMMANDS[args.command](cfg, out, args.quiet, fmt)
    except (ConfigError, NormalizationError, PositivityError, ValueError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ConvergenceError, ConstructionError, QualityError) as exc:
        print(f"convergence error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
