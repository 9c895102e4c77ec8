"""Collective decay and entanglement of two dark-soliton qubits from scenario files.

Subcommands: rates, evolve, estimate, selftest.

Exit codes: 0 success, 1 configuration error, 2 numerical or tolerance error.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import PLANCK_SI, ConfigError, ScenarioConfig, load
from .dynamics import (
    DICKE_LABELS,
    IntegrationError,
    InvariantViolation,
    ModelError,
    closed_form_trajectory,
    integrate_lindblad,
)
from .entanglement import (
    ConcurrenceError,
    ConcurrenceSeries,
    closed_form_concurrence,
    detect_events,
)
from .output import write_json, write_table
from .physics import PhysicsDomainError, QuadratureError
from .rates import ConvergenceError, RateCurveError, rate_curve, rate_set

log = logging.getLogger("dsqubits")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2
NUMERIC_ERRORS = (ConvergenceError, RateCurveError, QuadratureError, IntegrationError,
                  InvariantViolation, ModelError, ConcurrenceError, FloatingPointError)


class ToleranceError(RuntimeError):
    pass


def _trajectory_columns():
    cols = ["t", "gamma_t"]
    for a in DICKE_LABELS:
        for b in DICKE_LABELS:
            cols += [f"re_{a}{b}", f"im_{a}{b}"]
    return cols + [f"p_{a}" for a in DICKE_LABELS] + ["source"]


def _trajectory_rows(traj, gamma):
    pops = traj.populations()
    for t, rho, p in zip(traj.times, traj.states, pops):
        row = [t, gamma * t]
        for z in rho.ravel():
            row += [z.real, z.imag]
        yield row + list(p) + [traj.source]


def _rates_dict(r):
    return {"gamma": r.gamma, "Gamma": r.collective_damping, "eta": r.coherent_shift,
            "Gamma_over_gamma": r.ratios[0], "eta_over_gamma": r.ratios[1]}


def _scenario_rates(cfg: ScenarioConfig, resolved, d_over_xi: float):
    pair = cfg.pair_at(resolved, d_over_xi)
    rates = rate_set(pair.separation, resolved.params, pair, cfg.rates.settings())
    return rates.independent() if cfg.run.independent else rates


def _single_separation(cfg: ScenarioConfig) -> float:
    if cfg.pair.separation is None:
        raise ConfigError("pair.separation: this command needs a single separation, not a grid")
    return cfg.pair.separation


def _events(rho0, rates, times, paper_literal=False):
    traj = closed_form_trajectory(rho0, times, rates, paper_literal=paper_literal)
    series = ConcurrenceSeries.from_trajectory(traj)
    refine = closed_form_concurrence(rho0, rates, paper_literal=paper_literal)
    return traj, series, detect_events(series, refine=refine)


# --- commands -------------------------------------------------------------------

def cmd_rates(cfg: ScenarioConfig, out: Path, fmt: str) -> int:
    resolved = cfg.resolve()
    xi = resolved.params.healing_length
    grid = cfg.pair.separations()
    pair = cfg.pair_at(resolved, 0.0)
    curve = rate_curve(grid * xi, resolved.params, pair, cfg.rates.settings(),
                       workers=cfg.rates.workers)
    rows = []
    for r in curve:
        g_ratio, e_ratio = r.ratios
        rows.append([r.separation / xi, r.gamma, g_ratio, e_ratio,
                     "near_degenerate" if r.near_degenerate else ""])
    path = write_table(out / f"{cfg.output.prefix}_rates.{fmt}",
                       ["d_over_xi", "gamma", "Gamma_over_gamma", "eta_over_gamma", "flag"],
                       rows, fmt)
    ratios = [row[2] for row in rows]
    flagged = sum(1 for row in rows if row[4])
    print(f"gamma={curve[0].gamma:.6g} Gamma/gamma in [{min(ratios):.4f}, {max(ratios):.4f}] "
          f"over {len(rows)} separations ({flagged} near-degenerate) -> {path}")
    return EXIT_OK


def cmd_evolve(cfg: ScenarioConfig, out: Path, fmt: str, paper_literal: bool = False) -> int:
    resolved = cfg.resolve()
    d = _single_separation(cfg)
    rates = _scenario_rates(cfg, resolved, d)
    if not rates.gamma > 0:
        raise ModelError("gamma vanishes; nothing evolves (is chi zero?)")
    run = cfg.run
    paper_literal = paper_literal or run.paper_literal
    omega0 = resolved.omega0 if run.frame == "lab" else 0.0
    rho0 = cfg.initial_state.build().density_matrix()
    times = np.linspace(0.0, run.t_end / rates.gamma, run.samples)

    closed = closed_form_trajectory(rho0, times, rates, paper_literal=paper_literal, omega0=omega0)
    series = ConcurrenceSeries.from_trajectory(closed)
    refine = closed_form_concurrence(rho0, rates, paper_literal=paper_literal)
    events = detect_events(series, refine=refine)
    trajs, all_series = [closed], [series]
    report = {**events.to_json(rates.gamma), "separation_over_xi": d, "rates": _rates_dict(rates),
              "initial_state": {"kind": cfg.initial_state.kind, "alpha": cfg.initial_state.alpha},
              "paper_literal": paper_literal, "frame": run.frame}

    deviation = None
    if run.integrator:
        lind = integrate_lindblad(rho0, times[-1], rates, omega0, dt=run.step / rates.gamma,
                                  times=times)
        lseries = ConcurrenceSeries.from_trajectory(lind)
        levents = detect_events(lseries)
        trajs.append(lind)
        all_series.append(lseries)
        diff = np.abs(lind.states - closed.states).reshape(len(times), -1).max(axis=1)
        i = int(np.argmax(diff))
        deviation = (float(diff[i]), float(times[i]))
        report["integrator"] = {**levents.to_json(rates.gamma), "error_estimate": lind.error_estimate,
                                "max_deviation": deviation[0],
                                "max_deviation_gamma_t": rates.gamma * deviation[1]}

    stem = out / cfg.output.prefix
    rows = [row for tr in trajs for row in _trajectory_rows(tr, rates.gamma)]
    write_table(f"{stem}_trajectory.{fmt}", _trajectory_columns(), rows, fmt)
    crow = [[*r, s.source] for s in all_series for r in s.rows()]
    write_table(f"{stem}_concurrence.{fmt}", ["t", "C", "C1_raw", "C2_raw", "source"], crow, fmt)
    write_json(f"{stem}_events.json", report)

    g = rates.gamma
    print(f"Gamma/gamma={rates.ratios[0]:.4f} eta/gamma={rates.ratios[1]:.4f}; "
          f"deaths at gamma*t={[round(float(g * t), 4) for t in events.death_times]}, "
          f"revivals at gamma*t={[round(float(g * t), 4) for t in events.revival_times]}")
    if deviation is not None and deviation[0] > run.oracle_tol:
        raise ToleranceError(
            f"closed form and integrator disagree by {deviation[0]:.3g} at gamma*t={g * deviation[1]:.4g} "
            f"(tolerance {run.oracle_tol:g})")
    return EXIT_OK


def cmd_estimate(cfg: ScenarioConfig, out: Path) -> int:
    if cfg.condensate.units != "si":
        raise ConfigError("condensate.units: the estimate command needs units = 'si'")
    resolved = cfg.resolve()
    u = resolved.units
    d = _single_separation(cfg)
    rho0 = cfg.initial_state.build().density_matrix()
    hz = 1 / (2 * math.pi * u.time_s)  # natural angular frequency -> Hz

    def scenario(d_over_xi):
        rates = _scenario_rates(cfg, resolved, d_over_xi)
        times = np.linspace(0.0, cfg.run.t_end / rates.gamma, cfg.run.samples)
        _, _, events = _events(rho0, rates, times)
        death = events.death_times[0] if events.death_times else None
        revival = next((r for r in events.revival_times if death is not None and r > death), None)
        ms = lambda t: None if t is None else 1e3 * t * u.time_s  # noqa: E731
        return rates, ms(death), ms(revival)

    rates, t_death, t_revival = scenario(d)
    _, t_death_far, _ = scenario(cfg.estimate.large_separation)
    dark = t_revival - t_death if t_death is not None and t_revival is not None else None
    report = {
        "omega0_over_2pi_hz": resolved.omega0 * hz,
        "mu_over_h_hz": u.energy_j / PLANCK_SI,
        "healing_length_um": u.length_m * 1e6,
        "separation_um": d * u.length_m * 1e6,
        "separation_over_xi": d,
        "gamma_over_2pi_hz": rates.gamma * hz,
        "Gamma_over_2pi_hz": rates.collective_damping * hz,
        "eta_over_2pi_hz": rates.coherent_shift * hz,
        "t_death_ms": t_death,
        "t_revival_ms": t_revival,
        "dark_period_ms": dark,
        "large_separation_over_xi": cfg.estimate.large_separation,
        "t_death_large_separation_ms": t_death_far,
        "alpha": cfg.initial_state.alpha,
    }
    path = write_json(out / f"{cfg.output.prefix}_estimate.json", report)
    print(" ".join(f"{k}={v:.4g}" if isinstance(v, float) else f"{k}={v}"
                   for k, v in report.items()) + f" -> {path}")
    return EXIT_OK


def cmd_selftest() -> int:
    """Fast cross-checks of the two evolutions and the two concurrences."""
    from .dynamics import to_product
    from .entanglement import wootters_concurrence, xstate_concurrence
    from .physics import CondensateParams, QubitPair, coupling_g
    from .rates import RateSet, calculator

    rng = np.random.default_rng(12345)
    checks = []

    params = CondensateParams.natural(0.75)
    pair = QubitPair.from_params(params, 1.2)
    calc = calculator(params, pair)
    g_fast = abs(calc._resonant_weight)
    g_slow = abs(coupling_g(calc.k0, 1, params, pair)) ** 2
    checks.append(("coupling: tabulated vs adaptive", abs(g_fast - g_slow) / g_slow, 1e-8))

    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    rho0 = a @ a.conj().T
    rho0 /= np.trace(rho0).real
    rates = RateSet(1.0, 0.6, 0.3)
    times = np.linspace(0, 5, 51)
    cf = closed_form_trajectory(rho0, times, rates)
    ln = integrate_lindblad(rho0, 5.0, rates, times=times, dt=1e-3, error_estimate=False)
    checks.append(("evolution: closed form vs Lindblad RK4", float(np.abs(cf.states - ln.states).max()), 1e-8))

    worst = 0.0
    for _ in range(200):
        p = rng.dirichlet(np.ones(4))
        rho = np.diag(p).astype(complex)
        rho[0, 3] = rng.uniform() * math.sqrt(p[0] * p[3]) * np.exp(1j * rng.uniform(0, 2 * np.pi))
        rho[3, 0] = np.conj(rho[0, 3])
        worst = max(worst, abs(xstate_concurrence(rho) - wootters_concurrence(to_product(rho))))
    checks.append(("concurrence: X-state vs Wootters", worst, 1e-10))

    ok = True
    for name, err, tol in checks:
        passed = err <= tol
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'} {name}: {err:.3g} (tol {tol:g})")
    return EXIT_OK if ok else EXIT_NUMERIC


# --- entry point ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dsqubits", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, formats=True):
        p.add_argument("--config", type=Path, help="scenario file (.toml or .json)")
        p.add_argument("--out", type=Path, default=Path("."), help="output directory")
        if formats:
            p.add_argument("--format", choices=("csv", "json"), default=None,
                           help="table format (default: output.format from the scenario)")

    common(sub.add_parser("rates", help="rate table over a separation grid"))
    evolve = sub.add_parser("evolve", help="trajectories, concurrence and events")
    common(evolve)
    evolve.add_argument("--paper-literal", action="store_true",
                        help="use the uncorrected coherence exponents (fails the oracle check)")
    common(sub.add_parser("estimate", help="SI-unit estimate of rates and event times"), formats=False)
    sub.add_parser("selftest", help="quick internal consistency checks")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "selftest":
            return cmd_selftest()
        cfg = load(args.config) if args.config else ScenarioConfig()
        if args.command == "estimate":
            return cmd_estimate(cfg, args.out)
        fmt = args.format or cfg.output.format
        if args.command == "rates":
            return cmd_rates(cfg, args.out, fmt)
        return cmd_evolve(cfg, args.out, fmt, paper_literal=args.paper_literal)
    except (ConfigError, PhysicsDomainError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ToleranceError as exc:
        print(f"tolerance error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except NUMERIC_ERRORS as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
