"""Concurrence, analytic death/revival times, and event detection."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import bisect, brentq

from .dynamics import E, G, M, P, Trajectory, evolve_closed_form, to_product
from .rates import RateSet

SIGMA_Y = np.array([[0, -1j], [1j, 0]])
YY = np.kron(SIGMA_Y, SIGMA_Y)

EIGEN_CLIP = 1e-12
X_STATE_TOL = 1e-9
EVENT_THRESHOLD = 1e-6
MIN_RUN = 5

# mask of the entries an X-form collective matrix may populate
_X_MASK = np.eye(4, dtype=bool)
_X_MASK[E, G] = _X_MASK[G, E] = True


class ConcurrenceError(ValueError):
    pass


class NoRevivalError(ValueError):
    """Independent qubits (Gamma = 0) have no finite revival time."""


def wootters_concurrence(rho_product: np.ndarray, *, raw: bool = False) -> float:
    """Wootters concurrence of a two-qubit state in the product basis.

    With ``raw=True`` returns sqrt(e1) - sqrt(e2) - sqrt(e3) - sqrt(e4) before
    clipping at zero.
    """
    rho = np.asarray(rho_product, dtype=complex)
    zeta = rho @ YY @ rho.conj() @ YY
    ev = np.linalg.eigvals(zeta).real
    scale = max(1.0, float(np.max(np.abs(ev))))
    if ev.min() < -EIGEN_CLIP * scale:
        raise ConcurrenceError(f"rho rho~ has a negative eigenvalue {ev.min():.3g}")
    roots = np.sort(np.sqrt(np.clip(ev, 0.0, None)))[::-1]
    value = roots[0] - roots[1] - roots[2] - roots[3]
    return float(value) if raw else max(0.0, float(value))


def is_x_state(rho_collective: np.ndarray, tol: float = X_STATE_TOL) -> bool:
    """Only the diagonal and the e-g coherence may be populated."""
    rho = np.asarray(rho_collective)
    return bool(np.all(np.abs(rho[~_X_MASK]) <= tol))


def _require_x(rho):
    if not is_x_state(rho):
        raise ConcurrenceError("C1/C2 apply only to X-form states (diagonal plus rho_eg)")


def concurrence_c1(rho_collective: np.ndarray) -> float:
    """2 |rho_ge| - (rho_++ + rho_--); may be negative."""
    rho = np.asarray(rho_collective)
    _require_x(rho)
    return float(2 * abs(rho[G, E]) - (rho[P, P].real + rho[M, M].real))


def concurrence_c2(rho_collective: np.ndarray) -> float:
    """|rho_++ - rho_--| - 2 sqrt(rho_ee rho_gg); may be negative."""
    rho = np.asarray(rho_collective)
    _require_x(rho)
    return float(abs(rho[P, P].real - rho[M, M].real)
                 - 2 * math.sqrt(max(rho[E, E].real * rho[G, G].real, 0.0)))


def xstate_concurrence(rho_collective: np.ndarray) -> float:
    return max(0.0, concurrence_c1(rho_collective), concurrence_c2(rho_collective))


def raw_concurrence(rho_collective: np.ndarray) -> float:
    """Unclipped concurrence: max(C1, C2) for X states, else the Wootters value."""
    if is_x_state(rho_collective):
        return max(concurrence_c1(rho_collective), concurrence_c2(rho_collective))
    return wootters_concurrence(to_product(rho_collective), raw=True)


# --- analytic times -------------------------------------------------------------

def _check_gamma(gamma):
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma!r}")


def death_time_entangled(alpha: float, gamma: float) -> float | None:
    """(1/gamma) ln(alpha / (alpha - sqrt(alpha (1 - alpha)))) for independent qubits.

    None when alpha <= 1/2: the concurrence then only decays asymptotically.
    """
    _check_gamma(gamma)
    if not alpha > 0.5:
        return None
    den = alpha - math.sqrt(alpha * (1 - alpha))
    return math.log(alpha / den) / gamma


def revival_time(alpha: float, gamma: float, Gamma: float) -> float:
    """(2 / (3 Gamma)) ln(4 gamma / (sqrt(alpha) (gamma - Gamma)))."""
    _check_gamma(gamma)
    if Gamma == 0:
        raise NoRevivalError("independent qubits (Gamma = 0) cannot re-entangle")
    if not Gamma < gamma:
        raise ValueError(f"need Gamma < gamma, got Gamma={Gamma!r}, gamma={gamma!r}")
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha!r}")
    return 2 / (3 * Gamma) * math.log(4 * gamma / (math.sqrt(alpha) * (gamma - Gamma)))


def death_time_mixed(alpha: float, gamma: float) -> float | None:
    """Compact mixed-state death-time formula: (1/gamma) ln(alpha / (sqrt(3a^2 + 5a) - (1 + a))).

    None when the expression is not a finite positive time. This formula does
    not match the zero of C2 along the Gamma = 0 trajectory; see
    :func:`death_time_mixed_exact`.
    """
    _check_gamma(gamma)
    den = math.sqrt(3 * alpha**2 + 5 * alpha) - (1 + alpha)
    if not den > 0 or not alpha / den > 1:
        return None
    return math.log(alpha / den) / gamma


def death_time_mixed_exact(alpha: float, gamma: float) -> float | None:
    """Zero of C2 for the mixed initial state and independent qubits.

    With x = exp(-gamma t), C2 = 0 reduces to a^2 x^2 - 2a(1 + a) x + 3a - 1 = 0,
    whose root in (0, 1) is x = ((1 + a) - sqrt(a^2 - a + 2)) / a. It exists
    for alpha > 1/3.
    """
    _check_gamma(gamma)
    if not alpha > 1 / 3:
        return None
    x = ((1 + alpha) - math.sqrt(alpha**2 - alpha + 2)) / alpha
    return -math.log(x) / gamma


def esd_thresholds() -> dict:
    """Smallest alpha with a finite death time, nominal and by root finding.

    The log arguments exceed 1 wherever they are positive, so the threshold is
    where the denominator (and hence t_death) changes sign.
    """
    entangled = brentq(lambda a: a - math.sqrt(a * (1 - a)), 0.3, 0.9, xtol=1e-15)
    mixed_compact = brentq(lambda a: math.sqrt(3 * a * a + 5 * a) - (1 + a), 0.05, 0.9, xtol=1e-15)
    mixed_exact = brentq(lambda a: (1 + a) - math.sqrt(a * a - a + 2), 0.05, 0.9, xtol=1e-15)
    return {
        "entangled": {"nominal": 0.5, "exact": entangled},
        "mixed": {"nominal": 1 / 3, "exact": mixed_exact, "compact_formula": mixed_compact},
    }


# --- series and events ------------------------------------------------------------

@dataclass
class ConcurrenceSeries:
    """Concurrence samples; raw columns are NaN for non-X states."""

    times: np.ndarray
    C: np.ndarray
    C1_raw: np.ndarray
    C2_raw: np.ndarray
    raw: np.ndarray
    source: str = ""

    @classmethod
    def from_trajectory(cls, traj: Trajectory) -> "ConcurrenceSeries":
        n = len(traj)
        c1 = np.full(n, np.nan)
        c2 = np.full(n, np.nan)
        raw = np.empty(n)
        for i, rho in enumerate(traj.states):
            if is_x_state(rho):
                c1[i] = concurrence_c1(rho)
                c2[i] = concurrence_c2(rho)
                raw[i] = max(c1[i], c2[i])
            else:
                raw[i] = wootters_concurrence(to_product(rho), raw=True)
        return cls(traj.times.copy(), np.clip(raw, 0.0, 1.0), c1, c2, raw, traj.source)

    def rows(self):
        for row in zip(self.times, self.C, self.C1_raw, self.C2_raw):
            yield tuple(float(v) for v in row)


@dataclass
class EventReport:
    death_times: list = field(default_factory=list)
    revival_times: list = field(default_factory=list)
    dark_periods: list = field(default_factory=list)
    initial_concurrence: float = 0.0

    def to_json(self, gamma: float | None = None) -> dict:
        out = {
            "schema": 1,
            "deaths": list(self.death_times),
            "revivals": list(self.revival_times),
            "dark_periods": [list(p) for p in self.dark_periods],
            "initial_concurrence": self.initial_concurrence,
        }
        if gamma:
            out["gamma"] = gamma
            out["deaths_gamma_t"] = [gamma * t for t in self.death_times]
            out["revivals_gamma_t"] = [gamma * t for t in self.revival_times]
        return out


def closed_form_concurrence(rho0: np.ndarray, rates: RateSet, **kwargs) -> Callable[[float], float]:
    """t -> unclipped concurrence along the closed-form evolution."""
    return lambda t: raw_concurrence(evolve_closed_form(rho0, t, rates, **kwargs))


def detect_events(series: ConcurrenceSeries, threshold: float = EVENT_THRESHOLD, *,
                  min_run: int = MIN_RUN, refine: Callable[[float], float] | None = None,
                  xtol: float = 1e-13) -> EventReport:
    """Find entanglement deaths and revivals in a sampled concurrence.

    With unclipped values available the state switches with hysteresis: a death
    needs ``min_run`` consecutive samples below ``-threshold``, a revival
    ``min_run`` samples above ``+threshold``. This separates sudden death
    (the unclipped value turns negative) from asymptotic decay towards zero.
    For clipped-only series the test is C <= threshold.

    Event times are where the signal crosses zero (threshold for clipped
    series), linearly interpolated between samples, then refined by bisection
    on ``refine`` when given.
    """
    t = np.asarray(series.times, dtype=float)
    if t.size == 0:
        raise ValueError("empty concurrence series")
    if np.any(np.diff(t) <= 0):
        raise ValueError("concurrence series must be sorted by time")
    raw = np.asarray(series.raw, dtype=float)
    if np.all(np.isfinite(raw)):
        s, level = raw, 0.0
        dead_at = s < -threshold
    else:
        s, level = np.asarray(series.C, dtype=float), threshold
        dead_at = s <= threshold
    alive_at = s > threshold

    def crossing(j):
        # interpolate the level crossing between samples j and j + 1
        a, b = s[j] - level, s[j + 1] - level
        tc = t[j] if a == b else t[j] + (t[j + 1] - t[j]) * a / (a - b)
        if refine is not None:
            f = lambda x: refine(x) - level  # noqa: E731
            fa, fb = f(t[j]), f(t[j + 1])
            if fa == 0:
                return float(t[j])
            if fa * fb < 0:
                tc = bisect(f, t[j], t[j + 1], xtol=xtol * max(1.0, t[j + 1]), maxiter=400)
        return float(tc)

    report = EventReport(initial_concurrence=float(series.C[0]))
    alive = s[0] > level
    i = 1
    n = t.size
    while i <= n - min_run:
        window = slice(i, i + min_run)
        if alive and dead_at[window].all():
            j = i - 1
            while j > 0 and not s[j] > level:
                j -= 1
            report.death_times.append(crossing(j))
            alive = False
            i += min_run
            continue
        if not alive and alive_at[window].all():
            j = i - 1
            while j > 0 and s[j] > level:
                j -= 1
            report.revival_times.append(crossing(j))
            alive = True
            i += min_run
            continue
        i += 1
    for death in report.death_times:
        later = [r for r in report.revival_times if r > death]
        if later:
            report.dark_periods.append((death, later[0]))
    return report
