"""Spontaneous rate, collective damping and coherent exchange between the qubits.

The delta function in the golden-rule rates is resolved at the resonant
wavenumber k0. The coherent exchange is a principal-value integral over k,
computed on the frequency axis with the singular window folded onto itself:

    PV int f(w)/(w - w0) dw = int_0^delta [f(w0 + s) - f(w0 - s)] / s ds + remainder

Both qubits couple to a mode with the same magnitude; only the plane-wave phase
exp(i k x_i) differs. The cross product is therefore |g(k)|^2 exp(-i k d), and
the real part enters the master equation.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .physics import (
    K_MIN_OVER_XI,
    CondensateParams,
    PhysicsDomainError,
    QubitPair,
    bogoliubov_dispersion,
    coupling_g,
    coupling_spectrum,
    dispersion_slope,
    gauss_legendre_panels,
    resonant_wavenumber,
    wavenumber_for_energy,
)

log = logging.getLogger(__name__)

# Effective length replacing the box size L in the golden-rule prefactor, in
# units of xi. 4 pi xi is the length implied by the 1/sqrt(4 pi xi) mode
# normalisation.
DEFAULT_LENGTH_OVER_XI = 4 * np.pi
DEFAULT_K_MAX_OVER_XI = 50.0


class ConvergenceError(RuntimeError):
    """A rate integral did not settle under refinement."""


@dataclass(frozen=True)
class RateSettings:
    length_over_xi: float = DEFAULT_LENGTH_OVER_XI
    k_max_over_xi: float = DEFAULT_K_MAX_OVER_XI
    panel_width_over_xi: float = 0.25
    pv_rtol: float = 1e-8
    include_v: bool = False


@dataclass(frozen=True)
class RateSet:
    """Rates at one separation; all three in angular-frequency units.

    ``collective_damping_imag`` and ``coherent_shift_imag`` are the imaginary
    parts of the complex cross integrals, kept for diagnostics only.
    """

    gamma: float
    collective_damping: float
    coherent_shift: float
    separation: float = float("nan")
    collective_damping_imag: float = field(default=0.0, compare=False)
    coherent_shift_imag: float = field(default=0.0, compare=False)

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError(f"gamma must be non-negative, got {self.gamma!r}")
        if abs(self.collective_damping) > self.gamma * (1 + 1e-12) + 1e-300:
            raise ValueError(
                f"|Gamma| = {abs(self.collective_damping):g} exceeds gamma = {self.gamma:g}; "
                "the damping matrix would not be positive semidefinite")

    @property
    def ratios(self) -> tuple[float, float]:
        """(Gamma / gamma, eta / gamma)."""
        return self.collective_damping / self.gamma, self.coherent_shift / self.gamma

    @property
    def near_degenerate(self) -> bool:
        return self.gamma - abs(self.collective_damping) < 1e-2 * self.gamma

    def independent(self) -> "RateSet":
        """Same gamma with the collective terms switched off."""
        return RateSet(self.gamma, 0.0, 0.0, self.separation)


class RateCalculator:
    """Rates for one condensate and one qubit gap, for any separation.

    |g(k)|^2 is tabulated once on fixed quadrature nodes; each separation then
    costs only a weighted sum.
    """

    def __init__(self, params: CondensateParams, pair: QubitPair,
                 settings: RateSettings = RateSettings()):
        self.params = params
        self.omega0 = pair.omega0
        self.settings = settings
        self.k0 = resonant_wavenumber(pair.omega0, params)
        hbar = params.hbar
        xi = params.healing_length
        self.length = settings.length_over_xi * xi
        self.k_min = K_MIN_OVER_XI / xi
        self.k_max = settings.k_max_over_xi / xi
        if self.k_max <= 2 * self.k0:
            raise PhysicsDomainError("k_max must lie well above the resonance")
        self._group_velocity = dispersion_slope(self.k0, params) / hbar
        g0 = coupling_spectrum([self.k0], params, include_v=settings.include_v)[0]
        self._resonant_weight = abs(g0) ** 2 / hbar**2
        self._tables = {}

    def _omega(self, k):
        return bogoliubov_dispersion(k, self.params) / self.params.hbar

    def _table(self, n_panels: int, window: float):
        """Nodes for the folded window and the regular remainder."""
        key = (n_panels, window)
        if key in self._tables:
            return self._tables[key]
        p = self.params
        hbar = p.hbar
        xi = p.healing_length
        w0 = self.omega0
        # Folded part on the frequency axis: s in (0, window).
        s, ws = gauss_legendre_panels(0.0, window, n_panels)
        k_plus = wavenumber_for_energy(hbar * (w0 + s), p)
        k_minus = wavenumber_for_energy(hbar * (w0 - s), p)
        # dk/dw = hbar / eps'(k)
        jac_plus = hbar / dispersion_slope(k_plus, p)
        jac_minus = hbar / dispersion_slope(k_minus, p)
        # Regular remainder on the k axis, either side of the window.
        k_lo = wavenumber_for_energy(hbar * (w0 - window), p)
        k_hi = wavenumber_for_energy(hbar * (w0 + window), p)
        h = self.settings.panel_width_over_xi / xi * 64 / n_panels
        pieces = []
        if k_lo > self.k_min:
            n_lo = max(2, int(np.ceil((k_lo - self.k_min) / h)))
            pieces.append(gauss_legendre_panels(self.k_min, k_lo, n_lo))
        n_hi = max(2, int(np.ceil((self.k_max - k_hi) / h)))
        pieces.append(gauss_legendre_panels(k_hi, self.k_max, n_hi))
        k_reg = np.concatenate([pc[0] for pc in pieces])
        w_reg = np.concatenate([pc[1] for pc in pieces])
        spectrum = np.abs(coupling_spectrum(np.concatenate([k_plus, k_minus, k_reg]), p,
                                            include_v=self.settings.include_v)) ** 2 / hbar**2
        n = s.size
        table = dict(
            s=s, ws=ws, k_plus=k_plus, k_minus=k_minus,
            f_plus=spectrum[:n] * jac_plus, f_minus=spectrum[n:2 * n] * jac_minus,
            k_reg=k_reg, w_reg=w_reg * spectrum[2 * n:] / (self._omega(k_reg) - w0),
        )
        self._tables[key] = table
        return table

    def _pv_integral(self, d: float, n_panels: int, window: float) -> complex:
        """PV int_kmin^kmax |g|^2 exp(-i k d) / (w_k - w0) dk / hbar^2."""
        t = self._table(n_panels, window)
        folded = (t["f_plus"] * np.exp(-1j * t["k_plus"] * d)
                  - t["f_minus"] * np.exp(-1j * t["k_minus"] * d)) / t["s"]
        return np.sum(t["ws"] * folded) + np.sum(t["w_reg"] * np.exp(-1j * t["k_reg"] * d))

    def _default_window(self) -> float:
        w_min = self._omega(self.k_min)
        return 0.5 * min(self.omega0, self.omega0 - w_min)

    def pv_integral(self, d: float, window: float | None = None) -> complex:
        """Principal-value cross integral, refined until two windows agree."""
        window = self._default_window() if window is None else window
        tol = self.settings.pv_rtol
        n = 64
        for _ in range(5):
            a = self._pv_integral(d, n, window)
            b = self._pv_integral(d, n, 0.5 * window)
            scale = max(abs(a), abs(self._pv_integral(0.0, n, window)))
            if abs(a - b) <= tol * scale:
                return a
            n *= 2
        raise ConvergenceError(
            f"principal value at d={d:g} did not converge: window halving changed it by {abs(a - b):.3g}")

    def gamma(self) -> float:
        return float(2 * self.length * self._resonant_weight / self._group_velocity)

    def collective_damping_complex(self, d: float) -> complex:
        return self.gamma() * np.exp(-1j * self.k0 * d)

    def coherent_shift_complex(self, d: float) -> complex:
        return self.length / (2 * np.pi) * self.pv_integral(d)

    def rates(self, d: float) -> RateSet:
        if not d >= 0:
            raise PhysicsDomainError(f"separation must be non-negative, got {d!r}")
        gam = self.gamma()
        damping = self.collective_damping_complex(d)
        shift = self.coherent_shift_complex(d)
        # cos(k0 d) can round a hair above 1 relative to gamma
        damping_re = float(np.clip(damping.real, -gam, gam))
        return RateSet(gamma=gam, collective_damping=damping_re, coherent_shift=float(shift.real),
                       separation=d, collective_damping_imag=float(damping.imag),
                       coherent_shift_imag=float(shift.imag))


@lru_cache(maxsize=32)
def _calculator(params: CondensateParams, nu: float, omega0: float,
                settings: RateSettings) -> RateCalculator:
    return RateCalculator(params, QubitPair(0.0, nu, omega0), settings)


def calculator(params: CondensateParams, pair: QubitPair,
               settings: RateSettings = RateSettings()) -> RateCalculator:
    return _calculator(params, pair.nu, pair.omega0, settings)


def spontaneous_rate(params: CondensateParams, pair: QubitPair,
                     settings: RateSettings = RateSettings()) -> float:
    """gamma = 2 L |g(k0)|^2 / (hbar^2 |d omega/dk|), from the adaptive coupling."""
    if params.coupling_chi == 0:
        return 0.0
    k0 = resonant_wavenumber(pair.omega0, params)
    g = coupling_g(k0, 1, params, pair, include_v=settings.include_v)
    length = settings.length_over_xi * params.healing_length
    velocity = dispersion_slope(k0, params) / params.hbar
    return 2 * length * abs(g) ** 2 / params.hbar**2 / velocity


def collective_damping(d: float, params: CondensateParams, pair: QubitPair,
                       settings: RateSettings = RateSettings()) -> float:
    """Real part of 2 L g1(k0) g2(k0)^* / (hbar^2 |d omega/dk|) at separation d."""
    if params.coupling_chi == 0:
        return 0.0
    pair = pair.at(d)
    k0 = resonant_wavenumber(pair.omega0, params)
    cross = (coupling_g(k0, 1, params, pair, include_v=settings.include_v)
             * np.conj(coupling_g(k0, 2, params, pair, include_v=settings.include_v)))
    length = settings.length_over_xi * params.healing_length
    velocity = dispersion_slope(k0, params) / params.hbar
    return float(2 * length * cross.real / params.hbar**2 / velocity)


def coherent_shift(d: float, params: CondensateParams, pair: QubitPair,
                   settings: RateSettings = RateSettings()) -> float:
    """Real part of (L / 2 pi) PV int dk g1 g2^* / (hbar^2 (omega_k - omega0))."""
    if params.coupling_chi == 0:
        return 0.0
    return float(calculator(params, pair, settings).coherent_shift_complex(d).real)


def rate_set(d: float, params: CondensateParams, pair: QubitPair,
             settings: RateSettings = RateSettings()) -> RateSet:
    if params.coupling_chi == 0:
        return RateSet(0.0, 0.0, 0.0, d)
    return calculator(params, pair, settings).rates(d)


class RateCurveError(RuntimeError):
    def __init__(self, separation: float, cause: Exception):
        super().__init__(f"rate evaluation failed at d={separation:g}: {cause}")
        self.separation = separation


def rate_curve(d_grid, params: CondensateParams, pair: QubitPair,
               settings: RateSettings = RateSettings(), workers: int = 1) -> list[RateSet]:
    """One RateSet per separation, sorted by d."""
    grid = sorted(float(d) for d in d_grid)
    if not grid:
        raise ValueError("empty separation grid")
    if grid[0] <= 0:
        raise PhysicsDomainError("separations must be positive")
    calc = calculator(params, pair, settings)

    def one(d):
        try:
            return calc.rates(d)
        except Exception as exc:  # attach the offending separation
            raise RateCurveError(d, exc) from exc

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(one, grid))
    return [one(d) for d in grid]
