"""Static physics of the soliton / impurity / phonon system.

Everything here is a pure function of its inputs. Lengths, energies and
frequencies carry whatever units the caller picks for ``CondensateParams``;
with ``hbar = atom_mass = linear_density = interaction_g = 1`` the healing
length and chemical potential are both 1 (natural units).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import quad

# Qubit operating window of the bound-state parameter (lower bound inclusive).
QUBIT_NU_MIN = 0.33
QUBIT_NU_MAX = 0.80

# Quadrature defaults: the integrands decay like sech^2, so |x - x_i| > 40 xi
# contributes below 1e-34.
DEFAULT_WINDOW = 40.0
DEFAULT_TOL = 1e-10
# k = 0 is excluded from every integral (u_k, v_k carry 1/eps_k).
K_MIN_OVER_XI = 1e-6


class PhysicsDomainError(ValueError):
    """Raised when an input lies outside the model's domain."""


class QuadratureError(RuntimeError):
    """Raised when an adaptive quadrature misses its tolerance."""


@dataclass(frozen=True)
class CondensateParams:
    """Physical constants of the condensate and the impurity coupling.

    Parameters
    ----------
    atom_mass, linear_density, interaction_g
        Boson mass ``m``, 1D density ``n0`` and contact strength ``g``.
    coupling_chi
        Boson-impurity contact strength ``chi``.
    hbar
        Reduced Planck constant in the caller's units.
    """

    atom_mass: float = 1.0
    linear_density: float = 1.0
    interaction_g: float = 1.0
    coupling_chi: float = 0.515625
    hbar: float = 1.0

    def __post_init__(self):
        for name in ("atom_mass", "linear_density", "interaction_g", "hbar"):
            if not getattr(self, name) > 0:
                raise PhysicsDomainError(f"{name} must be positive, got {getattr(self, name)!r}")
        if not self.coupling_chi >= 0:
            raise PhysicsDomainError(f"coupling_chi must be non-negative, got {self.coupling_chi!r}")

    @classmethod
    def natural(cls, nu: float = 0.75) -> "CondensateParams":
        """Natural units (hbar = m = xi = mu = 1) with chi chosen to give ``nu``."""
        return cls(coupling_chi=chi_for_nu(nu, 1.0))

    @property
    def healing_length(self) -> float:
        return healing_length(self)

    @property
    def chemical_potential(self) -> float:
        return self.interaction_g * self.linear_density

    @property
    def nu(self) -> float:
        return bound_state_parameter(self.coupling_chi, self.interaction_g)

    def with_chi(self, chi: float) -> "CondensateParams":
        return replace(self, coupling_chi=chi)


@dataclass(frozen=True)
class QubitPair:
    """Two identical soliton qubits centred at -d/2 and +d/2.

    ``nu`` and ``omega0`` are stored rather than recomputed so that the
    coupling strength in ``CondensateParams`` can be scaled on its own.
    """

    separation: float
    nu: float
    omega0: float

    def __post_init__(self):
        if not self.separation >= 0:
            raise PhysicsDomainError(f"separation must be non-negative, got {self.separation!r}")

    @classmethod
    def from_params(cls, params: CondensateParams, separation: float,
                    nu: float | None = None) -> "QubitPair":
        nu = params.nu if nu is None else nu
        omega0 = qubit_gap(nu, params.atom_mass, params.healing_length, params.hbar)
        return cls(separation=separation, nu=nu, omega0=omega0)

    @property
    def centers(self) -> tuple[float, float]:
        return (-0.5 * self.separation, 0.5 * self.separation)

    @property
    def x1(self) -> float:
        return self.centers[0]

    @property
    def x2(self) -> float:
        return self.centers[1]

    def at(self, separation: float) -> "QubitPair":
        return replace(self, separation=separation)


def healing_length(params: CondensateParams) -> float:
    """xi = hbar / sqrt(m n0 g)."""
    return params.hbar / np.sqrt(params.atom_mass * params.linear_density * params.interaction_g)


def bound_state_parameter(chi: float, g: float) -> float:
    """nu = -1 + sqrt(1 + 4 chi / g)."""
    if not g > 0:
        raise PhysicsDomainError(f"interaction g must be positive, got {g!r}")
    if chi < 0:
        raise PhysicsDomainError(f"chi must be non-negative, got {chi!r}")
    return -1.0 + np.sqrt(1.0 + 4.0 * chi / g)


def chi_for_nu(nu: float, g: float) -> float:
    """Inverse of :func:`bound_state_parameter`: chi = g ((1 + nu)^2 - 1) / 4."""
    if not g > 0:
        raise PhysicsDomainError(f"interaction g must be positive, got {g!r}")
    if nu < 0:
        raise PhysicsDomainError(f"nu must be non-negative, got {nu!r}")
    return g * ((1.0 + nu) ** 2 - 1.0) / 4.0


def qubit_regime(nu: float) -> bool:
    """True when the soliton supports exactly a two-level impurity spectrum."""
    return QUBIT_NU_MIN <= nu < QUBIT_NU_MAX


def qubit_gap(nu: float, m: float, xi: float, hbar: float = 1.0) -> float:
    """Angular gap frequency hbar (2 nu - 1) / (2 m xi^2).

    Negative for nu < 1/2; callers needing a qubit check ``gap > 0``.
    """
    if not xi > 0:
        raise PhysicsDomainError(f"healing length must be positive, got {xi!r}")
    return hbar * (2.0 * nu - 1.0) / (2.0 * m * xi**2)


def bogoliubov_dispersion(k, params: CondensateParams):
    """eps_k = mu xi sqrt(k^2 (xi^2 k^2 + 2)); accepts scalars or arrays."""
    xi = params.healing_length
    kx = np.abs(np.asarray(k, dtype=float)) * xi
    out = params.chemical_potential * kx * np.sqrt(kx * kx + 2.0)
    return float(out) if out.ndim == 0 else out


def dispersion_slope(k, params: CondensateParams):
    """d eps_k / dk for k >= 0."""
    xi = params.healing_length
    kx = np.asarray(k, dtype=float) * xi
    out = params.chemical_potential * xi * (2.0 * kx * kx + 2.0) / np.sqrt(kx * kx + 2.0)
    return float(out) if out.ndim == 0 else out


def wavenumber_for_energy(energy, params: CondensateParams):
    """Positive k with eps_k = energy (vectorised inverse of the dispersion)."""
    e = np.asarray(energy, dtype=float) / params.chemical_potential
    # (xi k)^2 = -1 + sqrt(1 + e^2), written to avoid cancellation at small e
    kx2 = e * e / (1.0 + np.sqrt(1.0 + e * e))
    out = np.sqrt(kx2) / params.healing_length
    return float(out) if out.ndim == 0 else out


def resonant_wavenumber(omega0: float, params: CondensateParams) -> float:
    """k0 > 0 solving eps_{k0} = hbar omega0."""
    if not omega0 > 0:
        raise PhysicsDomainError(f"no phonon resonance for omega0 = {omega0!r} (need omega0 > 0)")
    return wavenumber_for_energy(params.hbar * omega0, params)


def _check_k(k: float) -> None:
    if k == 0:
        raise PhysicsDomainError("the k = 0 mode is singular (1/eps_k)")


def _mode(k: float, x, center: float, params: CondensateParams, sign: int):
    _check_k(k)
    xi = params.healing_length
    mu = params.chemical_potential
    eps = bogoliubov_dispersion(k, params)
    y = (np.asarray(x, dtype=float) - center) / xi
    kx = k * xi
    bracket = (kx * kx + sign * 2.0 * eps / mu) * (0.5 * kx + 1j * np.tanh(y)) + kx / np.cosh(y) ** 2
    return np.exp(sign * 1j * k * (np.asarray(x) - center)) * np.sqrt(1.0 / (4 * np.pi * xi)) * (mu / eps) * bracket


def mode_u(k: float, x, center: float, params: CondensateParams):
    """Bogoliubov amplitude u_k(x) around a soliton at ``center``.

    The plane-wave phase is referenced to the soliton centre.
    """
    return _mode(k, x, center, params, +1)


def mode_v(k: float, x, center: float, params: CondensateParams):
    """Bogoliubov amplitude v_k(x) around a soliton at ``center``."""
    return _mode(k, x, center, params, -1)


def uniform_norm_density(k: float, params: CondensateParams) -> float:
    """|u_k|^2 - |v_k|^2 far from the soliton (tanh -> +-1, sech -> 0)."""
    _check_k(k)
    xi = params.healing_length
    kx = abs(k) * xi
    return 2.0 * kx * (kx * kx + 4.0) / np.sqrt(kx * kx + 2.0) / (4 * np.pi * xi)


def impurity_state(n: int, x, center: float, xi: float):
    """Bound impurity states phi_0 (even) and phi_1 (odd, purely imaginary)."""
    if not xi > 0:
        raise PhysicsDomainError(f"healing length must be positive, got {xi!r}")
    y = (np.asarray(x, dtype=float) - center) / xi
    phi0 = 1.0 / np.cosh(y) / np.sqrt(2.0 * xi)
    if n == 0:
        return phi0 + 0j
    if n == 1:
        return 1j * np.sqrt(3.0) * np.tanh(y) * phi0
    raise PhysicsDomainError(f"only the two lowest bound states exist in the model, got n={n!r}")


def _integrate_complex(f, a: float, b: float, tol: float) -> complex:
    total = 0j
    for part, unit in ((np.real, 1.0), (np.imag, 1j)):
        val, err, *rest = quad(lambda y: part(f(y)), a, b, epsabs=tol, epsrel=0.0,
                               limit=400, points=[0.0], full_output=1)
        if len(rest) == 2 or err > 10 * tol:
            raise QuadratureError(f"quadrature did not reach tolerance {tol:g} (error estimate {err:g})")
        total += unit * val
    return total


def coupling_g(k: float, qubit: int, params: CondensateParams, pair: QubitPair, *,
               include_v: bool = False, window: float = DEFAULT_WINDOW,
               tol: float = DEFAULT_TOL) -> complex:
    """Interband qubit-phonon coupling g^{(i)}(k) for qubit 1 or 2.

    sqrt(n0) chi * int dx phi_0^*(x) phi_1(x) tanh((x - x_i)/xi) u_k(x), with the
    mode centred on the same soliton as the impurity. The result is multiplied
    by exp(i k x_i) so that both qubits refer to one common plane-wave phase;
    this is what makes the two couplings differ.

    ``include_v`` adds the v_k channel of the fluctuation field (unvalidated).
    """
    _check_k(k)
    if qubit not in (1, 2):
        raise ValueError(f"qubit index must be 1 or 2, got {qubit!r}")
    if params.coupling_chi == 0:
        return 0j
    xi = params.healing_length
    center = pair.centers[qubit - 1]

    def integrand(y):
        x = center + xi * y
        overlap = np.conj(impurity_state(0, x, center, xi)) * impurity_state(1, x, center, xi) * np.tanh(y)
        mode = mode_u(k, x, center, params)
        if include_v:
            mode = mode + mode_v(k, x, center, params)
        return overlap * mode

    integral = xi * _integrate_complex(integrand, -window, window, tol)
    return np.sqrt(params.linear_density) * params.coupling_chi * np.exp(1j * k * center) * integral


def gauss_legendre_panels(a: float, b: float, n_panels: int, order: int = 16):
    """Nodes and weights of a composite Gauss-Legendre rule on [a, b]."""
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def coupling_spectrum(ks, params: CondensateParams, *, include_v: bool = False,
                      window: float = DEFAULT_WINDOW, panel_width: float = 0.25,
                      chunk: int = 256) -> np.ndarray:
    """Vectorised g(k) for a soliton centred at the origin.

    Same integral as :func:`coupling_g` (without the exp(i k x_i) factor),
    evaluated with a fixed composite Gauss-Legendre rule in x so that many
    wavenumbers can share one pass. Used by the rate integrals.
    """
    ks = np.atleast_1d(np.asarray(ks, dtype=float))
    if np.any(ks == 0):
        raise PhysicsDomainError("the k = 0 mode is singular (1/eps_k)")
    out = np.zeros(ks.shape, dtype=complex)
    if params.coupling_chi == 0:
        return out
    xi = params.healing_length
    mu = params.chemical_potential
    n_panels = max(1, int(np.ceil(2 * window / panel_width)))
    y, w = gauss_legendre_panels(-window, window, n_panels)
    x = xi * y
    th = np.tanh(y)
    sech2 = 1.0 / np.cosh(y) ** 2
    overlap = np.conj(impurity_state(0, x, 0.0, xi)) * impurity_state(1, x, 0.0, xi) * th
    weighted = xi * w * overlap
    # the overlap falls off like exp(-2|y|); nodes beyond |y| ~ 21 add nothing
    keep = np.abs(weighted) > 1e-18 * np.abs(weighted).max()
    x, th, sech2, weighted = x[keep], th[keep], sech2[keep], weighted[keep]
    signs = (1, -1) if include_v else (1,)
    for start in range(0, ks.size, chunk):
        kc = ks[start:start + chunk, None]
        kx = kc * xi
        eps = bogoliubov_dispersion(kc, params)
        norm = np.sqrt(1.0 / (4 * np.pi * xi)) * mu / eps
        for sign in signs:
            # same expression as _mode, with k along the first axis
            bracket = (kx * kx + sign * 2.0 * eps / mu) * (0.5 * kx + 1j * th) + kx * sech2
            modes = np.exp(sign * 1j * kc * x) * norm * bracket
            out[start:start + chunk] += modes @ weighted
    return np.sqrt(params.linear_density) * params.coupling_chi * out
