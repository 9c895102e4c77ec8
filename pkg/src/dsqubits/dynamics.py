"""Two-qubit density matrices in the collective basis and their evolution.

Basis order is (|e>, |+>, |->, |g>) with |+-> = (|e1 g2> +- |g1 e2>)/sqrt(2).
Product-basis order is (|e1e2>, |e1g2>, |g1e2>, |g1g2>).

Two independent evolutions are provided: closed-form element solutions in the
rotating frame, and a fixed-step RK4 integration of the Lindblad equation. They
serve as oracles for each other.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .rates import RateSet

log = logging.getLogger(__name__)

DICKE_LABELS = ("e", "+", "-", "g")
E, P, M, G = range(4)

_S = 1 / np.sqrt(2)
# Columns are the collective states written in the product basis.
DICKE_TO_PRODUCT = np.array([
    [1, 0, 0, 0],
    [0, _S, _S, 0],
    [0, _S, -_S, 0],
    [0, 0, 0, 1],
], dtype=complex)

HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-12
POSITIVITY_FLOOR = -1e-10


class InvariantViolation(ValueError):
    """A density matrix broke Hermiticity, normalisation or positivity."""


class ModelError(ValueError):
    """Rates that do not define a completely positive evolution."""


class IntegrationError(RuntimeError):
    """The integrator could not honour its step or invariant contract."""


def to_product(rho_collective: np.ndarray) -> np.ndarray:
    """Collective-basis matrix to product basis (unitary congruence)."""
    U = DICKE_TO_PRODUCT
    return U @ rho_collective @ U.conj().T


def to_collective(rho_product: np.ndarray) -> np.ndarray:
    U = DICKE_TO_PRODUCT
    return U.conj().T @ rho_product @ U


def dicke_basis_change(rho_collective: np.ndarray) -> np.ndarray:
    return to_product(rho_collective)


def check_density_matrix(rho: np.ndarray, *, herm_tol: float = HERMITICITY_TOL,
                         trace_tol: float = TRACE_TOL,
                         floor: float = POSITIVITY_FLOOR) -> np.ndarray:
    """Return ``rho`` as a complex 4x4 array or raise InvariantViolation."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise InvariantViolation(f"expected a 4x4 matrix, got shape {rho.shape}")
    herm = np.max(np.abs(rho - rho.conj().T))
    if herm > herm_tol:
        raise InvariantViolation(f"not Hermitian (max deviation {herm:.3g})")
    tr = np.trace(rho).real
    if abs(tr - 1) > trace_tol:
        raise InvariantViolation(f"trace is {tr!r}, expected 1")
    lowest = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0]
    if lowest < floor:
        raise InvariantViolation(f"negative eigenvalue {lowest:.3g}")
    return rho


@dataclass(frozen=True)
class InitialState:
    """Initial condition: ``entangled`` sqrt(1-a)|g> + sqrt(a)|e>, the ``mixed``
    diagonal state diag(a, 2, 0, 1-a)/3, or a ``custom`` collective matrix."""

    kind: Literal["entangled", "mixed", "custom"] = "entangled"
    alpha: float = 0.5
    matrix: tuple | None = None

    def __post_init__(self):
        if self.kind not in ("entangled", "mixed", "custom"):
            raise ValueError(f"unknown initial-state kind {self.kind!r}")
        if self.kind != "custom" and not 0 <= self.alpha <= 1:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha!r}")
        if self.kind == "custom":
            if self.matrix is None:
                raise ValueError("custom initial state needs a matrix")
            check_density_matrix(np.array(self.matrix, dtype=complex))

    def density_matrix(self) -> np.ndarray:
        if self.kind == "entangled":
            return entangled_state(self.alpha)
        if self.kind == "mixed":
            return mixed_state(self.alpha)
        return np.array(self.matrix, dtype=complex)


def entangled_state(alpha: float) -> np.ndarray:
    psi = np.zeros(4, dtype=complex)
    psi[E] = np.sqrt(alpha)
    psi[G] = np.sqrt(1 - alpha)
    return np.outer(psi, psi.conj())


def mixed_state(alpha: float) -> np.ndarray:
    return np.diag([alpha, 2.0, 0.0, 1.0 - alpha]).astype(complex) / 3.0


def _expm1_ratio(z):
    """(1 - exp(-z)) / z with the z -> 0 limit 1."""
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < 1e-8
    safe = np.where(small, 1.0, z)
    return np.where(small, 1 - z / 2, -np.expm1(-safe) / safe)


def _sinh_ratio(z, t):
    """2 sinh(z t / 2) / z, finite at z = 0."""
    z = complex(z)
    if abs(z) * np.max(np.abs(t), initial=0.0) < 1e-8:
        return t + 0j
    return 2 * np.sinh(0.5 * z * t) / z


def evolve_closed_form(rho0: np.ndarray, t, rates: RateSet, *, paper_literal: bool = False,
                       omega0: float = 0.0) -> np.ndarray:
    """Collective-basis density matrix at time(s) ``t``.

    Rotating frame by default; a nonzero ``omega0`` restores the free
    precession phases of H = (omega0 / 2) sum_i sigma_z^i. ``paper_literal``
    switches to the uncorrected forms: a growing rho_{e-} exponential and the
    opposite rho_{+-} phase. Those two elements then disagree with the
    Lindblad equation.

    Returns an array of shape (4, 4) for scalar ``t``, else (len(t), 4, 4).
    """
    scalar = np.ndim(t) == 0
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t < 0):
        raise ValueError("closed-form evolution is only defined for t >= 0")
    rho0 = np.asarray(rho0, dtype=complex)
    g, G_, eta = rates.gamma, rates.collective_damping, rates.coherent_shift
    if abs(G_) > g * (1 + 1e-12):
        raise ModelError(f"|Gamma| = {abs(G_):g} exceeds gamma = {g:g}")
    ex = lambda rate: np.exp(-rate * t)  # noqa: E731

    out = np.zeros((t.size, 4, 4), dtype=complex)
    ee0, pp0, mm0 = rho0[E, E].real, rho0[P, P].real, rho0[M, M].real

    out[:, E, E] = ex(2 * g) * ee0
    # (g+G)/(g-G) (e^{-(g+G)t} - e^{-2gt}), kept finite as G -> g
    out[:, P, P] = ex(g + G_) * pp0 + (g + G_) * ex(g + G_) * t * _expm1_ratio((g - G_) * t) * ee0
    out[:, M, M] = ex(g - G_) * mm0 + (g - G_) * ex(g - G_) * t * _expm1_ratio((g + G_) * t) * ee0
    out[:, E, G] = ex(g) * rho0[E, G]
    if paper_literal:
        out[:, P, M] = ex(g - 2j * eta) * rho0[P, M]
        out[:, E, M] = np.exp(0.5 * (3 * g + G_ - 2j * eta) * t) * rho0[E, M]
    else:
        out[:, P, M] = ex(g + 2j * eta) * rho0[P, M]
        out[:, E, M] = ex(0.5 * (3 * g - G_ + 2j * eta)) * rho0[E, M]
    out[:, E, P] = ex(0.5 * (3 * g + G_ - 2j * eta)) * rho0[E, P]
    out[:, G, P] = (ex(0.5 * (g + G_ - 2j * eta)) * rho0[G, P]
                    + (g + G_) * ex(0.5 * (2 * g + G_)) * _sinh_ratio(g + 2j * eta, t) * rho0[P, E])
    out[:, G, M] = (ex(0.5 * (g - G_ + 2j * eta)) * rho0[G, M]
                    - (g - G_) * ex(0.5 * (2 * g - G_)) * _sinh_ratio(g - 2j * eta, t) * rho0[M, E])

    for a, b in ((E, G), (P, M), (E, M), (E, P), (G, P), (G, M)):
        out[:, b, a] = np.conj(out[:, a, b])
    # closure rho_gg = 1 - rho_ee - rho_++ - rho_--, written as a population
    # balance so that t = 0 returns rho0 bit for bit
    out[:, G, G] = rho0[G, G].real + sum(rho0[i, i].real - out[:, i, i].real for i in (E, P, M))

    if omega0:
        # collective-state energies of (omega0/2)(sz1 + sz2)
        energy = np.array([omega0, 0.0, 0.0, -omega0])
        out *= np.exp(-1j * np.subtract.outer(energy, energy)[None] * t[:, None, None])
    return out[0] if scalar else out


# --- Lindblad generator -------------------------------------------------------

_SP = np.array([[0, 1], [0, 0]], dtype=complex)  # |e><g| in the (e, g) basis
_SZ = np.diag([1.0, -1.0]).astype(complex)
_I2 = np.eye(2, dtype=complex)
SIGMA_PLUS = (np.kron(_SP, _I2), np.kron(_I2, _SP))
SIGMA_MINUS = tuple(s.conj().T for s in SIGMA_PLUS)
SIGMA_Z = (np.kron(_SZ, _I2), np.kron(_I2, _SZ))


def damping_matrix(rates: RateSet) -> np.ndarray:
    return np.array([[rates.gamma, rates.collective_damping],
                     [rates.collective_damping, rates.gamma]])


def _check_rates(rates: RateSet) -> np.ndarray:
    gm = damping_matrix(rates)
    if np.linalg.eigvalsh(gm)[0] < -1e-12 * max(1.0, abs(rates.gamma)):
        raise ModelError(f"damping matrix {gm.tolist()} is not positive semidefinite")
    return gm


def lindblad_rhs(rho: np.ndarray, rates: RateSet, omega0: float = 0.0) -> np.ndarray:
    """Time derivative of a product-basis density matrix.

    -i[H_q, rho] - i eta [sum_{i!=j} s+^i s-^j, rho]
      + sum_ij Gamma_ij (s-^j rho s+^i - {s+^i s-^j, rho}/2),
    with H_q = (omega0/2)(sz^1 + sz^2) and Gamma_ij = [[gamma, Gamma], [Gamma, gamma]].
    """
    gm = _check_rates(rates)
    rho = np.asarray(rho, dtype=complex)
    H = 0.5 * omega0 * (SIGMA_Z[0] + SIGMA_Z[1])
    exchange = SIGMA_PLUS[0] @ SIGMA_MINUS[1] + SIGMA_PLUS[1] @ SIGMA_MINUS[0]
    H = H + rates.coherent_shift * exchange
    out = -1j * (H @ rho - rho @ H)
    for i in range(2):
        for j in range(2):
            if gm[i, j] == 0:
                continue
            jump = SIGMA_PLUS[i] @ SIGMA_MINUS[j]
            out += gm[i, j] * (SIGMA_MINUS[j] @ rho @ SIGMA_PLUS[i] - 0.5 * (jump @ rho + rho @ jump))
    return out


# Real coordinates for Hermitian 4x4 matrices: diagonal, then Re and Im of the
# strict upper triangle. Stepping in these coordinates keeps every iterate
# exactly Hermitian.
_IU = np.triu_indices(4, 1)


def _herm_to_real(rho: np.ndarray) -> np.ndarray:
    return np.concatenate([np.diag(rho).real, rho[_IU].real, rho[_IU].imag])


def _real_to_herm(y: np.ndarray) -> np.ndarray:
    rho = np.diag(y[:4]).astype(complex)
    upper = y[4:10] + 1j * y[10:]
    rho[_IU] = upper
    rho[(_IU[1], _IU[0])] = upper.conj()
    return rho


def _generator(rates: RateSet, omega0: float) -> np.ndarray:
    cols = []
    for n in range(16):
        e = np.zeros(16)
        e[n] = 1.0
        cols.append(_herm_to_real(lindblad_rhs(_real_to_herm(e), rates, omega0)))
    return np.array(cols).T


def rk4_step(f, y, h):
    """One classical Runge-Kutta step of y' = f(y)."""
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


@dataclass
class Trajectory:
    """Samples of the collective-basis density matrix."""

    times: np.ndarray
    states: np.ndarray
    source: str
    rates: RateSet | None = None
    error_estimate: float | None = None
    trace_drift: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if self.times.ndim != 1 or self.states.shape != (self.times.size, 4, 4):
            raise ValueError("times and states do not line up")
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("trajectory times must be strictly increasing")

    def __len__(self):
        return self.times.size

    def populations(self) -> np.ndarray:
        """(n, 4) real populations in (e, +, -, g) order."""
        return np.real(np.einsum("nii->ni", self.states))

    def check(self, floor: float = -1e-8) -> None:
        for t, rho in zip(self.times, self.states):
            try:
                check_density_matrix(rho, herm_tol=1e-10, trace_tol=1e-10, floor=floor)
            except InvariantViolation as exc:
                raise InvariantViolation(f"at t={t:g}: {exc}") from None


def closed_form_trajectory(rho0: np.ndarray, times, rates: RateSet, *,
                           paper_literal: bool = False, omega0: float = 0.0) -> Trajectory:
    times = np.asarray(times, dtype=float)
    states = evolve_closed_form(rho0, times, rates, paper_literal=paper_literal, omega0=omega0)
    return Trajectory(times, states, "closed_form", rates=rates)


def _propagate(y0, times, gen, dt):
    ys = np.empty((times.size, y0.size))
    ys[0] = y0
    y = y0.copy()
    cache = {}
    for n in range(1, times.size):
        span = times[n] - times[n - 1]
        m = max(1, int(np.ceil(span / dt - 1e-9)))
        h = span / m
        key = round(h, 15)
        if key not in cache:
            # RK4 applied to the identity gives the one-step map of the linear system.
            cache[key] = rk4_step(lambda Y: gen @ Y, np.eye(y0.size), h)
        step = cache[key]
        for _ in range(m):
            y = step @ y
        ys[n] = y
    return ys


def integrate_lindblad(rho0: np.ndarray, t_end: float, rates: RateSet, omega0: float = 0.0, *,
                       dt: float | None = None, samples: int = 201, times=None,
                       error_estimate: bool = True) -> Trajectory:
    """Fixed-step RK4 integration of the Lindblad equation.

    ``dt`` defaults to 1e-4 / gamma, capped at 1e-2 / omega0 in the lab
    frame. The state is stepped in real Hermitian coordinates, so Hermiticity
    holds exactly at every step. With
    ``error_estimate`` the run is repeated at dt/2 and the Richardson estimate
    max|y_dt - y_dt/2| / 15 is stored on the trajectory.
    """
    rho0 = check_density_matrix(rho0)
    if times is None:
        if not t_end > 0:
            raise ValueError("t_end must be positive")
        times = np.linspace(0.0, t_end, samples)
    times = np.asarray(times, dtype=float)
    if times[0] != 0.0 or np.any(np.diff(times) <= 0):
        raise ValueError("sample times must start at 0 and increase strictly")
    if dt is None:
        dt = 1e-4 / rates.gamma if rates.gamma > 0 else times[-1] * 1e-4
        if omega0:
            dt = min(dt, 1e-2 / abs(omega0))
    if not dt > 1e-15 * max(times[-1], 1e-300):
        raise IntegrationError(f"step size {dt!r} underflows the integration span")

    gen = _generator(rates, omega0)
    y0 = _herm_to_real(to_product(rho0))
    ys = _propagate(y0, times, gen, dt)
    err = None
    if error_estimate:
        ys_half = _propagate(y0, times, gen, 0.5 * dt)
        err = float(np.max(np.abs(ys - ys_half))) / 15.0
        ys = ys_half

    traces = ys[:, :4].sum(axis=1)
    drift = float(np.max(np.abs(traces - 1)))
    if drift > 1e-10:
        raise IntegrationError(f"trace drifted by {drift:.3g}")
    if drift > 0:
        log.debug("renormalising trace drift of %.3g", drift)
        ys = ys / traces[:, None]
    states = np.array([to_collective(_real_to_herm(y)) for y in ys])
    traj = Trajectory(times, states, "lindblad", rates=rates, error_estimate=err, trace_drift=drift)
    traj.check()
    return traj
