from __future__ import annotations

import numpy as np
import pytest
from scipy.integrate import quad

from dsqubits.physics import CondensateParams, QubitPair, bogoliubov_dispersion, dispersion_slope
from dsqubits.rates import RateSettings, calculator


def coupling_closed_form(k, params=None):
    """Independent oracle for g(k) at a soliton centred on the origin (xi = mu = 1).

    Uses the Fourier transforms of sech^2, sech^4 and sech^6 to do the x
    integral by hand:
        FT[sech^2] = S, FT[sech^4] = S (k^2 + 4) / 6,
        FT[sech^6] = S (k^2 + 4)(k^2 + 16) / 120,  S = pi k / sinh(pi k / 2).
    """
    params = params or CondensateParams.natural(0.75)
    k = float(k)
    eps = bogoliubov_dispersion(k, params)
    s = np.pi * k / np.sinh(np.pi * k / 2)
    a = k * k + 2 * eps
    integral = s * k * (-a * (4 + k * k) / 24 + (16 - k**4) / 120)
    return (np.sqrt(params.linear_density) * params.coupling_chi * (1j * np.sqrt(3) / 2)
            / np.sqrt(4 * np.pi) / eps * integral)


def pv_cauchy_oracle(d, k0, omega0, params, k_min=1e-6, k_max=50.0):
    """PV int |g|^2 exp(-i k d) / (w_k - w0) dk via QUADPACK's Cauchy weight."""

    def regular(k, part):
        if abs(k - k0) < 1e-12:
            ratio = 1.0 / dispersion_slope(k0, params)
        else:
            ratio = (k - k0) / (bogoliubov_dispersion(k, params) - omega0)
        return part(abs(coupling_closed_form(k, params)) ** 2 * np.exp(-1j * k * d) * ratio)

    out = 0j
    for part, unit in ((np.real, 1), (np.imag, 1j)):
        # split so the oscillating tail is handled by plain adaptive quadrature
        near, _ = quad(regular, k_min, 4.0, args=(part,), weight="cauchy", wvar=k0,
                       epsabs=1e-14, epsrel=1e-12, limit=500)
        far, _ = quad(lambda k: regular(k, part) / (k - k0), 4.0, k_max,
                      epsabs=1e-14, epsrel=1e-12, limit=1000)
        out += unit * (near + far)
    return out


@pytest.fixture(scope="session")
def params():
    return CondensateParams.natural(0.75)


@pytest.fixture(scope="session")
def pair(params):
    return QubitPair.from_params(params, 1.2)


@pytest.fixture(scope="session")
def calc(params, pair):
    return calculator(params, pair, RateSettings())


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_density_matrix(rng, dim=4):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def random_x_state(rng):
    """Collective-basis X state: diagonal plus a rho_eg coherence."""
    p = rng.dirichlet(np.ones(4))
    rho = np.diag(p).astype(complex)
    c = rng.uniform() * np.sqrt(p[0] * p[3]) * np.exp(1j * rng.uniform(0, 2 * np.pi))
    rho[0, 3], rho[3, 0] = c, np.conj(c)
    return rho
