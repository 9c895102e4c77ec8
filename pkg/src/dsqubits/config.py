"""Scenario files: TOML (or JSON) tables describing one run.

Example::

    [condensate]
    units = "natural"
    nu = 0.75
    g = 1.0

    [pair]
    separation = 1.2          # in units of the healing length

    [initial_state]
    kind = "entangled"
    alpha = 0.25

    [run]
    t_end = 20.0              # in units of 1/gamma
    samples = 2001

Natural units take ``mass``, ``density``, ``g`` or ``mu``, ``chi`` or ``nu``
and ``hbar`` as plain numbers. SI units take ``mass`` in atomic mass units,
``density`` in 1/m, ``mu`` as mu/h in Hz, ``g`` in J m, ``chi`` in J m, and
``gap_hz`` (the target omega0 / 2 pi) as an alternative to ``g``/``mu``.
Whatever the input, computation runs in units hbar = m = xi = mu = 1.
"""

from __future__ import annotations

import json
import math
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
import tomli_w
from scipy import constants

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .dynamics import InitialState
from .physics import CondensateParams, QubitPair, chi_for_nu, qubit_gap
from .rates import DEFAULT_K_MAX_OVER_XI, DEFAULT_LENGTH_OVER_XI, RateSettings

HBAR_SI = constants.hbar
PLANCK_SI = constants.h
AMU_SI = constants.physical_constants["atomic mass constant"][0]
RB85_MASS_AMU = 84.911789738


class ConfigError(ValueError):
    """Invalid scenario; the message names the offending field."""


def _fail(path: str, msg: str):
    raise ConfigError(f"{path}: {msg}")


def _positive(path, value):
    if not isinstance(value, (int, float)) or isinstance(value, bool) or not value > 0:
        _fail(path, f"must be a positive number, got {value!r}")


@dataclass(frozen=True)
class CondensateConfig:
    units: str = "natural"
    mass: float | None = None
    density: float | None = None
    g: float | None = None
    mu: float | None = None
    gap_hz: float | None = None
    chi: float | None = None
    nu: float | None = None
    hbar: float | None = None

    def validate(self):
        if self.units not in ("natural", "si"):
            _fail("condensate.units", f"expected 'natural' or 'si', got {self.units!r}")
        for name in ("mass", "density", "g", "mu", "gap_hz", "hbar"):
            value = getattr(self, name)
            if value is not None:
                _positive(f"condensate.{name}", value)
        if self.chi is not None and not (isinstance(self.chi, (int, float)) and self.chi >= 0):
            _fail("condensate.chi", f"must be a non-negative number, got {self.chi!r}")
        if self.nu is not None:
            _positive("condensate.nu", self.nu)
        if (self.chi is None) == (self.nu is None):
            _fail("condensate", "give exactly one of 'chi' and 'nu'")
        energy = [k for k in ("g", "mu", "gap_hz") if getattr(self, k) is not None]
        if self.units == "natural":
            if self.gap_hz is not None:
                _fail("condensate.gap_hz", "only valid with units = 'si'")
            if len(energy) != 1:
                _fail("condensate", "give exactly one of 'g' and 'mu'")
        else:
            if len(energy) != 1:
                _fail("condensate", "give exactly one of 'g', 'mu' and 'gap_hz'")
            if self.density is None:
                _fail("condensate.density", "required in SI units (1/m)")
            if self.hbar is not None:
                _fail("condensate.hbar", "fixed by the SI system; remove it")
            if self.gap_hz is not None and (self.nu is None or not self.nu > 0.5):
                _fail("condensate.gap_hz", "fitting mu to a gap needs 'nu' above 1/2")


@dataclass(frozen=True)
class GridConfig:
    start: float
    stop: float
    count: int

    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.count)


@dataclass(frozen=True)
class PairConfig:
    separation: float | None = None
    grid: GridConfig | None = None

    def validate(self):
        if self.separation is None and self.grid is None:
            _fail("pair", "give 'separation' or a 'grid' table")
        if self.separation is not None:
            _positive("pair.separation", self.separation)
        if self.grid is not None:
            _positive("pair.grid.start", self.grid.start)
            _positive("pair.grid.stop", self.grid.stop)
            if not self.grid.stop >= self.grid.start:
                _fail("pair.grid", "stop must not be below start")
            if not (isinstance(self.grid.count, int) and self.grid.count >= 1):
                _fail("pair.grid.count", f"must be a positive integer, got {self.grid.count!r}")

    def separations(self) -> np.ndarray:
        """Separations in units of the healing length."""
        if self.grid is not None:
            return self.grid.values()
        return np.array([self.separation])


@dataclass(frozen=True)
class InitialStateConfig:
    kind: str = "entangled"
    alpha: float = 0.5
    matrix: list | None = None

    def validate(self):
        try:
            self.build()
        except (ValueError, TypeError) as exc:
            _fail("initial_state", str(exc))

    def build(self) -> InitialState:
        matrix = None
        if self.matrix is not None:
            # rows of [re, im] pairs keep the file format plain
            arr = np.asarray(self.matrix, dtype=float)
            if arr.shape != (4, 4, 2):
                raise ValueError("matrix must be 4 rows of 4 [re, im] pairs")
            matrix = tuple(map(tuple, arr[..., 0] + 1j * arr[..., 1]))
        return InitialState(self.kind, self.alpha, matrix)


@dataclass(frozen=True)
class RunConfig:
    t_end: float = 10.0
    samples: int = 1001
    step: float = 1e-4
    frame: str = "rotating"
    independent: bool = False
    integrator: bool = True
    oracle_tol: float = 1e-6
    paper_literal: bool = False

    def validate(self):
        _positive("run.t_end", self.t_end)
        _positive("run.step", self.step)
        _positive("run.oracle_tol", self.oracle_tol)
        if not (isinstance(self.samples, int) and self.samples >= 2):
            _fail("run.samples", f"must be an integer >= 2, got {self.samples!r}")
        if self.frame not in ("rotating", "lab"):
            _fail("run.frame", f"expected 'rotating' or 'lab', got {self.frame!r}")
        for name in ("independent", "integrator", "paper_literal"):
            if not isinstance(getattr(self, name), bool):
                _fail(f"run.{name}", "must be true or false")


@dataclass(frozen=True)
class RatesConfig:
    length_over_xi: float = DEFAULT_LENGTH_OVER_XI
    k_max_over_xi: float = DEFAULT_K_MAX_OVER_XI
    workers: int = 1
    include_v: bool = False     # add the v_k channel to the coupling (unvalidated)

    def validate(self):
        _positive("rates.length_over_xi", self.length_over_xi)
        if not isinstance(self.include_v, bool):
            _fail("rates.include_v", f"must be true or false, got {self.include_v!r}")
        _positive("rates.k_max_over_xi", self.k_max_over_xi)
        if not (isinstance(self.workers, int) and self.workers >= 1):
            _fail("rates.workers", f"must be a positive integer, got {self.workers!r}")

    def settings(self) -> RateSettings:
        return RateSettings(length_over_xi=self.length_over_xi, k_max_over_xi=self.k_max_over_xi,
                            include_v=self.include_v)


@dataclass(frozen=True)
class EstimateConfig:
    large_separation: float = 10.0

    def validate(self):
        _positive("estimate.large_separation", self.large_separation)


@dataclass(frozen=True)
class OutputConfig:
    prefix: str = "run"
    format: str = "csv"

    def validate(self):
        if not self.prefix or "/" in self.prefix:
            _fail("output.prefix", f"must be a plain file stem, got {self.prefix!r}")
        if self.format not in ("csv", "json"):
            _fail("output.format", f"expected 'csv' or 'json', got {self.format!r}")


@dataclass(frozen=True)
class Units:
    """Conversion from the internal units to SI (None in natural mode)."""

    energy_j: float
    time_s: float
    length_m: float


@dataclass(frozen=True)
class Resolved:
    params: CondensateParams
    nu: float
    omega0: float
    units: Units | None


_BLOCKS = {
    "condensate": CondensateConfig,
    "pair": PairConfig,
    "initial_state": InitialStateConfig,
    "run": RunConfig,
    "rates": RatesConfig,
    "estimate": EstimateConfig,
    "output": OutputConfig,
}


@dataclass(frozen=True)
class ScenarioConfig:
    condensate: CondensateConfig = field(default_factory=lambda: CondensateConfig(nu=0.75, g=1.0))
    pair: PairConfig = field(default_factory=lambda: PairConfig(separation=1.2))
    initial_state: InitialStateConfig = field(default_factory=InitialStateConfig)
    run: RunConfig = field(default_factory=RunConfig)
    rates: RatesConfig = field(default_factory=RatesConfig)
    estimate: EstimateConfig = field(default_factory=EstimateConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def __post_init__(self):
        for name in _BLOCKS:
            getattr(self, name).validate()

    # --- construction ---------------------------------------------------------

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        if not isinstance(data, dict):
            raise ConfigError("scenario must be a table")
        unknown = set(data) - set(_BLOCKS)
        if unknown:
            raise ConfigError(f"unknown block(s): {', '.join(sorted(unknown))}")
        blocks = {}
        for name, block_cls in _BLOCKS.items():
            if name in data:
                blocks[name] = _build_block(name, block_cls, data[name])
        return cls(**blocks)

    def to_dict(self) -> dict:
        out = {}
        for name in _BLOCKS:
            block = asdict(getattr(self, name))
            cleaned = {k: v for k, v in block.items() if v is not None}
            if cleaned:
                out[name] = cleaned
        return out

    def dumps(self) -> str:
        return tomli_w.dumps(self.to_dict())

    # --- physics --------------------------------------------------------------

    def resolve(self) -> Resolved:
        """Condensate parameters in natural units plus the SI scale, if any."""
        c = self.condensate
        if c.units == "natural":
            mass = 1.0 if c.mass is None else c.mass
            density = 1.0 if c.density is None else c.density
            hbar = 1.0 if c.hbar is None else c.hbar
            g = c.g if c.g is not None else c.mu / density
            chi = c.chi if c.chi is not None else chi_for_nu(c.nu, g)
            params = CondensateParams(mass, density, g, chi, hbar)
            nu = params.nu
            omega0 = qubit_gap(nu, mass, params.healing_length, hbar)
            return Resolved(params, nu, omega0, None)

        mass = (RB85_MASS_AMU if c.mass is None else c.mass) * AMU_SI
        density = c.density
        if c.gap_hz is not None:
            # omega0 = (2 nu - 1) mu / (2 hbar), linear in mu
            mu = 2 * PLANCK_SI * c.gap_hz / (2 * c.nu - 1)
        elif c.mu is not None:
            mu = PLANCK_SI * c.mu
        else:
            mu = c.g * density
        xi = HBAR_SI / math.sqrt(mass * mu)
        units = Units(energy_j=mu, time_s=HBAR_SI / mu, length_m=xi)
        # hbar = m = xi = mu = 1 leaves n0 xi as the only free number
        n_xi = density * xi
        g_nat = 1.0 / n_xi
        chi = chi_for_nu(c.nu, g_nat) if c.nu is not None else c.chi / (mu * xi)
        params = CondensateParams(1.0, n_xi, g_nat, chi, 1.0)
        nu = params.nu
        return Resolved(params, nu, qubit_gap(nu, 1.0, 1.0, 1.0), units)

    def pair_at(self, resolved: Resolved, d_over_xi: float) -> QubitPair:
        xi = resolved.params.healing_length
        return QubitPair(d_over_xi * xi, resolved.nu, resolved.omega0)


def _build_block(name, block_cls, data):
    if not isinstance(data, dict):
        raise ConfigError(f"{name}: must be a table")
    allowed = {f.name for f in fields(block_cls)}
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"{name}: unknown field(s) {', '.join(sorted(unknown))}")
    data = dict(data)
    if block_cls is PairConfig and "grid" in data:
        grid = data["grid"]
        if not isinstance(grid, dict) or set(grid) != {"start", "stop", "count"}:
            raise ConfigError("pair.grid: needs exactly start, stop and count")
        data["grid"] = GridConfig(**grid)
    if block_cls is CondensateConfig and "units" in data and isinstance(data["units"], str):
        data["units"] = data["units"].lower()
    try:
        return block_cls(**data)
    except TypeError as exc:
        raise ConfigError(f"{name}: {exc}") from None


def loads(text: str, *, fmt: str = "toml") -> ScenarioConfig:
    try:
        data = json.loads(text) if fmt == "json" else tomllib.loads(text)
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot parse scenario: {exc}") from None
    return ScenarioConfig.from_dict(data)


def load(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return loads(text, fmt="json" if path.suffix.lower() == ".json" else "toml")
