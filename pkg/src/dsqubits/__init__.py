"""Entanglement dynamics of two dark-soliton qubits in a quasi-1D condensate."""

from __future__ import annotations

__version__ = "0.1.0"

from .config import ConfigError, ScenarioConfig
from .dynamics import (
    InitialState,
    Trajectory,
    closed_form_trajectory,
    dicke_basis_change,
    entangled_state,
    evolve_closed_form,
    integrate_lindblad,
    lindblad_rhs,
    mixed_state,
)
from .entanglement import (
    ConcurrenceSeries,
    EventReport,
    concurrence_c1,
    concurrence_c2,
    death_time_entangled,
    death_time_mixed,
    death_time_mixed_exact,
    detect_events,
    revival_time,
    wootters_concurrence,
    xstate_concurrence,
)
from .physics import CondensateParams, QubitPair, bogoliubov_dispersion, coupling_g
from .rates import RateSet, RateSettings, rate_curve, rate_set

__all__ = [
    "CondensateParams", "ConcurrenceSeries", "ConfigError", "EventReport", "InitialState",
    "QubitPair", "RateSet", "RateSettings", "ScenarioConfig", "Trajectory",
    "bogoliubov_dispersion", "closed_form_trajectory", "concurrence_c1", "concurrence_c2",
    "coupling_g", "death_time_entangled", "death_time_mixed", "death_time_mixed_exact",
    "detect_events", "dicke_basis_change", "entangled_state", "evolve_closed_form",
    "integrate_lindblad", "lindblad_rhs", "mixed_state", "rate_curve", "rate_set",
    "revival_time", "wootters_concurrence", "xstate_concurrence",
]
