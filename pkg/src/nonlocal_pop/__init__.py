"""Simulation and stability analysis for nonlocal-consumption population models."""
from .dispersion import (
    CriticalCurvePoint,
    DispersionReport,
    ModelParams,
    asymmetric_drift_speed,
    bounded_domain_critical_mu,
    critical_mu,
    dispersion_value,
    minimal_wave_speed,
    neutral_frequency_relation,
    pattern_period,
    solve_branch_roots,
    stability_verdict,
    taylor_phase_plane,
)
from .kernel import Kernel, Shape

__version__ = "0.1.0"
