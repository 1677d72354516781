"""Finite time horizon p-mixed H2 norms of damped second-order vibrational systems.

The package evaluates the trace of the truncated Gramian integral
trace(int_0^T exp(A t) Z exp(A' t) dt) for the modal representation of a
mass-spring-damper system with one rank-1 external damper, either through a
fast frequency-domain quadrature (offline/online split with recycling across
viscosities and horizons) or through dense Lyapunov / matrix exponential
reference computations.
"""

from .model import (
    SecondOrderSystem,
    ModalSystem,
    modal_transform,
    build_example1,
    build_example3,
    system_from_json,
)
from .quad import (
    QuadratureSpec,
    TGrid,
    SGrid,
    s_max,
    suggest_spec,
    gauss_legendre,
    simpson_fixed,
    simpson_adaptive,
)
from .engine import NormProblem, NormValue, OfflineTables, offline, norm_fast, viscosity_sweep, horizon_sweep
from .oracle import StateSpace, build_state_space, expm, lyap, norm_reference, norm_reference_dual, norm_bruteforce
from .cli import RunConfig, SweepReport, SweepRow, load_config, run, effective_viscosity, benchmark

__all__ = [
    "SecondOrderSystem",
    "ModalSystem",
    "modal_transform",
    "build_example1",
    "build_example3",
    "system_from_json",
    "QuadratureSpec",
    "TGrid",
    "SGrid",
    "s_max",
    "suggest_spec",
    "gauss_legendre",
    "simpson_fixed",
    "simpson_adaptive",
    "NormProblem",
    "NormValue",
    "OfflineTables",
    "offline",
    "norm_fast",
    "viscosity_sweep",
    "horizon_sweep",
    "StateSpace",
    "build_state_space",
    "expm",
    "lyap",
    "norm_reference",
    "norm_reference_dual",
    "norm_bruteforce",
    "RunConfig",
    "SweepReport",
    "SweepRow",
    "load_config",
    "run",
    "effective_viscosity",
    "benchmark",
]
