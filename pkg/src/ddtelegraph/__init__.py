"""Exact dynamical-decoupling decoherence of a qubit in telegraph-like noise."""

from importlib.metadata import PackageNotFoundError, version

from .engine import DecoherenceSample, coherence, curve  # noqa: F401
from .expansion import ExpansionReport, g3, g3_parts  # noqa: F401
from .montecarlo import MonteCarloEstimate, mc_coherence  # noqa: F401
from .noise import NoiseModel, two_state_rtn  # noqa: F401
from .optimizer import OptimizationResult, minimize  # noqa: F401
from .pulses import PulseSequence, cdd, cpmg, udd  # noqa: F401

try:
    __version__ = version("ddtelegraph")
except PackageNotFoundError:
    __version__ = "unknown version"
