"""Frequency-dependent squeezing by quantum teleportation: noise model and tools."""

from .budget import (
    LossBudgetParams,
    NoiseBudget,
    PhaseNoiseParams,
    QTConfig,
    baseline_fds_budget,
    no_squeeze_budget,
    qt_budget,
)
from .plant import EffectiveCavity, PlantParams, carrier_effective_cavity
from .search import SearchTargets, search_lengths, solve_detuning
from .tp_core import FrequencyGrid

__all__ = [
    "EffectiveCavity",
    "FrequencyGrid",
    "LossBudgetParams",
    "NoiseBudget",
    "PhaseNoiseParams",
    "PlantParams",
    "QTConfig",
    "SearchTargets",
    "baseline_fds_budget",
    "carrier_effective_cavity",
    "no_squeeze_budget",
    "qt_budget",
    "search_lengths",
    "solve_detuning",
]
