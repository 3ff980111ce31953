"""Batch-parallel ABC-SMC with a stochastic compartmental epidemic model."""

from ._pabc import (
    CaseDataSeries,
    KernelKind,
    ObservedDay,
    ParameterVector,
    Particle,
    ParticlePopulation,
    SimConfig,
    SmcConfig,
    SmcResult,
    StageRecord,
    StepSizeState,
    distance,
    generate_synthetic,
    run_abc_smc,
    sample_bdss_steps,
    simulate,
)

__all__ = [
    "CaseDataSeries",
    "KernelKind",
    "ObservedDay",
    "ParameterVector",
    "Particle",
    "ParticlePopulation",
    "SimConfig",
    "SmcConfig",
    "SmcResult",
    "StageRecord",
    "StepSizeState",
    "distance",
    "generate_synthetic",
    "run_abc_smc",
    "sample_bdss_steps",
    "simulate",
]
