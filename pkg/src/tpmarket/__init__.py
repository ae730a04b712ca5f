"""Transport-provider market model: AP choices, equilibrium prices and price projections."""
from .choice import Assignment, best_tp, indifference_price, partition, throughput, utility
from .core import (
    APPopulation,
    APType,
    DiscreteDistribution,
    Market,
    TPSegment,
    build_population,
    canonicalize,
)
from .equilibrium import Certificate, EquilibriumResult, PriceGrid, demand, solve, solve_ascending, verify
from .estimators import MenuChoice, PriceEquilibrium
from .evolution import Projection, Scenario, convert_price, decision_scenarios, project, sensitivity
from .quality import DirectEta, MG1FIFO, achieved_quality
from .scaling import ScalingFactors, denormalize_price, normalize, scale_system
from .sweep import MenuSpec, PartitionSweepSpec, SweepSpec, SystemSpec, run_partition_sweep, run_sweep

__version__ = "0.1.0"

__all__ = [
    "APPopulation", "APType", "Assignment", "Certificate", "DirectEta", "DiscreteDistribution",
    "EquilibriumResult", "MG1FIFO", "Market", "MenuChoice", "MenuSpec", "PartitionSweepSpec",
    "PriceEquilibrium", "PriceGrid", "Projection", "ScalingFactors", "Scenario", "SweepSpec",
    "SystemSpec", "TPSegment", "achieved_quality", "best_tp", "build_population", "canonicalize",
    "convert_price", "decision_scenarios", "demand", "denormalize_price", "indifference_price",
    "normalize", "partition", "project", "run_partition_sweep", "run_sweep", "scale_system",
    "sensitivity", "solve", "solve_ascending", "throughput", "utility", "verify",
]
