"""byzmesh: Byzantine-resilient decentralized SGD, simulated and verified.

Deterministic single-process simulator for decentralized stochastic
optimization over worker graphs with Byzantine members: pluggable
robust aggregation rules (including the iterative outlier scissor),
attack models, mixing-matrix diagnostics, and empirical checks of the
contraction / consensus / convergence theory behind them.
"""
from .aggregators import AggregationInput, AggregatorSpec, aggregate, parse_aggregator
from .attacks import AttackContext, AttackSpec, make_message, parse_attack
from .graphs import (
    MixingMatrix,
    Topology,
    chi_squared,
    gen_erdos_renyi,
    gen_octopus,
    gen_two_castle,
    ios_virtual_matrix,
    metropolis_weights,
    spectral_gap,
)
from .kernels import BACKEND as KERNEL_BACKEND
from .problems import QuadraticProblem, SoftmaxProblem, load_idx, partition
from .trainer import RunConfig, RunResult, StepSchedule, disagreement, run, two_castle_fixture

__version__ = "0.1.0"

__all__ = [
    "AggregationInput",
    "AggregatorSpec",
    "AttackContext",
    "AttackSpec",
    "KERNEL_BACKEND",
    "MixingMatrix",
    "QuadraticProblem",
    "RunConfig",
    "RunResult",
    "SoftmaxProblem",
    "StepSchedule",
    "Topology",
    "aggregate",
    "chi_squared",
    "disagreement",
    "gen_erdos_renyi",
    "gen_octopus",
    "gen_two_castle",
    "ios_virtual_matrix",
    "load_idx",
    "make_message",
    "metropolis_weights",
    "parse_aggregator",
    "parse_attack",
    "partition",
    "run",
    "spectral_gap",
    "two_castle_fixture",
]
