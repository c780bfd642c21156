"""Static allocation of interdependent algorithms on edge/fog/cloud robot networks."""

from .algograph import SINK, SOURCE, AlgorithmGraph, AlgorithmSpec, lift_to_semilattice
from .architecture import Architecture, LinkModel, Node, NodeClass
from .errors import (
    ConfigError,
    ConstraintViolation,
    CyclicDependency,
    GenerationExhausted,
    Infeasible,
    InfeasibleMemoryPlacement,
    InvalidPrefix,
    OracleTooLarge,
    TooManyFlows,
    Unreachable,
    UnknownVertex,
)
from .memmodel import MemoryProfile, MemoryReport
from .solver import (
    SolverConfig,
    SolveResult,
    enumerate_oracle,
    evaluate,
    solve,
    solve_baseline_li2018,
    solve_heterogeneous,
)
from .timemodel import Allocation, TimeReport, aggregate_time, partial_time, response_time

__all__ = [
    "SINK",
    "SOURCE",
    "AlgorithmGraph",
    "AlgorithmSpec",
    "Allocation",
    "Architecture",
    "ConfigError",
    "ConstraintViolation",
    "CyclicDependency",
    "GenerationExhausted",
    "Infeasible",
    "InfeasibleMemoryPlacement",
    "InvalidPrefix",
    "LinkModel",
    "MemoryProfile",
    "MemoryReport",
    "Node",
    "NodeClass",
    "OracleTooLarge",
    "SolveResult",
    "SolverConfig",
    "TimeReport",
    "TooManyFlows",
    "Unreachable",
    "UnknownVertex",
    "aggregate_time",
    "enumerate_oracle",
    "evaluate",
    "lift_to_semilattice",
    "partial_time",
    "response_time",
    "solve",
    "solve_baseline_li2018",
    "solve_heterogeneous",
]
