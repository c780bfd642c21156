class AllocationError(Exception):
    """Base class for every error raised by this package."""


class CyclicDependency(AllocationError):
    pass


class UnknownVertex(AllocationError, KeyError):
    pass


class TooManyFlows(AllocationError):
    pass


class Unreachable(AllocationError):
    pass


class GenerationExhausted(AllocationError):
    pass


class ConstraintViolation(AllocationError):
    pass


class InvalidPrefix(AllocationError):
    pass


class InfeasibleMemoryPlacement(AllocationError):
    pass


class Infeasible(AllocationError):
    pass


class OracleTooLarge(AllocationError):
    pass


class ConfigError(AllocationError):
    pass
