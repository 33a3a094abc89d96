"""Exception hierarchy shared by every dryreach module."""


class DryReachError(Exception):
    """Base class for all errors raised by the package."""


class ScenarioError(DryReachError):
    """Malformed input: a graph, simulator, unsafe set or scenario file."""


class SchemaError(ScenarioError):
    pass


class CycleDetected(ScenarioError):
    pass


class EmptyEdgeInterval(ScenarioError):
    pass


class UnknownModeReference(ScenarioError):
    pass


class MissingInitialOrTerminalVertex(ScenarioError):
    pass


class LabelMismatch(DryReachError):
    pass


class NonUniqueEndpoints(DryReachError):
    pass


class ExplosionGuard(DryReachError):
    pass


class UnknownMode(DryReachError):
    pass


class NonMonotonicTimes(DryReachError):
    pass


class NumericOverflow(DryReachError):
    pass


class DimensionMismatch(DryReachError):
    pass


class DomainError(DryReachError, ValueError):
    pass


class EmptySampleSet(DryReachError):
    pass


class InsufficientTraces(DryReachError):
    pass


class DegenerateInitialStates(DryReachError):
    pass


class DurationExceedsDiscrepancyHorizon(DryReachError):
    pass


class WindowOutOfRange(DryReachError):
    pass


class RefusesEmptyGraph(DryReachError):
    pass


class UnknownJunction(DryReachError):
    pass


class BadDimension(DryReachError):
    pass
