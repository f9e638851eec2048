"""Exception types shared across the package."""


class CoordinationError(Exception):
    """Base class for every domain error raised by tecoord."""


class ScenarioInvalid(CoordinationError):
    """A scenario file or in-memory scenario violates a model invariant."""


class BadDimensions(CoordinationError):
    """A knowledge matrix is not square of size (N+1) x (N+1)."""


class NotAPartition(CoordinationError):
    """Decision stages overlap or fail to cover every agent id."""


class DegenerateSupply(CoordinationError):
    """Linear supply cost with unbounded production range has no maximizer."""


class Infeasible(CoordinationError):
    """Box constraints make supply/demand balance impossible."""


class InfeasibleCapacity(CoordinationError):
    """No admissible price keeps total demand within the capacity limit."""


class NotConverged(CoordinationError):
    """An iterative solver exhausted its iteration budget."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class NoPureNash(CoordinationError):
    """Exhaustive enumeration found no pure-strategy Nash equilibrium."""


class TypeOffSupport(CoordinationError):
    """A type value is not on the prior's support."""


class ZeroBidSum(CoordinationError):
    """Supply-function clearing requires a strictly positive bid sum."""


class UnboundedTeam(CoordinationError):
    """The team problem's search box is not finite."""


class GradientDegenerate(CoordinationError):
    """The follower payoff gradient vanishes at the team point."""


class NotIncentiveControllable(CoordinationError):
    """No linear pricing function realizes the team point."""


class PriorRequired(CoordinationError):
    """The operation needs a (discrete, independent) type prior."""


class NeedTwoAgents(CoordinationError):
    """The operation is only defined for two or more resource agents."""


class UnknownSubcommand(CoordinationError):
    """The CLI was invoked with an unrecognized subcommand."""
