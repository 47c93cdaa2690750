"""Exception types shared across the planning toolkit."""


class OranPlanError(Exception):
    """Base class for all toolkit errors."""


class ParameterError(OranPlanError, ValueError):
    """A configuration or argument value is out of its allowed domain."""


class InfeasibleError(OranPlanError, RuntimeError):
    """A requested quantity cannot be attained under the given inputs."""


class StructuralInfeasibility(OranPlanError, RuntimeError):
    """The instance cannot be feasible regardless of decisions.

    Carries the offending entities so callers can report which UE or RU
    breaks the instance.
    """

    def __init__(self, message: str, *, entities: tuple = ()):
        super().__init__(message)
        self.entities = tuple(entities)
