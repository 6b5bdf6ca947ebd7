"""Exception hierarchy shared by every stochgrad module."""


class StochGradError(Exception):
    """Base class for errors raised by this package."""


class ContractError(StochGradError, ValueError):
    """An input violates an operation's precondition."""


class CapacityError(StochGradError):
    """Exhaustive enumeration would exceed the configured unit cap."""


class ActivationOverflowError(StochGradError, FloatingPointError):
    """A unit produced a non-finite activation during a forward pass."""

    def __init__(self, layer, unit, value):
        self.layer = layer
        self.unit = unit
        self.value = value
        super().__init__(f"non-finite activation {value!r} at layer {layer}, unit {unit}")


class DegenerateInputError(StochGradError, ValueError):
    """Sample set cannot support the requested estimate."""


class ConfigError(StochGradError):
    """Experiment configuration could not be parsed or validated."""


class DivergenceError(StochGradError, FloatingPointError):
    """Training produced a non-finite loss or parameter."""
