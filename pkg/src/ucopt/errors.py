"""Exception types shared across the package."""


class UcoptError(Exception):
    """Base class for every error raised by ucopt."""


class RejectedInputError(UcoptError, ValueError):
    """A control input outside the converter's current limit."""


class DivergenceError(UcoptError, ArithmeticError):
    """Non-finite simulation state.

    ``t`` is the simulated time (s) of the step that produced it.
    """

    def __init__(self, message, t=None):
        super().__init__(message if t is None else f"{message} (t={t:.6g} s)")
        self.t = t


class CriticDivergenceError(DivergenceError):
    """Non-finite critic weight update."""


class IllPosedSpecError(UcoptError, ValueError):
    """Cost weights for which the scalar HJB has no real positive solution."""


class InconclusiveHorizonError(UcoptError, ValueError):
    """Trajectory too short: the tracking error has not settled."""


class MismatchedScenarioError(UcoptError, ValueError):
    """Two runs that do not share the same scenario apart from the controller."""


class ConfigError(UcoptError, ValueError):
    """Malformed or invalid configuration document.

    ``violations`` lists every problem found, one string each.
    """

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)


class ConfigParseError(ConfigError):
    """Configuration text that is not valid YAML."""
