"""Exception types raised across the simulator."""


class SimulationError(Exception):
    """Base class for every error raised by delegsim."""


class ConfigurationError(SimulationError):
    """A configured table or block is missing or inconsistent."""


class ParameterError(SimulationError, ValueError):
    """A numeric parameter is outside its admissible range."""


class DomainError(SimulationError, ValueError):
    """An input value lies outside the domain of the operation."""


class DimensionError(SimulationError, ValueError):
    """Vector or sequence lengths do not agree."""


class InsufficientDataError(SimulationError, ValueError):
    """A sequence is too short for the requested window."""


class NodeLookupError(SimulationError, KeyError):
    """A node id is not part of the graph."""


class StateError(SimulationError, RuntimeError):
    """An operation was called on an object in the wrong lifecycle state."""


class ConfigValidationError(SimulationError):
    """Scenario configuration failed validation.

    ``problems`` holds ``(location, message)`` pairs, one per violated
    invariant, where location is a dotted path into the config file.
    """

    def __init__(self, problems):
        self.problems = list(problems)
        lines = [f"{loc or '<root>'}: {msg}" for loc, msg in self.problems]
        super().__init__("invalid scenario configuration:\n  " + "\n  ".join(lines))
