"""Exception hierarchy shared across the package."""


class WgbfError(Exception):
    """Base class for all errors raised by this package."""


class InvalidArgumentError(WgbfError):
    """A caller passed an argument outside the documented domain."""


class MeshFormatError(WgbfError):
    """A mesh file could not be parsed; carries file and line context."""

    def __init__(self, path, line_no, message):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = path
        self.line_no = line_no


class MeshTopologyError(WgbfError):
    """Cell connectivity is inconsistent (missing vertex, inverted cell, ...)."""


class GeometryError(WgbfError):
    """A local geometric system (mass matrix, RT interpolation) is singular."""


class ConfigError(WgbfError):
    """A scenario configuration file or CLI flag set is invalid."""


class SolverError(WgbfError):
    """A linear solve failed (singular or badly conditioned system)."""

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration


class NonConvergenceError(SolverError):
    """The fixed-point iteration hit the iteration cap; carries the history."""

    def __init__(self, message, history):
        super().__init__(message)
        self.history = history
