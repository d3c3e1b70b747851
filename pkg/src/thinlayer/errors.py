"""Exception hierarchy shared by the solvers, analysis harness and CLI."""

from __future__ import annotations


class ThinLayerError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(ThinLayerError, ValueError):
    """Invalid parameters or configuration.

    ``problems`` holds one ``(field_path, message)`` pair per violation so that
    a batch user can fix a config file in a single pass.
    """

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [("", problems)]
        self.problems = list(problems)
        lines = [f"{path}: {msg}" if path else msg for path, msg in self.problems]
        super().__init__("; ".join(lines))


class ModelDomainError(ThinLayerError, ValueError):
    """A constitutive law was evaluated outside its domain (e.g. v < 0)."""


class InvalidModelError(ThinLayerError, ValueError):
    """The combination of pressure laws admits no driving pressure for some population."""


class SolverError(ThinLayerError, RuntimeError):
    """A simulation failed; ``time`` is the simulated time at failure."""

    def __init__(self, message: str, time: float):
        self.time = float(time)
        super().__init__(f"{message} (t={self.time:.17g})")


class SchemeFailure(SolverError):
    """Negativity beyond rounding tolerance, typically a CFL violation."""


class NumericalBlowup(SolverError):
    """Non-finite pressure or flux; ``face`` is the offending face index."""

    def __init__(self, message: str, time: float, face: int | None = None):
        self.face = face
        if face is not None:
            message = f"{message} at face {face}"
        super().__init__(message, time)
