"""Exception and warning types raised by polariton2d."""


class Polariton2DError(Exception):
    """Base class for all library errors."""


class ParameterError(Polariton2DError, ValueError):
    """Invalid physical or numerical parameters."""


class ConfigError(Polariton2DError):
    """Invalid run configuration (unknown key, bad value, missing section)."""

    def __init__(self, message, section=None, key=None, line=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if section is not None:
            where.append(f"[{section}]" + (f" {key}" if key else ""))
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
        self.section = section
        self.key = key
        self.line = line


class NumericalError(Polariton2DError):
    """A numerical stage failed (non-diagonalizable generator, no convergence...)."""


class DefectiveLiouvillian(NumericalError):
    """The right-eigenvector matrix is too ill-conditioned to be trusted."""

    def __init__(self, condition, params=None, block=None):
        msg = f"eigenvector condition number {condition:.3e} exceeds limit"
        if block is not None:
            msg += f" in invariant block {block}"
        if params is not None:
            msg += f" for {params!r}"
        super().__init__(msg)
        self.condition = condition
        self.params = params


class SteadyStateNotUnique(NumericalError):
    pass


class DriveTooStrong(NumericalError):
    pass


class GridTooCoarse(NumericalError):
    pass


class OnResonance(NumericalError):
    """A frequency grid point hits an undamped resonance exactly."""


class OutOfGrid(Polariton2DError, ValueError):
    pass


class UnknownPathway(Polariton2DError, ValueError):
    pass


class NoConvergence(NumericalError):
    """Least-squares fit did not converge; carries the last iterate."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class DegenerateTrace(NumericalError):
    """Trace has no measurable oscillation; `result` holds the log-slope fallback."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class NonResonantLabeling(UserWarning):
    """Polariton L/U character is ambiguous; labels fall back to energy order."""
