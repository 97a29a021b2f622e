"""Exception hierarchy.

Every error carries a short machine-readable ``code`` and the process exit
status the command-line front end should use for it.
"""


class QEnsembleError(Exception):
    code = "error"
    exit_status = 1


class DomainError(QEnsembleError, ValueError):
    """Argument outside the domain of a function (x <= 0 for ln_q, q <= 0, ...)."""

    code = "domain"


class SpectrumError(QEnsembleError, ValueError):
    code = "bad-spectrum"


class SpectrumParseError(SpectrumError):
    """Malformed spectrum file; ``line`` and ``column`` are 1-based."""

    code = "parse"

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "") + ": "
        super().__init__(where + message)


class InfeasibleMeanError(QEnsembleError, ValueError):
    """Requested mean is not strictly inside the energy range."""

    code = "infeasible-mean"
    exit_status = 2


class NoSolutionError(QEnsembleError, RuntimeError):
    code = "no-solution"
    exit_status = 2

    def __init__(self, message, bracket=None):
        self.bracket = bracket
        if bracket is not None:
            message = f"{message} (last bracket: [{bracket[0]!r}, {bracket[1]!r}])"
        super().__init__(message)


class EmptySupportError(QEnsembleError, ValueError):
    """Every weight vanished, so nothing can be normalized."""

    code = "empty-support"
    exit_status = 2


class DegenerateDistributionError(EmptySupportError):
    code = "degenerate-distribution"


class EmptyWindowError(QEnsembleError, ValueError):
    """No replica configuration falls inside the microcanonical window.

    ``nearest_mean`` is the closest reachable replica mean, as an exact
    fraction, when one exists.
    """

    code = "empty-window"
    exit_status = 2

    def __init__(self, message, nearest_mean=None, N=None):
        self.nearest_mean = nearest_mean
        self.N = N
        if N is not None:
            message = f"N={N}: {message}"
        if nearest_mean is not None:
            message = f"{message}; nearest admissible mean is {nearest_mean}"
        super().__init__(message)


class DegenerateSpectrumError(QEnsembleError, ValueError):
    code = "degenerate-spectrum"
    exit_status = 2


class UnderdeterminedFitError(QEnsembleError, ValueError):
    code = "underdetermined-fit"
    exit_status = 2


class InvariantViolation(QEnsembleError, RuntimeError):
    """An internal consistency check failed; indicates a bug or a broken assumption."""

    code = "invariant-violation"
    exit_status = 3
