"""Custom exception types for the panel trend estimator."""

from typing import Optional

import numpy as np


class PanelTrendError(Exception):
    """Base class for exceptions in this application."""

    pass


class DataNotFoundError(PanelTrendError, FileNotFoundError):
    """Raised when a required data file (feed, density table, spec) is not found."""

    pass


class FileProcessingError(PanelTrendError):
    """Raised when there's an error during file processing (e.g., CSV parsing)."""

    pass


class MissingColumnError(FileProcessingError):
    """Raised when an input file lacks a required column."""

    def __init__(self, column: str, path: str = ""):
        self.column = column
        where = f" in {path}" if path else ""
        super().__init__(f"Missing required column '{column}'{where}")


class MalformedRowError(FileProcessingError):
    """Raised for a row that cannot be parsed; carries the 1-based file line number."""

    def __init__(self, line: int, detail: str):
        self.line = line
        super().__init__(f"Line {line}: {detail}")


class PanelValidationError(PanelTrendError, ValueError):
    """Raised when panel inputs or invariants are invalid."""

    pass


class MissingDensityError(PanelValidationError):
    """Raised when a case 2 transform is requested for a unit without a density."""

    def __init__(self, unit_id: str):
        self.unit_id = unit_id
        super().__init__(f"No positive population density for unit '{unit_id}'")


class EmptyEvaluationSetError(PanelValidationError):
    """Raised when an evaluation-set rule selects no time index."""

    def __init__(self, detail: str = ""):
        suffix = f" ({detail})" if detail else ""
        super().__init__(f"evaluation set empty{suffix}")


class NoUnitsSurviveError(PanelTrendError):
    """Raised when region preparation filters out every unit."""

    def __init__(self, detail: str = ""):
        suffix = f" ({detail})" if detail else ""
        super().__init__(f"no units survive filters{suffix}")


class SpecError(PanelTrendError, ValueError):
    """Raised for an invalid synthetic spec or run configuration."""

    pass


class EstimationError(PanelTrendError):
    """Base class for numerical failures during estimation."""

    pass


class BandwidthTooSmallError(EstimationError):
    """Raised when a smoother sees zero kernel mass at a grid point."""

    pass


class EmptyWindowError(EstimationError):
    """Raised when no observation carries kernel weight around an evaluation point."""

    pass


class DegenerateSpectrumError(EstimationError):
    """Raised when the mean leading eigenvalue is not positive."""

    pass


class NoFeasibleBandwidthError(EstimationError):
    """Raised when every bandwidth candidate has an infinite CV score."""

    pass


class AsymmetricMatrixError(EstimationError):
    """Raised when a symmetric eigensolver receives an asymmetric matrix."""

    pass


class OracleError(EstimationError):
    """Raised when a test oracle is used outside its supported range."""

    pass


class NonConvergenceError(EstimationError):
    """Raised when power iteration exhausts its budget; keeps the best iterate."""

    def __init__(self, message: str, best_vector: Optional[np.ndarray] = None, residual: float = float("nan")):
        self.best_vector = best_vector
        self.residual = residual
        super().__init__(message)


def with_time_index(error: PanelTrendError, t: int) -> PanelTrendError:
    """Returns a copy of a domain error whose message names the offending time index."""
    message = f"{error} (at t={t})"
    if isinstance(error, NonConvergenceError):
        return NonConvergenceError(message, best_vector=error.best_vector, residual=error.residual)
    try:
        return type(error)(message)
    except TypeError:
        return EstimationError(message)
