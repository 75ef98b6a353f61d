from typing import Optional

import numpy as np


class RandesError(Exception):
    """Base class of every error raised by randes."""


class DimensionTooLarge(RandesError, ValueError):
    def __init__(self, message: str, model: Optional[object] = None):
        super().__init__(message)
        self.model = model

    def __reduce__(self):
        return self.__class__, (self.args[0], self.model)


class RankDeficient(RandesError, ValueError):
    """The design restricted to a model is numerically rank deficient.

    This signals degenerate input data, not a bug.
    """


class LengthMismatch(RandesError, ValueError):
    ...


class SingularSubmatrix(RandesError, ValueError):
    ...


class InvalidModel(RandesError, ValueError):
    ...


class EmptyCollection(RandesError, ValueError):
    ...


class ModelNotInCollection(RandesError, KeyError):
    def __str__(self) -> str:
        # KeyError quotes its argument otherwise.
        return str(self.args[0]) if self.args else ""


class InvalidK(RandesError, ValueError):
    ...


class AllWeightsInfinite(RandesError, ValueError):
    ...


class DegenerateY(RandesError, ValueError):
    ...


class NoTrueSignal(RandesError, ValueError):
    ...


class BadDimension(RandesError, ValueError):
    ...


class NotPSD(RandesError, ValueError):
    def __init__(self, message: str, min_eigenvalue: float):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue

    def __reduce__(self):
        return self.__class__, (self.args[0], self.min_eigenvalue)


class EvenP(RandesError, ValueError):
    ...


class ConfigError(RandesError, ValueError):
    def __init__(self, message: str, key: Optional[str] = None, line: Optional[int] = None):
        super().__init__(message)
        self.key = key
        self.line = line

    def __reduce__(self):
        return self.__class__, (self.args[0], self.key, self.line)


class NoConvergence(RandesError, RuntimeError):
    """Coordinate descent ran out of sweeps.

    Attributes:
        last_iterate: coefficients after the final sweep (original scale).
        last_change: largest coordinate change observed in the final sweep.
    """

    def __init__(self, message: str, last_iterate: np.ndarray, last_change: float):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.last_change = last_change

    def __reduce__(self):
        return self.__class__, (self.args[0], self.last_iterate, self.last_change)


class ReplicationFailed(RandesError, RuntimeError):
    def __init__(self, replication: int, estimator: str, cause: BaseException):
        super().__init__(f"Replication {replication} failed for estimator {estimator}: {cause}")
        self.replication = replication
        self.estimator = estimator
        self.cause = cause

    def __reduce__(self):
        # Rebuilt by joblib workers when the error crosses a process boundary.
        return self.__class__, (self.replication, self.estimator, self.cause)


class NoValidCandidate(RandesError, RuntimeError):
    """Every cross-validation candidate failed on at least one fold."""
