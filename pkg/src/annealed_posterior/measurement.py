"""Linear Gaussian measurements ``y = A x + N(0, eta^2 I_m)`` and the coupled
observation ladder used to anneal from a very noisy copy of ``y`` down to
``y`` itself."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import RejectedInputError
from .rng import make_rng


@dataclass(frozen=True, eq=False)
class MeasurementModel:
    """Forward operator ``A`` (m x d) and noise standard deviation ``eta``."""

    A: np.ndarray
    eta: float

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        if A.ndim == 1:
            A = A[None, :]
        if A.ndim != 2 or A.size == 0:
            raise RejectedInputError(f"A must be a non-empty 2-D matrix, got shape {A.shape}")
        if not np.all(np.isfinite(A)):
            raise RejectedInputError("A has non-finite entries")
        if not (np.isfinite(self.eta) and self.eta > 0):
            raise RejectedInputError(f"eta must be positive and finite, got {self.eta}")
        A.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "eta", float(self.eta))

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def d(self) -> int:
        return self.A.shape[1]

    @cached_property
    def op_norm(self) -> float:
        """Largest singular value of ``A``."""
        return float(np.linalg.norm(self.A, 2))

    def check_signal(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.d:
            raise RejectedInputError(f"x has trailing dimension {x.shape[-1]}, expected d={self.d}")
        if not np.all(np.isfinite(x)):
            raise RejectedInputError("x has non-finite entries")
        return x

    def check_observation(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if y.shape[-1] != self.m:
            raise RejectedInputError(f"y has trailing dimension {y.shape[-1]}, expected m={self.m}")
        return y

    def forward(self, x) -> np.ndarray:
        """``A x`` for a vector or a batch of row vectors."""
        return self.check_signal(x) @ self.A.T


def simulate_measurement(x, model: MeasurementModel, rng) -> np.ndarray:
    """Draw ``y = A x + eta * z`` with ``z ~ N(0, I_m)`` from ``rng``.

    ``x`` may be a single vector or a batch of shape ``(n, d)``.
    """
    rng = make_rng(rng)
    ax = model.forward(x)
    return ax + model.eta * rng.standard_normal(ax.shape)


@dataclass(frozen=True)
class CoupledObservations:
    """Observations ``ys[0], ..., ys[N-1]``, noisiest first; ``ys[-1]`` is ``y``."""

    ys: list
    ladder_ref: object = field(repr=False)

    def __post_init__(self):
        if len(self.ys) != len(self.ladder_ref.etas):
            raise RejectedInputError("one observation per ladder rung is required")

    def __len__(self):
        return len(self.ys)


def build_coupled_ladder(y, ladder, rng) -> CoupledObservations:
    """Generate ``y_{N-1}, ..., y_1`` backward from ``y_N = y``.

    Each step adds independent ``N(0, (eta_i^2 - eta_{i+1}^2) I_m)`` noise, so
    ``y_i`` is marginally distributed as ``A x + N(0, eta_i^2 I_m)``.  A rung
    with zero variance increment reuses the previous array unchanged.
    """
    rng = make_rng(rng)
    y = np.asarray(y, dtype=float)
    etas = np.asarray(ladder.etas, dtype=float)
    model = getattr(ladder, "model_ref", None)
    if model is not None:
        y = model.check_observation(y)
    ys = [None] * len(etas)
    ys[-1] = y
    for i in range(len(etas) - 2, -1, -1):
        var = etas[i] ** 2 - etas[i + 1] ** 2
        if var == 0.0:
            ys[i] = ys[i + 1]
        else:
            ys[i] = ys[i + 1] + np.sqrt(var) * rng.standard_normal(y.shape)
    return CoupledObservations(ys=ys, ladder_ref=ladder)
