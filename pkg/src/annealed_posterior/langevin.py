"""Euler-Maruyama integrators for Langevin-type SDEs ``dX = drift dt + sqrt(2) dB``.

Chains are advanced as a batch of row vectors; each chain draws its Brownian
increments from its own stream (:class:`~annealed_posterior.rng.ChainStreams`),
so results do not depend on how chains are batched.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .errors import DivergenceError, RejectedInputError
from .measurement import MeasurementModel
from .rng import ChainStreams
from .scores import as_oracle

Drift = Callable[[np.ndarray], np.ndarray]


@dataclass
class ChainState:
    """Positions ``x`` (n_chains x d), elapsed time and per-chain random streams.

    ``trajectory`` holds ``(t, x)`` snapshots when recording is enabled.
    """

    x: np.ndarray
    streams: ChainStreams
    elapsed: float = 0.0
    steps: int = 0
    trajectory: list = field(default_factory=list)

    def __post_init__(self):
        self.x = np.array(self.x, dtype=float)
        if self.x.ndim != 2:
            raise RejectedInputError("x must have shape (n_chains, d)")
        if self.x.shape[0] != self.streams.n_chains:
            raise RejectedInputError("one random stream per chain is required")
        if not np.all(np.isfinite(self.x)):
            raise DivergenceError("initial state is not finite")

    @classmethod
    def from_prior(cls, prior, streams: ChainStreams) -> "ChainState":
        """Exact prior draws, one per chain from that chain's init stream."""
        x = np.concatenate([prior.sample(g, 1) for g in streams.init_generators])
        return cls(x, streams)

    @property
    def n_chains(self) -> int:
        return self.x.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]


@dataclass(frozen=True)
class StepPolicy:
    """Step size ``h`` (or ``"auto"``), step cap, trajectory stride and norm guard.

    ``record_stride = 0`` disables trajectory recording.  ``"auto"`` must be
    resolved with :func:`auto_step_size` before integration.
    """

    h: Union[float, str] = 1e-3
    max_steps: int = 10 ** 8
    record_stride: int = 0
    guard: float = 1e6

    def __post_init__(self):
        if isinstance(self.h, str):
            if self.h != "auto":
                raise RejectedInputError(f"h must be positive or 'auto', got {self.h!r}")
        elif not (math.isfinite(self.h) and self.h > 0):
            raise RejectedInputError(f"h must be positive, got {self.h}")
        if self.max_steps < 1:
            raise RejectedInputError("max_steps must be positive")
        if self.record_stride < 0:
            raise RejectedInputError("record_stride must be >= 0")
        if not self.guard > 0:
            raise RejectedInputError("guard must be positive")

    @property
    def is_auto(self) -> bool:
        return isinstance(self.h, str)

    def resolved(self, h: float) -> "StepPolicy":
        """This policy with ``h`` replaced when it was ``"auto"``."""
        if not self.is_auto:
            return self
        return StepPolicy(h=h, max_steps=self.max_steps, record_stride=self.record_stride, guard=self.guard)


def step_count(T: float, h: float) -> int:
    """``ceil(T / h)``, ignoring round-off that would add an empty final step."""
    n = math.ceil(T / h)
    if n > 1 and (n - 1) * h >= T * (1.0 - 1e-12):
        n -= 1
    return max(n, 1)


def euler_maruyama_run(state: ChainState, drift: Drift, T: float, policy: StepPolicy, rung=None) -> ChainState:
    """Advance every chain by time ``T``: ``x <- x + dt drift(x) + sqrt(2 dt) xi``.

    The drift is evaluated once per step at the start of the step.  All steps
    but the last have length ``h``; the last uses whatever time remains.
    The state is updated in place and returned.
    """
    if policy.is_auto:
        raise RejectedInputError("resolve an 'auto' step size before integrating")
    if not (T > 0 and math.isfinite(T)):
        raise RejectedInputError(f"T must be positive and finite, got {T}")
    h = float(policy.h)
    n = step_count(T, h)
    if state.steps + n > policy.max_steps:
        raise RejectedInputError(f"{n} steps would exceed max_steps={policy.max_steps}")
    x = state.x
    d = state.d
    stride = policy.record_stride
    t0 = state.elapsed
    for j in range(n):
        dt = h if j < n - 1 else T - (n - 1) * h
        x = x + dt * drift(x) + math.sqrt(2.0 * dt) * state.streams.normal(d)
        _check(x, policy.guard, t0 + (j + 1) * h, rung)
        state.steps += 1
        if stride and state.steps % stride == 0:
            state.trajectory.append((t0 + min((j + 1) * h, T), x.copy()))
    state.x = x
    state.elapsed = t0 + T
    return state


def _check(x, guard, t, rung):
    sq = np.einsum("ij,ij->i", x, x)
    worst = float(np.max(sq))
    if not math.isfinite(worst):
        raise DivergenceError(f"non-finite state at t={t:.6g}", rung=rung)
    if worst > guard * guard:
        raise DivergenceError(f"|x| = {math.sqrt(worst):.4g} exceeds guard {guard:g} at t={t:.6g}", rung=rung)


def posterior_drift(oracle, model: MeasurementModel, y, eta=None) -> Drift:
    """``x -> s(x) + A^T (y - A x) / eta^2``; ``y`` may be one vector or one row per chain."""
    oracle = as_oracle(oracle)
    y = model.check_observation(y)
    A = model.A
    inv = 1.0 / (model.eta if eta is None else float(eta)) ** 2
    Aty = (y @ A) * inv
    AtA = (A.T @ A) * inv

    def drift(x):
        return oracle.score(x, 0.0) + Aty - x @ AtA

    return drift


def plain_posterior_langevin(prior, model: MeasurementModel, y, T, policy: StepPolicy, streams: ChainStreams,
                             oracle=None, state: ChainState | None = None) -> ChainState:
    """Unannealed Langevin on ``p(x | y)`` started from exact prior draws.

    ``oracle`` defaults to the exact prior score; ``y`` may give one
    observation per chain.
    """
    if state is None:
        state = ChainState.from_prior(prior, streams)
    drift = posterior_drift(prior if oracle is None else oracle, model, y)
    return euler_maruyama_run(state, drift, T, policy)


def variance_curve(t, eta_sq):
    """Variance at time ``t`` of plain posterior Langevin in the scalar Gaussian case.

    Prior ``N(0, 1)``, ``A = 1``, start ``X_0 ~ N(0, 1)`` and ``y`` drawn from its
    marginal: ``e^{-2at} + (1 - e^{-2at}) / a + (1 - e^{-at})^2 / (1 + eta^2)``
    with ``a = (1 + eta^2) / eta^2``.
    """
    if not eta_sq > 0:
        raise RejectedInputError("eta_sq must be positive")
    t = np.asarray(t, dtype=float)
    a = (1.0 + eta_sq) / eta_sq
    e1 = np.exp(-a * t)
    e2 = e1 * e1
    out = e2 + (1.0 - e2) / a + (1.0 - e1) ** 2 / (1.0 + eta_sq)
    return float(out) if out.ndim == 0 else out


def variance_minimizer(eta_sq) -> float:
    """``t* = eta^2 ln 2 / (1 + eta^2)``, where the curve attains ``1 - 1/(2(1+eta^2))``."""
    return eta_sq * math.log(2.0) / (1.0 + eta_sq)


def reverse_diffusion_init(oracle, d: int, T: float, policy: StepPolicy, streams: ChainStreams) -> ChainState:
    """Approximate prior draws by integrating the reverse of an Ornstein-Uhlenbeck noising.

    Forward: ``X_tau = e^{-tau} X_0 + sqrt(1 - e^{-2 tau}) Z``.  The law of
    ``X_tau`` has score ``e^tau s_{e^{2tau}-1}(e^tau x)``, where ``s_v`` is the
    prior score smoothed by ``N(0, v I)``.  Starting from ``N(0, I)`` the reverse
    SDE ``dX = (X + 2 score_{T-t}(X)) dt + sqrt(2) dB`` is run to time ``T``.
    ``T = 0`` returns the ``N(0, I)`` start.
    """
    oracle = as_oracle(oracle)
    x0 = np.stack([g.standard_normal(d) for g in streams.init_generators])
    state = ChainState(x0, streams)
    if T == 0:
        return state
    if not T > 0:
        raise RejectedInputError("T must be >= 0")
    h = float(policy.h)
    n = step_count(T, h)
    x = state.x
    for j in range(n):
        t = j * h
        dt = h if j < n - 1 else T - (n - 1) * h
        tau = T - t
        scale = math.exp(tau)
        v = math.expm1(2.0 * tau)
        drift = x + 2.0 * scale * oracle.score(scale * x, v)
        x = x + dt * drift + math.sqrt(2.0 * dt) * streams.normal(d)
        _check(x, policy.guard, t + dt, None)
        state.steps += 1
    state.x = x
    state.elapsed = T
    return state


def auto_step_size(params, model: MeasurementModel, K=None, delta_err=None, L_tilde=1.0) -> float:
    """Step size from the discretization budget, without the hidden log factors.

    ``min{ sqrt(alpha/m) / (K^2 delta (alpha (L+rho^2)) [alpha R (L+rho^2) + rho sqrt(m alpha)]),
    1 / (K^4 delta^2 alpha m d (L+rho^2)^2) }`` with ``rho = |A| / (eta sqrt(alpha))``,
    ``L = L_tilde`` the in-ball smoothness in units of ``alpha``.  ``K`` defaults
    to ``lambda`` and ``delta`` to ``eps``.
    """
    K = params.lam if K is None else float(K)
    delta = params.eps if delta_err is None else float(delta_err)
    a, m, d, R = params.alpha, params.m, params.d, params.R
    rho = model.op_norm / (model.eta * math.sqrt(a))
    Ls = L_tilde + rho ** 2
    first = math.sqrt(a / m) / (K ** 2 * delta * a * Ls * (a * R * Ls + rho * math.sqrt(m * a)))
    second = 1.0 / (K ** 4 * delta ** 2 * a * m * d * Ls ** 2)
    return min(first, second)


def write_trajectory_csv(path, trajectory, chain_ids=None) -> None:
    """Write ``(t, x)`` snapshots as rows ``chain_id, t, x_1, ..., x_d``."""
    if not trajectory:
        raise RejectedInputError("empty trajectory")
    d = trajectory[0][1].shape[1]
    n = trajectory[0][1].shape[0]
    ids = range(n) if chain_ids is None else chain_ids
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["chain_id", "t"] + [f"x_{k + 1}" for k in range(d)])
        for t, x in trajectory:
            for cid, row in zip(ids, x):
                w.writerow([cid, repr(float(t))] + [repr(float(v)) for v in row])
