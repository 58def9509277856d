"""Admissible noise ladders ``eta_1 > ... > eta_N = eta`` with mixing times.

A ladder is admissible for ``(C, alpha, lambda, A, d, eps, eta, R)`` when

1. ``eta_N = eta``;
2. ``eta_1 >= (lambda |A| / eps) sqrt(d / alpha)``;
3. for every rung, with ``gamma_i = (eta_i / eta_{i+1})^2 - 1``:
   ``gamma_i <= 1``, ``T_i >= C (m gamma_i + log(lambda/eps)) / alpha`` and
   ``|A|^4 (T_i^2 m + T_i R^2) <= eta_i^4 / (C gamma_i^2)``.

The builder grows the noise upward from ``eta``, each time taking the
largest ``gamma`` allowed by a quadratic sufficient condition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import RejectedInputError, ScheduleExplosionError
from .measurement import MeasurementModel

# relative slack granted to float round-off when checking equalities
_ROUNDOFF = 1e-12


@dataclass(frozen=True)
class ScheduleParams:
    """Parameters of an admissible schedule.

    ``R`` may be ``math.inf``; the cross-constraint then forces ``gamma = 0``
    and construction fails.  ``C`` is the unspecified absolute constant of the
    admissibility conditions.
    """

    alpha: float
    d: int
    m: int
    lam: float = 10.0
    eps: float = 0.1
    R: float = 1.0
    C: float = 10.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise RejectedInputError("alpha must be positive")
        if int(self.d) != self.d or self.d < 1 or int(self.m) != self.m or self.m < 1:
            raise RejectedInputError("d and m must be positive integers")
        if not (0 < self.eps < 1 < self.lam):
            raise RejectedInputError("need 0 < eps < 1 < lambda")
        if not self.R > 0:
            raise RejectedInputError("R must be positive")
        if not self.C > 0:
            raise RejectedInputError("C must be positive")

    @property
    def log_ratio(self) -> float:
        return math.log(self.lam / self.eps)

    def running_time(self, gamma: float) -> float:
        """Lower bound ``C (m gamma + log(lambda/eps)) / alpha`` on a rung's time."""
        return self.C * (self.m * gamma + self.log_ratio) / self.alpha

    def target_eta(self, model: MeasurementModel) -> float:
        return self.lam * model.op_norm / self.eps * math.sqrt(self.d / self.alpha)


def default_locality_radius(alpha, d, m, norm_A, eta, lam=10.0, eps=0.1, C=10.0, delta=None):
    """Default ``R`` for a globally ``alpha``-log-concave prior.

    ``R = r + C [ (m + log(lam/eps)) |A| (|A| r + eta sqrt(m + log(1/delta))) / (alpha eta^2)
    + sqrt(d log(d/delta) (m + log(lam/eps)) / alpha) ]`` with
    ``r = 2 sqrt(d/alpha) + sqrt(2 log(1/delta) / alpha)``.  ``delta`` defaults
    to ``eps / 100`` as a stand-in for the unspecified ``eps / K^2``.
    """
    if delta is None:
        delta = eps / 100.0
    L = m + math.log(lam / eps)
    r = 2.0 * math.sqrt(d / alpha) + math.sqrt(2.0 * math.log(1.0 / delta) / alpha)
    drift = L * norm_A * (norm_A * r + eta * math.sqrt(m + math.log(1.0 / delta))) / (alpha * eta ** 2)
    spread = math.sqrt(d * math.log(d / delta) * L / alpha)
    return r + C * (drift + spread)


@dataclass
class NoiseLadder:
    """Noise levels (descending), per-rung ``gamma_i`` and running times ``T_i``."""

    etas: np.ndarray
    gammas: np.ndarray
    times: np.ndarray
    params_ref: ScheduleParams
    model_ref: MeasurementModel = field(repr=False)

    def __post_init__(self):
        self.etas = np.asarray(self.etas, dtype=float)
        self.gammas = np.asarray(self.gammas, dtype=float)
        self.times = np.asarray(self.times, dtype=float)
        n = len(self.etas)
        if n < 1 or len(self.gammas) != n - 1 or len(self.times) != n - 1:
            raise RejectedInputError("a ladder of N levels needs N-1 gammas and N-1 times")

    @classmethod
    def from_etas(cls, etas, times, params, model) -> "NoiseLadder":
        etas = np.asarray(etas, dtype=float)
        gammas = (etas[:-1] / etas[1:]) ** 2 - 1.0
        return cls(etas, gammas, times, params, model)

    def __len__(self):
        return len(self.etas)

    @property
    def N(self) -> int:
        return len(self.etas)

    @property
    def total_time(self) -> float:
        return float(np.sum(self.times))

    def rows(self):
        """``(index, eta, gamma, T, cumulative_T)`` per level, 1-based; the last level has no rung."""
        cum = 0.0
        for i, eta in enumerate(self.etas):
            if i < self.N - 1:
                g, t = float(self.gammas[i]), float(self.times[i])
                cum += t
            else:
                g, t = float("nan"), 0.0
            yield i + 1, float(eta), g, t, cum


def quadratic_coefficients(params: ScheduleParams, model: MeasurementModel):
    """``(a, b)`` of the sufficient condition ``a gamma^2 + b gamma <= eta^2 / C``."""
    A2 = model.op_norm ** 2
    sm = math.sqrt(params.m)
    a = params.C * A2 * params.m ** 1.5 / params.alpha
    b = params.C * A2 * sm * params.log_ratio / params.alpha + A2 * params.R ** 2 / sm
    return a, b


def max_admissible_gamma(eta_sq, params: ScheduleParams, model: MeasurementModel) -> float:
    """Largest ``gamma`` in ``(0, 1]`` with ``a gamma^2 + b gamma <= eta_sq / C``."""
    if not eta_sq > 0:
        raise RejectedInputError("eta_sq must be positive")
    a, b = quadratic_coefficients(params, model)
    c = eta_sq / params.C
    if a == 0.0 and b == 0.0:
        return 1.0
    if a == 0.0:
        gamma = c / b
    else:
        # positive root of a g^2 + b g - c, written to avoid cancellation
        gamma = 2.0 * c / (b + math.sqrt(b * b + 4.0 * a * c))
    if not gamma > 0:
        raise ScheduleExplosionError(
            f"no positive gamma satisfies the cross-constraint at eta^2={eta_sq} (a={a}, b={b})"
        )
    return min(gamma, 1.0)


def build_admissible_schedule(model: MeasurementModel, params: ScheduleParams, max_rungs: int = 10 ** 6) -> NoiseLadder:
    """Grow ``eta`` upward until it reaches the target, then reverse.

    ``T_i`` is set to its lower bound.  The result is validated before it is
    returned.
    """
    if params.d != model.d or params.m != model.m:
        raise RejectedInputError(f"params (d={params.d}, m={params.m}) do not match A {model.A.shape}")
    target = params.target_eta(model)
    eta_sq = [model.eta ** 2]
    gammas = []
    while math.sqrt(eta_sq[-1]) < target:
        if len(gammas) >= max_rungs:
            raise ScheduleExplosionError(
                f"more than {max_rungs} rungs needed to reach eta_1={target:.4g} from eta={model.eta:.4g} "
                f"(alpha={params.alpha}, |A|={model.op_norm:.4g}, m={params.m}, R={params.R}, "
                f"C={params.C}, lambda={params.lam}, eps={params.eps})"
            )
        g = max_admissible_gamma(eta_sq[-1], params, model)
        gammas.append(g)
        eta_sq.append((1.0 + g) * eta_sq[-1])
    etas = np.sqrt(np.array(eta_sq[::-1]))
    etas[-1] = model.eta
    gammas = np.array(gammas[::-1])
    times = np.array([params.running_time(g) for g in gammas])
    ladder = NoiseLadder(etas, gammas, times, params, model)
    report = validate_schedule(ladder)
    if not report.passed:
        raise ScheduleExplosionError(f"constructed schedule failed validation: {report.failures()}")
    return ladder


@dataclass(frozen=True)
class ClauseResult:
    name: str
    passed: bool
    slack: float
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    clauses: tuple

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.clauses)

    def failures(self):
        return [c.name for c in self.clauses if not c.passed]

    def __getitem__(self, name) -> ClauseResult:
        for c in self.clauses:
            if c.name == name:
                return c
        raise KeyError(name)


def validate_schedule(ladder: NoiseLadder) -> ValidationReport:
    """Check each admissibility clause and report the measured slack.

    Slack is a ratio that is ``>= 1`` exactly when the clause holds (up to a
    ``1e-12`` round-off allowance); per-rung clauses report the worst rung.
    """
    p, model = ladder.params_ref, ladder.model_ref
    etas = ladder.etas
    tol = 1.0 - _ROUNDOFF
    clauses = []

    s = etas[-1] / model.eta
    clauses.append(ClauseResult("eta_N == eta", abs(s - 1.0) <= _ROUNDOFF, float(s)))

    target = p.target_eta(model)
    s = etas[0] / target if target > 0 else math.inf
    clauses.append(ClauseResult("eta_1 >= target", s >= tol, float(s), f"target={target:.6g}"))

    decreasing = bool(np.all(np.diff(etas) < 0))
    clauses.append(ClauseResult("strictly decreasing", decreasing, 1.0 if decreasing else 0.0))

    if ladder.N == 1:
        for name in ("gamma_i <= 1", "T_i >= running-time bound", "cross-constraint"):
            clauses.append(ClauseResult(name, True, math.inf))
        return ValidationReport(tuple(clauses))

    gammas = (etas[:-1] / etas[1:]) ** 2 - 1.0
    with np.errstate(divide="ignore"):
        s = np.min(1.0 / gammas)
    clauses.append(ClauseResult("gamma_i <= 1", bool(s >= tol), float(s)))

    bound = p.C * (p.m * gammas + p.log_ratio) / p.alpha
    s = np.min(ladder.times / bound)
    clauses.append(ClauseResult("T_i >= running-time bound", bool(s >= tol), float(s)))

    T = ladder.times
    lhs = model.op_norm ** 4 * (T ** 2 * p.m + T * p.R ** 2)
    with np.errstate(divide="ignore", invalid="ignore"):
        rhs = etas[:-1] ** 4 / (p.C * gammas ** 2)
        ratio = np.where(lhs > 0, rhs / lhs, math.inf)
    s = float(np.min(ratio))
    clauses.append(ClauseResult("cross-constraint", bool(s >= tol), s))
    return ValidationReport(tuple(clauses))


def rung_count_bound(params: ScheduleParams, model: MeasurementModel) -> float:
    """The expression bounding ``N`` up to a constant.

    ``rho^2 sqrt(m) L + rho^2 alpha R^2 / sqrt(m) + m^2 / (m L + alpha R^2)
    + log(2 + lambda sqrt(d) rho / eps)`` with ``rho = |A| / (eta sqrt(alpha))``
    and ``L = log(lambda/eps)``.
    """
    rho = model.op_norm / (model.eta * math.sqrt(params.alpha))
    L = params.log_ratio
    sm = math.sqrt(params.m)
    return (
        rho ** 2 * sm * L
        + rho ** 2 * params.alpha * params.R ** 2 / sm
        + params.m ** 2 / (params.m * L + params.alpha * params.R ** 2)
        + math.log(2.0 + params.lam * math.sqrt(params.d) * rho / params.eps)
    )


def quadratic_sequence_length(a, b, x0, B, max_steps=10 ** 7) -> int:
    """Steps for ``x_{i+1} = (1 + gamma_i) x_i`` to reach ``B``.

    ``gamma_i`` is the largest ``gamma <= 1`` with ``a gamma^2 + b gamma <= 2 x_i``.
    """
    x, k = float(x0), 0
    while x < B:
        c = 2.0 * x
        if a == 0.0:
            g = c / b if b > 0 else 1.0
        else:
            g = 2.0 * c / (b + math.sqrt(b * b + 4.0 * a * c))
        x *= 1.0 + min(g, 1.0)
        k += 1
        if k > max_steps:
            raise ScheduleExplosionError("sequence did not reach its bound")
    return k


def quadratic_sequence_bound(a, b, x0, B) -> float:
    """``b / x0 + a / b + log(1 + B / x0)``."""
    return b / x0 + a / b + math.log(1.0 + B / x0)
