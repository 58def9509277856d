"""Score oracles, posterior-score assembly, the shell perturbation, and the
ring Hessian eigenvalues."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import RejectedInputError
from .measurement import MeasurementModel
from .priors import ConditionedPrior, Prior
from .special import bessel_ratio, chi2_interval_mass, von_mises_cos_variance


class ScoreOracle:
    """Evaluates ``score(x, sigma_sq)``, an estimate of ``grad log p_{sigma_sq}(x)``.

    ``error_budget`` is ``"exact"`` for analytic oracles and
    ``"shell-perturbed"`` when a deliberate error has been injected.
    """

    error_budget = "exact"
    dim: int

    def score(self, x, sigma_sq=0.0):
        raise NotImplementedError

    def log_density(self, x, sigma_sq=0.0):
        raise NotImplementedError(f"{type(self).__name__} has no log density")

    def __call__(self, x, sigma_sq=0.0):
        return self.score(x, sigma_sq)


class ExactOracle(ScoreOracle):
    """Analytic scores of a :class:`~annealed_posterior.priors.Prior`."""

    def __init__(self, prior: Prior):
        self.prior = prior
        self.dim = prior.dim

    def score(self, x, sigma_sq=0.0):
        return self.prior.score(x, sigma_sq)

    def log_density(self, x, sigma_sq=0.0):
        return self.prior.log_density(x, sigma_sq)

    def __repr__(self):
        return f"ExactOracle({self.prior!r})"


def as_oracle(obj) -> ScoreOracle:
    if isinstance(obj, ScoreOracle):
        return obj
    if isinstance(obj, Prior):
        return ExactOracle(obj)
    raise TypeError(f"expected a ScoreOracle or Prior, got {type(obj).__name__}")


def prior_score(prior: Prior, x) -> np.ndarray:
    """``grad log p(x)``; zero at the centre of the ring by symmetry."""
    return prior.score(x, 0.0)


def smoothed_score(prior: Prior, sigma_sq, x) -> np.ndarray:
    """Score of ``p * N(0, sigma_sq I)``."""
    return prior.score(x, sigma_sq)


def posterior_score(base, model: MeasurementModel, y, x) -> np.ndarray:
    """``s(x) + A^T (y - A x) / eta^2`` for the measurement ``y``."""
    base = as_oracle(base)
    x = model.check_signal(x)
    y = model.check_observation(y)
    resid = y - x @ model.A.T
    return base.score(x, 0.0) + resid @ model.A / model.eta ** 2


def conditional_gaussian_score(Y, Z, sigma1_sq, sigma2_sq) -> np.ndarray:
    """``grad_Y log N(Z; c Y, c sigma1_sq I)`` with ``c = sigma2_sq / (sigma1_sq + sigma2_sq)``.

    This is the conditional law of ``Z`` given ``Y`` when ``Z ~ N(0, sigma2_sq I)``
    and ``Y = Z + N(0, sigma1_sq I)``.  The gradient is
    ``(Z - c Y) / sigma1_sq``.
    """
    if not (sigma1_sq > 0 and sigma2_sq > 0):
        raise RejectedInputError("variances must be positive")
    Y = np.asarray(Y, dtype=float)
    Z = np.asarray(Z, dtype=float)
    c = sigma2_sq / (sigma1_sq + sigma2_sq)
    return (Z - c * Y) / sigma1_sq


def conditioned_smoothed_score(base, x0, sigma_sq, t_sq, x) -> np.ndarray:
    """Score of ``p_{x0} * N(0, t_sq I)`` where ``p_{x0}(x) ∝ p(x) N(x; x0, sigma_sq I)``.

    Only smoothed scores of the base oracle are needed::

        s_{x0,t}(x) = (x0 - x) / (sigma_sq + t) + (sigma_sq / (sigma_sq + t)) * s_v(m)

    with ``v = sigma_sq t / (sigma_sq + t)`` and ``m = (t x0 + sigma_sq x) / (sigma_sq + t)``.
    At ``t = 0`` this is ``s(x) + (x0 - x) / sigma_sq``.  Any error in the base
    oracle at ``(m, v)`` passes through scaled by ``sigma_sq / (sigma_sq + t) <= 1``.
    """
    base = as_oracle(base)
    if not sigma_sq > 0:
        raise RejectedInputError("conditioning variance must be positive")
    if not t_sq >= 0:
        raise RejectedInputError("smoothing variance must be >= 0")
    x = np.asarray(x, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    s, t = float(sigma_sq), float(t_sq)
    v = s * t / (s + t)
    m = (t * x0 + s * x) / (s + t)
    return (x0 - x) / (s + t) + (s / (s + t)) * base.score(m, v)


class ConditionedOracle(ScoreOracle):
    """Scores of the prior conditioned on an extra Gaussian measurement ``x0``."""

    def __init__(self, base, x0, sigma_sq):
        self.base = as_oracle(base)
        self.dim = self.base.dim
        self.x0 = np.asarray(x0, dtype=float)
        self.sigma_sq = float(sigma_sq)
        self.error_budget = self.base.error_budget

    def score(self, x, sigma_sq=0.0):
        return conditioned_smoothed_score(self.base, self.x0, self.sigma_sq, sigma_sq, x)

    def log_density(self, x, sigma_sq=0.0):
        prior = getattr(self.base, "prior", None)
        if prior is None:
            raise NotImplementedError("base oracle has no analytic prior")
        return ConditionedPrior(prior, self.x0, self.sigma_sq).log_density(x, sigma_sq)


@dataclass(frozen=True)
class ShellPerturbation:
    """Score error ``M 1[x in S] u`` supported on the chi-square shell
    ``S = { x : | |x|^2 - sigma_sq d | <= rho sigma_sq d }``.

    ``M = eps * mass^(-1/k)`` where ``mass = P_{x ~ N(0, I_d)}[x in S]``, so the
    ``L^k`` error under the standard Gaussian is exactly ``eps``.
    """

    rho: float
    k: float
    eps: float
    u: np.ndarray
    sigma_sq: float = 6.0 / 11.0

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float).ravel()
        norm = np.linalg.norm(u)
        if norm == 0 or not np.isfinite(norm):
            raise RejectedInputError("direction must be a non-zero finite vector")
        object.__setattr__(self, "u", u / norm)
        if not 0 < self.sigma_sq < 1:
            raise RejectedInputError("sigma_sq must lie in (0, 1)")
        if not 0 < self.rho < min(0.5, 1.0 / self.sigma_sq - 1.0):
            raise RejectedInputError("rho must lie in (0, min(1/2, 1/sigma_sq - 1))")
        if not self.k > 1:
            raise RejectedInputError("k must exceed 1")
        if not 0 < self.eps < 1:
            raise RejectedInputError("eps must lie in (0, 1)")

    @classmethod
    def along_first_axis(cls, d, rho, k, eps, sigma_sq=6.0 / 11.0):
        u = np.zeros(d)
        u[0] = 1.0
        return cls(rho=rho, k=k, eps=eps, u=u, sigma_sq=sigma_sq)

    @property
    def d(self) -> int:
        return self.u.shape[0]

    @property
    def bounds(self) -> tuple[float, float]:
        c = self.sigma_sq * self.d
        return (1.0 - self.rho) * c, (1.0 + self.rho) * c

    @property
    def shell_mass(self) -> float:
        lo, hi = self.bounds
        return chi2_interval_mass(self.d, lo, hi)

    @property
    def magnitude(self) -> float:
        return self.eps * self.shell_mass ** (-1.0 / self.k)

    def indicator(self, x) -> np.ndarray:
        sq = np.sum(np.asarray(x, dtype=float) ** 2, axis=-1)
        lo, hi = self.bounds
        return (sq >= lo) & (sq <= hi)

    def error(self, x) -> np.ndarray:
        """``e(x)`` for a point or batch."""
        on = self.indicator(x).astype(float)
        return self.magnitude * on[..., None] * self.u


class ShellPerturbedOracle(ScoreOracle):
    """Adds the shell error to unsmoothed queries; smoothed queries pass through."""

    error_budget = "shell-perturbed"

    def __init__(self, base, spec: ShellPerturbation):
        self.base = as_oracle(base)
        if spec.d != self.base.dim:
            raise RejectedInputError("perturbation direction does not match oracle dimension")
        self.spec = spec
        self.dim = self.base.dim

    def score(self, x, sigma_sq=0.0):
        out = self.base.score(x, sigma_sq)
        if sigma_sq == 0.0:
            out = out + self.spec.error(x)
        return out


def shell_perturbed_oracle(base, spec: ShellPerturbation) -> ShellPerturbedOracle:
    return ShellPerturbedOracle(base, spec)


def ring_hessian_eigs(w, r):
    """Radial and tangential eigenvalues of ``Hess log p`` for the ring prior at radius ``r``.

    With ``z = r / w^2`` and ``log p = const - r^2/(2w^2) + log I_0(z)``:
    ``lambda_radial = -1/w^2 + Var(cos theta) / w^4`` where ``theta`` is von Mises
    with concentration ``z``, i.e. ``(1 + I_2/I_0)/2 - (I_1/I_0)^2``, and
    ``lambda_tangential = (-1 + (I_1/I_0)(z) / r) / w^2``.  Both are at least
    ``-1/w^2``; at ``r = 0`` both equal ``-1/w^2 + 1/(2 w^4)``.
    """
    w2 = float(w) ** 2
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise RejectedInputError("radius must be non-negative")
    z = r / w2
    lam_r = -1.0 / w2 + von_mises_cos_variance(z) / w2 ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        pull = np.where(r > 0, bessel_ratio(z) / r, 0.5 / w2)
    lam_t = (pull - 1.0) / w2
    if lam_r.ndim == 0:
        return float(lam_r), float(lam_t)
    return lam_r, lam_t
