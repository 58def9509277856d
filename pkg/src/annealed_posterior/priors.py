"""Analytic priors with closed-form smoothed densities and scores.

Every prior evaluates ``log p_{s}(x)`` and ``grad log p_{s}(x)`` where
``p_{s} = p * N(0, s I_d)`` (``s`` is the smoothing *variance*), on a single
point of shape ``(d,)`` or a batch of shape ``(..., d)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg
from scipy.special import logsumexp

from .errors import RejectedInputError, UnsupportedSmoothingError
from .rng import make_rng
from .special import bessel_ratio, log_i0

LOG_2PI = np.log(2.0 * np.pi)


def _as_points(x, d):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != d:
        raise RejectedInputError(f"point has trailing dimension {x.shape[-1]}, expected {d}")
    return x


def _softmax(logits):
    # shift by the row maximum; cheaper than scipy's logsumexp for the small
    # component counts evaluated once per Langevin step
    e = np.exp(logits - np.max(logits, axis=-1, keepdims=True))
    return e / np.sum(e, axis=-1, keepdims=True)


def _check_smoothing(sigma_sq):
    sigma_sq = float(sigma_sq)
    if not sigma_sq >= 0.0:
        raise RejectedInputError(f"smoothing variance must be >= 0, got {sigma_sq}")
    return sigma_sq


class Prior:
    """Base class.  Subclasses implement the smoothed log density and score."""

    dim: int
    name = "prior"
    supports_smoothing = True

    def log_density(self, x, sigma_sq=0.0):
        raise NotImplementedError

    def score(self, x, sigma_sq=0.0):
        raise NotImplementedError

    def sample(self, rng, n: int) -> np.ndarray:
        raise NotImplementedError

    def conditioned(self, x0, sigma_sq) -> "Prior":
        """The law of ``x`` given ``x + N(0, sigma_sq I) = x0``."""
        return ConditionedPrior(self, x0, sigma_sq)

    @property
    def strong_log_concavity(self):
        """Largest ``alpha`` with ``-Hess log p >= alpha I`` everywhere, or None."""
        return None

    def _require_smoothing(self, sigma_sq):
        sigma_sq = _check_smoothing(sigma_sq)
        if sigma_sq > 0 and not self.supports_smoothing:
            raise UnsupportedSmoothingError(f"{self.name} has no closed-form smoothed score")
        return sigma_sq


@dataclass(frozen=True, eq=False)
class IsotropicGaussian(Prior):
    """``N(mean, var * I_d)``."""

    mean: np.ndarray
    var: float = 1.0
    name = "isotropic-gaussian"

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        if not self.var > 0:
            raise RejectedInputError("variance must be positive")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "var", float(self.var))

    @classmethod
    def standard(cls, d: int) -> "IsotropicGaussian":
        return cls(np.zeros(d), 1.0)

    @property
    def dim(self):
        return self.mean.shape[0]

    @property
    def cov(self):
        return self.var * np.eye(self.dim)

    @property
    def strong_log_concavity(self):
        return 1.0 / self.var

    def log_density(self, x, sigma_sq=0.0):
        v = self.var + self._require_smoothing(sigma_sq)
        diff = _as_points(x, self.dim) - self.mean
        return -0.5 * np.sum(diff * diff, axis=-1) / v - 0.5 * self.dim * (LOG_2PI + np.log(v))

    def score(self, x, sigma_sq=0.0):
        v = self.var + self._require_smoothing(sigma_sq)
        return -(_as_points(x, self.dim) - self.mean) / v

    def sample(self, rng, n):
        rng = make_rng(rng)
        return self.mean + np.sqrt(self.var) * rng.standard_normal((n, self.dim))

    def conditioned(self, x0, sigma_sq):
        x0 = _as_points(x0, self.dim)
        prec = 1.0 / self.var + 1.0 / sigma_sq
        mean = (self.mean / self.var + x0 / sigma_sq) / prec
        return IsotropicGaussian(mean, 1.0 / prec)


@dataclass(frozen=True, eq=False)
class GeneralGaussian(Prior):
    """``N(mean, cov)`` with a symmetric positive definite covariance."""

    mean: np.ndarray
    cov: np.ndarray
    _factors: dict = field(default_factory=dict, repr=False)
    name = "general-gaussian"

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        if cov.shape != (mean.shape[0], mean.shape[0]):
            raise RejectedInputError("covariance shape does not match mean")
        if not np.allclose(cov, cov.T, rtol=0, atol=1e-12 * max(1.0, np.abs(cov).max())):
            raise RejectedInputError("covariance is not symmetric")
        try:
            linalg.cholesky(cov, lower=True)
        except linalg.LinAlgError as exc:
            raise RejectedInputError("covariance is not positive definite") from exc
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self):
        return self.mean.shape[0]

    @property
    def strong_log_concavity(self):
        return 1.0 / float(np.linalg.eigvalsh(self.cov)[-1])

    def _chol(self, sigma_sq):
        # only the unsmoothed factor is reused; smoothing levels vary per call
        if sigma_sq != 0.0:
            return linalg.cho_factor(self.cov + sigma_sq * np.eye(self.dim), lower=True)
        if not self._factors:
            self._factors[0.0] = linalg.cho_factor(self.cov, lower=True)
        return self._factors[0.0]

    def log_density(self, x, sigma_sq=0.0):
        sigma_sq = self._require_smoothing(sigma_sq)
        c, low = self._chol(sigma_sq)
        diff = _as_points(x, self.dim) - self.mean
        white = linalg.solve_triangular(c, diff.reshape(-1, self.dim).T, lower=low).T
        quad = np.sum(white * white, axis=-1).reshape(diff.shape[:-1])
        logdet = 2.0 * np.sum(np.log(np.diag(c)))
        return -0.5 * quad - 0.5 * (self.dim * LOG_2PI + logdet)

    def score(self, x, sigma_sq=0.0):
        sigma_sq = self._require_smoothing(sigma_sq)
        diff = _as_points(x, self.dim) - self.mean
        flat = diff.reshape(-1, self.dim)
        return -linalg.cho_solve(self._chol(sigma_sq), flat.T).T.reshape(diff.shape)

    def sample(self, rng, n):
        rng = make_rng(rng)
        L = linalg.cholesky(self.cov, lower=True)
        return self.mean + rng.standard_normal((n, self.dim)) @ L.T

    def conditioned(self, x0, sigma_sq):
        x0 = _as_points(x0, self.dim)
        prior_prec = np.linalg.inv(self.cov)
        prec = prior_prec + np.eye(self.dim) / sigma_sq
        cov = np.linalg.inv(prec)
        cov = 0.5 * (cov + cov.T)
        mean = cov @ (prior_prec @ self.mean + x0 / sigma_sq)
        return GeneralGaussian(mean, cov)


@dataclass(frozen=True, eq=False)
class GaussianMixture(Prior):
    """``sum_j w_j N(c_j, var * I_d)`` with a shared component variance."""

    weights: np.ndarray
    centers: np.ndarray
    var: float = 1.0
    name = "gaussian-mixture"

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).ravel()
        c = np.atleast_2d(np.asarray(self.centers, dtype=float))
        if c.shape[0] != w.shape[0]:
            raise RejectedInputError("one center per weight is required")
        if np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-12:
            raise RejectedInputError("mixture weights must be positive and sum to one")
        if not self.var > 0:
            raise RejectedInputError("component variance must be positive")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "var", float(self.var))

    @property
    def dim(self):
        return self.centers.shape[1]

    def _component_logits(self, x, v):
        x = _as_points(x, self.dim)
        diff = x[..., None, :] - self.centers
        sq = np.sum(diff * diff, axis=-1)
        return np.log(self.weights) - 0.5 * sq / v - 0.5 * self.dim * (LOG_2PI + np.log(v)), diff

    def log_density(self, x, sigma_sq=0.0):
        v = self.var + self._require_smoothing(sigma_sq)
        logits, _ = self._component_logits(x, v)
        return logsumexp(logits, axis=-1)

    def responsibilities(self, x, sigma_sq=0.0):
        v = self.var + self._require_smoothing(sigma_sq)
        logits, _ = self._component_logits(x, v)
        return _softmax(logits)

    def score(self, x, sigma_sq=0.0):
        v = self.var + self._require_smoothing(sigma_sq)
        logits, diff = self._component_logits(x, v)
        resp = _softmax(logits)
        return -np.sum(resp[..., None] * diff, axis=-2) / v

    def sample(self, rng, n):
        rng = make_rng(rng)
        comp = rng.choice(len(self.weights), size=n, p=self.weights)
        return self.centers[comp] + np.sqrt(self.var) * rng.standard_normal((n, self.dim))

    def conditioned(self, x0, sigma_sq):
        x0 = _as_points(x0, self.dim)
        s = self.var
        logits, _ = self._component_logits(x0, s + sigma_sq)
        # far-away components may underflow; keep them with a negligible weight
        weights = np.maximum(np.exp(logits - logsumexp(logits)), np.finfo(float).tiny)
        weights = weights / weights.sum()
        centers = (sigma_sq * self.centers + s * x0) / (s + sigma_sq)
        return GaussianMixture(weights, centers, s * sigma_sq / (s + sigma_sq))


@dataclass(frozen=True, eq=False)
class RingPrior(Prior):
    """Uniform law on the unit circle in the plane convolved with ``N(0, width^2 I_2)``.

    Radially ``p(r) = exp(-(r^2 + 1) / (2 w^2)) I_0(r / w^2) / (2 pi w^2)``.
    Smoothing by ``N(0, s I)`` replaces ``w^2`` with ``w^2 + s``.
    """

    width: float
    name = "ring"
    dim = 2

    def __post_init__(self):
        if not self.width > 0:
            raise RejectedInputError("ring width must be positive")
        object.__setattr__(self, "width", float(self.width))

    def _w2(self, sigma_sq):
        return self.width ** 2 + self._require_smoothing(sigma_sq)

    def log_density(self, x, sigma_sq=0.0):
        w2 = self._w2(sigma_sq)
        r = np.linalg.norm(_as_points(x, 2), axis=-1)
        return -np.log(2.0 * np.pi * w2) - 0.5 * (r * r + 1.0) / w2 + log_i0(r / w2)

    def score(self, x, sigma_sq=0.0):
        """``-(x - E[u | x]) / w^2`` with ``E[u | x] = (I_1/I_0)(r / w^2) x / r``; zero at the origin."""
        w2 = self._w2(sigma_sq)
        x = _as_points(x, 2)
        r = np.linalg.norm(x, axis=-1, keepdims=True)
        with np.errstate(divide="ignore", invalid="ignore"):
            pull = np.where(r > 0, bessel_ratio(r / w2) / r, 0.5 / w2)
        return (pull - 1.0) * x / w2

    def sample(self, rng, n):
        rng = make_rng(rng)
        theta = rng.uniform(0.0, 2.0 * np.pi, size=n)
        u = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        return u + self.width * rng.standard_normal((n, 2))

    def sample_conditioned(self, rng, n, x0, sigma_sq):
        """Exact draws from the ring law given ``x + N(0, sigma_sq I) = x0``.

        The angle is von Mises around ``x0`` with concentration
        ``|x0| / (w^2 + sigma_sq)``; given the angle ``u`` the point is Gaussian
        with mean ``(sigma_sq u + w^2 x0) / (w^2 + sigma_sq)``.
        """
        rng = make_rng(rng)
        x0 = _as_points(x0, 2)
        w2 = self.width ** 2
        tot = w2 + sigma_sq
        kappa = float(np.linalg.norm(x0)) / tot
        mu = float(np.arctan2(x0[1], x0[0]))
        theta = rng.vonmises(mu, kappa, size=n) if kappa > 0 else rng.uniform(0, 2 * np.pi, n)
        u = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        mean = (sigma_sq * u + w2 * x0) / tot
        return mean + np.sqrt(w2 * sigma_sq / tot) * rng.standard_normal((n, 2))


@dataclass(frozen=True, eq=False)
class ConditionedPrior(Prior):
    """``p_{x0}(x) ∝ p(x) N(x; x0, sigma_sq I)`` for a prior with closed-form smoothing.

    Smoothing by ``N(0, t I)`` keeps a closed form::

        p_{x0,t}(z) = N(z; x0, sigma_sq + t) * p_v(m(z)) / p_{sigma_sq}(x0)

    with ``v = sigma_sq t / (sigma_sq + t)`` and
    ``m(z) = (t x0 + sigma_sq z) / (sigma_sq + t)``.
    """

    base: Prior
    x0: np.ndarray
    sigma_sq: float
    name = "conditioned"

    def __post_init__(self):
        if not self.sigma_sq > 0:
            raise RejectedInputError("conditioning variance must be positive")
        object.__setattr__(self, "x0", _as_points(self.x0, self.base.dim))
        object.__setattr__(self, "sigma_sq", float(self.sigma_sq))

    @property
    def dim(self):
        return self.base.dim

    def _split(self, x, t):
        s = self.sigma_sq
        v = s * t / (s + t)
        m = (t * self.x0 + s * _as_points(x, self.dim)) / (s + t)
        return v, m

    def log_density(self, x, sigma_sq=0.0):
        t = _check_smoothing(sigma_sq)
        s = self.sigma_sq
        v, m = self._split(x, t)
        diff = _as_points(x, self.dim) - self.x0
        gauss = -0.5 * np.sum(diff * diff, axis=-1) / (s + t) - 0.5 * self.dim * (LOG_2PI + np.log(s + t))
        return gauss + self.base.log_density(m, v) - self.base.log_density(self.x0, s)

    def score(self, x, sigma_sq=0.0):
        t = _check_smoothing(sigma_sq)
        s = self.sigma_sq
        v, m = self._split(x, t)
        x = _as_points(x, self.dim)
        return (self.x0 - x) / (s + t) + (s / (s + t)) * self.base.score(m, v)

    def sample(self, rng, n):
        sampler = getattr(self.base, "sample_conditioned", None)
        if sampler is None:
            raise NotImplementedError(f"no exact sampler for {self.base.name} conditioned on a Gaussian measurement")
        return sampler(rng, n, self.x0, self.sigma_sq)
