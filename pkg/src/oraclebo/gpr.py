"""Gaussian process regression over low-dimensional candidate points.

Two kernel variants: an ARD squared-exponential, k = a0 exp(-0.5 d^T S^-1 d)
with S the diagonal of per-dimension scales, and a Mahalanobis form
k = a0 exp(-d^T G d) with a full symmetric positive-definite G used when the
inputs come from a linear embedding (moving one embedded coordinate moves
every original coordinate, so axis-aligned scales are the wrong geometry).

Observed values are standardized to zero mean and unit variance before
conditioning so the zero-mean prior is safe for arbitrary objectives;
predictions are mapped back to raw units on the way out.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg

from .errors import NumericalError
from .rng import stream

VARIANT_ARD = "ard"
VARIANT_MAHALANOBIS = "mahalanobis"

JITTER_LADDER = (1e-10, 1e-8, 1e-6, 1e-4)

_DUPLICATE_TOL = 1e-12
_TAG_SAMPLE = 0x05
_TAG_MLE = 0x06


@dataclass(frozen=True)
class KernelParams:
    """Kernel hyperparameters; ``mahalanobis_matrix`` only for that variant."""

    amplitude: float
    lengthscales: np.ndarray
    variant: str = VARIANT_ARD
    mahalanobis_matrix: np.ndarray | None = None
    noise_variance: float = 0.0
    fit_warning: bool = False

    def __post_init__(self):
        object.__setattr__(self, "lengthscales", np.atleast_1d(np.asarray(self.lengthscales, dtype=float)))
        if self.amplitude <= 0:
            raise ValueError("amplitude must be positive")
        if np.any(self.lengthscales <= 0):
            raise ValueError("every lengthscale must be positive")
        if self.noise_variance < 0:
            raise ValueError("noise_variance must be nonnegative")
        if self.variant not in (VARIANT_ARD, VARIANT_MAHALANOBIS):
            raise ValueError(f"unknown kernel variant {self.variant!r}")
        if self.variant == VARIANT_MAHALANOBIS:
            g = np.asarray(self.mahalanobis_matrix, dtype=float)
            if g.ndim != 2 or g.shape[0] != g.shape[1]:
                raise ValueError("mahalanobis_matrix must be square")
            if np.max(np.abs(g - g.T)) > 1e-12:
                raise ValueError("mahalanobis_matrix must be symmetric")
            if np.min(np.linalg.eigvalsh(g)) <= 0:
                raise ValueError("mahalanobis_matrix must be positive definite")
            object.__setattr__(self, "mahalanobis_matrix", g)

    @property
    def dim(self) -> int:
        if self.variant == VARIANT_MAHALANOBIS:
            return self.mahalanobis_matrix.shape[0]
        return self.lengthscales.shape[0]


def default_kernel(dim: int, variant: str = VARIANT_ARD, noise_variance: float = 0.0) -> KernelParams:
    """Search-free defaults: a0 = 1, per-dimension scale 0.5 (identity G)."""
    if variant == VARIANT_MAHALANOBIS:
        return KernelParams(1.0, np.ones(dim), variant, np.eye(dim), noise_variance)
    return KernelParams(1.0, np.full(dim, 0.5), variant, None, noise_variance)


def gram(kernel: KernelParams, x: np.ndarray, y: np.ndarray | None = None) -> np.ndarray:
    """Cross-covariance matrix k(x_i, y_j); symmetric Gram when y is None."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = x if y is None else np.atleast_2d(np.asarray(y, dtype=float))
    if x.shape[1] != kernel.dim or y.shape[1] != kernel.dim:
        raise ValueError(f"kernel expects dimension {kernel.dim}, got {x.shape[1]} / {y.shape[1]}")
    if kernel.variant == VARIANT_ARD:
        inv = 1.0 / kernel.lengthscales
        xs = x * np.sqrt(inv)
        ys = y * np.sqrt(inv)
        quad = (
            np.sum(xs**2, axis=1)[:, None]
            + np.sum(ys**2, axis=1)[None, :]
            - 2.0 * xs @ ys.T
        )
        return kernel.amplitude * np.exp(-0.5 * np.maximum(quad, 0.0))
    g = kernel.mahalanobis_matrix
    xg = x @ g
    yg = y @ g
    quad = (
        np.sum(xg * x, axis=1)[:, None]
        + np.sum(yg * y, axis=1)[None, :]
        - 2.0 * xg @ y.T
    )
    return kernel.amplitude * np.exp(-np.maximum(quad, 0.0))


def kernel_eval(kernel: KernelParams, y: np.ndarray, y2: np.ndarray) -> float:
    """Covariance between two points."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    y2 = np.atleast_1d(np.asarray(y2, dtype=float))
    if y.shape != (kernel.dim,) or y2.shape != (kernel.dim,):
        raise ValueError(f"kernel expects dimension {kernel.dim}, got {y.shape} / {y2.shape}")
    d = y - y2
    if kernel.variant == VARIANT_ARD:
        return float(kernel.amplitude * np.exp(-0.5 * np.sum(d * d / kernel.lengthscales)))
    return float(kernel.amplitude * np.exp(-d @ kernel.mahalanobis_matrix @ d))


@dataclass(frozen=True)
class ObservationSet:
    """Low-space inputs with observed objective values; near-identical points merge."""

    points: np.ndarray  # (n, d)
    values: np.ndarray  # (n,)

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        vals = np.atleast_1d(np.asarray(self.values, dtype=float))
        if pts.shape[0] != vals.shape[0]:
            raise ValueError("points and values must have equal length")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "values", vals)

    @classmethod
    def empty(cls, dim: int) -> "ObservationSet":
        return cls(np.zeros((0, dim)), np.zeros(0))

    @property
    def count(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def with_observation(self, point: np.ndarray, value: float) -> "ObservationSet":
        """Insert one observation; a point within 1e-12 of an existing one merges (values averaged)."""
        point = np.asarray(point, dtype=float).reshape(1, -1)
        if self.count:
            dist = np.max(np.abs(self.points - point), axis=1)
            j = int(np.argmin(dist))
            if dist[j] <= _DUPLICATE_TOL:
                vals = self.values.copy()
                vals[j] = 0.5 * (vals[j] + value)
                return ObservationSet(self.points, vals)
        return ObservationSet(
            np.vstack([self.points, point]) if self.count else point,
            np.append(self.values, value),
        )

    def best(self) -> tuple[int, float]:
        """Index and value of the observed minimum (earliest on ties)."""
        i = int(np.argmin(self.values))
        return i, float(self.values[i])


@dataclass(frozen=True)
class PosteriorModel:
    """Conditioned GP: Cholesky factor of K + noise I plus the presolved weights."""

    observations: ObservationSet
    kernel: KernelParams
    chol_factor: np.ndarray
    alpha: np.ndarray
    value_shift: float
    value_scale: float
    applied_jitter: float = 0.0


def _standardize(values: np.ndarray) -> tuple[np.ndarray, float, float]:
    shift = float(np.mean(values))
    scale = float(np.std(values))
    if scale < 1e-12:
        scale = 1.0
    return (values - shift) / scale, shift, scale


def _chol_with_escalation(k_mat: np.ndarray, noise: float) -> tuple[np.ndarray, float]:
    attempted = []
    for jitter in (0.0,) + JITTER_LADDER:
        attempted.append(noise + jitter)
        try:
            chol = np.linalg.cholesky(k_mat + (noise + jitter) * np.eye(k_mat.shape[0]))
            return chol, jitter
        except np.linalg.LinAlgError:
            continue
    raise NumericalError(
        f"covariance not positive definite after jitter escalation {attempted}",
        jitter_levels=tuple(attempted),
    )


def fit_posterior(obs: ObservationSet, kernel: KernelParams) -> PosteriorModel:
    """Condition the prior on the observation set."""
    if obs.count == 0:
        raise ValueError("cannot fit a posterior with no observations")
    z, shift, scale = _standardize(obs.values)
    k_mat = gram(kernel, obs.points)
    chol, jitter = _chol_with_escalation(k_mat, kernel.noise_variance)
    alpha = scipy.linalg.cho_solve((chol, True), z)
    return PosteriorModel(obs, kernel, chol, alpha, shift, scale, jitter)


def prior_predict(kernel: KernelParams) -> tuple[float, float]:
    """Zero-observation case: zero-mean prior with variance a0."""
    return 0.0, kernel.amplitude


def predict(model: PosteriorModel, new_points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean and (marginal) variance at each new point, raw units."""
    new_points = np.atleast_2d(np.asarray(new_points, dtype=float))
    k_cross = gram(model.kernel, model.observations.points, new_points)
    mean = model.value_shift + model.value_scale * (k_cross.T @ model.alpha)
    v = scipy.linalg.solve_triangular(model.chol_factor, k_cross, lower=True)
    k_diag = np.full(new_points.shape[0], model.kernel.amplitude)
    var = k_diag - np.sum(v * v, axis=0)
    low = -1e-10 * max(1.0, model.kernel.amplitude)
    if np.min(var) < low:
        raise NumericalError(f"negative predictive variance {np.min(var):.3e}")
    var = np.maximum(var, 0.0) * model.value_scale**2
    return mean, var


def predictive_joint(model: PosteriorModel, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Joint posterior mean vector and covariance matrix over ``points``, raw units."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    k_cross = gram(model.kernel, model.observations.points, points)
    mean = model.value_shift + model.value_scale * (k_cross.T @ model.alpha)
    v = scipy.linalg.solve_triangular(model.chol_factor, k_cross, lower=True)
    cov = (gram(model.kernel, points) - v.T @ v) * model.value_scale**2
    return mean, cov


def sample_joint(model: PosteriorModel, points: np.ndarray, n_samples: int, seed: int) -> np.ndarray:
    """Exact multivariate-normal draws from the joint posterior at ``points``.

    Factoring goes through a symmetric eigendecomposition with tiny negative
    eigenvalues clamped to zero, so degenerate directions (e.g. a point that
    is already observed noise-free) sample with exactly zero spread.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    mean, cov = predictive_joint(model, points)
    cov = 0.5 * (cov + cov.T)
    eigval, eigvec = np.linalg.eigh(cov)
    floor = -1e-8 * max(1.0, float(np.max(eigval)), model.kernel.amplitude)
    if np.min(eigval) < floor:
        raise NumericalError(f"joint covariance indefinite: min eigenvalue {np.min(eigval):.3e}")
    factor = eigvec * np.sqrt(np.maximum(eigval, 0.0))
    z = stream(seed, _TAG_SAMPLE).standard_normal((n_samples, mean.shape[0]))
    return mean[None, :] + z @ factor.T


def log_marginal_likelihood(obs: ObservationSet, kernel: KernelParams) -> float:
    """Marginal log-likelihood of the (standardized) values under the kernel."""
    z, _, _ = _standardize(obs.values)
    k_mat = gram(kernel, obs.points)
    try:
        chol, _ = _chol_with_escalation(k_mat, kernel.noise_variance)
    except NumericalError:
        return -np.inf
    alpha = scipy.linalg.cho_solve((chol, True), z)
    return float(
        -0.5 * z @ alpha - np.sum(np.log(np.diag(chol))) - 0.5 * obs.count * np.log(2.0 * np.pi)
    )


def _pack(kernel: KernelParams) -> np.ndarray:
    if kernel.variant == VARIANT_ARD:
        return np.concatenate([[np.log(kernel.amplitude)], np.log(kernel.lengthscales)])
    chol = np.linalg.cholesky(kernel.mahalanobis_matrix)
    d = chol.shape[0]
    tril = chol[np.tril_indices(d, -1)]
    return np.concatenate([[np.log(kernel.amplitude)], np.log(np.diag(chol)), tril])


def _unpack(theta: np.ndarray, dim: int, variant: str, noise: float) -> KernelParams:
    amplitude = float(np.exp(theta[0]))
    if variant == VARIANT_ARD:
        return KernelParams(amplitude, np.exp(theta[1 : 1 + dim]), variant, None, noise)
    chol = np.zeros((dim, dim))
    chol[np.diag_indices(dim)] = np.exp(theta[1 : 1 + dim])
    chol[np.tril_indices(dim, -1)] = theta[1 + dim :]
    return KernelParams(amplitude, np.ones(dim), variant, chol @ chol.T, noise)


def _golden_line(objective, theta, coord, budget, half_width=1.5):
    """Golden-section search along one coordinate; returns the best point seen."""
    phi = (np.sqrt(5.0) - 1.0) / 2.0
    a = theta[coord] - half_width
    b = theta[coord] + half_width

    def at(x):
        t = theta.copy()
        t[coord] = x
        return t, objective(t)

    best_theta, best_val = theta, objective(theta)
    c = b - phi * (b - a)
    d = a + phi * (b - a)
    (tc, fc), (td, fd) = at(c), at(d)
    used = 2
    for cand_t, cand_f in ((tc, fc), (td, fd)):
        if cand_f > best_val:
            best_theta, best_val = cand_t, cand_f
    while used < budget and (b - a) > 1e-3:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - phi * (b - a)
            tc, fc = at(c)
            cand_t, cand_f = tc, fc
        else:
            a, c, fc = c, d, fd
            d = a + phi * (b - a)
            td, fd = at(d)
            cand_t, cand_f = td, fd
        used += 1
        if cand_f > best_val:
            best_theta, best_val = cand_t, cand_f
    return best_theta, best_val, used


def fit_kernel_mle(
    obs: ObservationSet,
    variant: str = VARIANT_ARD,
    restarts: int = 1,
    seed: int = 0,
    noise_variance: float = 1e-6,
    max_iters: int = 100,
) -> KernelParams:
    """Maximize marginal likelihood by cyclic golden-section line searches.

    Deterministic in ``seed``; restart initial points are seeded log-space
    perturbations of the defaults, and each restart spends at most
    ``max_iters`` line-search iterations.  With ``restarts=0`` the default
    parameters are returned untouched (likelihood merely evaluated).
    """
    if obs.count < 2:
        raise ValueError("kernel fitting needs at least 2 observations")
    dim = obs.dim
    base = default_kernel(dim, variant, noise_variance)
    theta0 = _pack(base)

    def objective(theta):
        try:
            return log_marginal_likelihood(obs, _unpack(theta, dim, variant, noise_variance))
        except (ValueError, FloatingPointError):
            return -np.inf

    if restarts == 0:
        return replace(base, fit_warning=False)

    gen = stream(seed, _TAG_MLE)
    best_theta, best_val = theta0, objective(theta0)
    best_initial = best_val
    improved = False
    for r in range(restarts):
        theta = theta0 if r == 0 else theta0 + gen.uniform(-1.5, 1.5, size=theta0.shape)
        val = objective(theta)
        best_initial = max(best_initial, val)
        if val > best_val:
            best_theta, best_val = theta, val
        left = max_iters
        coord = 0
        sweep_gain, sweep_start = np.inf, val
        while left > 0 and sweep_gain > 1e-9:
            theta, val, used = _golden_line(objective, theta, coord, min(12, left))
            left -= used
            coord = (coord + 1) % theta.shape[0]
            if coord == 0:
                sweep_gain, sweep_start = val - sweep_start, val
        if val > best_val:
            best_theta, best_val = theta, val
        if val > best_initial + 1e-12:
            improved = True
    params = _unpack(best_theta, dim, variant, noise_variance)
    return replace(params, fit_warning=not improved)
