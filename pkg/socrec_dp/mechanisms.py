#!/usr/bin/env python3
"""
Recommendation mechanisms over a utility vector.

R_best, the Exponential mechanism, the Laplace noisy-max mechanism (sampled and
as exact win probabilities) and linear smoothing towards the uniform
distribution, plus exact and Monte-Carlo expected accuracy.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Tuple

import numpy as np
from scipy import integrate

from .errors import DomainError, InstanceTooLargeError, NoCandidatesError, ZeroUtilityError
from .utility import UtilityVector

logger = logging.getLogger(__name__)

MAX_NUMERIC_CANDIDATES = 64
NORMALIZATION_TOLERANCE = 1e-9


class Mechanism(str, Enum):
    EXPONENTIAL = "exponential"
    LAPLACE = "laplace"
    SMOOTHING = "smoothing"


@dataclass(frozen=True)
class PrivacyParams:
    """Everything a mechanism needs besides the utilities."""
    epsilon: float
    delta_f: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not self.epsilon > 0:
            raise DomainError(f"epsilon must be positive, got {self.epsilon}")
        if not self.delta_f > 0:
            raise DomainError(f"delta_f must be positive, got {self.delta_f}")
        if not 0 <= self.seed < 2 ** 64:
            raise DomainError(f"seed must be an unsigned 64-bit integer, got {self.seed}")

    @property
    def noise_scale(self) -> float:
        """Laplace scale b = delta_f / epsilon."""
        return self.delta_f / self.epsilon

    def stream(self, *keys: int) -> np.random.Generator:
        """Independent generator for ``keys`` (e.g. a target id), fixed by the seed."""
        return np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=tuple(keys)))


@dataclass(frozen=True, eq=False)
class RecommendationDistribution:
    """Probability of recommending each candidate; keys match the utility vector."""
    candidates: np.ndarray
    probabilities: np.ndarray

    def __post_init__(self):
        candidates = np.asarray(self.candidates, dtype=np.int64)
        probabilities = np.asarray(self.probabilities, dtype=np.float64)
        if candidates.shape != probabilities.shape:
            raise DomainError("candidates and probabilities differ in shape")
        if probabilities.size:
            if probabilities.min() < 0:
                raise DomainError("probabilities must be non-negative")
            if abs(probabilities.sum() - 1.0) > NORMALIZATION_TOLERANCE:
                raise DomainError(f"probabilities sum to {probabilities.sum()!r}, not 1")
        object.__setattr__(self, "candidates", candidates)
        object.__setattr__(self, "probabilities", probabilities)

    def __len__(self) -> int:
        return int(self.candidates.size)

    @property
    def entries(self) -> Dict[int, float]:
        return {int(i): float(p) for i, p in zip(self.candidates, self.probabilities)}

    def probability_of(self, node: int) -> float:
        position = int(np.searchsorted(self.candidates, node))
        if position == self.candidates.size or self.candidates[position] != node:
            raise DomainError(f"node {node} is not in the distribution")
        return float(self.probabilities[position])


def _require_candidates(u: UtilityVector) -> None:
    if len(u) == 0:
        raise NoCandidatesError(f"target {u.target} has no candidates")


def best_recommendation(u: UtilityVector) -> RecommendationDistribution:
    """Point mass on the lowest-id candidate attaining u_max."""
    _require_candidates(u)
    probabilities = np.zeros(len(u))
    probabilities[int(np.argmax(u.values))] = 1.0
    return RecommendationDistribution(u.candidates, probabilities)


def exponential_distribution(u: UtilityVector, p: PrivacyParams) -> RecommendationDistribution:
    """p_i proportional to exp(epsilon * u_i / delta_f)."""
    _require_candidates(u)
    exponents = (p.epsilon / p.delta_f) * u.values
    weights = np.exp(exponents - exponents.max())
    return RecommendationDistribution(u.candidates, weights / weights.sum())


def _laplace_ppf(q: np.ndarray, tail: np.ndarray, scale: float) -> np.ndarray:
    """Inverse Laplace CDF from q and its complement (kept separate for precision)."""
    with np.errstate(divide="ignore"):
        return np.where(q < 0.5, scale * np.log(2.0 * q), -scale * np.log(2.0 * tail))


def laplace_noise(rng: np.random.Generator, scale: float, size) -> np.ndarray:
    """Laplace(0, scale) draws by inverse-CDF transform of uniforms."""
    q = rng.random(size)
    return _laplace_ppf(q, 1.0 - q, scale)


def laplace_sample(u: UtilityVector, p: PrivacyParams, rng: np.random.Generator) -> int:
    """Node with the largest noisy utility u_i + Laplace(delta_f / epsilon)."""
    _require_candidates(u)
    noisy = u.values + laplace_noise(rng, p.noise_scale, len(u))
    return int(u.candidates[int(np.argmax(noisy))])


def laplace_distribution(
    u: UtilityVector, p: PrivacyParams, tol: float = 1e-6
) -> RecommendationDistribution:
    """
    Exact win probabilities of the Laplace noisy-max mechanism.

    p_i is the integral of f(x - u_i) * prod_{j != i} F(x - u_j) over a window
    wide enough that each Laplace density leaves less than ``tol`` mass
    outside it.
    """
    _require_candidates(u)
    n = len(u)
    if n > MAX_NUMERIC_CANDIDATES:
        raise InstanceTooLargeError(
            f"{n} candidates; numeric win probabilities limited to {MAX_NUMERIC_CANDIDATES}")
    if not 0 < tol < 1:
        raise DomainError(f"tol must lie in (0, 1), got {tol}")
    if n == 1:
        return RecommendationDistribution(u.candidates, np.ones(1))

    scale = p.noise_scale
    values = u.values
    half_width = scale * math.log(1.0 / tol)
    lower, upper = float(values.min()) - half_width, float(values.max()) + half_width
    breakpoints = np.unique(values).tolist()

    def integrand(x: float, i: int) -> float:
        z = x - values
        decay = np.exp(-np.abs(z) / scale)
        cdf = np.where(z < 0, 0.5 * decay, 1.0 - 0.5 * decay)
        density = decay[i] / (2.0 * scale)
        cdf[i] = 1.0
        return float(density * np.prod(cdf))

    probabilities = np.empty(n)
    for i in range(n):
        probabilities[i], _ = integrate.quad(
            integrand, lower, upper, args=(i,), points=breakpoints,
            epsabs=tol / 10.0, epsrel=1e-10, limit=400)
    probabilities = np.clip(probabilities, 0.0, None)
    total = probabilities.sum()
    if abs(total - 1.0) > 10 * tol:
        logger.warning("Laplace win probabilities sum to %.9f before renormalisation", total)
    return RecommendationDistribution(u.candidates, probabilities / total)


def laplace_two_node_probability(du: float, epsilon: float) -> float:
    """
    Closed-form Pr[u1 + X1 > u2 + X2] for X1, X2 ~ Laplace(1/epsilon), du = u1 - u2 >= 0.

    Equals 1 - exp(-epsilon*du)/2 - epsilon*du / (4*exp(epsilon*du)).
    """
    if du < 0:
        raise DomainError(f"du must be >= 0 (order u1 >= u2), got {du}")
    if not epsilon > 0:
        raise DomainError(f"epsilon must be positive, got {epsilon}")
    a = epsilon * du
    return 1.0 - math.exp(-a) * (0.5 + a / 4.0)


def smoothing_distribution(base: RecommendationDistribution, x: float) -> RecommendationDistribution:
    """Mix ``base`` with the uniform distribution: p''_i = (1 - x)/n + x * p_i."""
    if not 0 <= x < 1:
        raise DomainError(f"smoothing weight x must lie in [0, 1), got {x}")
    n = len(base)
    if n == 0:
        raise NoCandidatesError("cannot smooth an empty distribution")
    return RecommendationDistribution(base.candidates, (1.0 - x) / n + x * base.probabilities)


def smoothing_epsilon(x: float, n: int) -> float:
    """Privacy level ln(1 + n*x/(1 - x)) bought by smoothing weight ``x`` over ``n`` candidates."""
    if not 0 <= x < 1:
        raise DomainError(f"smoothing weight x must lie in [0, 1), got {x}")
    if n < 1:
        raise DomainError(f"n must be positive, got {n}")
    return math.log1p(n * x / (1.0 - x))


def smoothing_x(epsilon: float, n: int) -> float:
    """Largest smoothing weight whose privacy level is ``epsilon``."""
    if epsilon < 0:
        raise DomainError(f"epsilon must be >= 0, got {epsilon}")
    if n < 1:
        raise DomainError(f"n must be positive, got {n}")
    a = math.expm1(epsilon)
    return a / (n + a)


def smoothed_best(u: UtilityVector, x: float) -> RecommendationDistribution:
    """Smoothing applied to R_best."""
    return smoothing_distribution(best_recommendation(u), x)


def sample_from(d: RecommendationDistribution, rng: np.random.Generator) -> int:
    return int(rng.choice(d.candidates, p=d.probabilities))


def expected_accuracy(d: RecommendationDistribution, u: UtilityVector) -> float:
    """Expected utility of ``d`` relative to u_max."""
    if d.candidates.shape != u.candidates.shape or not np.array_equal(d.candidates, u.candidates):
        raise DomainError("distribution and utility vector have different candidates")
    if u.is_all_zero:
        raise ZeroUtilityError("accuracy undefined: u_max is 0")
    accuracy = float(np.dot(u.values, d.probabilities)) / u.u_max
    return min(1.0, max(0.0, accuracy))


def _grouped_trial_utilities(
    u: UtilityVector, scale: float, trials: int, rng: np.random.Generator
) -> np.ndarray:
    # Candidates sharing a utility level are exchangeable: only the level's
    # largest noise matters, drawn as F^{-1}(V^(1/m)) for a level of size m.
    levels, counts = np.unique(u.values, return_counts=True)
    uniform = 1.0 - rng.random((trials, levels.size))
    log_q = np.log(uniform) / counts
    noise = _laplace_ppf(np.exp(log_q), -np.expm1(log_q), scale)
    return levels[np.argmax(levels + noise, axis=1)]


def _per_candidate_trial_utilities(
    u: UtilityVector, scale: float, trials: int, rng: np.random.Generator
) -> np.ndarray:
    n = len(u)
    rows_per_chunk = max(1, (1 << 20) // n)
    picked = np.empty(trials)
    for start in range(0, trials, rows_per_chunk):
        rows = min(rows_per_chunk, trials - start)
        noisy = u.values + laplace_noise(rng, scale, (rows, n))
        picked[start:start + rows] = u.values[np.argmax(noisy, axis=1)]
    return picked


def monte_carlo_accuracy(
    u: UtilityVector,
    p: PrivacyParams,
    trials: int,
    stream_key: Tuple[int, ...] = (),
    grouped: bool = True,
) -> float:
    """
    Mean of u_sampled / u_max over ``trials`` Laplace noisy-max draws.

    Trial i reads row i of the generator ``p.stream(*stream_key)``, so the
    estimate is fixed by (seed, stream_key) alone.
    """
    if trials < 1:
        raise DomainError(f"trials must be positive, got {trials}")
    _require_candidates(u)
    if u.is_all_zero:
        raise ZeroUtilityError("accuracy undefined: u_max is 0")
    rng = p.stream(*stream_key)
    if grouped:
        picked = _grouped_trial_utilities(u, p.noise_scale, trials, rng)
    else:
        picked = _per_candidate_trial_utilities(u, p.noise_scale, trials, rng)
    return float(picked.mean() / u.u_max)
