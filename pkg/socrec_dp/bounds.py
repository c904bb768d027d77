#!/usr/bin/env python3
"""
Privacy/accuracy trade-off calculators.

All bounds concern a single recommendation for one target with n candidates,
k of them in the high-utility group (u_i > (1 - c) * u_max), and t edge edits
needed to lift a low-utility candidate to the top. Vacuous epsilon bounds come
back as ``None`` ("no constraint").
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np

from .errors import DomainError, NoBoundDerivableError, ZeroUtilityError
from .utility import UtilityKind, UtilityVector

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BoundInputs:
    """
    Parameters of the generic lower bound.

    Exactly one of ``delta`` (accuracy 1 - delta) or ``epsilon`` is set.
    """
    n: int
    k: int
    c: float
    t: int
    delta: Optional[float] = None
    epsilon: Optional[float] = None

    def __post_init__(self):
        if self.n < 1:
            raise DomainError(f"n must be positive, got {self.n}")
        if not 0 <= self.k < self.n:
            raise DomainError(f"k must satisfy 0 <= k < n, got k={self.k}, n={self.n}")
        if not 0 < self.c <= 1:
            raise DomainError(f"c must lie in (0, 1], got {self.c}")
        if self.t < 1:
            raise DomainError(f"t must be >= 1, got {self.t}")
        if (self.delta is None) == (self.epsilon is None):
            raise DomainError("set exactly one of delta and epsilon")
        if self.delta is not None and not 0 < self.delta:
            raise DomainError(f"delta must be positive, got {self.delta}")
        if self.epsilon is not None and self.epsilon < 0:
            raise DomainError(f"epsilon must be >= 0, got {self.epsilon}")


def epsilon_lower_bound(b: BoundInputs) -> Optional[float]:
    """
    Smallest epsilon compatible with accuracy 1 - delta:
    (1/t) * (ln((c - delta)/delta) + ln((n - k)/(k + 1))).

    Returns None when that value is not positive.
    """
    if b.delta is None:
        raise DomainError("epsilon_lower_bound needs delta")
    if b.delta >= b.c:
        raise DomainError(f"delta={b.delta} >= c={b.c}: the bound is vacuous")
    value = (math.log((b.c - b.delta) / b.delta) + math.log((b.n - b.k) / (b.k + 1))) / b.t
    return value if value > 0 else None


def accuracy_upper_bound(b: BoundInputs) -> float:
    """Best accuracy any epsilon-private monotone algorithm can reach: 1 - c(n-k)/(n-k+(k+1)e^(eps*t))."""
    if b.epsilon is None:
        raise DomainError("accuracy_upper_bound needs epsilon")
    low = b.n - b.k
    log_denominator = np.logaddexp(math.log(low), math.log(b.k + 1) + b.epsilon * b.t)
    lost = b.c * math.exp(math.log(low) - float(log_denominator))
    return min(1.0, 1.0 - lost)


def low_group_probability_cap(delta: float, c: float, n: int, k: int) -> float:
    """Some low-utility candidate of a (1 - delta)-accurate algorithm has probability <= this."""
    if not 0 <= k < n:
        raise DomainError(f"k must satisfy 0 <= k < n, got k={k}, n={n}")
    if not 0 < c <= 1:
        raise DomainError(f"c must lie in (0, 1], got {c}")
    return delta / (c * (n - k))


def t_formula(
    kind: UtilityKind, u_max: float, d_r: int, ties_at_max: Optional[int] = None
) -> int:
    """
    Edit count that lifts a low-utility candidate to strict maximum utility.

    Common neighbours: u_max + 1, plus one when u_max == d_r. Weighted paths:
    floor(u_max) + 2. Passing ``ties_at_max`` (candidates attaining u_max)
    makes the common-neighbour value safe when three or more candidates tie
    at u_max == d_r: one removal per tied candidate is then required.
    """
    if not u_max > 0:
        raise ZeroUtilityError("t undefined: u_max is 0")
    kind = UtilityKind(kind)
    if kind is UtilityKind.WEIGHTED_PATHS:
        return int(math.floor(u_max)) + 2
    if u_max != int(u_max):
        raise DomainError(f"common-neighbour utilities are integers, got u_max={u_max}")
    top = int(u_max)
    if top != d_r:
        return top + 1
    if ties_at_max is None:
        return top + 2
    return top + 1 + max(1, ties_at_max - 1)


def _sweep_pairs(u: UtilityVector) -> List[Tuple[float, int]]:
    """(c, k) pairs with a non-empty low group for the threshold sweep."""
    n = len(u)
    u_max = u.u_max
    pairs: List[Tuple[float, int]] = []
    for level in np.unique(u.values):
        if level < u_max:
            k = int(np.count_nonzero(u.values > level))
            pairs.append((1.0 - float(level) / u_max, k))
    if n >= 3:
        threshold = u_max / math.log(n)
        k = int(np.count_nonzero(u.values > threshold))
        pairs.append((1.0 - 1.0 / math.log(n), k))
    return [(c, k) for c, k in pairs if 0 < c <= 1 and k < n]


def tightest_accuracy_bound(u: UtilityVector, t: int, epsilon: float) -> float:
    """
    Minimum of ``accuracy_upper_bound`` over the (c, k) threshold sweep.

    Thresholds are every distinct utility below u_max plus u_max / ln(n).
    Returns 1.0 (no constraint) when no threshold leaves a low group.
    """
    if u.is_all_zero:
        raise ZeroUtilityError("bound undefined: u_max is 0")
    n = len(u)
    best = 1.0
    for c, k in _sweep_pairs(u):
        bound = accuracy_upper_bound(BoundInputs(n=n, k=k, c=c, t=t, epsilon=epsilon))
        best = min(best, bound)
    return best


class AsymptoticMode(str, Enum):
    """
    Large-graph regime, named by what fixes the denominator T.

    The regime labels lemma2, theorem1, theorem2 and theorem3 are accepted as
    aliases, in that order.
    """
    FIXED_T = "fixed-t"
    MAX_DEGREE = "max-degree"
    TARGET_DEGREE = "target-degree"
    WEIGHTED_PATHS = "weighted-paths"

    @classmethod
    def _missing_(cls, value):
        if isinstance(value, str):
            return ASYMPTOTIC_MODE_ALIASES.get(value.strip().lower())
        return None


ASYMPTOTIC_MODE_ALIASES = {
    "lemma2": AsymptoticMode.FIXED_T,
    "theorem1": AsymptoticMode.MAX_DEGREE,
    "theorem2": AsymptoticMode.TARGET_DEGREE,
    "theorem3": AsymptoticMode.WEIGHTED_PATHS,
}
ASYMPTOTIC_MODE_NAMES = [mode.value for mode in AsymptoticMode] + list(ASYMPTOTIC_MODE_ALIASES)


def weighted_paths_c(s: float) -> float:
    """Smallest c > 1 with (c - 1)(1 - s) >= (c + 1)^2 s, i.e. the root of s c^2 + (3s - 1)c + 1 = 0."""
    if not 0 < s < 1:
        raise NoBoundDerivableError(f"s = gamma * d_max must lie in (0, 1), got {s}")
    discriminant = (9 * s - 1) * (s - 1)
    if discriminant < -1e-12:
        raise NoBoundDerivableError(f"no real c at s={s} (needs s <= 1/9)")
    # smaller root via the product of roots (1/s) to avoid cancellation
    root = 2.0 / ((1 - 3 * s) + math.sqrt(max(discriminant, 0.0)))
    if root <= 1:
        raise NoBoundDerivableError(f"no root above 1 at s={s}")
    return root


def asymptotic_epsilon(
    mode: AsymptoticMode, n: int, beta: int, d: int, s: Optional[float] = None
) -> Optional[float]:
    """
    Finite-n evaluation of (ln n - ln beta - ln ln n) / T.

    T is d (= t) for fixed-t, 4*d (d = d_max) for max-degree, d + 2 (d = d_r)
    for target-degree and (2c - 1)*d for weighted-paths with c from ``weighted_paths_c(s)``.
    Returns None when the numerator is not positive.
    """
    mode = AsymptoticMode(mode)
    if n < 3:
        raise DomainError(f"n must be >= 3, got {n}")
    if beta < 1 or d < 1:
        raise DomainError("beta and d must be >= 1")
    if mode is AsymptoticMode.FIXED_T:
        denominator = float(d)
    elif mode is AsymptoticMode.MAX_DEGREE:
        denominator = 4.0 * d
    elif mode is AsymptoticMode.TARGET_DEGREE:
        denominator = d + 2.0
    else:
        if s is None:
            raise DomainError("weighted-paths mode needs s = gamma * d_max")
        denominator = (2.0 * weighted_paths_c(s) - 1.0) * d
    numerator = math.log(n) - math.log(beta) - math.log(math.log(n))
    if numerator <= 0:
        return None
    return numerator / denominator
