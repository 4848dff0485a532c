"""Smoothing-rate schedules and the running products of their rates."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import ClassVar

import numpy as np

#: beyond this many steps a fixed-rate cursor derives beta from its log to avoid underflow drift
LOG_SPACE_AFTER = 10_000


class AssumptionViolation(UserWarning):
    """A smoothing rate is at most 1/2, so the redundancy bounds do not apply."""


def optimal_fixed_alpha(n: int) -> float:
    """Fixed rate minimising the fixed-rate redundancy bound for length ``n``.

    Warns with :class:`AssumptionViolation` for n < 5, where the rate drops to 1/2 or below.
    """
    if n < 2:
        raise ValueError("optimal rate is defined for n >= 2")
    alpha = math.exp(-math.pi / math.sqrt(6.0 * (n - 1)))
    if alpha <= 0.5:
        warnings.warn(f"optimal rate {alpha:.6f} for n={n} is not above 1/2", AssumptionViolation, stacklevel=2)
    return alpha


class SmoothingSchedule:
    """Base for the three rate schedules; concrete variants are frozen dataclasses."""

    kind: ClassVar[str]
    schedule_id: ClassVar[int]

    def rate_at(self, k: int) -> float:
        raise NotImplementedError

    def cursor(self) -> "ScheduleCursor":
        return ScheduleCursor(self)

    def rates(self, n: int) -> np.ndarray:
        """alpha_1..alpha_n exactly as a cursor produces them."""
        cur = self.cursor()
        return np.array([cur.advance() for _ in range(n)], dtype=np.float64)

    def log2_betas(self, n: int) -> np.ndarray:
        """log2 of beta_0..beta_{n-1}."""
        out = np.zeros(max(n, 0))
        cur = self.cursor()
        for i in range(1, n):
            cur.advance()
            out[i] = cur.log2_beta
        return out

    def betas(self, n: int) -> np.ndarray:
        """beta_0..beta_{n-1}; may underflow to 0 for long runs, see :meth:`log2_betas`."""
        return np.exp2(self.log2_betas(n))

    @property
    def assumption_violated(self) -> bool:
        """True when some rate alpha_k <= 1/2."""
        raise NotImplementedError

    def params(self) -> tuple[float, int]:
        """(param1, param2) as stored in a container header."""
        raise NotImplementedError

    @staticmethod
    def from_params(schedule_id: int, param1: float, param2: int) -> "SmoothingSchedule":
        if schedule_id == FixedRate.schedule_id:
            return FixedRate(param1)
        if schedule_id == DecayingRate.schedule_id:
            return DecayingRate()
        if schedule_id == CountSmoothing.schedule_id:
            return CountSmoothing(param1, param2)
        raise ValueError(f"unknown schedule id {schedule_id}")


@dataclass(frozen=True)
class FixedRate(SmoothingSchedule):
    alpha: float

    kind: ClassVar[str] = "fixed"
    schedule_id: ClassVar[int] = 0

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")

    def rate_at(self, k: int) -> float:
        if k < 1:
            raise ValueError("rates are indexed from k = 1")
        return self.alpha

    def rates(self, n: int) -> np.ndarray:
        return np.full(n, self.alpha)

    def log2_betas(self, n: int) -> np.ndarray:
        return np.arange(n) * math.log2(self.alpha)

    @property
    def assumption_violated(self) -> bool:
        return self.alpha <= 0.5

    def params(self) -> tuple[float, int]:
        return self.alpha, 0


@dataclass(frozen=True)
class DecayingRate(SmoothingSchedule):
    """alpha_k = exp(-pi / sqrt(12 (k + 1))), increasing towards 1."""

    kind: ClassVar[str] = "decaying"
    schedule_id: ClassVar[int] = 1

    def rate_at(self, k: int) -> float:
        if k < 1:
            raise ValueError("rates are indexed from k = 1")
        return math.exp(-math.pi / math.sqrt(12.0 * (k + 1)))

    @property
    def assumption_violated(self) -> bool:
        return False

    def params(self) -> tuple[float, int]:
        return 0.0, 0


@dataclass(frozen=True)
class CountSmoothing(SmoothingSchedule):
    """Rates induced by multiplying letter counts by ``lam`` before each increment.

    t_0 = 1 + lam + ... + lam^(m-1), t_k = lam * t_{k-1} + 1 and alpha_k = (t_k - 1) / t_k.
    """

    lam: float
    m: int = 1

    kind: ClassVar[str] = "count"
    schedule_id: ClassVar[int] = 2

    def __post_init__(self):
        if not 0.0 < self.lam < 1.0:
            raise ValueError(f"lambda must lie in (0, 1), got {self.lam}")
        if int(self.m) != self.m or self.m < 1:
            raise ValueError(f"m must be a positive integer, got {self.m}")
        object.__setattr__(self, "m", int(self.m))

    @property
    def t0(self) -> float:
        return (1.0 - self.lam**self.m) / (1.0 - self.lam)

    def total_at(self, k: int) -> float:
        """Closed form t_k = (1 - lam^(k+m)) / (1 - lam)."""
        return -math.expm1((k + self.m) * math.log(self.lam)) / (1.0 - self.lam)

    def rate_at(self, k: int) -> float:
        if k < 1:
            raise ValueError("rates are indexed from k = 1")
        return self.lam * self.rate_ratio(k)

    def rate_ratio(self, k: int) -> float:
        """alpha_k / lam = (1 - lam^(m+k-1)) / (1 - lam^(m+k)).

        Equal to (t_k - 1) / (lam t_k), but free of the bias that rounding t_k
        would add to every rate; that bias compounds over long products.
        """
        ln = math.log(self.lam)
        return math.expm1((self.m + k - 1) * ln) / math.expm1((self.m + k) * ln)

    def beta_closed_form(self, i: int) -> float:
        """beta_i = (1 - lam^m) lam^i / (1 - lam^(m+i))."""
        return (1.0 - self.lam**self.m) / (1.0 - self.lam ** (self.m + i)) * self.lam**i

    @property
    def assumption_violated(self) -> bool:
        # alpha_k increases with k, so the first rate is the smallest
        return self.rate_at(1) <= 0.5

    def params(self) -> tuple[float, int]:
        return self.lam, self.m


class ScheduleCursor:
    """Sequential position in a schedule: step k, beta_k and (count smoothing) t_k."""

    __slots__ = ("schedule", "k", "beta", "log2_beta", "t", "_log2_rest")

    def __init__(self, schedule: SmoothingSchedule):
        self.schedule = schedule
        self.k = 0
        self.beta = 1.0
        self.log2_beta = 0.0
        self._log2_rest = 0.0
        self.t = schedule.t0 if isinstance(schedule, CountSmoothing) else None

    def advance(self) -> float:
        """Move to step k + 1 and return alpha_{k+1}."""
        sched = self.schedule
        self.k += 1
        if self.t is not None:
            self.t = sched.lam * self.t + 1.0
            ratio = sched.rate_ratio(self.k)
            alpha = sched.lam * ratio
            # k log2(lam) plus the vanishing corrections, instead of k rounded log2(lam) terms
            self._log2_rest += math.log2(ratio)
            self.log2_beta = self.k * math.log2(sched.lam) + self._log2_rest
        else:
            alpha = sched.rate_at(self.k)
            if isinstance(sched, FixedRate):
                self.log2_beta = self.k * math.log2(alpha)
            else:
                self.log2_beta += math.log2(alpha)
        if isinstance(sched, FixedRate) and self.k > LOG_SPACE_AFTER:
            self.beta = 2.0**self.log2_beta
        else:
            self.beta *= alpha
        return alpha


def schedule_from_name(kind: str, alpha: float | None = None, lam: float | None = None, m: int = 1) -> SmoothingSchedule:
    if kind == "fixed":
        if alpha is None:
            raise ValueError("fixed schedule needs alpha")
        return FixedRate(alpha)
    if kind == "decaying":
        return DecayingRate()
    if kind == "count":
        if lam is None:
            raise ValueError("count schedule needs lambda")
        return CountSmoothing(lam, m)
    raise ValueError(f"unknown schedule {kind!r}")
