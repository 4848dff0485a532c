"""Sequential probability assignment by exponential smoothing."""

from __future__ import annotations

import math

import numpy as np

from .bitseq import BitSequence
from .schedule import SmoothingSchedule

#: floor on the minority letter's probability; keeps both letters codable after arbitrarily long runs
PROB_FLOOR = 2.0**-990

_LN2 = math.log(2.0)


class EspEstimator:
    """Binary exponential-smoothing estimator.

    After letter x_k the probability of x_k becomes ``a * p + (1 - a)`` and the
    other letter's ``a * p`` with ``a = alpha_k`` from the schedule.

    The state is the less likely letter and its probability ``q <= 1/2``; the
    other letter always gets ``1 - q``. Storing the small side keeps its full
    relative precision however long a run gets, in either orientation.
    """

    def __init__(self, schedule: SmoothingSchedule, p1: float = 0.5):
        if not 0.0 < p1 < 1.0:
            raise ValueError(f"prior p(1) must lie in (0, 1), got {p1}")
        self.schedule = schedule
        self.prior = p1
        if p1 <= 0.5:
            self.minor, self.q = 1, p1
        else:
            self.minor, self.q = 0, 1.0 - p1
        self.cursor = schedule.cursor()
        self._codelen = 0.0
        self._comp = 0.0

    @property
    def k(self) -> int:
        return self.cursor.k

    @property
    def p1(self) -> float:
        return self.q if self.minor else 1.0 - self.q

    @property
    def codelen(self) -> float:
        """Accumulated ideal code length in bits."""
        return self._codelen

    def predict(self) -> tuple[float, float]:
        if self.minor:
            return 1.0 - self.q, self.q
        return self.q, 1.0 - self.q

    def prob_of(self, x: int) -> float:
        return self.q if x == self.minor else 1.0 - self.q

    def update(self, x: int) -> float:
        """Code ``x`` under the current prediction, then adapt. Returns -log2 p(x)."""
        q = self.q
        hit = x == self.minor
        cost = -math.log2(q) if hit else -math.log1p(-q) / _LN2
        # Kahan summation keeps order-1 differences intact over millions of letters
        y = cost - self._comp
        t = self._codelen + y
        self._comp = (t - self._codelen) - y
        self._codelen = t

        a = self.cursor.advance()
        if hit:
            grown = a * q + (1.0 - a)
            shrunk = a * (1.0 - q)
            if shrunk < grown:
                self.minor = 1 - self.minor
                q = shrunk
            else:
                q = grown
        else:
            q = a * q
        self.q = q if q > PROB_FLOOR else PROB_FLOOR
        return cost

    def process(self, x: BitSequence) -> float:
        """Feed every letter of ``x``; returns the code length added by this call."""
        start = self._codelen
        for bit in x:
            self.update(bit)
        return self._codelen - start


def code_length(x: BitSequence, schedule: SmoothingSchedule, p1: float = 0.5) -> float:
    """Ideal code length of ``x`` under a fresh estimator."""
    return EspEstimator(schedule, p1).process(x)


def batch_letter_costs(bits: np.ndarray, rates: np.ndarray, p1) -> np.ndarray:
    """Per-letter ideal code lengths for a batch of sequences at once.

    ``bits`` has shape (batch, n); ``rates`` holds alpha_1..alpha_n; ``p1`` is a
    scalar prior or one prior per row. Mirrors :meth:`EspEstimator.update`
    element by element.
    """
    bits = np.asarray(bits, dtype=bool)
    batch, n = bits.shape
    p1 = np.broadcast_to(np.asarray(p1, dtype=np.float64), (batch,))
    minor = p1 <= 0.5
    q = np.where(minor, p1, 1.0 - p1)
    costs = np.empty((batch, n))
    for j in range(n):
        hit = bits[:, j] == minor
        costs[:, j] = np.where(hit, -np.log2(q), -np.log1p(-q) / _LN2)
        a = rates[j]
        grown = a * q + (1.0 - a)
        shrunk = a * (1.0 - q)
        flip = hit & (shrunk < grown)
        q = np.where(hit, np.where(flip, shrunk, grown), a * q)
        minor = minor ^ flip
        np.maximum(q, PROB_FLOOR, out=q)
    return costs


def all_sequences(n: int) -> np.ndarray:
    """Every bit sequence of length n as rows of a (2^n, n) array; row i spells i in binary, MSB first."""
    idx = np.arange(1 << n, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    return ((idx[:, None] >> shifts) & 1).astype(np.uint8)


class SmoothedCountPredictor:
    """Direct smoothed-count predictor: counts decay by ``lam`` before every increment.

    Kept as an independent reference for the count-smoothing schedule.
    """

    def __init__(self, s0: float, s1: float, lam: float):
        if s0 <= 0 or s1 <= 0:
            raise ValueError("smoothed counts must be positive")
        self.s0 = s0
        self.s1 = s1
        self.t = s0 + s1
        self.lam = lam

    def predict(self) -> tuple[float, float]:
        return self.s0 / self.t, self.s1 / self.t

    def predict_update(self, x: int) -> float:
        """Return p(x) before the update, then count x."""
        p = (self.s1 if x else self.s0) / self.t
        self.s0 *= self.lam
        self.s1 *= self.lam
        if x:
            self.s1 += 1.0
        else:
            self.s0 += 1.0
        self.t = self.lam * self.t + 1.0
        return p
