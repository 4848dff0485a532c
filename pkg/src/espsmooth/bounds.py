"""Redundancy bounds for the exponential-smoothing estimator and exhaustive oracles that check them.

All logarithms are base 2. ``p_min`` stands for min(p(0), p(1)) of the prior,
so priors of either orientation are handled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bitseq import BitSequence, Partition, count_entropy, empirical_entropy
from .estimator import EspEstimator, all_sequences, batch_letter_costs
from .schedule import CountSmoothing, DecayingRate, FixedRate, SmoothingSchedule

LOG2E = math.log2(math.e)
#: (pi log e)^2 / 6, numerator of the log-sum bound
LOGSUM_CONST = (math.pi * LOG2E) ** 2 / 6.0
#: 2 pi log e / sqrt 6, the sqrt(n) factor of the optimally tuned fixed-rate bound (about 3.701)
FIXED_SQRT_CONST = 2.0 * math.pi * LOG2E / math.sqrt(6.0)
#: 2 pi log e / sqrt 3, the sqrt(n) factor of the decaying-rate bound
DECAYING_SQRT_CONST = 2.0 * math.pi * LOG2E / math.sqrt(3.0)

#: exhaustive enumeration refuses anything longer
MAX_EXHAUSTIVE_N = 20


def _log2_inv_one_minus(y):
    """log2 1/(1 - y) without cancellation for small y."""
    return -np.log1p(-np.asarray(y, dtype=np.float64)) / math.log(2.0)


@dataclass(frozen=True)
class BoundInput:
    n: int
    p_min: float
    s: int = 1
    alpha: float | None = None
    lam: float | None = None
    m: int = 1
    partition: Partition | None = None

    def __post_init__(self):
        if self.partition is not None:
            if self.partition.n != self.n:
                raise ValueError(f"partition covers {self.partition.n} letters, expected {self.n}")
            object.__setattr__(self, "s", self.partition.s)
        if self.n < 1:
            raise ValueError("n must be at least 1")
        if self.s < 1:
            raise ValueError("need at least one segment")
        if not 0.0 < self.p_min <= 0.5:
            raise ValueError(f"p_min must lie in (0, 0.5], got {self.p_min}")


def worst_case_bound(n: int, p1: float, betas, deterministic: bool) -> float:
    """Worst-case redundancy against the empirical entropy.

    ``p1`` is the larger prior probability (the prior of the letter that is
    *not* repeated in the worst case) and ``betas`` holds beta_0..beta_{n-1}.
    The deterministic branch is attained by 0^n, the other by 0^(n-1) 1.
    """
    betas = np.asarray(betas, dtype=np.float64)
    if len(betas) < n:
        raise ValueError(f"need {n} betas, got {len(betas)}")
    if n < 1:
        raise ValueError("n must be at least 1")
    terms = _log2_inv_one_minus(p1 * betas[:n])
    if deterministic:
        return float(terms.sum())
    if n < 2:
        raise ValueError("a non-deterministic sequence has at least two letters")
    single_flip = BitSequence.from_array(np.r_[np.zeros(n - 1, np.uint8), 1])
    return float(-math.log2(p1 * betas[n - 1]) + terms[: n - 1].sum() - empirical_entropy(single_flip))


def worst_case_bound_for(schedule: SmoothingSchedule, n: int, p1: float, deterministic: bool) -> float:
    return worst_case_bound(n, max(p1, 1.0 - p1), schedule.betas(n), deterministic)


def redundancy(x: BitSequence, schedule: SmoothingSchedule, p1: float = 0.5) -> float:
    """Code length of ``x`` minus its empirical entropy."""
    return EspEstimator(schedule, p1).process(x) - empirical_entropy(x)


@dataclass
class WorstCase:
    deterministic: float
    single_flip: float | None
    argmax: BitSequence

    @property
    def redundancy(self) -> float:
        if self.single_flip is None:
            return self.deterministic
        return max(self.deterministic, self.single_flip)


def worst_case_candidates(schedule: SmoothingSchedule, p1: float, n: int) -> WorstCase:
    """Redundancies of the run of the less likely letter and of that run ending in a flip.

    With p(0) <= p(1) the candidates are 0^n and 0^(n-1) 1; otherwise the
    letters are toggled.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    run = 0 if p1 >= 0.5 else 1
    det = BitSequence.from_array(np.full(n, run, dtype=np.uint8))
    r_det = redundancy(det, schedule, p1)
    if n == 1:
        return WorstCase(r_det, None, det)
    flip = BitSequence.from_array(np.r_[np.full(n - 1, run, np.uint8), 1 - run])
    r_flip = redundancy(flip, schedule, p1)
    return WorstCase(r_det, r_flip, det if r_det >= r_flip else flip)


def partition_bound(inp: BoundInput, schedule: SmoothingSchedule) -> float:
    """Worst-case redundancy against the best code that is fixed within each segment of a partition."""
    if inp.partition is None:
        raise ValueError("partition bound needs a partition")
    lb = schedule.log2_betas(inp.n)
    total = inp.s * (math.log2(1.0 / inp.p_min) - lb[inp.n - 1])
    for a, b in inp.partition.segments:
        if b - a > 1:
            # beta_i / beta_a for a < i < b
            ratio = np.exp2(lb[a + 1 : b] - lb[a])
            total += float(_log2_inv_one_minus(ratio).sum())
    return float(total)


def logsum_bound(alpha: float) -> float:
    """Upper bound on sum_{i>=1} log2 1/(1 - alpha^i), valid for every partial sum."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    return LOGSUM_CONST / math.log2(1.0 / alpha)


def logsum_partial(alpha: float, m: int) -> np.ndarray:
    """Partial sums sum_{i<=j} log2 1/(1 - alpha^i) for j = 1..m."""
    i = np.arange(1, m + 1, dtype=np.float64)
    return np.cumsum(_log2_inv_one_minus(alpha**i))


def schedule_bound(kind: str, inp: BoundInput) -> float:
    """Closed-form redundancy bounds for the fixed, decaying and count schedules."""
    n, s = inp.n, inp.s
    head = math.log2(1.0 / inp.p_min)
    if kind == "fixed":
        if inp.alpha is None:
            raise ValueError("fixed bound needs alpha")
        rate = math.log2(1.0 / inp.alpha)
        return s * (head + LOGSUM_CONST / rate + (n - 1) * rate)
    if kind == "decaying":
        return s * (head + DECAYING_SQRT_CONST * math.sqrt(n))
    if kind == "count":
        if inp.lam is None:
            raise ValueError("count bound needs lambda")
        rate = math.log2(1.0 / inp.lam)
        return s * (math.log2(n) + head + LOGSUM_CONST / rate + (n - 1) * rate)
    raise ValueError(f"unknown bound kind {kind!r}")


def optimal_fixed_bound(n: int, s: int, p_min: float) -> float:
    """s * [3.7009... * sqrt(n) + log 1/p_min]: the fixed-rate bound at the optimal rate, rounded up."""
    return s * (FIXED_SQRT_CONST * math.sqrt(n) + math.log2(1.0 / p_min))


def bound_curve(kind: str, inp: BoundInput) -> np.ndarray:
    """Schedule bound evaluated at every length k = 1..n with the parameters held fixed."""
    out = np.empty(inp.n)
    for k in range(1, inp.n + 1):
        out[k - 1] = schedule_bound(kind, BoundInput(k, inp.p_min, inp.s, inp.alpha, inp.lam, inp.m))
    return out


def schedule_bound_input(schedule: SmoothingSchedule, n: int, p_min: float, s: int = 1, partition: Partition | None = None) -> tuple[str, BoundInput]:
    """Pair a schedule with the matching schedule bound kind and parameters."""
    if isinstance(schedule, FixedRate):
        return "fixed", BoundInput(n, p_min, s, alpha=schedule.alpha, partition=partition)
    if isinstance(schedule, DecayingRate):
        return "decaying", BoundInput(n, p_min, s, partition=partition)
    if isinstance(schedule, CountSmoothing):
        return "count", BoundInput(n, p_min, s, lam=schedule.lam, m=schedule.m, partition=partition)
    raise TypeError(f"unsupported schedule {schedule!r}")


# -- exhaustive oracles -------------------------------------------------------


def _check_exhaustive(n: int) -> None:
    if not 1 <= n <= MAX_EXHAUSTIVE_N:
        raise ValueError(f"exhaustive enumeration supports 1 <= n <= {MAX_EXHAUSTIVE_N}, got {n}")


def exhaustive_code_lengths(schedule: SmoothingSchedule, p1: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """(all 2^n sequences, their code lengths)."""
    _check_exhaustive(n)
    seqs = all_sequences(n)
    costs = batch_letter_costs(seqs, schedule.rates(n), p1)
    return seqs, costs.sum(axis=1)


def exhaustive_redundancies(schedule: SmoothingSchedule, p1: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """(all sequences, code length minus empirical entropy for each)."""
    seqs, lengths = exhaustive_code_lengths(schedule, p1, n)
    return seqs, lengths - count_entropy(seqs.sum(axis=1), n)


def exhaustive_max_redundancy(schedule: SmoothingSchedule, p1: float, n: int) -> tuple[float, BitSequence]:
    seqs, red = exhaustive_redundancies(schedule, p1, n)
    i = int(np.argmax(red))
    return float(red[i]), BitSequence.from_array(seqs[i])


def segment_baselines(seqs: np.ndarray, partition: Partition) -> np.ndarray:
    """Piecewise baseline for every row of ``seqs``."""
    csum = np.concatenate([np.zeros((len(seqs), 1), np.int64), np.cumsum(seqs, axis=1, dtype=np.int64)], axis=1)
    b = np.asarray(partition.boundaries)
    ones = csum[:, b[1:]] - csum[:, b[:-1]]
    return count_entropy(ones, np.diff(b)[None, :]).sum(axis=1)


def exhaustive_max_pws_redundancy(schedule: SmoothingSchedule, p1: float, partition: Partition) -> tuple[float, BitSequence]:
    seqs, lengths = exhaustive_code_lengths(schedule, p1, partition.n)
    red = lengths - segment_baselines(seqs, partition)
    i = int(np.argmax(red))
    return float(red[i]), BitSequence.from_array(seqs[i])
