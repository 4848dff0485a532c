"""Binary probability estimation by exponential smoothing.

Estimator, rate schedules, redundancy bounds with exhaustive checks, the
worst-case redundancy experiment, and a range coder built on the estimator.
"""

from .bitseq import BitSequence, Partition, empirical_entropy, is_deterministic, pws_baseline
from .estimator import EspEstimator, SmoothedCountPredictor, code_length
from .schedule import AssumptionViolation, CountSmoothing, DecayingRate, FixedRate, SmoothingSchedule, optimal_fixed_alpha

__all__ = [
    "AssumptionViolation",
    "BitSequence",
    "CountSmoothing",
    "DecayingRate",
    "EspEstimator",
    "FixedRate",
    "Partition",
    "SmoothedCountPredictor",
    "SmoothingSchedule",
    "code_length",
    "empirical_entropy",
    "is_deterministic",
    "optimal_fixed_alpha",
    "pws_baseline",
]
