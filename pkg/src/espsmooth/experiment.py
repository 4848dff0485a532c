"""Approximate worst-case prefix redundancy of a class of estimators on piecewise-stationary inputs.

For every combination (q_0, q_1, ..., q_s) of grid values, q_0 is the prior
p(0) of the estimator and q_i fixes the number of 1-bits in segment i of a
random input. The pointwise maximum over all simulations of the prefix
redundancy is compared with the class bound at every prefix length.

Random streams: simulation (combination, repeat) draws from
``SeedSequence(seed, spawn_key=(q_0, ..., q_s in millionths, repeat))``, so a
simulation's input depends only on its own coordinates, never on the grid it
is part of, the chunking or the number of workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .bitseq import BitSequence, Partition, count_entropy
from .bounds import FIXED_SQRT_CONST, BoundInput, schedule_bound
from .estimator import EspEstimator, batch_letter_costs
from .schedule import CountSmoothing, DecayingRate, FixedRate, SmoothingSchedule, optimal_fixed_alpha

#: simulations per work unit; fixed so results never depend on the worker count
CHUNK_SIMULATIONS = 4096


def q_grid_from_step(eps: float, step: float) -> tuple[float, ...]:
    """eps, eps + step, ... up to 1 - eps, rounded to kill accumulation error."""
    count = int(math.floor((1.0 - 2.0 * eps) / step + 1e-9)) + 1
    return tuple(round(eps + i * step, 10) for i in range(count))


STUDY_PARTITION = Partition((0, 200, 700, 1000))
STUDY_GRID = q_grid_from_step(0.05, 0.05)


@dataclass(frozen=True)
class ExperimentConfig:
    """Defaults reproduce the full-scale study; :meth:`reduced` is the quick variant."""

    n: int = 1000
    partition: Partition = STUDY_PARTITION
    eps: float = 0.05
    q_grid: tuple[float, ...] = STUDY_GRID
    repeats: int = 100
    schedule: str = "fixed"
    alpha: float | None = None
    lam: float | None = None
    m: int = 1
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "q_grid", tuple(float(q) for q in self.q_grid))
        if self.partition.n != self.n:
            raise ValueError(f"partition covers {self.partition.n} letters, config n is {self.n}")
        if not 0.0 < self.eps <= 0.5:
            raise ValueError(f"eps must lie in (0, 0.5], got {self.eps}")
        if not self.q_grid:
            raise ValueError("q grid is empty")
        for q in self.q_grid:
            if not self.eps - 1e-12 <= q <= 1.0 - self.eps + 1e-12:
                raise ValueError(f"grid value {q} outside [eps, 1 - eps]")
        if self.repeats < 1:
            raise ValueError("repeats must be positive")
        if self.schedule not in ("fixed", "decaying", "count"):
            raise ValueError(f"unknown schedule {self.schedule!r}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.workers < 1:
            raise ValueError("workers must be positive")
        self.build_schedule()

    @classmethod
    def reduced(cls, **overrides) -> "ExperimentConfig":
        eps = overrides.get("eps", 0.05)
        base = dict(q_grid=q_grid_from_step(eps, 0.15), repeats=10)
        base.update(overrides)
        return cls(**base)

    @property
    def combinations(self) -> int:
        return len(self.q_grid) ** (self.partition.s + 1)

    @property
    def simulations(self) -> int:
        return self.combinations * self.repeats

    def build_schedule(self) -> SmoothingSchedule:
        if self.schedule == "fixed":
            return FixedRate(self.alpha if self.alpha is not None else optimal_fixed_alpha(self.n))
        if self.schedule == "decaying":
            return DecayingRate()
        lam = self.lam if self.lam is not None else optimal_fixed_alpha(self.n)
        return CountSmoothing(lam, self.m)

    def class_bound(self) -> np.ndarray:
        """Bound on the prefix redundancy of every class member, for k = 1..n."""
        s, eps = self.partition.s, self.eps
        k = np.arange(1, self.n + 1)
        if self.schedule == "fixed" and self.alpha is None:
            return s * (FIXED_SQRT_CONST * np.sqrt(k - 1) + math.log2(1.0 / eps))
        sched = self.build_schedule()
        if self.schedule == "fixed":
            return np.array([schedule_bound("fixed", BoundInput(int(j), eps, s, alpha=sched.alpha)) for j in k])
        if self.schedule == "decaying":
            return np.array([schedule_bound("decaying", BoundInput(int(j), eps, s)) for j in k])
        return np.array([schedule_bound("count", BoundInput(int(j), eps, s, lam=sched.lam, m=sched.m)) for j in k])

    @classmethod
    def from_text(cls, text: str, reduced: bool = True) -> "ExperimentConfig":
        """Parse ``key=value`` lines; ``#`` starts a comment."""
        values: dict = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"line {lineno}: expected key=value, got {raw!r}")
            key, val = (part.strip() for part in line.split("=", 1))
            values[key] = val
        return cls.from_mapping(values, reduced=reduced)

    @classmethod
    def from_mapping(cls, values: dict, reduced: bool = True) -> "ExperimentConfig":
        kw: dict = {}
        known = {"n", "partition", "eps", "q_step", "q_grid", "repeats", "schedule", "alpha", "lambda", "m", "seed", "workers"}
        unknown = set(values) - known
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
        if "n" in values:
            kw["n"] = int(values["n"])
        if "partition" in values:
            kw["partition"] = parse_partition(values["partition"])
            kw.setdefault("n", kw["partition"].n)
        elif "n" in values:
            kw["partition"] = Partition.single(kw["n"])
        for key, conv in (("eps", float), ("repeats", int), ("m", int), ("seed", int), ("workers", int), ("alpha", float)):
            if key in values:
                kw[key] = conv(values[key])
        if "lambda" in values:
            kw["lam"] = float(values["lambda"])
        if "schedule" in values:
            kw["schedule"] = str(values["schedule"])
        eps = kw.get("eps", 0.05)
        if "q_grid" in values:
            kw["q_grid"] = tuple(float(v) for v in str(values["q_grid"]).split(","))
        elif "q_step" in values:
            kw["q_grid"] = q_grid_from_step(eps, float(values["q_step"]))
        elif "eps" in values:
            kw["q_grid"] = q_grid_from_step(eps, 0.15 if reduced else 0.05)
        return cls.reduced(**kw) if reduced else cls(**kw)


def parse_partition(text: str) -> Partition:
    """``"0,200,700,1000"``; a missing leading 0 is implied."""
    bounds = [int(v) for v in str(text).replace(" ", "").split(",") if v]
    if bounds and bounds[0] != 0:
        bounds.insert(0, 0)
    return Partition(tuple(bounds))


@dataclass
class RedundancyCurve:
    k: np.ndarray
    r_measured: np.ndarray
    bound: np.ndarray
    simulations: int = 0
    schedule: str = ""
    meta: dict = field(default_factory=dict)

    @property
    def dominance_holds(self) -> bool:
        return bool(np.all(self.bound >= self.r_measured))

    def at(self, k: int) -> tuple[float, float]:
        return float(self.r_measured[k - 1]), float(self.bound[k - 1])


# -- sampling and traces --------------------------------------------------------


def _ones_in(fraction: float, length: int) -> int:
    # round first: 0.35 * 200 is 69.999... in binary floating point
    return int(math.floor(round(fraction * length, 9)))


def _sample_array(partition: Partition, fractions, rng: np.random.Generator) -> np.ndarray:
    parts = []
    for (a, b), q in zip(partition.segments, fractions):
        length = b - a
        parts.append(rng.permutation(length) < _ones_in(q, length))
    return np.concatenate(parts).astype(np.uint8)


def sample_sequence(partition: Partition, fractions, rng: np.random.Generator) -> BitSequence:
    """Uniformly random sequence whose i-th segment holds exactly floor(q_i * length) ones."""
    if len(fractions) != partition.s:
        raise ValueError(f"need {partition.s} fractions, got {len(fractions)}")
    if any(not 0.0 <= q <= 1.0 for q in fractions):
        raise ValueError("fractions must lie in [0, 1]")
    return BitSequence.from_array(_sample_array(partition, fractions, rng))


def simulation_rng(seed: int, qs, repeat: int) -> np.random.Generator:
    key = tuple(int(round(q * 1_000_000)) for q in qs) + (int(repeat),)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


def prefix_baselines(bits: np.ndarray, partition: Partition) -> np.ndarray:
    """Piecewise baseline of every prefix: row-wise sum of h over segments cut at k."""
    bits = np.atleast_2d(bits)
    out = np.empty(bits.shape, dtype=np.float64)
    done = np.zeros(len(bits))
    for a, b in partition.segments:
        ones = np.cumsum(bits[:, a:b], axis=1, dtype=np.int64)
        seg = count_entropy(ones, np.arange(1, b - a + 1)[None, :])
        out[:, a:b] = done[:, None] + seg
        done = done + seg[:, -1]
    return out


def prefix_redundancy_trace(est: EspEstimator, x: BitSequence, partition: Partition) -> np.ndarray:
    """Code length of x_{1:k} minus the baseline cut at k, for k = 1..n, in one pass."""
    if partition.n != len(x):
        raise ValueError(f"partition covers {partition.n} letters, sequence has {len(x)}")
    letters = x.to_array().tolist()
    trace = np.empty(len(x))
    total = 0.0
    done = 0.0
    k = 0
    for a, b in partition.segments:
        ones = 0
        for j in range(a, b):
            bit = letters[j]
            total += est.update(bit)
            ones += bit
            trace[k] = total - (done + float(count_entropy(ones, j - a + 1)))
            k += 1
        done += float(count_entropy(ones, b - a))
    return trace


def _decode_combo(index: int, base: int, digits: int) -> list[int]:
    out = []
    for _ in range(digits):
        index, r = divmod(index, base)
        out.append(r)
    return out[::-1]


def _run_chunk(config: ExperimentConfig, start: int, stop: int) -> np.ndarray:
    """Pointwise max prefix redundancy over simulations [start, stop) in canonical order."""
    grid = config.q_grid
    digits = config.partition.s + 1
    rates = config.build_schedule().rates(config.n)
    bits = np.empty((stop - start, config.n), dtype=np.uint8)
    priors = np.empty(stop - start)
    for row, sim in enumerate(range(start, stop)):
        combo, rep = divmod(sim, config.repeats)
        qs = [grid[i] for i in _decode_combo(combo, len(grid), digits)]
        rng = simulation_rng(config.seed, qs, rep)
        bits[row] = _sample_array(config.partition, qs[1:], rng)
        priors[row] = 1.0 - qs[0]  # q_0 is p(0)
    costs = batch_letter_costs(bits, rates, priors)
    traces = np.cumsum(costs, axis=1) - prefix_baselines(bits, config.partition)
    return traces.max(axis=0)


def _chunk_bounds(total: int) -> list[tuple[int, int]]:
    return [(lo, min(lo + CHUNK_SIMULATIONS, total)) for lo in range(0, total, CHUNK_SIMULATIONS)]


def run(config: ExperimentConfig, workers: int | None = None) -> RedundancyCurve:
    """Run every simulation of ``config`` and fold the pointwise maximum."""
    workers = config.workers if workers is None else workers
    chunks = _chunk_bounds(config.simulations)
    best = np.full(config.n, -np.inf)
    if workers <= 1 or len(chunks) == 1:
        for lo, hi in chunks:
            np.maximum(best, _run_chunk(config, lo, hi), out=best)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_chunk, config, lo, hi) for lo, hi in chunks]
            for fut in futures:
                np.maximum(best, fut.result(), out=best)
    sched = config.build_schedule()
    meta = {"schedule_params": sched.params(), "assumption_violated": sched.assumption_violated}
    return RedundancyCurve(
        k=np.arange(1, config.n + 1),
        r_measured=best,
        bound=config.class_bound(),
        simulations=config.simulations,
        schedule=config.schedule,
        meta=meta,
    )


def emit_csv(curve: RedundancyCurve, path) -> Path:
    """Write ``k,r_measured_bits,bound_bits`` rows with 9 significant digits and LF endings."""
    path = Path(path)
    lines = ["k,r_measured_bits,bound_bits"]
    lines += [f"{int(k)},{r:.9g},{b:.9g}" for k, r, b in zip(curve.k, curve.r_measured, curve.bound)]
    try:
        with open(path, "w", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write curve to {path}: {exc.strerror or exc}") from exc
    return path


def curve_from_arrays(r_measured, bound, schedule: str = "") -> RedundancyCurve:
    r_measured = np.asarray(r_measured, dtype=np.float64)
    return RedundancyCurve(np.arange(1, len(r_measured) + 1), r_measured, np.asarray(bound, dtype=np.float64), schedule=schedule)


def with_overrides(config: ExperimentConfig, **kw) -> ExperimentConfig:
    return replace(config, **kw)
