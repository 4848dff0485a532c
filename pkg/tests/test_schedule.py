import math
import sys
import warnings

import numpy as np
import pytest

from espsmooth.schedule import (
    AssumptionViolation,
    CountSmoothing,
    DecayingRate,
    FixedRate,
    SmoothingSchedule,
    optimal_fixed_alpha,
)

SCHEDULES = [FixedRate(0.75), FixedRate(0.9), DecayingRate(), CountSmoothing(0.5, 1), CountSmoothing(0.9, 3)]


def test_fixed_rate_constant():
    s = FixedRate(0.75)
    assert [s.rate_at(k) for k in (1, 2, 50)] == [0.75] * 3


def test_decaying_first_rate():
    assert DecayingRate().rate_at(1) == pytest.approx(math.exp(-math.pi / math.sqrt(24)), rel=1e-15)
    assert DecayingRate().rate_at(1) == pytest.approx(0.526621, abs=1e-6)
    assert DecayingRate().rate_at(1) > 0.5


def test_count_first_rate_by_hand():
    # t_0 = 1, t_1 = 0.5 * 1 + 1 = 1.5, alpha_1 = 0.5 / 1.5
    s = CountSmoothing(0.5, 1)
    assert s.rate_at(1) == pytest.approx(1 / 3, rel=1e-15)
    cur = s.cursor()
    assert cur.advance() == pytest.approx(1 / 3, rel=1e-15)
    assert cur.t == pytest.approx(1.5)


@pytest.mark.parametrize("sched", SCHEDULES, ids=repr)
def test_rate_at_zero_rejected(sched):
    with pytest.raises(ValueError):
        sched.rate_at(0)


@pytest.mark.parametrize("bad", [0.0, 1.0, -0.1, 1.5])
def test_fixed_rate_range(bad):
    with pytest.raises(ValueError):
        FixedRate(bad)


@pytest.mark.parametrize("lam, m", [(0.0, 1), (1.0, 1), (0.5, 0), (0.5, 1.5)])
def test_count_params(lam, m):
    with pytest.raises(ValueError):
        CountSmoothing(lam, m)


def test_assumption_flags():
    assert FixedRate(0.5).assumption_violated
    assert not FixedRate(0.51).assumption_violated
    assert not DecayingRate().assumption_violated
    # m = 1 gives alpha_1 = lam / (1 + lam) < 1/2 for every lam
    for lam in (0.1, 0.5, 0.96, 0.999):
        assert CountSmoothing(lam, 1).assumption_violated
    assert not CountSmoothing(0.75, 2).assumption_violated


class TestOptimalAlpha:
    def test_n1000(self):
        assert optimal_fixed_alpha(1000) == pytest.approx(0.9602, abs=5e-4)

    def test_threshold_at_five(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            a = optimal_fixed_alpha(5)
            assert a == pytest.approx(math.exp(-math.pi / math.sqrt(24)), rel=1e-15)
        assert a > 0.5

    def test_small_n_warns(self):
        with pytest.warns(AssumptionViolation):
            a = optimal_fixed_alpha(2)
        assert a == pytest.approx(math.exp(-math.pi / math.sqrt(6)), rel=1e-15)
        assert a == pytest.approx(0.277, abs=1e-3)

    def test_rejects_n1(self):
        with pytest.raises(ValueError):
            optimal_fixed_alpha(1)


class TestBetas:
    def test_fixed_power(self):
        cur = FixedRate(0.9).cursor()
        for _ in range(3):
            cur.advance()
        assert cur.beta == pytest.approx(0.729, rel=1e-14)

    @pytest.mark.parametrize("sched", SCHEDULES, ids=repr)
    def test_beta_zero_is_one(self, sched):
        cur = sched.cursor()
        assert cur.k == 0 and cur.beta == 1.0
        assert sched.betas(1)[0] == 1.0

    def test_count_closed_form_value(self):
        cur = CountSmoothing(0.9, 1).cursor()
        cur.advance()
        assert cur.beta == pytest.approx(0.09 / 0.19, rel=1e-14)
        assert cur.beta == pytest.approx(0.473684, abs=1e-6)

    @pytest.mark.parametrize("sched", SCHEDULES, ids=repr)
    def test_strictly_decreasing(self, sched):
        b = sched.betas(300)
        assert b[0] == 1.0
        assert np.all(np.diff(b) < 0) and np.all(b > 0)

    @pytest.mark.parametrize("lam", [0.1, 0.5, 0.9, 0.99])
    @pytest.mark.parametrize("m", [1, 2, 10])
    def test_count_incremental_matches_closed_form(self, lam, m):
        sched = CountSmoothing(lam, m)
        cur = sched.cursor()
        ln = math.log(lam)
        worst = worst_log = 0.0
        for i in range(1, 100_001):
            cur.advance()
            exact_log2 = (math.log(1 - lam**m) + i * ln - math.log1p(-(lam ** (m + i)))) / math.log(2)
            worst_log = max(worst_log, abs(cur.log2_beta - exact_log2) / max(1.0, abs(exact_log2)))
            if cur.beta >= sys.float_info.min:
                exact = sched.beta_closed_form(i)
                worst = max(worst, abs(cur.beta - exact) / exact)
        assert worst <= 1e-12
        assert worst_log <= 1e-12

    def test_fixed_log_space_long_run(self):
        sched = FixedRate(0.6)
        cur = sched.cursor()
        for _ in range(20_000):
            cur.advance()
        assert cur.log2_beta == pytest.approx(20_000 * math.log2(0.6), rel=1e-15)
        assert sched.log2_betas(20_001)[-1] == pytest.approx(cur.log2_beta, rel=1e-15)


def test_decaying_rates_increase_and_exceed_half():
    k = np.arange(1, 1_000_001, dtype=np.float64)
    a = np.exp(-np.pi / np.sqrt(12.0 * (k + 1)))
    assert np.all(a > 0.5)
    assert np.all(np.diff(a) > 0)
    # spot-check the schedule itself against the vectorised reference
    s = DecayingRate()
    for j in (1, 10, 1000, 10**6):
        assert s.rate_at(j) == pytest.approx(a[j - 1], rel=1e-15)


@pytest.mark.parametrize("lam", [0.3, 0.75, 0.9])
def test_count_rates_approach_lambda(lam):
    sched = CountSmoothing(lam, 1)
    rates = sched.rates(int(1e4 / (1 - lam)) + 10)
    # increasing up to last-ulp wiggle once the rate has converged
    assert np.all(np.diff(rates) >= -4e-16)
    assert np.all(rates <= lam)
    k0 = int(1e4 / (1 - lam))
    assert abs(rates[k0 - 1] - lam) < 1e-6


def test_count_ratio_inequality_grid():
    a = np.arange(1, 101)[:, None]
    b = np.arange(1, 101)[None, :]
    for lam in np.round(np.arange(0.05, 0.951, 0.05), 2):
        lhs = (1 - lam**a) / (1 - lam**b)
        mask = a <= b
        assert np.all(lhs[mask] >= (a / b)[mask])


@pytest.mark.parametrize("sched", SCHEDULES, ids=repr)
def test_params_roundtrip(sched):
    p1, p2 = sched.params()
    assert SmoothingSchedule.from_params(sched.schedule_id, p1, p2) == sched


def test_unknown_schedule_id():
    with pytest.raises(ValueError):
        SmoothingSchedule.from_params(7, 0.5, 0)
