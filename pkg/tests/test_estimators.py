import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bclab.errors import ContractViolation, NoDataError
from bclab.estimators import dimension_from_measure, dimension_from_waiting, recurrence_liminf
from bclab.seeding import trial_rng
from bclab.systems import CAT_MAP, CircleRotation, ExpandingMap, ToralAutomorphism, random_point

DOUBLING = ExpandingMap(2)
CAT = ToralAutomorphism(CAT_MAP)


def test_measure_slope_closed_forms():
    radii = [2.0**-k for k in range(10, 21)]
    one = dimension_from_measure(CircleRotation(0.3), (0.4,), radii)
    assert one.samples[-1][1] == pytest.approx(0.95)
    two = dimension_from_measure(CAT, (0.4, 0.1), radii)
    assert two.samples[-1][1] == pytest.approx(1.9)
    assert one.d_lower_proxy <= one.d_upper_proxy


def test_measure_slope_converges_at_fine_scales():
    radii = [2.0**-k for k in range(20, 31)]
    est = dimension_from_measure(CAT, (0.4, 0.1), radii)
    assert abs(est.d_lower_proxy - 2) <= 0.1
    est1 = dimension_from_measure(CircleRotation(0.3), (0.4,), radii)
    assert 1 - 0.04 <= est1.d_lower_proxy <= est1.d_upper_proxy <= 1
    # 1 + log 2 / log r is within 0.02 of 1 only below r = 2^-50
    assert 1 + math.log(2) / math.log(2.0**-50) == pytest.approx(0.98)


def test_measure_slope_preconditions():
    with pytest.raises(ContractViolation):
        dimension_from_measure(DOUBLING, (0.1,), [0.1, 0.05, 0.01])
    with pytest.raises(ContractViolation):
        dimension_from_measure(DOUBLING, (0.1,), [0.5, 0.1, 0.05, 0.01])


def test_full_ball_only_gives_no_data():
    with pytest.raises(NoDataError):
        dimension_from_waiting(DOUBLING, (0.1,), (0.3,), [0.5], 100)


def _waiting_band_fraction(system, radii, band, master):
    inside = []
    for i in range(100):
        rng = trial_rng(master, i)
        est = dimension_from_waiting(system, random_point(system, rng), random_point(system, rng), radii, 10**7)
        inside.append(band[0] <= est.d_lower_proxy and est.d_upper_proxy <= band[1])
    return float(np.mean(inside))


def test_doubling_waiting_dimension_is_one():
    frac = _waiting_band_fraction(DOUBLING, [2.0**-k for k in range(6, 17)], (0.85, 1.15), 9)
    assert frac >= 0.9


def test_cat_map_waiting_dimension_is_two():
    frac = _waiting_band_fraction(CAT, [2.0**-k for k in range(3, 11)], (1.7, 2.3), 9)
    assert frac >= 0.8


def test_fixed_point_recurs_immediately():
    q = recurrence_liminf(DOUBLING, (0.0,), 1.0, 100)
    assert q.running_min[0] == (2, 0.0)
    assert q.argmin == 1
    assert q.final == 0.0


def test_two_point_orbit_never_improves():
    q = recurrence_liminf(CircleRotation(0.5), (0.0,), 0.7, 1000, y=(0.25,))
    assert q.final == pytest.approx(0.25)
    assert q.argmin == 1


def test_recurrence_rejects_bad_beta():
    with pytest.raises(ContractViolation):
        recurrence_liminf(DOUBLING, (0.1,), 0.0, 10)


def _finals(beta):
    out = []
    for i in range(100):
        rng = trial_rng(12, i)
        x, y = random_point(DOUBLING, rng), random_point(DOUBLING, rng)
        out.append(recurrence_liminf(DOUBLING, x, beta, 10**6, y).final)
    return np.array(out)


def test_beta_dichotomy_for_doubling_map():
    assert np.mean(_finals(0.8) <= 0.05) >= 0.9
    assert np.mean(_finals(1.25) >= 1e-2) >= 0.8


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32), st.floats(0.3, 2.0), st.integers(2, 20_000))
def test_running_min_is_non_increasing_and_prefix_consistent(seed, beta, N):
    rng = np.random.default_rng(seed)
    system = CircleRotation("golden")
    x, y = random_point(system, rng), random_point(system, rng)
    q = recurrence_liminf(system, x, beta, N, y)
    values = [v for _, v in q.running_min]
    assert values == sorted(values, reverse=True)
    short = recurrence_liminf(system, x, beta, max(2, N // 2), y)
    common = dict(q.running_min)
    for n, v in short.running_min:
        if n in common:
            assert common[n] == v
