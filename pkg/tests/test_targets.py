import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bclab.errors import ContractViolation
from bclab.systems import CircleRotation, TorusRotation
from bclab.targets import (
    Explicit,
    Geometric,
    InverseF,
    PowerLaw,
    TargetSequence,
    dyadic_checkpoints,
    measure_series,
    mst_condition,
    parse_schedule,
    radius_at,
)


@pytest.mark.parametrize(
    "schedule, n, expected",
    [(PowerLaw(1, 1), 4, 0.25), (Geometric(0.5, 0.5), 2, 0.125), (PowerLaw(2, 0.5), 16, 0.5)],
)
def test_radius_examples(schedule, n, expected):
    assert radius_at(schedule, n) == pytest.approx(expected)


def test_schedules_start_at_one():
    with pytest.raises(ContractViolation):
        radius_at(PowerLaw(1, 1), 0)


def test_geometric_rejects_ratio_outside_unit_interval():
    with pytest.raises(ContractViolation, match=r"lambda must be in \(0,1\)"):
        Geometric(0.5, 1.5)


def test_explicit_schedule_must_be_non_increasing():
    with pytest.raises(ContractViolation):
        Explicit((0.1, 0.2))
    e = Explicit((0.3, 0.2, 0.2))
    assert radius_at(e, 3) == 0.2
    with pytest.raises(IndexError):
        radius_at(e, 4)


def test_harmonic_partial_sum():
    s = measure_series(CircleRotation(0.3), TargetSequence((0.5,), PowerLaw(0.5, 1)), 4)
    assert s.checkpoints == (2, 4)
    assert s.total == pytest.approx(float(Fraction(25, 12)))


def test_full_measure_balls_sum_to_n():
    s = measure_series(CircleRotation(0.3), TargetSequence((0.5,), PowerLaw(0.6, 0.0001)), 10)
    assert s.total == pytest.approx(10.0)


def test_geometric_series_is_bounded_below_one():
    s = measure_series(CircleRotation(0.3), TargetSequence((0.5,), Geometric(0.25, 0.5)), 10**4)
    # sum 2 * 0.25 * 0.5^n over n >= 1 = 0.5
    assert s.total == pytest.approx(0.5)
    assert s.total < 1.0
    assert s.growth == "bounded"


def test_growth_classes():
    circle = CircleRotation(0.3)
    assert measure_series(circle, TargetSequence((0.5,), PowerLaw(0.5, 1)), 2**16).growth == "logarithmic"
    assert measure_series(circle, TargetSequence((0.5,), PowerLaw(0.25, 0.5)), 2**16).growth == "power"


def test_dyadic_checkpoints():
    assert dyadic_checkpoints(16) == [2, 4, 8, 16]
    assert dyadic_checkpoints(20) == [2, 4, 8, 16, 20]


def test_mst_condition_examples():
    ok = mst_condition(PowerLaw(1, 0.8), 1.0, 10**5)
    assert ok.estimate == pytest.approx(0.8, abs=0.01)
    assert ok.satisfied
    bad = mst_condition(PowerLaw(1, 1.5), 1.0, 10**5)
    assert bad.estimate == pytest.approx(1.5, abs=0.01)
    assert not bad.satisfied


def test_mst_condition_geometric_grows_like_n_over_log_n():
    small = mst_condition(Geometric(0.5, 0.5), 1.0, 10**3).estimate
    large = mst_condition(Geometric(0.5, 0.5), 1.0, 10**5).estimate
    n = 10**5
    assert large == pytest.approx((n + 1) * math.log(2) / math.log(n), rel=1e-6)
    assert large > 50 * small
    assert not mst_condition(Geometric(0.5, 0.5), 100.0, 10**5).satisfied


def test_inverse_f_catalog():
    s = InverseF("logpower", (("K", 0.5), ("beta", 1.0), ("gamma", 1.0)))
    assert radius_at(s, 10) == pytest.approx(0.05 * math.log(10 + math.e))
    with pytest.raises(ContractViolation):
        InverseF("power", (("K", 1.0),))
    with pytest.raises(ContractViolation):
        InverseF("nonesuch", ())


def test_parse_schedule_forms(tmp_path):
    assert parse_schedule("powerlaw K=1.0 beta=0.8") == PowerLaw(1.0, 0.8)
    assert parse_schedule("geometric r0=0.5 lambda=0.9") == Geometric(0.5, 0.9)
    (tmp_path / "radii.csv").write_text("0.5\n0.25\n0.125\n")
    e = parse_schedule("explicit file=radii.csv", tmp_path)
    assert e.values == (0.5, 0.25, 0.125)
    with pytest.raises(ContractViolation, match="lambda"):
        parse_schedule("geometric r0=0.5 lambda=1.5")


def test_torus_target_uses_d_dimensional_measure():
    s = measure_series(TorusRotation((0.3, 0.4)), TargetSequence((0.5, 0.5), PowerLaw(0.1, 0.0001)), 2)
    assert s.total == pytest.approx(2 * 0.04, rel=1e-3)


@given(st.floats(0.01, 10), st.floats(0.01, 3), st.integers(1, 10**6))
def test_power_law_is_non_increasing(K, beta, n):
    s = PowerLaw(K, beta)
    assert radius_at(s, n + 1) <= radius_at(s, n)


@given(st.integers(2, 5000), st.integers(2, 5000))
def test_measure_series_prefix_consistency(a, b):
    lo, hi = sorted((a, b))
    target = TargetSequence((0.2,), PowerLaw(0.3, 0.7))
    s_lo = measure_series(CircleRotation(0.3), target, lo)
    s_hi = measure_series(CircleRotation(0.3), target, hi)
    shared = [c for c in s_lo.checkpoints if c in s_hi.checkpoints]
    for c in shared:
        assert s_lo.sums[s_lo.checkpoints.index(c)] == pytest.approx(s_hi.sums[s_hi.checkpoints.index(c)])
    assert np.all(np.diff(s_hi.sums) >= 0)
