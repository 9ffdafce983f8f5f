from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bclab import oracles
from bclab.errors import ContractViolation
from bclab.iet import rotation_iet
from bclab.systems import (
    CAT_MAP,
    BLOCK,
    CircleRotation,
    DigitStream,
    ExpandingMap,
    IntervalExchange,
    Point,
    ToralAutomorphism,
    TorusRotation,
    ball_measure,
    dist,
    from_config,
    inverse,
    orbit,
    orbit_blocks,
    orbit_fold,
    parse_system,
    point_from_stream,
    random_point,
    step,
    to_config,
)

unit = st.floats(min_value=0.0, max_value=1.0, exclude_max=True, allow_nan=False)
# points on the 2^-53 grid survive the 2^-64 lattice round trip exactly
grid = st.integers(min_value=0, max_value=2**53 - 1).map(lambda k: k * 2.0**-53)


def test_step_examples():
    assert step(CircleRotation(0.25), (0.0,)).coords == (0.25,)
    assert step(ExpandingMap(2), (0.75,)).coords == (0.5,)
    assert step(ToralAutomorphism(CAT_MAP), (0.5, 0.5)).coords == (0.5, 0.0)


def test_orbit_fold_empty_walk_returns_start():
    x0 = Point((0.3,))
    assert orbit_fold(CircleRotation(0.25), x0, 0, lambda n, p: True) == (x0, 0)


def test_orbit_fold_stops_when_visitor_says_so():
    last, steps = orbit_fold(CircleRotation(0.5), (0.0,), 100, lambda n, p: p.coords[0] != 0.5)
    assert steps == 1
    assert last.coords == (0.5,)


def test_doubling_orbit_of_one_third():
    seen = []
    orbit_fold(ExpandingMap(2), float(Fraction(1, 3)), 4, lambda n, p: seen.append(p.coords[0]))
    assert seen == pytest.approx([2 / 3, 1 / 3, 2 / 3, 1 / 3], abs=1e-14)


@pytest.mark.parametrize(
    "a, b, d, expected",
    [((0.1,), (0.9,), 1, 0.2), ((0.0, 0.0), (0.5, 0.1), 2, 0.5), ((0.3,), (0.3,), 1, 0.0)],
)
def test_dist_examples(a, b, d, expected):
    system = CircleRotation(0.5) if d == 1 else TorusRotation((0.5, 0.25))
    assert dist(system, a, b) == pytest.approx(expected)


@pytest.mark.parametrize("d, r, expected", [(1, 0.1, 0.2), (2, 0.1, 0.04), (1, 0.6, 1.0)])
def test_ball_measure_examples(d, r, expected):
    system = CircleRotation(0.5) if d == 1 else TorusRotation((0.5, 0.25))
    assert ball_measure(system, (0.5,) * d, r) == pytest.approx(expected)


def test_interval_ball_is_clipped_at_the_ends():
    system = IntervalExchange(rotation_iet(0.25))
    assert ball_measure(system, (0.05,), 0.1) == pytest.approx(0.15)
    assert ball_measure(system, (0.5,), 0.1) == pytest.approx(0.2)


def test_point_rejects_coordinates_outside_unit_interval():
    with pytest.raises(ContractViolation):
        Point((1.0,))
    with pytest.raises(ContractViolation):
        Point((-0.1,))


def test_dimension_mismatch_is_a_contract_violation():
    with pytest.raises(ContractViolation):
        step(ToralAutomorphism(CAT_MAP), (0.5,))
    with pytest.raises(ContractViolation):
        dist(CircleRotation(0.3), (0.1,), (0.1, 0.2))


def test_non_hyperbolic_or_non_unimodular_matrices_are_rejected():
    with pytest.raises(ContractViolation):
        ToralAutomorphism(((1, 1), (0, 1)))
    with pytest.raises(ContractViolation):
        ToralAutomorphism(((2, 0), (0, 1)))


def test_expanding_map_is_not_invertible():
    with pytest.raises(ContractViolation):
        inverse(ExpandingMap(2), (0.5,))


# --- orbit engines against one-step oracles ------------------------------------


@pytest.mark.parametrize(
    "system, x0",
    [
        (CircleRotation("golden"), Point((0.123,))),
        (TorusRotation(("golden", "silver")), Point((0.1, 0.7))),
        (ToralAutomorphism(CAT_MAP), Point((0.3141, 0.2718))),
        (IntervalExchange(rotation_iet(0.3819660112501051)), Point((0.42,))),
        (ExpandingMap(3), Point((0.1,))),
    ],
)
def test_orbit_matches_naive_stepping(system, x0):
    fast = orbit(system, x0, 300)
    slow = np.array(oracles.naive_orbit(system, x0, 300))
    if isinstance(system, ExpandingMap):
        # digit windows truncate below 2^-56 where the oracle rounds
        assert np.allclose(fast, slow, atol=2.0**-52, rtol=0)
    else:
        assert np.array_equal(fast, slow)


def test_digit_stream_orbit_matches_exact_rational_iteration():
    x0 = point_from_stream(DigitStream(seed=7, base=2))
    fast = orbit(ExpandingMap(2), x0, 2000)[:, 0]
    slow = np.array(oracles.expanding_orbit(2, x0, 2000))
    assert np.allclose(fast, slow, atol=2.0**-52, rtol=0)
    # stays generic long past the 53 bits of the float image
    assert fast[1500:].std() > 0.2


def test_float_doubling_collapses_but_digit_stream_does_not():
    x = 0.3
    for _ in range(60):
        x = (2 * x) % 1.0
    assert x == 0.0
    rng = np.random.default_rng(0)
    p = random_point(ExpandingMap(2), rng)
    assert orbit(ExpandingMap(2), p, 200)[-50:].max() > 0


@pytest.mark.parametrize(
    "system",
    [CircleRotation("golden"), ToralAutomorphism(CAT_MAP), ExpandingMap(2), IntervalExchange(rotation_iet(0.3))],
)
def test_orbit_prefix_consistency_across_block_sizes(system):
    x0 = random_point(system, np.random.default_rng(3))
    long = orbit(system, x0, 5000)
    blocked = np.concatenate(list(orbit_blocks(system, x0, 5000, block=97)))
    assert np.array_equal(long, blocked)
    assert np.array_equal(orbit(system, x0, 1234), long[:1234])


def test_orbit_crosses_the_default_block_boundary_cleanly():
    system = CircleRotation("silver")
    n = BLOCK + 10
    o = orbit(system, (0.0,), n)
    assert o.shape == (n, 1)
    assert np.array_equal(o[BLOCK - 5 : BLOCK + 5], np.array(oracles.naive_orbit(system, Point((0.0,)), n))[BLOCK - 5 : BLOCK + 5])


# --- properties -----------------------------------------------------------------


@given(unit, unit, unit)
def test_circle_distance_is_a_metric(a, b, c):
    s = CircleRotation(0.3)
    ab, ba = dist(s, (a,), (b,)), dist(s, (b,), (a,))
    assert ab == ba
    assert 0.0 <= ab <= 0.5
    assert dist(s, (a,), (a,)) == 0.0
    assert dist(s, (a,), (c,)) <= ab + dist(s, (b,), (c,)) + 1e-15


@given(st.tuples(unit, unit), st.tuples(unit, unit), st.tuples(unit, unit))
def test_torus_sup_distance_is_a_metric(a, b, c):
    s = TorusRotation((0.3, 0.4))
    assert dist(s, a, b) == dist(s, b, a)
    assert dist(s, a, c) <= dist(s, a, b) + dist(s, b, c) + 1e-15


@given(st.tuples(grid, grid))
def test_cat_map_inverse_round_trip_is_exact(x):
    s = ToralAutomorphism(CAT_MAP)
    assert inverse(s, step(s, x)).coords == x
    assert step(s, inverse(s, x)).coords == x


@given(grid, st.sampled_from(["golden", "silver", "3/7"]))
def test_rotation_inverse_round_trip(x, alpha):
    s = CircleRotation(alpha)
    # step output is read off the 2^-64 lattice at 53-bit resolution
    assert dist(s, inverse(s, step(s, (x,))), (x,)) <= 2.0**-52


@given(unit, st.floats(min_value=0.01, max_value=0.99))
def test_two_interval_exchange_equals_rotation_pointwise(x, alpha):
    rot = CircleRotation(alpha)
    ex = IntervalExchange(rotation_iet(alpha))
    assert dist(rot, step(rot, (x,)), step(ex, (x,))) <= 1e-12


@given(unit, st.floats(min_value=0.01, max_value=0.99))
def test_rotation_iet_orbit_tracks_circle_rotation(x, alpha):
    ex = IntervalExchange(rotation_iet(alpha))
    rot = CircleRotation(alpha)
    a = orbit(ex, (x,), 50)[:, 0]
    b = np.array(oracles.naive_orbit(rot, Point((x,)), 50))[:, 0]
    diff = np.abs(a - b)
    assert np.minimum(diff, 1 - diff).max() <= 1e-12


@settings(max_examples=25, deadline=None)
@given(unit, unit, st.sampled_from(["rotation", "expanding", "cat", "iet"]))
def test_lebesgue_measure_is_preserved(a, b, which):
    lo, hi = sorted((a, b))
    systems = {
        "rotation": CircleRotation("golden"),
        "expanding": ExpandingMap(3),
        "cat": ToralAutomorphism(CAT_MAP),
        "iet": IntervalExchange(rotation_iet(0.3)),
    }
    s = systems[which]
    X = np.random.default_rng(11).random((40_000, s.dim))
    Y = s.step_array(X)
    # mu(T^-1 A) = mu(A) for A = [lo, hi) x [0,1)^(d-1)
    frac = np.mean((Y[:, 0] >= lo) & (Y[:, 0] < hi))
    assert abs(frac - (hi - lo)) < 0.015


@given(st.sampled_from(
    ["rotation alpha=golden", "rotation alpha=3/7", "torus-rotation alpha=golden,silver", "expanding k=5",
     "automorphism matrix=2,1,1,1", "iet lengths=0.2,0.3,0.5 perm=3,1,2"]
))
def test_config_round_trip(text):
    s = parse_system(text)
    assert from_config(to_config(s)) == s
