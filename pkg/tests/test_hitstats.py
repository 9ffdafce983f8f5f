import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bclab import oracles
from bclab.hitstats import HitStats, bc_proxy, hit_stats, stall_signature
from bclab.seeding import trial_rng
from bclab.systems import CAT_MAP, CircleRotation, ExpandingMap, Point, ToralAutomorphism, random_point
from bclab.targets import PowerLaw, TargetSequence


def _brute_hits(system, x, y, schedule, N):
    orbit = oracles.naive_orbit(system, x, N)
    return [n for n, p in enumerate(orbit, 1) if oracles.naive_distance(system, p, y.coords) <= schedule.radius_at(n)]


def test_full_measure_targets_hit_every_time():
    stats = hit_stats(CircleRotation("golden"), (0.1,), TargetSequence((0.4,), PowerLaw(0.6, 0.0001)), 100)
    final = stats[-1]
    assert (final.N, final.S_N) == (100, 100)
    assert final.sum_mu == pytest.approx(100.0)
    assert final.ratio == pytest.approx(1.0)


def test_period_two_orbit_misses_every_target():
    stats = hit_stats(CircleRotation(0.5), (0.0,), TargetSequence((0.25,), PowerLaw(0.1, 1)), 1000)
    assert stats[-1].S_N == 0
    assert stats[-1].ratio == 0.0


def _snapshot(N, hits):
    gaps = np.diff([0, *hits, N]) if hits else [N]
    return HitStats(N, len(hits), 1.0, tuple(hits), 0, hits[-1] if hits else 0, int(max(gaps)))


def test_bc_proxy_with_a_hit_at_every_step():
    N = 64
    snaps = [_snapshot(c, list(range(1, c + 1))) for c in (2, 4, 8, 16, 32, 64)]
    v = bc_proxy(snaps)
    assert v.hits_in_every_dyadic_window
    assert v.last_hit == N
    assert v.max_gap_ratio == pytest.approx(1 / N)


def test_bc_proxy_without_hits():
    snaps = [_snapshot(c, []) for c in (2, 4, 8, 16, 32, 64)]
    v = bc_proxy(snaps)
    assert not v.hits_in_every_dyadic_window
    assert v.last_hit == 0
    assert v.max_gap_ratio == 1.0


def test_bc_proxy_flags_an_empty_window():
    hits = [1, 17, 40, 70]  # nothing in (128, 256]
    snaps = [_snapshot(c, [h for h in hits if h <= c]) for c in (2, 4, 8, 16, 32, 64, 128, 256)]
    assert not bc_proxy(snaps).hits_in_every_dyadic_window
    assert bc_proxy(snaps[:-1]).hits_in_every_dyadic_window


@pytest.mark.parametrize("system", [ExpandingMap(2), CircleRotation("golden"), ToralAutomorphism(CAT_MAP)])
def test_hit_counts_match_brute_force(system):
    schedule = PowerLaw(0.3, 0.5)
    for i in range(3):
        rng = trial_rng(4, i)
        x, y = random_point(system, rng), random_point(system, rng)
        hits = _brute_hits(system, x, y, schedule, 3000)
        stats = hit_stats(system, x, TargetSequence(y, schedule), 3000)
        final = stats[-1]
        assert final.S_N == len(hits)
        assert list(final.hit_times) == hits
        assert final.max_gap == max(np.diff([0, *hits, 3000]))
        for s in stats:
            assert s.S_N == sum(h <= s.N for h in hits)


def test_hit_times_are_capped_but_counted():
    stats = hit_stats(CircleRotation("golden"), (0.1,), TargetSequence((0.4,), PowerLaw(0.6, 0.0001)), 500, cap=100)
    assert len(stats[-1].hit_times) == 100
    assert stats[-1].overflow == 400


def test_sbc_ratio_for_doubling_map():
    ratios = []
    for i in range(100):
        rng = trial_rng(31, i)
        x, y = random_point(ExpandingMap(2), rng), random_point(ExpandingMap(2), rng)
        ratios.append(hit_stats(ExpandingMap(2), x, TargetSequence(y, PowerLaw(0.25, 0.5)), 10**6)[-1].ratio)
    assert np.mean([0.9 <= r <= 1.1 for r in ratios]) >= 0.9


def test_golden_rotation_hits_every_dyadic_window():
    # K = 1 gives mu(A_n) = 2/n, about 1.4 expected hits per dyadic window
    system = CircleRotation("golden")
    ok = []
    for i in range(100):
        rng = trial_rng(41, i)
        x, y = random_point(system, rng), random_point(system, rng)
        ok.append(bc_proxy(hit_stats(system, x, TargetSequence(y, PowerLaw(1.0, 1)), 10**6)).hits_in_every_dyadic_window)
    assert np.mean(ok) >= 0.9


def test_identical_systems_have_identical_stall_signatures():
    rec = stall_signature(CircleRotation("golden"), CircleRotation("golden"), PowerLaw(0.25, 1), 10**4, 10)
    assert rec.median_ratio == 1.0


def test_two_constant_type_rotations_stall_alike():
    rec = stall_signature(CircleRotation("golden"), CircleRotation("silver"), PowerLaw(0.25, 1), 10**6, 50, master_seed=5)
    assert 0.5 <= rec.median_ratio <= 2.0


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32), st.integers(10, 5000), st.integers(10, 5000))
def test_checkpoints_are_prefix_consistent(seed, n1, n2):
    lo, hi = sorted((n1, n2))
    rng = np.random.default_rng(seed)
    system = CircleRotation("golden")
    x, y = random_point(system, rng), random_point(system, rng)
    target = TargetSequence(y, PowerLaw(0.2, 0.6))
    a = {s.N: s for s in hit_stats(system, x, target, lo)}
    b = {s.N: s for s in hit_stats(system, x, target, hi)}
    for n in a.keys() & b.keys():
        assert (a[n].S_N, a[n].last_hit, a[n].max_gap) == (b[n].S_N, b[n].last_hit, b[n].max_gap)
        assert a[n].sum_mu == pytest.approx(b[n].sum_mu)
    s_values = [b[n].S_N for n in sorted(b)]
    assert s_values == sorted(s_values)
