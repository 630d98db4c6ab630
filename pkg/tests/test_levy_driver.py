import io

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from lssvar.errors import MissingJumpList
from lssvar.levy_driver import (DriverPath, DriverSpec, blumenthal_getoor, merge_jumps,
                                read_two_column_csv, sample_stable, simulate_compound_poisson,
                                simulate_stable_increments, split_by_threshold,
                                stable_levy_constant, write_increments_csv, write_jumps_csv)

CP_SPECS = [
    DriverSpec("compound_poisson", rate=5.0, jump_law="rademacher", size=1.0),
    DriverSpec("compound_poisson", rate=3.0, jump_law="two_sided_pareto", tail_index=1.5, min_size=0.2),
    DriverSpec("compound_poisson", rate=2.0, jump_law="atoms", atoms=((0.5, 0.25), (2.0, 0.75))),
]


def test_spec_validation():
    with pytest.raises(ValueError):
        DriverSpec("stable", beta=2.0)
    with pytest.raises(ValueError):
        DriverSpec("compound_poisson", rate=-1.0)
    with pytest.raises(ValueError):
        DriverSpec("compound_poisson", jump_law="atoms", atoms=((1.0, 0.4),))
    with pytest.raises(ValueError):
        DriverSpec("gaussian")
    assert blumenthal_getoor(DriverSpec("stable", beta=1.3)) == 1.3
    assert blumenthal_getoor(CP_SPECS[0]) == 0.0


def test_stable_sampling_is_deterministic():
    a = sample_stable(1.5, 1.0, np.random.default_rng(7), size=1000)
    b = sample_stable(1.5, 1.0, np.random.default_rng(7), size=1000)
    assert a.tobytes() == b.tobytes()


@pytest.mark.parametrize("spec", CP_SPECS)
def test_compound_poisson_is_deterministic(spec):
    a = simulate_compound_poisson(spec, -3.0, 1.0, np.random.default_rng(3))
    b = simulate_compound_poisson(spec, -3.0, 1.0, np.random.default_rng(3))
    assert a.jump_times.tobytes() == b.jump_times.tobytes()
    assert a.jump_sizes.tobytes() == b.jump_sizes.tobytes()


@pytest.mark.parametrize("beta", [0.8, 1.0, 1.5, 1.9])
def test_stable_signs_are_symmetric(beta):
    x = sample_stable(beta, 1.0, np.random.default_rng(11), size=100_000)
    assert stats.binomtest(int(np.sum(x > 0)), len(x)).pvalue > 0.01


@pytest.mark.parametrize("spec", CP_SPECS)
def test_compound_poisson_signs_are_symmetric(spec):
    path = simulate_compound_poisson(spec, 0.0, 100_000.0 / spec.rate, np.random.default_rng(5))
    assert len(path.jump_sizes) > 90_000
    assert stats.binomtest(int(np.sum(path.jump_sizes > 0)), len(path.jump_sizes)).pvalue > 0.01


@pytest.mark.parametrize("beta", [0.7, 1.2, 1.5])
def test_stable_tail_exponent(beta):
    # the Hill estimate on the top 1% is biased upward as beta approaches 2,
    # whatever the generator; larger beta is covered by the KS test below
    x = np.abs(sample_stable(beta, 1.0, np.random.default_rng(13), size=1_000_000))
    top = np.sort(x)[-10_000:]
    hill = 1.0 / np.mean(np.log(top / top[0]))
    assert beta - 0.1 <= hill <= beta + 0.1


def test_stable_law_matches_scipy_cdf():
    x = sample_stable(1.8, 1.0, np.random.default_rng(13), size=5000)
    assert stats.kstest(x, stats.levy_stable(1.8, 0.0).cdf).pvalue > 0.01


def test_stable_increment_scale():
    # a cell of width h has scale gamma h^(1/beta); check the median of |X| / scale
    beta, h = 1.5, 1e-3
    path = simulate_stable_increments(beta, 2.0, 0.0, h, 200_000, np.random.default_rng(1))
    ref = np.median(np.abs(sample_stable(beta, 1.0, np.random.default_rng(2), size=200_000)))
    assert np.median(np.abs(path.increments)) / (2.0 * h ** (1 / beta)) == pytest.approx(ref, rel=0.02)


def test_cauchy_special_case():
    x = sample_stable(1.0, 1.0, np.random.default_rng(4), size=200_000)
    assert np.median(np.abs(x)) == pytest.approx(1.0, rel=0.02)


def test_levy_constant_gives_unit_tail():
    # P(|X| > x) ~ 2 C x^-beta / beta for the law with cf exp(-|u|^beta)
    beta = 1.5
    C = stable_levy_constant(beta)
    x = np.abs(sample_stable(beta, 1.0, np.random.default_rng(6), size=2_000_000))
    level = 30.0
    assert np.mean(x > level) == pytest.approx(2 * C * level ** -beta / beta, rel=0.06)


@pytest.mark.parametrize("spec", CP_SPECS)
def test_compound_poisson_window_and_counts(spec):
    path = simulate_compound_poisson(spec, -2.0, 3.0, np.random.default_rng(9))
    assert np.all(np.diff(path.jump_times) > 0)
    assert np.all((path.jump_times >= -2.0) & (path.jump_times < 3.0))
    assert np.all(path.jump_sizes != 0)
    counts = [len(simulate_compound_poisson(spec, 0.0, 10.0, np.random.default_rng(r)).jump_times)
              for r in range(400)]
    assert np.mean(counts) == pytest.approx(10.0 * spec.rate, rel=0.05)


def test_zero_rate_driver_has_no_jumps():
    path = simulate_compound_poisson(DriverSpec("compound_poisson", rate=0.0), 0.0, 5.0,
                                     np.random.default_rng(0))
    assert len(path.jump_times) == 0 and path.jumps == []


@given(seed=st.integers(0, 2 ** 32 - 1), a=st.floats(0.05, 5.0), spec_idx=st.integers(0, 2))
def test_split_by_threshold_partitions(seed, a, spec_idx):
    path = simulate_compound_poisson(CP_SPECS[spec_idx], -1.0, 1.0, np.random.default_rng(seed))
    big, small = split_by_threshold(path, a)
    assert np.all(np.abs(big.jump_sizes) > a) and np.all(np.abs(small.jump_sizes) <= a)
    times, sizes = merge_jumps(big, small)
    assert times.tobytes() == path.jump_times.tobytes()
    assert sizes.tobytes() == path.jump_sizes.tobytes()
    assert set(big.jump_times).isdisjoint(small.jump_times)


def test_grid_increments_regroup_jumps():
    path = DriverPath(0.0, 1.0, [0.0], jump_times=np.array([0.05, 0.15, 0.17, 0.95]),
                      jump_sizes=np.array([1.0, -2.0, 0.5, 3.0]), window_end=1.0)
    np.testing.assert_allclose(path.grid_increments(0.0, 0.1, 10),
                               [1.0, -1.5, 0, 0, 0, 0, 0, 0, 0, 3.0])
    with pytest.raises(MissingJumpList):
        DriverPath(0.0, 0.1, np.zeros(3)).grid_increments(0.0, 0.1, 3)
    with pytest.raises(MissingJumpList):
        split_by_threshold(DriverPath(0.0, 0.1, np.zeros(3)), 1.0)


def test_csv_round_trip_is_exact():
    path = simulate_stable_increments(1.5, 1.0, -0.5, 1 / 3, 50, np.random.default_rng(0))
    buf = io.StringIO()
    write_increments_csv(path, buf)
    buf.seek(0)
    t, x = read_two_column_csv(buf)
    assert x.tobytes() == path.increments.tobytes()
    np.testing.assert_allclose(t, -0.5 + np.arange(50) / 3, rtol=0, atol=1e-13)
    cp = simulate_compound_poisson(CP_SPECS[1], 0.0, 2.0, np.random.default_rng(1))
    buf = io.StringIO()
    write_jumps_csv(cp.jump_times, cp.jump_sizes, buf)
    buf.seek(0)
    assert buf.readline().strip() == "time,size"
    buf.seek(0)
    t, s = read_two_column_csv(buf)
    assert t.tobytes() == cp.jump_times.tobytes() and s.tobytes() == cp.jump_sizes.tobytes()
