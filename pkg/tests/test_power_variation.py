import io
from math import comb

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lssvar.errors import CriticalRegime, TooShort
from lssvar.lss_sim import LssPath
from lssvar.power_variation import (increments_k, normalization_factor, power_variation,
                                    power_variation_values, regime_classify)

finite = st.floats(-1e3, 1e3, allow_nan=False)
paths = st.lists(finite, min_size=2, max_size=50)


def brute_force_variation(x, n, p, k):
    """V(p;k)_{i/n} = sum over j = k..i of |sum_l (-1)^l C(k,l) x[j-l]|^p, element by element."""
    out = []
    for i in range(len(x)):
        total = 0.0
        for j in range(k, i + 1):
            total += abs(sum((-1) ** l * comb(k, l) * x[j - l] for l in range(k + 1))) ** p
        out.append(total)
    return np.array(out)


@given(x=paths, k=st.integers(1, 3), p=st.sampled_from([0.5, 1.0, 1.5, 2.0, 3.0]))
def test_matches_brute_force(x, k, p):
    if len(x) < k + 1:
        with pytest.raises(TooShort):
            power_variation_values(x, 10, p, k)
        return
    got = power_variation_values(x, 10, p, k).values
    np.testing.assert_allclose(got, brute_force_variation(x, 10, p, k), rtol=1e-9, atol=1e-9)


@given(x=paths, k=st.integers(1, 3), p=st.floats(0.1, 4.0), c=st.floats(-50.0, 50.0))
def test_scaling(x, k, p, c):
    if len(x) < k + 1:
        return
    base = power_variation_values(x, 10, p, k).values
    scaled = power_variation_values(c * np.array(x), 10, p, k).values
    np.testing.assert_allclose(scaled, abs(c) ** p * base, rtol=1e-9, atol=1e-300)


@given(x=st.lists(finite, min_size=5, max_size=50), k=st.integers(1, 4))
def test_increments_compose(x, k):
    once = np.array(x)
    for _ in range(k):
        once = increments_k(once, 1)
    np.testing.assert_allclose(increments_k(x, k), once, rtol=1e-12, atol=1e-9)


def test_increment_indexing():
    x = np.array([0.0, 1.0, 4.0, 9.0, 16.0])
    np.testing.assert_array_equal(increments_k(x, 1), [1.0, 3.0, 5.0, 7.0])
    np.testing.assert_array_equal(increments_k(x, 2), [2.0, 2.0, 2.0])
    with pytest.raises(ValueError):
        increments_k(x, 0)


@given(x=st.lists(finite, min_size=4, max_size=50), k=st.integers(1, 3), p=st.floats(0.2, 3.0))
def test_series_nondecreasing_and_starts_at_zero(x, k, p):
    s = power_variation_values(x, 7, p, k)
    assert np.all(np.diff(s.values) >= 0)
    assert np.all(s.values[:k] == 0.0)
    assert s.at(-1.0) == 0.0 and s.at((len(x) - 1) / 7) == s.values[-1]


def test_at_is_right_continuous_step():
    s = power_variation_values(np.array([0.0, 1.0, 3.0, 0.0]), 4, 1.0, 1)
    assert s.at(0.2) == 0.0 and s.at(0.25) == 1.0 and s.at(0.5) == 3.0 and s.at(0.74) == 3.0
    with pytest.raises(ValueError):
        s.at(1.0)


def test_power_variation_of_path_and_csv():
    path = LssPath(np.arange(5) / 4, np.array([0.0, 1.0, -1.0, 0.5, 0.5]))
    s = power_variation(path, 2.0, 1).with_normalization("iii", 1.2, 0.0)
    assert s.n == 4 and s.normalization == ("iii", 4.0)
    buf = io.StringIO()
    s.write_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "t,raw_value,normalized_value,regime"
    assert lines[-1] == "1,7.25,29,iii"
    with pytest.raises(ValueError):
        power_variation(LssPath(np.array([0.1, 0.35]), np.zeros(2)), 1.0, 1)


@pytest.mark.parametrize("alpha,beta,p,k,tag", [
    (0.3, 0.0, 3.0, 1, "i"),
    (0.1, 1.5, 1.0, 1, "ii"),
    (0.2, 1.5, 0.5, 1, "ii"),
    (1.2, 0.0, 2.0, 1, "iii"),
    (0.9, 1.5, 2.0, 1, "iii"),
    (0.1, 1.5, 1.5, 1, "critical"),
    (0.5, 1.5, 2.0, 1, "critical"),
    (1.0 - 1.0 / 1.5, 1.5, 1.2, 1, "critical"),
    (0.5, 0.0, 0.5, 1, "uncovered"),
    (1.5, 1.5, 3.0, 2, "i"),
])
def test_regime_table(alpha, beta, p, k, tag):
    assert regime_classify(alpha, beta, p, k) == tag


def test_critical_has_no_normalisation():
    with pytest.raises(CriticalRegime):
        normalization_factor("critical", 100, 1.5, 1, 0.1, 1.5)
    assert normalization_factor("i", 100, 2.0, 1, 0.25, 0.0) == pytest.approx(10.0)
    assert normalization_factor("ii", 64, 1.0, 1, 0.5, 2.0 / 1.5) == pytest.approx(64 ** 0.25)
    assert normalization_factor("iii", 10, 2.0, 2, 1.5, 0.0) == pytest.approx(1000.0)
