import io
from math import sqrt

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lssvar.errors import DivergentMoment, DivergentSeries, NotConverged
from lssvar.kernel_math import HkParams, eval_hk
from lssvar.levy_driver import sample_stable
from lssvar.limit_oracles import (MarkedJump, abs_moment_stable, abs_moment_stable_closed_form,
                                  default_direct_terms, exact_marks, f_power_integral,
                                  f_power_integral_cumulative, marked_jumps, mp_constant,
                                  regime_i_oracle, stable_density, stable_limit_Z, vm_partial_sum,
                                  vm_series, vm_tail_bound, write_oracle_csv)

# mpmath references, regenerate with scripts/freeze_oracles.py
VM_REF = {(0.3, 1, 3.0, 0.0): 1.0236840737780923, (0.3, 1, 3.0, 0.25): 0.37457759983411406,
          (0.3, 1, 3.0, 0.5): 0.5832121293883371, (0.3, 1, 3.0, 1.0): 1.0236840737780923,
          (0.5, 2, 1.5, 0.3): 0.56419226196736821}
DENSITY_REF = {(1.5, 0.5): 0.26229684035439873, (1.5, 2.0): 0.084539623126147167,
               (1.5, 10.0): 0.001047776024929613, (0.7, 3.0): 0.028504199649718869}
ABS_MOMENT_REF = {(1.5, 1.0): 1.7054652401523882, (1.5, 0.5): 1.0804297973745145}
MP_REF = 1.7049518097705751  # alpha 0.1, beta 1.5, k = p = 1, c0 = gamma = 1


@pytest.mark.parametrize("key", list(VM_REF))
def test_vm_series_against_mpmath(key):
    assert vm_series(*key) == pytest.approx(VM_REF[key], rel=1e-12)


def test_vm_series_compact_support_exact():
    # alpha = 1, k = 2: hat function, terms 0.5^2 + 0.5^2
    assert vm_series(1.0, 2, 2.0, 0.5) == pytest.approx(0.5, abs=1e-12)
    assert vm_tail_bound(1.0, 2, 2.0, 5) == 0.0


def test_vm_series_divergence():
    with pytest.raises(DivergentSeries):
        vm_series(0.5, 1, 2.0, 0.5)  # (alpha - k) p = -1
    with pytest.raises(ValueError):
        vm_series(0.3, 1, 3.0, 1.5)


@pytest.mark.parametrize("alpha,k,p", [(0.3, 1, 3.0), (0.5, 2, 1.5), (1.4, 2, 2.0), (0.1, 1, 2.0)])
@pytest.mark.parametrize("u", [0.0, 0.3, 0.9])
@pytest.mark.parametrize("L", [3, 40, 500])
def test_vm_tail_certificate(alpha, k, p, u, L):
    L = max(L, k + 1)
    remainder = vm_partial_sum(alpha, k, p, u, 2 * L) - vm_partial_sum(alpha, k, p, u, L)
    assert 0 <= remainder <= vm_tail_bound(alpha, k, p, L)
    assert vm_series(alpha, k, p, u) - vm_partial_sum(alpha, k, p, u, L) <= vm_tail_bound(alpha, k, p, L)


def test_default_direct_terms_meets_tolerance():
    L = default_direct_terms(0.3, 1, 3.0, 1e-8)
    assert vm_tail_bound(0.3, 1, 3.0, L) < 1e-8
    assert default_direct_terms(1.0, 3, 2.0) == 4


def test_vm_series_is_continuous():
    # alpha > 1 keeps every term Lipschitz in u; fit the slope on a coarse grid, then refine
    coarse = np.linspace(0.0005, 0.9995, 100)
    fine = np.linspace(0.0005, 0.9995, 1000)
    vc = np.array([vm_series(1.5, 2, 3.0, u) for u in coarse])
    vf = np.array([vm_series(1.5, 2, 3.0, u) for u in fine])
    lip = np.max(np.abs(np.diff(vc)) / np.diff(coarse))
    assert np.all(np.abs(np.diff(vf)) <= 1.5 * lip * np.diff(fine))


def test_exact_marks():
    idx, u = exact_marks(np.array([0.1, 0.25, 0.999]), 4)
    np.testing.assert_array_equal(idx, [1, 1, 4])
    np.testing.assert_allclose(u, [0.6, 0.0, 0.004], atol=1e-12)
    jumps = marked_jumps([0.1], [2.0], [0.5], 4)
    assert (jumps[0].time, jumps[0].size, jumps[0].sigma_left) == (0.1, 2.0, 0.5)
    assert jumps[0].mark == pytest.approx(0.6)
    with pytest.raises(ValueError):
        MarkedJump(0.0, 1.0, 1.0, 1.5)


def test_stable_limit_Z():
    jumps = [MarkedJump(0.2, 1.0, 2.0, 0.5), MarkedJump(0.7, -1.0, 1.0, 0.0), MarkedJump(1.2, 5.0, 1.0, 0.5)]
    expect = 2.0 ** 3 * (8.0 * VM_REF[(0.3, 1, 3.0, 0.5)] + VM_REF[(0.3, 1, 3.0, 0.0)])
    assert stable_limit_Z(jumps, -2.0, 0.3, 1, 3.0, 1.0) == pytest.approx(expect, rel=1e-12)
    assert regime_i_oracle([0.2, 0.7], [1.0, -1.0], [2.0, 1.0], -2.0, 0.3, 1, 3.0, 10) == pytest.approx(
        2.0 ** 3 * (8.0 * VM_REF[(0.3, 1, 3.0, 0.0)] + VM_REF[(0.3, 1, 3.0, 0.0)]), rel=1e-12)


@pytest.mark.parametrize("key", list(DENSITY_REF))
def test_stable_density_against_mpmath(key):
    beta, x = key
    assert stable_density(x, beta) == pytest.approx(DENSITY_REF[key], rel=1e-8)


@pytest.mark.parametrize("key", list(ABS_MOMENT_REF))
def test_abs_moment_against_closed_form(key):
    assert abs_moment_stable(*key) == pytest.approx(ABS_MOMENT_REF[key], rel=1e-8)
    assert abs_moment_stable_closed_form(*key) == pytest.approx(ABS_MOMENT_REF[key], rel=1e-12)


def test_abs_moment_cauchy():
    assert abs_moment_stable(1.0, 0.5) == pytest.approx(sqrt(2.0), abs=1e-4)


def test_abs_moment_monte_carlo():
    x = np.abs(sample_stable(1.5, 1.0, np.random.default_rng(17), size=400_000)) ** 0.5
    se = x.std() / np.sqrt(len(x))
    assert abs(x.mean() - abs_moment_stable(1.5, 0.5)) < 3 * se


def test_abs_moment_increasing_and_blowing_up():
    ps = np.linspace(0.2, 1.45, 12)
    vals = np.array([abs_moment_stable(1.5, p) for p in ps])
    big = vals > 1
    assert np.all(np.diff(vals[big]) > 0)
    assert abs_moment_stable(1.5, 1.49) > 5 * abs_moment_stable(1.5, 0.75)
    with pytest.raises(DivergentMoment):
        abs_moment_stable(1.5, 1.5)


@given(c=st.floats(0.01, 100.0), g=st.floats(0.01, 100.0), p=st.sampled_from([0.5, 1.0, 1.2]))
def test_mp_constant_homogeneity(c, g, p):
    base = mp_constant(1.0, 1.0, 0.1, 1, 1.5, p)
    assert mp_constant(-c, 1.0, 0.1, 1, 1.5, p) == pytest.approx(c ** p * base, rel=1e-12)
    assert mp_constant(1.0, g, 0.1, 1, 1.5, p) == pytest.approx(g ** p * base, rel=1e-12)


def test_mp_constant_value():
    assert mp_constant(1.0, 1.0, 0.1, 1, 1.5, 1.0) == pytest.approx(MP_REF, rel=1e-8)


def test_f_power_integral_grid_and_callable():
    grid = np.linspace(0.0, 1.0, 2001)
    assert f_power_integral(grid ** 2, 1.5, grid=grid) == pytest.approx(0.25, rel=1e-6)

    class Ramp:
        breaks = np.array([0.5])

        def __call__(self, u):
            return np.where(np.asarray(u) < 0.5, np.asarray(u), 3.0)

    assert f_power_integral(Ramp(), 2.0) == pytest.approx(1 / 24 + 4.5, rel=1e-9)
    cum = f_power_integral_cumulative(Ramp(), 2.0, [0.25, 0.5, 1.0])
    np.testing.assert_allclose(cum, [0.25 ** 3 / 3, 1 / 24, 1 / 24 + 4.5], rtol=1e-9)
    with pytest.raises(ValueError):
        f_power_integral(grid, 1.0)


def test_f_power_integral_reports_non_convergence():
    rough = lambda u: np.sin(1e4 * np.asarray(u) ** 3) / np.maximum(np.asarray(u), 1e-300) ** 0.9
    with pytest.raises(NotConverged):
        f_power_integral(rough, 1.0, rtol=1e-12, max_rounds=1)


def test_oracle_csv():
    buf = io.StringIO()
    write_oracle_csv([("vm_series", {"u": 0.5, "alpha": 0.3}, 0.1)], buf)
    assert buf.getvalue().splitlines() == ["name,parameters,value", "vm_series,alpha=0.3;u=0.5,0.10000000000000001"]


def test_hk_far_series_used_in_vm_is_accurate():
    x = np.array([1e3, 1e6])
    np.testing.assert_allclose(eval_hk(HkParams(0.3, 1), x), 0.3 * x ** -0.7 * (1 + 0.35 / x), rtol=1e-6)
