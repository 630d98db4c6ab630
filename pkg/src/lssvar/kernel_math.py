"""Kernel evaluation: g, g0, derivatives, h_k, the weights g_{i,n} and related integrals.

Two kernel families are supported:

* ``gamma``: ``g(t) = c0 t**alpha exp(-decay t)`` for ``t > 0``;
* ``power``: ``g(t) = c0 t**alpha`` for ``t > 0`` with ``g0 = g``, which
  gives the linear fractional stable motion.

Every function accepts scalars or numpy arrays and returns the same shape.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import comb, isfinite

import numpy as np

from ._quad import adaptive_simpson, piecewise_simpson, power_tail_integral
from .errors import DivergentIntegral, NonIntegrableTail

FAMILIES = ("gamma", "power")
G0_MODES = ("zero", "equal_g")


@dataclass(frozen=True)
class KernelSpec:
    family: str = "gamma"
    c0: float = 1.0
    alpha: float = 0.5
    decay: float = 1.0
    g0_mode: str | None = None
    delta: float | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")
        if not self.alpha > 0:
            raise ValueError("alpha must be > 0")
        if self.c0 == 0:
            raise ValueError("c0 must be nonzero")
        if self.decay < 0:
            raise ValueError("decay must be >= 0")
        if self.delta is not None and not self.delta > 0:
            raise ValueError("delta must be > 0")
        mode = self.g0_mode
        if mode is None:
            mode = "equal_g" if self.family == "power" else "zero"
        if mode not in G0_MODES:
            raise ValueError(f"unknown g0_mode {mode!r}")
        if self.family == "power":
            if mode != "equal_g":
                raise ValueError("the power family requires g0_mode='equal_g'")
            object.__setattr__(self, "decay", 0.0)
        object.__setattr__(self, "g0_mode", mode)

    @property
    def rate(self) -> float:
        return self.decay if self.family == "gamma" else 0.0


@dataclass(frozen=True)
class HkParams:
    alpha: float
    k: int = 1

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be > 0")
        if int(self.k) != self.k or self.k < 1:
            raise ValueError("k must be a positive integer")


def _out(x, scalar):
    return float(x) if scalar else x


def falling_factorial(a: float, j: int) -> float:
    out = 1.0
    for i in range(j):
        out *= a - i
    return out


def eval_g(spec: KernelSpec, t):
    """Kernel ``g(t)``; exactly zero for ``t <= 0``."""
    scalar = np.ndim(t) == 0
    t = np.asarray(t, dtype=float)
    pos = t > 0
    tp = np.where(pos, t, 1.0)
    val = spec.c0 * tp ** spec.alpha
    if spec.rate:
        val = val * np.exp(-spec.rate * tp)
    return _out(np.where(pos, val, 0.0), scalar)


def eval_g0(spec: KernelSpec, t):
    if spec.g0_mode == "zero":
        return _out(np.zeros_like(np.asarray(t, dtype=float)), np.ndim(t) == 0)
    return eval_g(spec, t)


def eval_g_deriv(spec: KernelSpec, k: int, t):
    """k-th derivative of ``g`` on ``t > 0`` from the falling-factorial closed form."""
    scalar = np.ndim(t) == 0
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("eval_g_deriv requires t > 0")
    lam = spec.rate
    a = spec.alpha
    total = np.zeros_like(t)
    for j in range(k + 1):
        coef = comb(k, j) * (-lam) ** (k - j) * falling_factorial(a, j)
        if coef != 0.0:
            total = total + coef * t ** (a - j)
    if lam:
        total = total * np.exp(-lam * t)
    return _out(spec.c0 * total, scalar)


def kernel_difference(spec: KernelSpec, t, s):
    """``g(t - s) - g0(-s)``, evaluated without cancellation for ``s << 0``."""
    t, s = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(s, dtype=float))
    if spec.g0_mode == "zero":
        return eval_g(spec, t - s)
    d = -s
    past = (d > 0) & (t + d > 0)
    dp = np.where(past, d, 1.0)
    tp = np.where(past, t, 0.0)
    lam = spec.rate
    base = spec.c0 * dp ** spec.alpha * (np.exp(-lam * dp) if lam else 1.0)
    stable = base * np.expm1(spec.alpha * np.log1p(tp / dp) - lam * tp)
    return np.where(past, stable, eval_g(spec, t - s) - eval_g0(spec, d))


@lru_cache(maxsize=256)
def _hk_series_coeffs(alpha: float, k: int, terms: int = 24) -> np.ndarray:
    # h_k(x) = x**alpha * sum_m c_m x**(-m),  m = k .. k+terms-1
    coeffs = []
    for m in range(k, k + terms):
        binom_am = 1.0
        for i in range(m):
            binom_am *= (alpha - i) / (i + 1)
        d_m = sum((-1) ** j * comb(k, j) * float(j) ** m for j in range(k + 1))
        coeffs.append(binom_am * (-1) ** m * d_m)
    return np.array(coeffs)


def _hk_params(params, k=None) -> HkParams:
    if isinstance(params, HkParams):
        return params
    return HkParams(float(params), int(k if k is not None else 1))


def eval_hk(params: HkParams, x):
    """``h_k(x) = sum_j (-1)^j C(k,j) (x-j)_+^alpha``.

    For large ``x`` the alternating sum cancels badly, so the convergent
    expansion in ``1/x`` is used beyond ``8 (k + 1)``.
    """
    params = _hk_params(params)
    a, k = params.alpha, params.k
    scalar = np.ndim(x) == 0
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    far = x >= 8.0 * (k + 1)
    near = (x > 0) & ~far
    if near.any():
        xn = x[near]
        acc = np.zeros_like(xn)
        for j in range(k + 1):
            acc += (-1) ** j * comb(k, j) * np.maximum(xn - j, 0.0) ** a
        out[near] = acc
    if far.any():
        xf = x[far]
        coeffs = _hk_series_coeffs(a, k)
        inv = 1.0 / xf
        acc = np.zeros_like(xf)
        for c in coeffs[::-1]:
            acc = (acc + c) * inv
        # Horner above produced sum_m c_m x^-(m-k+1); restore the offset
        out[far] = xf ** a * acc * inv ** (k - 1)
    return _out(out, scalar)


def weights_gin(spec: KernelSpec, k: int, n: int, i: int, s):
    """``g_{i,n}(s) = sum_j (-1)^j C(k,j) g((i-j)/n - s)``."""
    s = np.asarray(s, dtype=float)
    total = np.zeros(np.shape(s))
    for j in range(k + 1):
        total = total + (-1) ** j * comb(k, j) * eval_g(spec, (i - j) / n - s)
    return _out(total, np.ndim(s) == 0)


def hk_tail_constant(alpha: float, k: int) -> float:
    """C with ``|h_k(x)| <= C x**(alpha-k)`` for ``x >= k+1`` (mean value theorem)."""
    return abs(falling_factorial(alpha, k)) * (k + 1) ** max(k - alpha, 0.0)


def hk_compact_support(alpha: float, k: int) -> bool:
    """True when ``alpha`` is an integer below ``k``: then ``h_k = 0`` on ``[k, inf)``."""
    return float(alpha).is_integer() and alpha < k


HK_HEAD_EXTENT = 20


@lru_cache(maxsize=512)
def _hk_integral_parts(alpha: float, k: int, q: float) -> tuple[float, float, float]:
    params = HkParams(alpha, k)
    expo = (alpha - k) * q
    cut = float(k + HK_HEAD_EXTENT)
    f = lambda x: np.abs(eval_hk(params, x)) ** q
    if hk_compact_support(alpha, k):
        head = piecewise_simpson(f, np.arange(0.0, k + 1.0), tol=1e-11, max_depth=80)
        return head, 0.0, 0.0
    if expo >= -1.0:
        raise NonIntegrableTail(
            f"|h_k|^q is not integrable at infinity: (alpha-k)q = {expo:.6g} >= -1")
    head = piecewise_simpson(f, np.arange(0.0, cut + 1.0), tol=1e-11, max_depth=80)
    tail = power_tail_integral(f, cut, expo, tol=1e-12)
    bound = hk_tail_constant(alpha, k) ** q * cut ** (expo + 1.0) / (-expo - 1.0)
    return head, tail, bound


def hk_abs_power_integral(params: HkParams, q: float) -> float:
    """``int_0^inf |h_k(x)|^q dx`` to about 1e-10 absolute accuracy."""
    params = _hk_params(params)
    head, tail, _ = _hk_integral_parts(float(params.alpha), int(params.k), float(q))
    return head + tail


def hk_abs_power_integral_bounds(params: HkParams, q: float) -> tuple[float, float]:
    """Certified enclosure ``[head, head + tail bound]`` of the same integral."""
    params = _hk_params(params)
    head, _, bound = _hk_integral_parts(float(params.alpha), int(params.k), float(q))
    return head, head + bound


# -- Assumption (A) diagnostics --------------------------------------------------------


def _deriv_poly_roots(spec: KernelSpec, j: int) -> np.ndarray:
    # g^{(j)}(t) = c0 exp(-lam t) t^(alpha-j) P_j(t); P_j has degree j in t
    lam, a = spec.rate, spec.alpha
    coeffs = [comb(j, i) * (-lam) ** (j - i) * falling_factorial(a, i) for i in range(j + 1)]
    # coeffs[i] multiplies t^(j-i); np.roots wants highest degree first
    coeffs = np.array(coeffs, dtype=float)
    nz = np.flatnonzero(coeffs)
    if len(nz) == 0:
        return np.array([])
    roots = np.roots(coeffs[nz[0]:])
    real = roots[np.abs(roots.imag) < 1e-9].real
    return real[real > 0]


def effective_delta(spec: KernelSpec, k: int) -> float:
    """The split point used by the Assumption (A) checks.

    When ``spec.delta`` is unset, it is placed beyond every sign change of
    ``g'``, ``g''``, ``g^(k)`` and ``g^(k+1)`` so both monotonicity conditions
    can hold.
    """
    if spec.delta is not None:
        return float(spec.delta)
    if spec.rate == 0:
        return 1.0
    roots = np.concatenate([_deriv_poly_roots(spec, j) for j in {1, 2, k, k + 1}])
    return max(1.0, 2.0 * float(roots.max())) if roots.size else 1.0


@dataclass
class AssumptionReport:
    delta: float
    checks: dict = field(default_factory=dict)
    fitted_C: float = float("nan")
    values: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


def _deriv_tail_integral(spec: KernelSpec, j: int, theta: float, delta: float) -> float:
    if spec.rate == 0:
        expo = (spec.alpha - j) * theta
        coef = abs(spec.c0 * falling_factorial(spec.alpha, j))
        if coef == 0.0:
            return 0.0
        if expo >= -1.0:
            return float("inf")
        return coef ** theta * delta ** (expo + 1.0) / (-expo - 1.0)
    f = lambda t: np.abs(eval_g_deriv(spec, j, t)) ** theta
    span = 60.0 / (spec.rate * theta)
    return adaptive_simpson(f, delta, delta + span, tol=1e-12)


def check_assumption_A(spec: KernelSpec, k: int, theta: float) -> AssumptionReport:
    """Numerical diagnostics for Assumption (A); failures are reported, never raised."""
    delta = effective_delta(spec, k)
    rep = AssumptionReport(delta=delta)

    t_small = np.array([1e-6, 1e-8, 1e-10])
    ratios = eval_g(spec, t_small) / (spec.c0 * t_small ** spec.alpha)
    rep.values["small_t_ratio"] = float(ratios[-1])
    rep.checks["small_t_limit"] = bool(abs(ratios[-1] - 1.0) < 1e-6)

    if spec.g0_mode == "equal_g":
        g_minus_g0 = 0.0
    elif spec.rate > 0:
        g_minus_g0 = adaptive_simpson(lambda t: np.abs(eval_g(spec, t)) ** theta,
                                      0.0, 60.0 / (spec.rate * theta) + delta, tol=1e-12)
    else:
        g_minus_g0 = float("inf")
    rep.values["g_minus_g0_Ltheta"] = g_minus_g0
    rep.checks["g_minus_g0_in_Ltheta"] = isfinite(g_minus_g0)

    orders = sorted({1, k})
    for j in orders:
        val = _deriv_tail_integral(spec, j, theta, delta)
        rep.values[f"deriv{j}_tail_Ltheta"] = val
        rep.checks[f"deriv{j}_tail_Ltheta"] = isfinite(val)

    if spec.rate > 0:
        upper = delta + 40.0 / spec.rate
    else:
        upper = delta * 1e4
    grid = np.geomspace(delta, upper, 2000)
    for j in orders:
        vals = np.abs(eval_g_deriv(spec, j, grid))
        ok = bool(np.all(np.diff(vals) <= 1e-12 * vals[:-1] + 1e-300))
        rep.checks[f"deriv{j}_decreasing"] = ok

    tiny = np.geomspace(delta * 1e-9, delta, 2000, endpoint=False)
    ratio = np.abs(eval_g_deriv(spec, k, tiny)) / tiny ** (spec.alpha - k)
    rep.fitted_C = float(ratio.max())
    rep.checks["deriv_k_small_t_bound"] = isfinite(rep.fitted_C)
    return rep


# -- Phi_{q,L} functional ------------------------------------------------------------------


def phi_q(x, q: float):
    """``|x|^q 1{|x|>1} + x^2 1{|x|<=1}``."""
    x = np.abs(np.asarray(x, dtype=float))
    return np.where(x > 1.0, x ** q, x * x)


def _density_inner(q: float, a: float, density, breaks_u, v_budget: float = 700.0) -> float:
    # 2 * int_0^inf phi_q(a u) nu(u) du with u = e^v
    if a == 0.0:
        return 0.0

    def f(v):
        with np.errstate(over="ignore", invalid="ignore"):
            u = np.exp(v)
            out = phi_q(a * u, q) * density(u) * u
        # nan only comes from 0 * inf far out, where the integrand vanishes
        return np.where(np.isnan(out), 0.0, out)

    centre = -np.log(abs(a))
    marks = sorted({centre, *[float(np.log(b)) for b in breaks_u]})
    lo, hi = marks[0] - 10.0, marks[-1] + 10.0
    total = piecewise_simpson(f, [lo, *marks, hi], tol=1e-13)
    step = 10.0
    while True:
        left = adaptive_simpson(f, lo - step, lo, tol=1e-14)
        right = adaptive_simpson(f, hi, hi + step, tol=1e-14)
        total += left + right
        lo, hi = lo - step, hi + step
        if abs(left) + abs(right) <= 1e-12 * max(abs(total), 1e-300):
            return 2.0 * total
        if hi - centre > v_budget or centre - lo > v_budget or not np.isfinite(total):
            raise DivergentIntegral("Phi inner integral did not stabilise")


def phi_functional(q: float, levy, f) -> float:
    """``Phi_{q,L}(f) = int int phi_q(f(s) u) ds nu(du)`` for a sampled ``f``.

    ``levy`` is a :class:`~lssvar.levy_driver.DriverSpec`; ``f`` is a pair
    ``(grid, values)`` integrated over ``s`` with the trapezoid rule.
    """
    if not (q == 0 or q >= 1):
        raise ValueError("q must be 0 or >= 1")
    grid, values = (np.asarray(v, dtype=float) for v in f)
    absvals = np.abs(values)
    atoms = levy.levy_atoms()
    if atoms is not None:
        sizes, masses = atoms
        inner = np.array([np.sum(masses * phi_q(a * sizes, q)) for a in absvals])
    elif levy.kind == "stable":
        unit = _density_inner(q, 1.0, levy.levy_density, [])
        inner = absvals ** levy.beta * unit
    else:
        uniq, inv = np.unique(absvals, return_inverse=True)
        breaks = levy.levy_density_breaks()
        vals = np.array([_density_inner(q, a, levy.levy_density, breaks) for a in uniq])
        inner = vals[inv]
    if len(grid) == 1:
        return 0.0
    return float(np.trapezoid(inner, grid))
