"""Limit objects of the power variation: V_m series, jump-sum limit, m_p, and int |F|^p."""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from functools import lru_cache
from math import ceil, gamma as gamma_fn, pi, sin

import numpy as np
from scipy import integrate

from ._quad import piecewise_simpson, power_tail_integral
from .errors import DivergentMoment, DivergentSeries, NotConverged
from .kernel_math import (HkParams, eval_hk, hk_abs_power_integral, hk_compact_support,
                          hk_tail_constant)

# Direct-summation length of the V_m series before the tail estimate takes over.
VM_DIRECT_TERMS = 2000


@dataclass(frozen=True)
class MarkedJump:
    time: float
    size: float
    sigma_left: float
    mark: float

    def __post_init__(self):
        if not 0.0 <= self.mark <= 1.0:
            raise ValueError("mark must lie in [0, 1]")


def exact_marks(jump_times, n: int) -> tuple[np.ndarray, np.ndarray]:
    """``(i_m, u_m)`` with ``T_m in ((i_m - 1)/n, i_m/n]`` and ``u_m = i_m - n T_m``."""
    nt = np.asarray(jump_times, dtype=float) * n
    idx = np.ceil(nt)
    return idx.astype(np.int64), np.clip(idx - nt, 0.0, 1.0)


# -- V_m -------------------------------------------------------------------------------------

def _vm_check(alpha: float, k: int, p: float) -> float:
    e = (alpha - k) * p
    if e >= -1.0 and not hk_compact_support(alpha, k):
        raise DivergentSeries(f"sum |h_k(l + u)|^p diverges: (alpha - k) p = {e:.6g} >= -1")
    return e


def vm_partial_sum(alpha: float, k: int, p: float, u: float, L: int) -> float:
    """``sum_{l=0}^{L-1} |h_k(l + u)|^p``."""
    x = np.arange(int(L)) + float(u)
    return float(np.sum(np.abs(eval_hk(HkParams(alpha, k), x)) ** p))


def vm_tail_bound(alpha: float, k: int, p: float, L: int) -> float:
    """Certified bound on ``sum_{l >= L} |h_k(l + u)|^p`` for ``L >= k + 1``."""
    e = _vm_check(alpha, k, p)
    if hk_compact_support(alpha, k):
        return 0.0
    if L < k + 1:
        raise ValueError("the tail bound needs L >= k + 1")
    # terms are <= C^p x^e with x >= L, and x^e is decreasing
    C = hk_tail_constant(alpha, k)
    return C ** p * (L ** e + L ** (e + 1.0) / (-e - 1.0))


def vm_series(alpha: float, k: int, p: float, u: float) -> float:
    """``V(u) = sum_{l >= 0} |h_k(l + u)|^p`` for ``u in [0, 1]``.

    Direct summation of the first terms; the rest is integrated with an
    Euler-Maclaurin correction, accurate far below the certified bound of
    :func:`vm_tail_bound`.
    """
    if not 0.0 <= u <= 1.0:
        raise ValueError("u must lie in [0, 1]")
    return _vm_cached(float(alpha), int(k), float(p), float(u))


@lru_cache(maxsize=4096)
def _vm_cached(alpha: float, k: int, p: float, u: float) -> float:
    e = _vm_check(alpha, k, p)
    if hk_compact_support(alpha, k):
        return vm_partial_sum(alpha, k, p, u, k + 1)
    L = VM_DIRECT_TERMS
    head = vm_partial_sum(alpha, k, p, u, L)
    params = HkParams(alpha, k)
    f = lambda x: np.abs(eval_hk(params, x)) ** p
    x0 = L + u
    f0 = float(f(np.array([x0]))[0])
    tail = power_tail_integral(f, x0, e, tol=1e-16) + 0.5 * f0 - e * f0 / (12.0 * x0)
    return head + tail


def stable_limit_Z(jumps, c0: float, alpha: float, k: int, p: float, t: float) -> float:
    """``|c0|^p sum_{T_m in (0, t]} |dL_m sigma_m|^p V(U_m)``."""
    total = 0.0
    for j in jumps:
        if 0.0 < j.time <= t:
            total += abs(j.size * j.sigma_left) ** p * vm_series(alpha, k, p, j.mark)
    return abs(c0) ** p * total


def marked_jumps(jump_times, jump_sizes, sigma_left, n: int) -> list[MarkedJump]:
    """Jumps with the per-path marks of the sampling grid ``i / n``."""
    _, marks = exact_marks(jump_times, n)
    return [MarkedJump(float(t), float(s), float(v), float(u))
            for t, s, v, u in zip(jump_times, jump_sizes, sigma_left, marks)]


# -- E|Z|^p for a standard symmetric stable Z --------------------------------------------------

_CUT = 30.0


def stable_density(x: float, beta: float) -> float:
    """Density of the symmetric stable law with cf ``exp(-|u|^beta)`` by Fourier inversion."""
    x = abs(float(x))
    if x == 0.0:
        return gamma_fn(1.0 + 1.0 / beta) / pi
    f = lambda u: np.exp(-u ** beta)
    top = 40.0 ** (1.0 / beta)  # exp(-top^beta) < 1e-17
    if beta < 1.0 and x * top > 200.0:
        # slow decay and many cycles: Fourier integral over [0, inf)
        with warnings.catch_warnings():
            # QAWF flags the slowly decaying first cycles; the result is checked in tests
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, _ = integrate.quad(f, 0.0, np.inf, weight="cos", wvar=x, epsabs=1e-14, limlst=200)
        return val / pi
    # otherwise the integrand is negligible past ``top``: oscillatory quadrature on pieces
    edges = np.concatenate([[0.0], np.geomspace(min(1.0, top), top, 12)])
    val = sum(integrate.quad(f, a, b, weight="cos", wvar=x, epsabs=1e-15, limit=200)[0]
              for a, b in zip(edges[:-1], edges[1:]) if b > a)
    return val / pi


def _stable_tail_series(beta: float, p: float, cut: float) -> float:
    # integral over [cut, inf) of x^p times the large-x expansion of the density
    total = 0.0
    for j in range(1, 200):
        a_j = (-1) ** (j + 1) * gamma_fn(beta * j + 1.0) / gamma_fn(j + 1.0) * sin(pi * beta * j / 2.0) / pi
        term = a_j * cut ** (p - beta * j) / (beta * j - p)
        total += term
        if abs(term) < 1e-17 and j > 3:
            break
    return total


@lru_cache(maxsize=256)
def _abs_moment_cached(beta: float, p: float) -> float:
    f = lambda x: x ** p * stable_density(x, beta)
    edges = [0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, _CUT]
    head = 0.0
    with warnings.catch_warnings():
        # QUADPACK flags round-off near the 1e-12 target; the result is cross-checked in tests
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for a, b in zip(edges[:-1], edges[1:]):
            val, _ = integrate.quad(f, a, b, epsabs=1e-12, epsrel=1e-12, limit=200)
            head += val
    return 2.0 * (head + _stable_tail_series(beta, p, _CUT))


def abs_moment_stable(beta: float, p: float) -> float:
    """``E|Z|^p`` for ``Z`` symmetric ``beta``-stable with cf ``exp(-|u|^beta)``."""
    if not 0.0 < beta < 2.0:
        raise ValueError("beta must lie in (0, 2)")
    if not p > 0:
        raise ValueError("p must be > 0")
    if p >= beta:
        raise DivergentMoment(f"E|Z|^p is infinite for p = {p} >= beta = {beta}")
    return _abs_moment_cached(float(beta), float(p))


def abs_moment_stable_closed_form(beta: float, p: float) -> float:
    """Closed form ``2^p Gamma((1+p)/2) Gamma(1-p/beta) / (Gamma(1-p/2) sqrt(pi))``."""
    if p >= beta:
        raise DivergentMoment(f"E|Z|^p is infinite for p = {p} >= beta = {beta}")
    return (2.0 ** p * gamma_fn((1.0 + p) / 2.0) * gamma_fn(1.0 - p / beta)
            / (gamma_fn(1.0 - p / 2.0) * np.sqrt(pi)))


def mp_constant(c0: float, gamma_scale: float, alpha: float, k: int, beta: float, p: float) -> float:
    """``|c0|^p gamma^p (int |h_k|^beta)^(p/beta) E|Z|^p``."""
    hk_int = hk_abs_power_integral(HkParams(alpha, k), beta)
    return abs(c0) ** p * abs(gamma_scale) ** p * hk_int ** (p / beta) * abs_moment_stable(beta, p)


# -- int |F_u|^p du ------------------------------------------------------------------------------

def f_power_integral(F, p: float, t: float = 1.0, grid=None, rtol: float = 1e-6,
                     max_rounds: int = 6) -> float:
    """``int_0^t |F_u|^p du``.

    ``F`` is either an array of values on ``grid`` (composite trapezoid rule)
    or a callable. A callable with a ``breaks`` attribute (jump times) is
    integrated piecewise between the breaks, tightening the tolerance until
    two successive results agree to ``rtol``.
    """
    if not callable(F):
        if grid is None:
            raise ValueError("grid values need the grid")
        grid = np.asarray(grid, dtype=float)
        vals = np.abs(np.asarray(F, dtype=float)) ** p
        if grid[0] > 1e-12 or grid[-1] < t - 1e-12:
            raise ValueError("grid must cover [0, t]")
        keep = grid <= t + 1e-12
        return float(np.trapezoid(vals[keep], grid[keep]))
    breaks = np.asarray(getattr(F, "breaks", []), dtype=float)
    inner = breaks[(breaks > 0.0) & (breaks < t)]
    edges = np.unique(np.concatenate([[0.0, t], inner]))
    if grid is not None:
        g = np.asarray(grid, dtype=float)
        edges = np.unique(np.concatenate([edges, g[(g > 0) & (g < t)]]))
    f = lambda u: np.abs(F(u)) ** p
    tol = 1e-7
    prev = piecewise_simpson(f, edges, tol=tol)
    for _ in range(max_rounds):
        tol /= 16.0
        cur = piecewise_simpson(f, edges, tol=tol)
        if abs(cur - prev) <= rtol * max(abs(cur), 1e-300) or cur == prev:
            return cur
        prev = cur
    raise NotConverged(f"|F|^p integral did not settle to rtol {rtol}")


def f_power_integral_cumulative(F, p: float, t_grid, rtol: float = 1e-6) -> np.ndarray:
    """``int_0^t |F_u|^p du`` at every ``t`` of an increasing grid (callable ``F``)."""
    ts = np.asarray(t_grid, dtype=float)
    out = np.empty(len(ts))
    total, prev = 0.0, 0.0
    breaks = np.asarray(getattr(F, "breaks", []), dtype=float)
    for j, t in enumerate(ts):
        piece = _Shifted(F, prev, breaks)
        total += f_power_integral(piece, p, t - prev, rtol=rtol) if t > prev else 0.0
        out[j] = total
        prev = t
    return out


class _Shifted:
    """``u -> F(u + shift)`` with shifted breaks; used to integrate over ``[a, b]``."""

    def __init__(self, F, shift, breaks):
        self.F, self.shift = F, shift
        self.breaks = breaks - shift

    def __call__(self, u):
        return self.F(np.asarray(u, dtype=float) + self.shift)


# -- CSV export ------------------------------------------------------------------------------------

def write_oracle_csv(rows, fh) -> None:
    """Rows are ``(name, params dict, value)``; params are written as ``key=value;...``."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["name", "parameters", "value"])
    for name, params, value in rows:
        desc = ";".join(f"{k}={params[k]}" for k in sorted(params))
        w.writerow([name, desc, format(float(value), ".17g")])


def regime_i_oracle(jump_times, jump_sizes, sigma_left, c0, alpha, k, p, n, t=1.0) -> float:
    """Per-path regime (i) limit with the grid marks of ``i / n``."""
    return stable_limit_Z(marked_jumps(jump_times, jump_sizes, sigma_left, n), c0, alpha, k, p, t)


def default_direct_terms(alpha: float, k: int, p: float, tol: float = 1e-10) -> int:
    """Smallest ``L`` whose certified tail bound is below ``tol``."""
    e = _vm_check(alpha, k, p)
    if hk_compact_support(alpha, k):
        return k + 1
    C = hk_tail_constant(alpha, k) ** p
    L = max(k + 1, ceil((tol * (-e - 1.0) / (2.0 * C)) ** (1.0 / (e + 1.0))))
    while vm_tail_bound(alpha, k, p, L) >= tol:
        L *= 2
    return L
