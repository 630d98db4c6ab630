"""Adaptive Simpson quadrature, vectorised over subintervals.

All intervals at one refinement depth are evaluated in a single call of the
integrand, so ``f`` must accept and return numpy arrays.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import NotConverged

ArrayFn = Callable[[np.ndarray], np.ndarray]

# Cap on simultaneously unresolved subintervals (memory guard).
MAX_ACTIVE = 1 << 20


def adaptive_simpson(f: ArrayFn, a: float, b: float, tol: float = 1e-10,
                     max_depth: int = 60, strict: bool = False) -> float:
    """Integrate ``f`` over ``[a, b]`` to absolute tolerance ``tol``.

    Uses the classical |S2 - S1| <= 15 tol acceptance rule with Richardson
    correction. Intervals still unresolved at ``max_depth`` are accepted as is
    unless ``strict`` is set, in which case :class:`NotConverged` is raised.
    """
    if a == b:
        return 0.0
    sign = 1.0
    if b < a:
        a, b, sign = b, a, -1.0
    lo = np.array([a], dtype=float)
    hi = np.array([b], dtype=float)
    fa, fm, fb = (np.asarray(f(np.array([x])), dtype=float)
                  for x in (a, 0.5 * (a + b), b))
    whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb)
    tols = np.array([tol])
    total = 0.0
    for _ in range(max_depth):
        if len(lo) > MAX_ACTIVE:
            raise NotConverged(f"adaptive Simpson needs more than {MAX_ACTIVE} subintervals on [{a}, {b}]")
        mid = 0.5 * (lo + hi)
        flm, frm = np.split(np.asarray(f(np.concatenate([0.5 * (lo + mid), 0.5 * (mid + hi)])),
                                       dtype=float), 2)
        left = (mid - lo) / 6.0 * (fa + 4.0 * flm + fm)
        right = (hi - mid) / 6.0 * (fm + 4.0 * frm + fb)
        delta = left + right - whole
        done = np.abs(delta) <= 15.0 * tols
        total += float(np.sum((left + right + delta / 15.0)[done]))
        keep = ~done
        if not keep.any():
            return sign * total
        lo, mid, hi = lo[keep], mid[keep], hi[keep]
        fa, flm, fm, frm, fb = fa[keep], flm[keep], fm[keep], frm[keep], fb[keep]
        left, right, tols = left[keep], right[keep], tols[keep] / 2.0
        lo = np.concatenate([lo, mid])
        hi = np.concatenate([mid, hi])
        fa, fm, fb = np.concatenate([fa, fm]), np.concatenate([flm, frm]), np.concatenate([fm, fb])
        whole = np.concatenate([left, right])
        tols = np.concatenate([tols, tols])
    if strict:
        raise NotConverged(f"adaptive Simpson did not converge on [{a}, {b}]")
    return sign * (total + float(np.sum(whole)))


def piecewise_simpson(f: ArrayFn, breaks, tol: float = 1e-10, **kw) -> float:
    """Sum of :func:`adaptive_simpson` over consecutive breakpoints."""
    breaks = np.asarray(breaks, dtype=float)
    pieces = max(len(breaks) - 1, 1)
    return sum(adaptive_simpson(f, float(x0), float(x1), tol / pieces, **kw)
               for x0, x1 in zip(breaks[:-1], breaks[1:]))


def power_tail_integral(f: ArrayFn, start: float, exponent: float,
                        tol: float = 1e-12) -> float:
    """Integrate ``f`` over ``[start, inf)`` when ``f(x)`` decays like ``x**exponent``.

    Requires ``exponent < -1``. The substitution ``x = start * v**(-g)`` with
    ``g = -1 / (exponent + 1)`` turns the leading power law into a constant
    on ``v in (0, 1]``.
    """
    if exponent >= -1.0:
        raise ValueError("tail exponent must be < -1")
    g = -1.0 / (exponent + 1.0)
    # keep x = start * v**(-g) finite; the integrand is ~constant near v = 0
    v0 = max(1e-14, (start / 1e300) ** (1.0 / g))

    def integrand(v):
        x = start * v ** (-g)
        return np.asarray(f(x), dtype=float) * g * start * v ** (-g - 1.0)

    head = v0 * float(integrand(np.array([v0]))[0])
    return head + adaptive_simpson(integrand, v0, 1.0, tol)
