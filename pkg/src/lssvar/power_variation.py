"""k-th order increments, power variation step functions, regimes and normalisations."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from math import comb, floor

import numpy as np

from .errors import CriticalRegime, TooShort

REGIMES = ("i", "ii", "iii", "critical", "uncovered")
CRITICAL_TOL = 1e-12


def increments_k(values, k: int) -> np.ndarray:
    """``out[j] = sum_l (-1)^l C(k, l) x[j + k - l]``: the increment ending at index ``j + k``."""
    x = np.asarray(values, dtype=float)
    if int(k) != k or k < 1:
        raise ValueError("k must be a positive integer")
    if x.ndim != 1 or len(x) < k + 1:
        raise TooShort(f"need at least k + 1 = {k + 1} observations")
    m = len(x) - k
    out = np.zeros(m)
    for l in range(k + 1):
        out += (-1) ** l * comb(k, l) * x[k - l:k - l + m]
    return out


@dataclass
class VariationSeries:
    """``values[j] = V(p;k)_{t_grid[j]}`` with ``t_grid = i / n``.

    ``normalization`` is ``(regime, factor)`` once attached.
    """

    n: int
    p: float
    k: int
    t_grid: np.ndarray
    values: np.ndarray
    normalization: tuple | None = None

    def at(self, t: float) -> float:
        """Right-continuous evaluation ``V_t = V_{floor(n t) / n}``."""
        if t < 0:
            return 0.0
        i = floor(t * self.n + 1e-9)
        if i >= len(self.values):
            raise ValueError("t beyond the observation horizon")
        return float(self.values[i])

    def normalized(self, factor: float | None = None) -> np.ndarray:
        if factor is None:
            if self.normalization is None:
                raise ValueError("no normalisation attached")
            factor = self.normalization[1]
        return factor * self.values

    def with_normalization(self, regime: str, alpha: float, beta: float) -> "VariationSeries":
        factor = normalization_factor(regime, self.n, self.p, self.k, alpha, beta)
        return VariationSeries(self.n, self.p, self.k, self.t_grid, self.values, (regime, factor))

    def write_csv(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "raw_value", "normalized_value", "regime"])
        tag, factor = self.normalization if self.normalization else ("", None)
        for t, v in zip(self.t_grid, self.values):
            norm = "" if factor is None else format(float(factor * v), ".17g")
            w.writerow([format(float(t), ".17g"), format(float(v), ".17g"), norm, tag])


def power_variation_values(values, n: int, p: float, k: int) -> VariationSeries:
    """Power variation of observations ``values[i] = X_{i/n}``, ``i = 0 .. N``."""
    if not p > 0:
        raise ValueError("p must be > 0")
    x = np.asarray(values, dtype=float)
    inc = np.abs(increments_k(x, k)) ** p
    cum = np.concatenate([np.zeros(k), np.cumsum(inc)])
    return VariationSeries(int(n), float(p), int(k), np.arange(len(x)) / n, cum)


def power_variation(path, p: float, k: int) -> VariationSeries:
    """``V(p;k)_t^n`` of an :class:`~lssvar.lss_sim.LssPath` sampled at ``i / n``, ``i >= 0``."""
    t = np.asarray(path.eval_times, dtype=float)
    if len(t) < 2:
        raise TooShort("need at least two observations")
    n = int(round(1.0 / (t[1] - t[0])))
    if abs(t[0]) > 1e-12 or np.max(np.abs(t * n - np.arange(len(t)))) > 1e-6:
        raise ValueError("path must be sampled on i / n starting at 0")
    return power_variation_values(path.values, n, p, k)


def _close(a: float, b: float) -> bool:
    return abs(a - b) <= CRITICAL_TOL


def regime_classify(alpha: float, beta: float, p: float, k: int) -> str:
    """Regime of the power variation limit for ``(alpha, beta, p, k)``.

    ``beta`` is the Blumenthal-Getoor index (0 for compound Poisson). Returns
    ``"critical"`` on the boundary cases and ``"uncovered"`` for the remaining
    parameters with ``p < 1`` that no limit statement here covers.
    """
    if not alpha > 0 or not 0 <= beta < 2 or not p > 0 or k < 1:
        raise ValueError("need alpha > 0, 0 <= beta < 2, p > 0, k >= 1")
    if _close(p, beta) or _close(alpha, k - 1.0 / p) or (beta > 0 and _close(alpha, k - 1.0 / beta)):
        return "critical"
    inv_beta = 1.0 / beta if beta > 0 else np.inf
    if alpha < k - 1.0 / p and p > beta and p >= 1:
        return "i"
    if p < beta and alpha < k - inv_beta:
        return "ii"
    if p >= 1 and alpha > k - 1.0 / max(beta, p):
        return "iii"
    return "uncovered"


def normalization_factor(regime: str, n: float, p: float, k: int, alpha: float, beta: float) -> float:
    if regime == "i":
        return float(n) ** (alpha * p)
    if regime == "ii":
        return float(n) ** (-1.0 + p * (alpha + 1.0 / beta))
    if regime == "iii":
        return float(n) ** (-1.0 + p * k)
    if regime == "critical":
        raise CriticalRegime("no normalisation in the critical cases p = beta, alpha = k - 1/p, alpha = k - 1/beta")
    raise ValueError(f"no limit theory for regime {regime!r}")
