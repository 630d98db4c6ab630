"""Estimation of (alpha, beta) from the scale of power variations, H from a ratio, and RI."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from math import log

import numpy as np

from .errors import NonPositiveRatio, ZeroDenominator, ZeroVariation
from .power_variation import power_variation_values

DEFAULT_P_POINTS = tuple(0.25 * j for j in range(1, 13))


@dataclass(frozen=True)
class PGrid:
    """Powers ``p`` used to discretise the L2 objective (trapezoid rule)."""

    points: tuple = DEFAULT_P_POINTS

    def __post_init__(self):
        pts = tuple(float(p) for p in self.points)
        if len(pts) < 2 or any(b <= a for a, b in zip(pts, pts[1:])):
            raise ValueError("p grid must be strictly increasing with at least two points")
        if not (0.0 < pts[0] < 1.0 and pts[-1] > 2.0):
            raise ValueError("p grid must start in (0, 1) and end above 2")
        object.__setattr__(self, "points", pts)

    @property
    def p_lo(self) -> float:
        return self.points[0]

    @property
    def p_hi(self) -> float:
        return self.points[-1]

    @property
    def array(self) -> np.ndarray:
        return np.array(self.points)


@dataclass(frozen=True)
class ParamDomainJ:
    """Grid over ``{beta in [1, 2], 0 <= alpha <= 1 - 1/beta}``."""

    d_alpha: float = 0.01
    d_beta: float = 0.01

    def __post_init__(self):
        if not (0 < self.d_alpha <= 1 and 0 < self.d_beta <= 1):
            raise ValueError("grid resolutions must lie in (0, 1]")

    def points(self) -> tuple[np.ndarray, np.ndarray]:
        """``(alphas, betas)`` sorted by alpha, then beta."""
        nb = int(round(1.0 / self.d_beta))
        betas = np.round(1.0 + self.d_beta * np.arange(nb + 1), 12)
        betas = betas[betas <= 2.0 + 1e-12]
        na = int(round(0.5 / self.d_alpha))
        alphas = np.round(self.d_alpha * np.arange(na + 1), 12)
        A, B = np.meshgrid(alphas, betas, indexing="ij")
        keep = A <= 1.0 - 1.0 / B + 1e-12
        return A[keep], B[keep]


@dataclass
class EstimateReport:
    alpha_hat: float
    beta_hat: float
    H_hat: float
    objective: float
    diagnostics: dict = field(default_factory=dict)

    def rows(self):
        yield "alpha_hat", self.alpha_hat
        yield "beta_hat", self.beta_hat
        yield "H_hat", self.H_hat
        yield "objective", self.objective
        for key in sorted(self.diagnostics):
            val = self.diagnostics[key]
            if np.ndim(val) == 0:
                yield key, val

    def write_csv(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["quantity", "value"])
        for key, val in self.rows():
            w.writerow([key, format(float(val), ".17g")])

    def summary(self) -> str:
        lines = [f"alpha_hat = {self.alpha_hat:.4f}", f"beta_hat  = {self.beta_hat:.4f}",
                 f"H_hat     = {self.H_hat:.4f}", f"objective = {self.objective:.6g}"]
        for key in sorted(self.diagnostics):
            val = self.diagnostics[key]
            if np.ndim(val) == 0 and key not in ("alpha_hat", "beta_hat"):
                lines.append(f"{key} = {float(val):.6g}")
        return "\n".join(lines)


def scale_stat(V_values: dict, n: int) -> dict:
    """``S(n, p) = -log V(p) / log n`` for each ``p``."""
    if n < 2:
        raise ValueError("n must be >= 2")
    out = {}
    for p, v in V_values.items():
        if not v > 0:
            raise ZeroVariation(f"V(p={p}) = {v}: degenerate path")
        out[p] = -log(v) / log(n)
    return out


def scale_limit(alpha: float, beta: float, p):
    """``alpha p`` for ``p >= beta`` and ``p (alpha + 1/beta) - 1`` below."""
    p_arr = np.asarray(p, dtype=float)
    out = np.where(p_arr >= beta, alpha * p_arr, p_arr * (alpha + 1.0 / beta) - 1.0)
    return float(out) if np.ndim(p) == 0 else out


def _trapezoid_weights(x: np.ndarray) -> np.ndarray:
    w = np.zeros_like(x)
    dx = np.diff(x)
    w[:-1] += dx / 2.0
    w[1:] += dx / 2.0
    return w


def fit_alpha_beta(S_observed: dict, pgrid: PGrid | None = None,
                   domain: ParamDomainJ | None = None) -> EstimateReport:
    """Exhaustive grid minimiser of the trapezoid L2 distance to :func:`scale_limit`.

    Ties (within 1e-14 relative) go to the smallest alpha, then the smallest beta.
    """
    pgrid = pgrid or PGrid()
    domain = domain or ParamDomainJ()
    ps = pgrid.array
    missing = [p for p in ps if p not in S_observed]
    if missing:
        raise ValueError(f"S_observed lacks p = {missing}")
    s = np.array([S_observed[p] for p in ps])
    alphas, betas = domain.points()
    A, B, P = alphas[:, None], betas[:, None], ps[None, :]
    model = np.where(P >= B, A * P, P * (A + 1.0 / B) - 1.0)
    objective = ((s[None, :] - model) ** 2) @ _trapezoid_weights(ps)
    best = objective.min()
    idx = int(np.flatnonzero(objective <= best + 1e-14 * max(1.0, abs(best)))[0])
    a_hat, b_hat = float(alphas[idx]), float(betas[idx])
    resid = s - model[idx]
    diag = {f"residual_p{p:g}": float(r) for p, r in zip(ps, resid)}
    return EstimateReport(a_hat, b_hat, a_hat + 1.0 / b_hat, float(objective[idx]), diag)


def scale_stat_from_values(x, n: int, pgrid: PGrid | None = None) -> dict:
    """``S(n, p)`` from observations ``x[i] = X_{i/n}`` using ``V(p;1)_1^n``."""
    pgrid = pgrid or PGrid()
    x = np.asarray(x, dtype=float)
    V = {p: float(power_variation_values(x, n, p, 1).values[-1]) for p in pgrid.points}
    return scale_stat(V, n)


def ratio_stat(x, p: float) -> float:
    """Lag-two over lag-one power sums ``R(n, p)``."""
    x = np.asarray(x, dtype=float)
    if not 0.0 < p <= 1.0:
        raise ValueError("p must lie in (0, 1]")
    if len(x) < 3:
        raise ValueError("need at least three observations")
    den = float(np.sum(np.abs(np.diff(x)) ** p))
    if den == 0.0:
        raise ZeroDenominator("lag-one power sum is zero")
    num = float(np.sum(np.abs(x[2:] - x[:-2]) ** p))
    return num / den


def estimate_H(R: float, p: float) -> float:
    if not R > 0:
        raise NonPositiveRatio(f"ratio must be > 0, got {R}")
    return log(R) / (p * log(2.0))


def relative_intermittency(series, t: float) -> float:
    """``V_t / V_1`` of a power variation series covering ``[0, 1]``."""
    if not 0.0 < t <= 1.0:
        raise ValueError("t must lie in (0, 1]")
    total = series.at(1.0)
    if total == 0.0:
        raise ZeroDenominator("V_1 is zero")
    return series.at(t) / total


def estimate_from_values(x, n: int, pgrid: PGrid | None = None, domain: ParamDomainJ | None = None,
                         p_ratio: float = 0.5, ri_t: float = 0.5, ri_p: float = 1.0) -> EstimateReport:
    """Fit (alpha, beta), the ratio estimate of H and RI(n, ri_p) at ``ri_t`` from one path.

    ``H_hat`` is the ratio estimate; ``alpha_hat + 1 / beta_hat`` is kept as
    the ``H_from_fit`` diagnostic.
    """
    report = fit_alpha_beta(scale_stat_from_values(x, n, pgrid), pgrid, domain)
    H_ratio = estimate_H(ratio_stat(x, p_ratio), p_ratio)
    ri = relative_intermittency(power_variation_values(x, n, ri_p, 1), ri_t)
    report.diagnostics["H_from_fit"] = report.H_hat
    report.H_hat = H_ratio
    report.diagnostics.update({"RI": ri, "p_ratio": p_ratio, "ri_t": ri_t,
                               "ri_p": ri_p, "n": n})
    return report
