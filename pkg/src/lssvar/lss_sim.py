"""Assembly of LSS paths from a kernel, a volatility path and a driver.

Compound Poisson drivers are handled exactly by summing over the jump list.
Stable drivers use a left-point Riemann sum: a uniform fine grid of step
``1 / (n * fine_factor)`` over the recent past and the horizon, evaluated by
FFT convolution, plus geometrically growing cells further back (evaluated at
the cell midpoint of the kernel) down to the burn-in horizon.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from math import ceil, gamma as gamma_fn

import numpy as np
from scipy.optimize import brentq
from scipy.signal import fftconvolve
from scipy.special import gammaincc

from .errors import InsufficientWindow, NonIntegrableTail
from .kernel_math import (KernelSpec, eval_g, eval_g0, eval_g_deriv,
                          kernel_difference)
from .levy_driver import DriverPath, sample_stable
from .volatility import SigmaPath

# Largest number of (eval point, jump) pairs held in memory at once.
_CHUNK = 2_000_000


@dataclass(frozen=True)
class SimConfig:
    """Discretisation settings.

    ``burn_in=None`` means "use the certified truncation for ``tail_tol``".
    ``fine_past`` is the length of the past covered by the uniform fine grid;
    older cells grow geometrically by ``coarse_ratio`` up to ``coarse_max_step``
    (default ``0.1 / decay``, unbounded for kernels without decay).
    """

    n: int
    t_max: float = 1.0
    burn_in: float | None = None
    fine_factor: int = 8
    tail_tol: float = 1e-6
    fine_past: float = 16.0
    coarse_ratio: float = 0.05
    coarse_max_step: float | None = None

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError("n must be a positive integer")
        if int(self.fine_factor) != self.fine_factor or self.fine_factor < 1:
            raise ValueError("fine_factor must be a positive integer")
        if not self.t_max > 0 or not self.tail_tol > 0:
            raise ValueError("t_max and tail_tol must be > 0")
        if self.burn_in is not None and not self.burn_in > 0:
            raise ValueError("burn_in must be > 0")
        if not (self.fine_past > 0 and 0 < self.coarse_ratio <= 1
                and (self.coarse_max_step is None or self.coarse_max_step > 0)):
            raise ValueError("invalid coarse grid settings")

    def resolve_burn_in(self, kernel: KernelSpec, q: float) -> float:
        """The burn-in to use, checked against the certified truncation at ``q``."""
        need = burnin_truncation(kernel, q, self.tail_tol, self.t_max, 1.0 / self.n)
        if self.burn_in is None:
            return need
        if self.burn_in < need * (1 - 1e-12):
            raise InsufficientWindow(f"burn_in {self.burn_in} < certified truncation {need}")
        return self.burn_in

    def max_step(self, kernel: KernelSpec) -> float:
        if self.coarse_max_step is not None:
            return self.coarse_max_step
        return 0.1 / kernel.rate if kernel.rate > 0 else np.inf

    @property
    def eval_times(self) -> np.ndarray:
        count = int(round(self.t_max * self.n))
        return np.arange(count + 1) / self.n


@dataclass
class LssPath:
    eval_times: np.ndarray
    values: np.ndarray
    provenance: dict = field(default_factory=dict)
    driver: DriverPath | None = field(default=None, repr=False)

    def __post_init__(self):
        self.eval_times = np.asarray(self.eval_times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.eval_times.shape != self.values.shape:
            raise ValueError("eval_times and values differ in shape")
        if np.any(np.diff(self.eval_times) <= 0):
            raise ValueError("eval_times must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("path values must be finite")

    @property
    def n(self) -> int:
        return int(round(1.0 / (self.eval_times[1] - self.eval_times[0])))

    def write_csv(self, fh) -> None:
        for key in sorted(self.provenance):
            fh.write(f"# {key} = {self.provenance[key]}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time", "value"])
        for t, x in zip(self.eval_times, self.values):
            w.writerow([format(float(t), ".17g"), format(float(x), ".17g")])


def read_path_csv(fh) -> LssPath:
    prov = {}
    rows = []
    for line in fh:
        if line.startswith("#"):
            key, _, val = line[1:].partition("=")
            prov[key.strip()] = val.strip()
        elif line.strip():
            rows.append(line)
    body = list(csv.reader(rows))[1:]
    t = np.array([float(r[0]) for r in body])
    x = np.array([float(r[1]) for r in body])
    return LssPath(t, x, prov)


# -- burn-in -----------------------------------------------------------------------------

def burnin_tail_bound(spec: KernelSpec, q: float, T: float, t_max: float = 1.0) -> float:
    """Bound on ``sup_{t <= t_max} int_T^inf |g(t + d) - g0(d)|^q dd``."""
    a, c = spec.alpha, abs(spec.c0)
    lam = spec.rate
    if lam > 0:
        # for d >= alpha/lam, g is decreasing so |g(t+d) - g0(d)| <= g(d)
        T = max(T, a / lam)
        shape = a * q + 1.0
        return c ** q * (lam * q) ** (-shape) * gamma_fn(shape) * float(gammaincc(shape, lam * q * T))
    if spec.g0_mode == "zero":
        raise NonIntegrableTail("g without decay and g0 = 0 is not integrable at -inf")
    e = (a - 1.0) * q
    if e >= -1.0:
        raise NonIntegrableTail(f"(alpha - 1) q = {e} >= -1")
    # mean value theorem: (t + d)^a - d^a <= a d^(a-1) t
    return (c * a * t_max) ** q * T ** (e + 1.0) / (-e - 1.0)


def burnin_truncation(spec: KernelSpec, q: float, tol: float, t_max: float = 1.0,
                      grid_step: float | None = None) -> float:
    """Smallest (grid-aligned) ``T`` whose certified tail bound is below ``tol``."""
    if not q > 0 or not tol > 0:
        raise ValueError("q and tol must be > 0")
    bound = lambda T: burnin_tail_bound(spec, q, T, t_max)
    lam = spec.rate
    if lam > 0:
        lo = spec.alpha / lam
        if bound(lo) < tol:
            T = lo
        else:
            hi = max(2.0 * lo, 1.0)
            while bound(hi) >= tol:
                hi *= 2.0
            T = brentq(lambda x: np.log(bound(x)) - np.log(tol), lo, hi, xtol=1e-12)
            T = T * (1 + 1e-12)
    else:
        bound(1.0)  # raises when not integrable
        a, c = spec.alpha, abs(spec.c0)
        e = (a - 1.0) * q
        T = (tol * (-e - 1.0) / (c * a * t_max) ** q) ** (1.0 / (e + 1.0))
        T = T * (1 + 1e-12)
    if grid_step is not None:
        T = ceil(T / grid_step - 1e-9) * grid_step
    return float(max(T, grid_step or 0.0))


def _check_window(sigma: SigmaPath, start: float, end: float) -> None:
    eps = 1e-9 * max(1.0, abs(start), abs(end))
    if sigma.window_start > start + eps or sigma.window_end < end - eps:
        raise InsufficientWindow(
            f"sigma window [{sigma.window_start}, {sigma.window_end}] does not cover [{start}, {end}]")


def _sigma_at(sigma: SigmaPath, s, point: str):
    if point == "left":
        return sigma.left_limit(s)
    if point == "right":
        return sigma.value(s)
    raise ValueError("sigma point must be 'left' or 'right'")


def _provenance(kernel: KernelSpec, sigma: SigmaPath, **extra) -> dict:
    prov = {"kernel": repr(kernel), "sigma": repr(sigma.spec)}
    prov.update({k: v for k, v in extra.items() if v is not None})
    return prov


# -- compound Poisson: exact -----------------------------------------------------------------

def _jump_sum(weight_fn, eval_times, times, amps):
    out = np.zeros(len(eval_times))
    if len(times) == 0:
        return out
    rows = max(1, _CHUNK // len(times))
    for lo in range(0, len(eval_times), rows):
        t = eval_times[lo:lo + rows, None]
        # row-wise reduction: each value depends only on its own row, so results
        # do not change with the number or grouping of evaluation times
        out[lo:lo + rows] = np.sum(weight_fn(t, times[None, :]) * amps, axis=1)
    return out


def simulate_lss_cp(kernel: KernelSpec, sigma: SigmaPath, driver: DriverPath,
                    eval_times, seed=None) -> LssPath:
    """Exact ``X_t = sum_j (g(t - s_j) - g0(-s_j)) sigma_{s_j-} dL_j`` over jumps ``s_j <= t``."""
    if not driver.has_jumps:
        raise ValueError("simulate_lss_cp needs a driver with a jump list")
    eval_times = np.asarray(eval_times, dtype=float)
    if eval_times.max() > driver.window_end + 1e-12 or eval_times.min() < driver.grid_start:
        raise InsufficientWindow("driver window does not cover the evaluation times")
    _check_window(sigma, driver.grid_start, driver.window_end)
    times = driver.jump_times
    amps = sigma.left_limit(times) * driver.jump_sizes

    def weight(t, s):
        return np.where(s <= t, kernel_difference(kernel, t, s), 0.0)

    values = _jump_sum(weight, eval_times, times, amps)
    prov = _provenance(kernel, sigma, driver="compound_poisson", burn_in=-driver.grid_start,
                       jumps=len(times), seed=seed)
    return LssPath(eval_times, values, prov, driver)


# -- stable: Riemann sum ---------------------------------------------------------------------

def coarse_cells(fine_past: float, burn_in: float, ratio: float, max_step: float):
    """Distances ``(near, far)`` of cells covering ``[-burn_in, -fine_past)``."""
    edges = [fine_past]
    e = fine_past
    while e < burn_in * (1 - 1e-15):
        e = min(e + min(ratio * e, max_step), burn_in)
        edges.append(e)
    edges = np.asarray(edges)
    return edges[:-1], edges[1:]


def simulate_stable_driver(beta: float, gamma_scale: float, config: SimConfig,
                           burn_in: float, rng: np.random.Generator,
                           increments=None, max_step: float = np.inf) -> DriverPath:
    """Stable driver on the hybrid grid: fine cells first, then the coarse past.

    ``increments`` replaces the fine-cell draws (for coupling experiments);
    the coarse cells are still drawn from ``rng``.
    """
    n, f = config.n, config.fine_factor
    h = 1.0 / (n * f)
    fine_past = min(burn_in, ceil(config.fine_past * n - 1e-9) / n)
    count = int(round((fine_past + config.t_max) * n)) * f
    if increments is None:
        incs = sample_stable(beta, gamma_scale * h ** (1.0 / beta), rng, size=count)
    else:
        incs = np.asarray(increments, dtype=float)
        if incs.shape != (count,):
            raise ValueError(f"expected {count} fine increments, got {incs.shape}")
    near, far = coarse_cells(fine_past, burn_in, config.coarse_ratio, max_step)
    widths = far - near
    far_incs = sample_stable(beta, 1.0, rng, size=len(widths)) * gamma_scale * widths ** (1.0 / beta)
    return DriverPath(-fine_past, h, incs, far_left=-far, far_right=-near,
                      far_increments=far_incs)


def _grid_apply(kernel_grid, far_kernel, driver: DriverPath, sigma: SigmaPath,
                eval_times, sigma_point: str, g0_const=None):
    """Left-point sums over the fine cells (by FFT) and the coarse cells (direct)."""
    h = driver.grid_step
    idx = (eval_times - driver.grid_start) / h
    m = np.rint(idx).astype(np.int64)
    if np.any(np.abs(idx - m) > 1e-6) or m.min() < 0 or m.max() > len(driver.increments):
        raise InsufficientWindow("evaluation times are not nodes of the driver grid")
    left = driver.grid_start + h * np.arange(len(driver.increments))
    w = _sigma_at(sigma, left, sigma_point) * driver.increments
    G = kernel_grid(h * np.arange(m.max() + 1))
    conv = fftconvolve(w, G)
    fine = conv[m]
    if g0_const is not None:
        past = left < 0
        fine = fine - float(np.sum(g0_const(-left[past]) * w[past]))
    out = fine
    if driver.far_increments is not None and len(driver.far_increments):
        amps = _sigma_at(sigma, driver.far_left, sigma_point) * driver.far_increments
        mids = 0.5 * (driver.far_left + driver.far_right)
        out = out + _jump_sum(far_kernel, eval_times, mids, amps)
    return out


def simulate_lss_stable(kernel: KernelSpec, sigma: SigmaPath, beta: float, gamma_scale: float,
                        config: SimConfig, rng: np.random.Generator, *, increments=None,
                        sigma_point: str = "left", seed=None) -> LssPath:
    """Riemann-sum LSS path on ``i / n``, ``0 <= i <= n t_max`` driven by a stable process."""
    burn_in = config.resolve_burn_in(kernel, beta)
    _check_window(sigma, -burn_in, config.t_max)
    driver = simulate_stable_driver(beta, gamma_scale, config, burn_in, rng, increments,
                                    config.max_step(kernel))
    eval_times = config.eval_times
    g0 = None if kernel.g0_mode == "zero" else (lambda d: eval_g0(kernel, d))
    values = _grid_apply(lambda x: eval_g(kernel, x),
                         lambda t, s: kernel_difference(kernel, t, s),
                         driver, sigma, eval_times, sigma_point, g0)
    prov = _provenance(kernel, sigma, driver=f"stable(beta={beta}, gamma={gamma_scale})",
                       burn_in=burn_in, fine_factor=config.fine_factor, n=config.n, seed=seed)
    return LssPath(eval_times, values, prov, driver)


# -- the derivative process F -------------------------------------------------------------------

def _deriv_or_zero(kernel: KernelSpec, k: int, x):
    x = np.asarray(x, dtype=float)
    pos = x > 0
    out = np.zeros_like(x)
    if np.any(pos):
        out[pos] = eval_g_deriv(kernel, k, x[pos])
    return out


class FPathCP:
    """``F_u = sum_{s_j < u} g^(k)(u - s_j) sigma_{s_j-} dL_j`` as a callable.

    ``breaks`` lists the jump times inside the driver window; ``F`` is smooth
    between them.
    """

    def __init__(self, kernel: KernelSpec, k: int, sigma: SigmaPath, driver: DriverPath):
        if not driver.has_jumps:
            raise ValueError("FPathCP needs a driver with a jump list")
        _check_window(sigma, driver.grid_start, driver.window_end)
        self.kernel, self.k = kernel, int(k)
        self.window = (driver.grid_start, driver.window_end)
        self.times = driver.jump_times
        self.amps = sigma.left_limit(self.times) * driver.jump_sizes
        self.breaks = self.times

    def __call__(self, u):
        scalar = np.ndim(u) == 0
        u = np.atleast_1d(np.asarray(u, dtype=float))
        if u.max() > self.window[1] + 1e-12 or u.min() < self.window[0]:
            raise InsufficientWindow("F evaluated outside the driver window")
        out = _jump_sum(lambda t, s: _deriv_or_zero(self.kernel, self.k, t - s), u,
                        self.times, self.amps)
        return float(out[0]) if scalar else out


def compute_F_path(kernel: KernelSpec, k: int, sigma: SigmaPath, driver: DriverPath,
                   eval_grid, offset: float | None = None, sigma_point: str = "left") -> np.ndarray:
    """``F`` on ``eval_grid``: exact jump sum (jump-list drivers) or left-point Riemann sum.

    In the jump-list mode, grid points that coincide with a jump time are
    moved right by ``offset`` (default: half a fine step of an 8-fold refined
    grid).
    """
    u = np.asarray(eval_grid, dtype=float)
    if driver.has_jumps:
        F = FPathCP(kernel, k, sigma, driver)
        if offset is None:
            step = np.min(np.diff(u)) if len(u) > 1 else 1.0
            offset = step / 16.0
        tol = 1e-12 * max(1.0, float(np.max(np.abs(u))))
        pos = np.searchsorted(F.times, u)
        hit = np.zeros(len(u), dtype=bool)
        for shift in (pos - 1, pos):
            ok = (shift >= 0) & (shift < len(F.times))
            hit[ok] |= np.abs(F.times[shift[ok]] - u[ok]) <= tol
        return F(np.where(hit, u + offset, u))
    _check_window(sigma, driver.window_start, driver.window_end)
    return _grid_apply(lambda x: _deriv_or_zero(kernel, k, x),
                       lambda t, s: _deriv_or_zero(kernel, k, t - s),
                       driver, sigma, u, sigma_point)
