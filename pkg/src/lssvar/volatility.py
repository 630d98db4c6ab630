"""Cadlag volatility paths with predictable (left-limit) evaluation."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._quad import piecewise_simpson
from .errors import OutOfWindow
from .levy_driver import DriverSpec, simulate_compound_poisson

SIGMA_KINDS = ("constant", "deterministic", "ou", "step")

# Named deterministic volatility functions usable from config files.
NAMED_FUNCTIONS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "one_plus_s": lambda s: 1.0 + s,
    "one_plus_half_sine": lambda s: 1.0 + 0.5 * np.sin(2.0 * np.pi * s),
    "exp_half_s": lambda s: np.exp(0.5 * s),
}


@dataclass(frozen=True)
class SigmaSpec:
    """Volatility description.

    ``constant``: ``value``. ``deterministic``: ``function`` (a callable or a
    key of :data:`NAMED_FUNCTIONS`). ``step``: right-continuous levels with
    ``levels[0]`` before ``breakpoints[0]``. ``ou``: jump-driven
    Ornstein-Uhlenbeck ``d sigma = -reversion (sigma - mean) dt + dJ`` with
    ``J`` compound Poisson (``jump_driver``), started at ``mean``.
    """

    kind: str = "constant"
    value: float = 1.0
    function: object = None
    breakpoints: tuple = ()
    levels: tuple = ()
    mean: float = 1.0
    reversion: float = 1.0
    jump_driver: DriverSpec | None = None
    bound: float | None = None

    def __post_init__(self):
        if self.kind not in SIGMA_KINDS:
            raise ValueError(f"unknown sigma kind {self.kind!r}")
        if self.kind == "step":
            bps = tuple(float(b) for b in self.breakpoints)
            lev = tuple(float(v) for v in self.levels)
            if len(lev) != len(bps) + 1 or list(bps) != sorted(bps):
                raise ValueError("step needs sorted breakpoints and len(levels) == len(breakpoints)+1")
            object.__setattr__(self, "breakpoints", bps)
            object.__setattr__(self, "levels", lev)
        if self.kind == "deterministic":
            fn = self.function
            if isinstance(fn, str):
                if fn not in NAMED_FUNCTIONS:
                    raise ValueError(f"unknown named function {fn!r}")
            elif not callable(fn):
                raise ValueError("deterministic sigma needs a callable or a named function")
        if self.kind == "ou":
            if not self.reversion > 0:
                raise ValueError("reversion must be > 0")
            if self.jump_driver is None or self.jump_driver.kind != "compound_poisson":
                raise ValueError("ou sigma needs a compound Poisson jump_driver")

    @property
    def callable(self):
        fn = self.function
        return NAMED_FUNCTIONS[fn] if isinstance(fn, str) else fn

    @property
    def is_piecewise(self) -> bool:
        return self.kind in ("step", "ou")


@dataclass
class SigmaPath:
    """A realised volatility path on ``[window_start, window_end]``.

    Piecewise kinds keep their jump times (``jump_times``) and the levels
    right after each jump (``post_levels``); ``initial`` is the level before
    the first jump. ``grid_step`` only controls the CSV sampling.
    """

    spec: SigmaSpec
    window_start: float
    window_end: float
    grid_step: float
    jump_times: np.ndarray = field(default_factory=lambda: np.empty(0))
    post_levels: np.ndarray = field(default_factory=lambda: np.empty(0))
    initial: float = 0.0

    @property
    def grid_start(self) -> float:
        return self.window_start

    @property
    def grid(self) -> np.ndarray:
        count = int(np.floor((self.window_end - self.window_start) / self.grid_step + 1e-9)) + 1
        return self.window_start + self.grid_step * np.arange(count)

    @property
    def values(self) -> np.ndarray:
        return self.value(self.grid)

    def _check(self, s):
        s = np.asarray(s, dtype=float)
        eps = 1e-12 * max(1.0, abs(self.window_start), abs(self.window_end))
        if np.any(s < self.window_start - eps) or np.any(s > self.window_end + eps):
            raise OutOfWindow(f"query outside [{self.window_start}, {self.window_end}]")
        return s

    def _eval(self, s, side: str):
        kind = self.spec.kind
        if kind == "constant":
            return np.full(np.shape(s), float(self.spec.value))
        if kind == "deterministic":
            return np.asarray(self.spec.callable(s), dtype=float) * np.ones(np.shape(s))
        # number of jumps at times <= s (value) or < s (left limit)
        idx = np.searchsorted(self.jump_times, s, side=side)
        levels = np.concatenate([[self.initial], self.post_levels])
        level = levels[idx]
        if kind == "step":
            return level
        anchor = np.concatenate([[self.window_start], self.jump_times])[idx]
        m, kappa = self.spec.mean, self.spec.reversion
        return m + (level - m) * np.exp(-kappa * (s - anchor))

    def value(self, s):
        """Right-continuous value ``sigma_s``."""
        scalar = np.ndim(s) == 0
        out = self._eval(self._check(s), "right")
        return float(out) if scalar else out

    def left_limit(self, s):
        """``sigma_{s-}``; differs from :meth:`value` only at jump times."""
        scalar = np.ndim(s) == 0
        out = self._eval(self._check(s), "left")
        return float(out) if scalar else out

    def bounded_by(self, bound: float) -> bool:
        """Whether ``|sigma| <= bound`` on the window (exact for piecewise kinds)."""
        if self.spec.kind == "constant":
            return abs(self.spec.value) <= bound
        if self.spec.kind == "deterministic":
            grid = np.linspace(self.window_start, self.window_end, 10001)
            return bool(np.all(np.abs(self.value(grid)) <= bound))
        levels = np.concatenate([[self.initial], self.post_levels])
        if self.spec.kind == "ou":
            levels = np.concatenate([levels, [self.spec.mean]])
        return bool(np.all(np.abs(levels) <= bound))


def simulate_sigma(spec: SigmaSpec, window_start: float, window_end: float,
                   grid_step: float, rng: np.random.Generator | None = None) -> SigmaPath:
    if not window_start < window_end:
        raise ValueError("window_start must be < window_end")
    path = SigmaPath(spec, window_start, window_end, grid_step)
    if spec.kind == "step":
        path.jump_times = np.array(spec.breakpoints)
        path.post_levels = np.array(spec.levels[1:])
        path.initial = spec.levels[0]
    elif spec.kind == "ou":
        if rng is None:
            raise ValueError("ou sigma needs an rng")
        jumps = simulate_compound_poisson(spec.jump_driver, window_start, window_end, rng)
        times, sizes = jumps.jump_times, jumps.jump_sizes
        decay = np.exp(-spec.reversion * np.diff(np.concatenate([[window_start], times])))
        post = np.empty(len(times))
        level = spec.mean
        for j in range(len(times)):
            level = spec.mean + (level - spec.mean) * decay[j] + sizes[j]
            post[j] = level
        path.jump_times, path.post_levels, path.initial = times, post, spec.mean
    return path


def sigma_left_limit(path: SigmaPath, s):
    return path.left_limit(s)


def sigma_power_integral(path: SigmaPath, p: float, t: float, start: float = 0.0) -> float:
    """``int_start^t |sigma_s|^p ds``; exact piece sums for constant and step paths."""
    path._check(np.array([start, t]))
    if t <= start:
        return 0.0
    kind = path.spec.kind
    if kind == "constant":
        return (t - start) * abs(path.spec.value) ** p
    inner = path.jump_times[(path.jump_times > start) & (path.jump_times < t)]
    edges = np.concatenate([[start], inner, [t]])
    if kind == "step":
        levels = path.value(edges[:-1])
        return float(np.sum(np.diff(edges) * np.abs(levels) ** p))
    f = lambda s: np.abs(path.value(s)) ** p
    if kind == "deterministic":
        edges = np.linspace(start, t, 9)
    return piecewise_simpson(f, edges, tol=1e-12)


def write_sigma_csv(path: SigmaPath, fh, jumps_fh=None) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["time", "value"])
    for t, v in zip(path.grid, path.values):
        w.writerow([format(float(t), ".17g"), format(float(v), ".17g")])
    if jumps_fh is not None:
        wj = csv.writer(jumps_fh, lineterminator="\n")
        wj.writerow(["time", "post_level"])
        for t, v in zip(path.jump_times, path.post_levels):
            wj.writerow([format(float(t), ".17g"), format(float(v), ".17g")])
