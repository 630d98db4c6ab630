"""Symmetric Levy drivers: stable increments, compound Poisson jump lists, jump splitting."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from math import gamma as gamma_fn, pi, sin

import numpy as np

from .errors import MissingJumpList

JUMP_LAWS = ("rademacher", "two_sided_pareto", "atoms")


@dataclass(frozen=True)
class DriverSpec:
    """Either ``kind='stable'`` (beta, gamma_scale) or ``kind='compound_poisson'``.

    For compound Poisson drivers the jump law is symmetric by construction:
    ``rademacher`` draws ``+-size``; ``two_sided_pareto`` draws a random sign
    times a Pareto(tail_index, min_size) magnitude; ``atoms`` lists positive
    magnitudes with probabilities, each mirrored with a random sign.
    """

    kind: str = "stable"
    beta: float = 1.5
    gamma_scale: float = 1.0
    rate: float = 1.0
    jump_law: str = "rademacher"
    size: float = 1.0
    tail_index: float = 2.0
    min_size: float = 1.0
    atoms: tuple = ()

    def __post_init__(self):
        if self.kind == "stable":
            if not 0 < self.beta < 2:
                raise ValueError("stable drivers need 0 < beta < 2")
            if not self.gamma_scale > 0:
                raise ValueError("gamma_scale must be > 0")
        elif self.kind == "compound_poisson":
            if not self.rate >= 0:
                raise ValueError("rate must be >= 0")
            if self.jump_law not in JUMP_LAWS:
                raise ValueError(f"unknown jump law {self.jump_law!r}")
            if self.jump_law == "rademacher" and not self.size > 0:
                raise ValueError("size must be > 0")
            if self.jump_law == "two_sided_pareto" and not (self.tail_index > 0 and self.min_size > 0):
                raise ValueError("pareto law needs tail_index > 0 and min_size > 0")
            if self.jump_law == "atoms":
                atoms = tuple((float(s), float(p)) for s, p in self.atoms)
                if not atoms or any(s <= 0 or p < 0 for s, p in atoms):
                    raise ValueError("atoms must be (positive size, probability) pairs")
                if abs(sum(p for _, p in atoms) - 1.0) > 1e-9:
                    raise ValueError("atom probabilities must sum to 1")
                object.__setattr__(self, "atoms", atoms)
        else:
            raise ValueError(f"unknown driver kind {self.kind!r}")

    # Levy measure access, used by the Phi functional.
    def levy_atoms(self):
        """``(sizes, masses)`` for atomic Levy measures, otherwise ``None``."""
        if self.kind != "compound_poisson" or self.jump_law == "two_sided_pareto":
            return None
        if self.jump_law == "rademacher":
            mags, probs = np.array([self.size]), np.array([1.0])
        else:
            mags = np.array([s for s, _ in self.atoms])
            probs = np.array([p for _, p in self.atoms])
        sizes = np.concatenate([mags, -mags])
        masses = np.concatenate([probs, probs]) * self.rate / 2.0
        return sizes, masses

    def levy_density(self, u):
        """Levy density at ``u > 0`` (the measure is symmetric)."""
        u = np.asarray(u, dtype=float)
        if self.kind == "stable":
            return stable_levy_constant(self.beta, self.gamma_scale) * u ** (-1.0 - self.beta)
        if self.jump_law == "two_sided_pareto":
            th, m = self.tail_index, self.min_size
            dens = 0.5 * self.rate * th * m ** th * np.where(u >= m, u, 1.0) ** (-th - 1.0)
            return np.where(u >= m, dens, 0.0)
        raise ValueError("atomic Levy measure has no density")

    def levy_density_breaks(self):
        if self.kind == "compound_poisson" and self.jump_law == "two_sided_pareto":
            return [self.min_size]
        return []


def stable_levy_constant(beta: float, gamma_scale: float = 1.0) -> float:
    """C in ``nu(dx) = C |x|^(-1-beta) dx`` for the law with cf ``exp(-gamma^beta |u|^beta)``."""
    return gamma_scale ** beta * gamma_fn(1.0 + beta) * sin(pi * beta / 2.0) / pi


def blumenthal_getoor(spec: DriverSpec) -> float:
    if spec.kind == "stable":
        return float(spec.beta)
    return 0.0


@dataclass(frozen=True)
class JumpRecord:
    time: float
    size: float

    def __post_init__(self):
        if self.size == 0:
            raise ValueError("jump size must be nonzero")


@dataclass
class DriverPath:
    """Increments of L on ``[grid_start + i*grid_step, grid_start + (i+1)*grid_step)``.

    Compound Poisson paths also carry the exact jump list (``jump_times``,
    ``jump_sizes``) and the window they were simulated on.
    """

    grid_start: float
    grid_step: float
    increments: np.ndarray
    jump_times: np.ndarray | None = None
    jump_sizes: np.ndarray | None = None
    window_end: float | None = None
    # optional coarse cells [far_left, far_right) before grid_start
    far_left: np.ndarray | None = None
    far_right: np.ndarray | None = None
    far_increments: np.ndarray | None = None

    def __post_init__(self):
        if not self.grid_step > 0:
            raise ValueError("grid_step must be > 0")
        self.increments = np.asarray(self.increments, dtype=float)
        if self.window_end is None:
            self.window_end = self.grid_start + self.grid_step * len(self.increments)

    @property
    def window_start(self) -> float:
        if self.far_left is not None and len(self.far_left):
            return float(self.far_left.min())
        return self.grid_start

    @property
    def has_jumps(self) -> bool:
        return self.jump_times is not None

    @property
    def jumps(self) -> list[JumpRecord]:
        if not self.has_jumps:
            raise MissingJumpList("path carries grid increments only")
        return [JumpRecord(float(t), float(s)) for t, s in zip(self.jump_times, self.jump_sizes)]

    def grid_increments(self, start: float, step: float, count: int) -> np.ndarray:
        """Sum the jump sizes falling in each cell ``[start + i step, start + (i+1) step)``."""
        if not self.has_jumps:
            raise MissingJumpList("regridding needs the exact jump list")
        idx = np.floor((self.jump_times - start) / step).astype(np.int64)
        ok = (idx >= 0) & (idx < count)
        return np.bincount(idx[ok], weights=self.jump_sizes[ok], minlength=count).astype(float)


def sample_stable(beta: float, gamma_scale: float, rng: np.random.Generator, size=None):
    """Symmetric beta-stable variates with cf ``exp(-gamma_scale**beta |u|**beta)``.

    Chambers-Mallows-Stuck transform of a uniform angle and a unit exponential.
    """
    v = rng.uniform(-pi / 2.0, pi / 2.0, size)
    w = rng.standard_exponential(size)
    if beta == 1.0:
        x = np.tan(v)
    else:
        x = (np.sin(beta * v) / np.cos(v) ** (1.0 / beta)
             * (np.cos((1.0 - beta) * v) / w) ** ((1.0 - beta) / beta))
    x = gamma_scale * x
    return float(x) if size is None else x


def simulate_stable_increments(beta: float, gamma_scale: float, grid_start: float,
                               grid_step: float, count: int,
                               rng: np.random.Generator) -> DriverPath:
    if not grid_step > 0:
        raise ValueError("grid_step must be > 0")
    incs = sample_stable(beta, gamma_scale * grid_step ** (1.0 / beta), rng, size=int(count))
    return DriverPath(grid_start, grid_step, incs)


def _jump_magnitudes(spec: DriverSpec, rng: np.random.Generator, count: int) -> np.ndarray:
    if spec.jump_law == "rademacher":
        mags = np.full(count, float(spec.size))
    elif spec.jump_law == "two_sided_pareto":
        mags = spec.min_size * (1.0 - rng.uniform(size=count)) ** (-1.0 / spec.tail_index)
    else:
        sizes = np.array([s for s, _ in spec.atoms])
        probs = np.array([p for _, p in spec.atoms])
        mags = sizes[rng.choice(len(sizes), size=count, p=probs)]
    signs = np.where(rng.uniform(size=count) < 0.5, -1.0, 1.0)
    return signs * mags


def simulate_compound_poisson(spec: DriverSpec, window_start: float, window_end: float,
                              rng: np.random.Generator) -> DriverPath:
    """Exact jump list of a symmetric compound Poisson process on ``[start, end)``."""
    if spec.kind != "compound_poisson":
        raise ValueError("driver is not compound Poisson")
    if not window_start < window_end:
        raise ValueError("window_start must be < window_end")
    length = window_end - window_start
    count = int(rng.poisson(spec.rate * length))
    times = np.sort(rng.uniform(window_start, window_end, count))
    # distinct jump times; re-draw the (measure zero) ties
    while count > 1 and np.any(np.diff(times) <= 0):
        dup = np.flatnonzero(np.diff(times) <= 0) + 1
        times[dup] = rng.uniform(window_start, window_end, len(dup))
        times.sort()
    sizes = _jump_magnitudes(spec, rng, count)
    return DriverPath(window_start, length, np.array([sizes.sum()]),
                      jump_times=times, jump_sizes=sizes, window_end=window_end)


def split_by_threshold(path: DriverPath, a: float) -> tuple[DriverPath, DriverPath]:
    """Split into jumps with ``|size| > a`` and the rest."""
    if not path.has_jumps:
        raise MissingJumpList("split_by_threshold needs the exact jump list")
    if not a > 0:
        raise ValueError("threshold must be > 0")
    big = np.abs(path.jump_sizes) > a
    parts = []
    for mask in (big, ~big):
        t, s = path.jump_times[mask], path.jump_sizes[mask]
        parts.append(DriverPath(path.grid_start, path.window_end - path.grid_start,
                                np.array([s.sum()]), jump_times=t, jump_sizes=s,
                                window_end=path.window_end))
    return parts[0], parts[1]


def merge_jumps(*paths: DriverPath) -> tuple[np.ndarray, np.ndarray]:
    times = np.concatenate([p.jump_times for p in paths])
    sizes = np.concatenate([p.jump_sizes for p in paths])
    order = np.argsort(times, kind="stable")
    return times[order], sizes[order]


# -- CSV ------------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_increments_csv(path: DriverPath, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["time", "increment"])
    times = path.grid_start + path.grid_step * np.arange(len(path.increments))
    for t, x in zip(times, path.increments):
        w.writerow([_fmt(t), _fmt(x)])


def write_jumps_csv(times, sizes, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["time", "size"])
    for t, s in zip(times, sizes):
        w.writerow([_fmt(t), _fmt(s)])


def read_two_column_csv(fh) -> tuple[np.ndarray, np.ndarray]:
    rows = [r for r in csv.reader(line for line in fh if not line.startswith("#"))]
    body = rows[1:]
    a = np.array([float(r[0]) for r in body])
    b = np.array([float(r[1]) for r in body])
    return a, b
