"""Seeded Monte Carlo experiments: limit verification, estimator benchmarks, CSV reports."""

from __future__ import annotations

import csv
import hashlib
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone

import numpy as np

from .errors import ConfigInvalid, SigmaBoundExceeded, ZeroVariation
from .estimators import (PGrid, ParamDomainJ, estimate_from_values, fit_alpha_beta,
                         scale_limit)
from .kernel_math import HkParams, KernelSpec, hk_abs_power_integral
from .levy_driver import DriverSpec, blumenthal_getoor, simulate_compound_poisson
from .limit_oracles import (abs_moment_stable, exact_marks, f_power_integral_cumulative,
                            mp_constant, vm_series)
from .lss_sim import (FPathCP, SimConfig, burnin_truncation, compute_F_path, simulate_lss_cp,
                      simulate_lss_stable)
from .power_variation import normalization_factor, power_variation, regime_classify
from .volatility import SigmaSpec, sigma_power_integral, simulate_sigma

MODES = ("verify_i", "verify_ii", "verify_iii", "estimate", "oracle")
STREAMS = {"driver": 0, "sigma": 1, "marks": 2}
UCP_POINTS = 10


def derive_seed(master: int, replication: int, stream: str) -> int:
    """64-bit seed for one (replication, stream) pair.

    The mixing function is numpy's ``SeedSequence`` with entropy ``master``
    and spawn key ``(replication, stream id)``; the first 64-bit word of its
    generated state is the seed.
    """
    if stream not in STREAMS:
        raise ValueError(f"unknown stream {stream!r}")
    seq = np.random.SeedSequence(int(master) % 2 ** 64, spawn_key=(int(replication), STREAMS[stream]))
    return int(seq.generate_state(1, np.uint64)[0])


def _rng(master, rep, stream, *extra):
    return np.random.default_rng([derive_seed(master, rep, stream), *extra])


@dataclass(frozen=True)
class ExperimentConfig:
    kernel: KernelSpec = field(default_factory=KernelSpec)
    driver: DriverSpec = field(default_factory=DriverSpec)
    sigma: SigmaSpec = field(default_factory=SigmaSpec)
    mode: str = "verify_ii"
    k: int = 1
    p: float = 1.0
    pgrid: PGrid = field(default_factory=PGrid)
    n_list: tuple = (512, 4096)
    replications: int = 100
    master_seed: int = 20240101
    t_max: float = 1.0
    fine_factor: int = 8
    tail_tol: float = 1e-6
    fine_past: float = 16.0
    theta: float = 1.0
    workers: int = 1
    rel_tol: float = 0.05
    synthetic: bool = False
    p_ratio: float = 0.5
    ri_t: float = 0.5
    ri_p: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "n_list", tuple(int(n) for n in self.n_list))

    @property
    def beta(self) -> float:
        return blumenthal_getoor(self.driver)

    def regime(self) -> str:
        return regime_classify(self.kernel.alpha, self.beta, self.p, self.k)

    def validate(self) -> "ExperimentConfig":
        if self.mode not in MODES:
            raise ConfigInvalid(f"mode must be one of {MODES}")
        if self.replications < 1 or not self.n_list or min(self.n_list) < 2:
            raise ConfigInvalid("need replications >= 1 and every n >= 2")
        if self.workers < 1:
            raise ConfigInvalid("workers must be >= 1")
        if self.mode.startswith("verify"):
            tag = self.regime()
            if tag == "critical":
                raise ConfigInvalid(
                    "critical parameters (p = beta, alpha = k - 1/p or alpha = k - 1/beta): "
                    "the power variation has no limit of the verified forms there")
            want = self.mode.split("_")[1]
            if tag != want:
                raise ConfigInvalid(f"parameters are in regime {tag!r}, not {want!r}")
            if want == "i" and self.driver.kind != "compound_poisson":
                raise ConfigInvalid("verify_i compares per path and needs a compound Poisson driver")
            if want == "ii" and self.driver.kind != "stable":
                raise ConfigInvalid("verify_ii needs a stable driver")
        if self.mode == "estimate" and not self.synthetic and self.driver.kind != "stable":
            raise ConfigInvalid("estimate needs a stable driver (or synthetic = true)")
        if self.mode.startswith("verify") and self.sigma.kind == "ou" and self.sigma.bound is None:
            raise ConfigInvalid("an OU volatility is unbounded: set sigma.bound for verify runs")
        if self.sigma.kind == "ou" and self.driver.kind == "stable" and self.kernel.rate == 0:
            raise ConfigInvalid("an OU volatility cannot cover the burn-in of a kernel without decay")
        return self

    def canonical_text(self) -> str:
        """Sorted ``key = value`` lines of every setting except ``workers``."""
        items = dict(_flatten(self))
        items.pop("workers", None)
        return "".join(f"{k} = {items[k]}\n" for k in sorted(items))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_text().encode()).hexdigest()[:16]


# -- config text -------------------------------------------------------------------------------------

CONFIG_KEYS = {
    "mode": "verify_i | verify_ii | verify_iii | estimate | oracle",
    "kernel.family": "gamma | power",
    "kernel.c0": "kernel amplitude (nonzero)",
    "kernel.alpha": "small-time exponent (> 0)",
    "kernel.decay": "exponential rate of the gamma kernel",
    "kernel.g0_mode": "zero | equal_g",
    "driver.kind": "stable | compound_poisson",
    "driver.beta": "stability index in (0, 2)",
    "driver.gamma_scale": "stable scale (cf exp(-gamma^beta |u|^beta))",
    "driver.rate": "compound Poisson jump rate",
    "driver.jump_law": "rademacher | two_sided_pareto | atoms",
    "driver.size": "rademacher jump size",
    "driver.tail_index": "Pareto tail index",
    "driver.min_size": "Pareto minimum magnitude",
    "driver.atoms": "atoms as size:prob,size:prob",
    "sigma.kind": "constant | deterministic | step | ou",
    "sigma.value": "constant level",
    "sigma.function": "one_plus_s | one_plus_half_sine | exp_half_s",
    "sigma.breakpoints": "comma-separated step times",
    "sigma.levels": "comma-separated step levels (one more than breakpoints)",
    "sigma.mean": "OU mean",
    "sigma.reversion": "OU mean-reversion speed",
    "sigma.jump_rate": "OU jump rate",
    "sigma.jump_size": "OU rademacher jump size",
    "sigma.bound": "asserted bound on |sigma|, checked on every simulated path",
    "k": "increment order",
    "p": "power",
    "pgrid": "comma-separated powers for the (alpha, beta) fit",
    "n_list": "comma-separated sampling frequencies",
    "replications": "number of replications",
    "master_seed": "64-bit master seed",
    "t_max": "horizon",
    "fine_factor": "driver cells per observation cell (stable drivers)",
    "tail_tol": "burn-in tail tolerance",
    "fine_past": "length of past covered by the fine grid",
    "theta": "exponent of the burn-in bound for compound Poisson drivers",
    "workers": "worker processes (results do not depend on it)",
    "rel_tol": "per-path relative error threshold (verify_i)",
    "synthetic": "estimate mode: fit noiseless limit curves (true/false)",
    "p_ratio": "power of the ratio estimator of H",
    "ri_t": "time of the relative intermittency",
    "ri_p": "power of the relative intermittency",
}


def _floats(text):
    return tuple(float(x) for x in text.split(",") if x.strip())


def _flatten(cfg: ExperimentConfig):
    kr, dr, sg = cfg.kernel, cfg.driver, cfg.sigma
    yield "mode", cfg.mode
    yield "kernel.family", kr.family
    yield "kernel.c0", repr(kr.c0)
    yield "kernel.alpha", repr(kr.alpha)
    yield "kernel.decay", repr(kr.decay)
    yield "kernel.g0_mode", kr.g0_mode
    yield "driver.kind", dr.kind
    yield "driver.beta", repr(dr.beta)
    yield "driver.gamma_scale", repr(dr.gamma_scale)
    yield "driver.rate", repr(dr.rate)
    yield "driver.jump_law", dr.jump_law
    yield "driver.size", repr(dr.size)
    yield "driver.tail_index", repr(dr.tail_index)
    yield "driver.min_size", repr(dr.min_size)
    yield "driver.atoms", ",".join(f"{s!r}:{p!r}" for s, p in dr.atoms)
    yield "sigma.kind", sg.kind
    yield "sigma.value", repr(sg.value)
    yield "sigma.function", str(sg.function)
    yield "sigma.breakpoints", ",".join(repr(b) for b in sg.breakpoints)
    yield "sigma.levels", ",".join(repr(v) for v in sg.levels)
    yield "sigma.mean", repr(sg.mean)
    yield "sigma.reversion", repr(sg.reversion)
    jd = sg.jump_driver
    yield "sigma.jump_rate", repr(jd.rate) if jd else ""
    yield "sigma.jump_size", repr(jd.size) if jd else ""
    yield "sigma.bound", repr(sg.bound) if sg.bound is not None else ""
    for key in ("k", "p", "replications", "master_seed", "t_max", "fine_factor", "tail_tol",
                "fine_past", "theta", "workers", "rel_tol", "synthetic", "p_ratio", "ri_t", "ri_p"):
        yield key, repr(getattr(cfg, key))
    yield "pgrid", ",".join(repr(p) for p in cfg.pgrid.points)
    yield "n_list", ",".join(str(n) for n in cfg.n_list)


def parse_config(text: str) -> ExperimentConfig:
    """Parse flat ``key = value`` text (``#`` starts a comment) into a validated config."""
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigInvalid(f"line {lineno}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise ConfigInvalid(f"line {lineno}: unknown key {key!r}")
        raw[key] = val
    try:
        return _build(raw).validate()
    except ConfigInvalid:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigInvalid(str(exc)) from exc


def _build(raw: dict) -> ExperimentConfig:
    def sub(prefix):
        return {k.split(".", 1)[1]: v for k, v in raw.items() if k.startswith(prefix + ".")}

    kr = sub("kernel")
    kernel = KernelSpec(
        family=kr.get("family", "gamma"), c0=float(kr.get("c0", 1.0)),
        alpha=float(kr.get("alpha", 0.5)), decay=float(kr.get("decay", 1.0)),
        g0_mode=kr.get("g0_mode") or None)
    dr = sub("driver")
    atoms = ()
    if dr.get("atoms"):
        atoms = tuple(tuple(float(x) for x in item.split(":")) for item in dr["atoms"].split(","))
    driver = DriverSpec(
        kind=dr.get("kind", "stable"), beta=float(dr.get("beta", 1.5)),
        gamma_scale=float(dr.get("gamma_scale", 1.0)), rate=float(dr.get("rate", 1.0)),
        jump_law=dr.get("jump_law", "rademacher"), size=float(dr.get("size", 1.0)),
        tail_index=float(dr.get("tail_index", 2.0)), min_size=float(dr.get("min_size", 1.0)),
        atoms=atoms)
    sg = sub("sigma")
    jump_driver = None
    if sg.get("kind") == "ou":
        jump_driver = DriverSpec(kind="compound_poisson", rate=float(sg.get("jump_rate", 1.0)),
                                 size=float(sg.get("jump_size", 0.1)))
    function = sg.get("function") or None
    if function == "None":
        function = None
    sigma = SigmaSpec(
        kind=sg.get("kind", "constant"), value=float(sg.get("value", 1.0)), function=function,
        breakpoints=_floats(sg.get("breakpoints", "")), levels=_floats(sg.get("levels", "")),
        mean=float(sg.get("mean", 1.0)), reversion=float(sg.get("reversion", 1.0)),
        jump_driver=jump_driver, bound=float(sg["bound"]) if sg.get("bound") else None)
    kw = {}
    for key, conv in (("mode", str), ("k", int), ("p", float), ("replications", int),
                      ("master_seed", int), ("t_max", float), ("fine_factor", int),
                      ("tail_tol", float), ("fine_past", float), ("theta", float),
                      ("workers", int), ("rel_tol", float), ("p_ratio", float),
                      ("ri_t", float), ("ri_p", float)):
        if key in raw:
            kw[key] = conv(raw[key])
    if "synthetic" in raw:
        flag = raw["synthetic"].lower()
        if flag not in ("true", "false"):
            raise ConfigInvalid("synthetic must be true or false")
        kw["synthetic"] = flag == "true"
    if "pgrid" in raw:
        kw["pgrid"] = PGrid(_floats(raw["pgrid"]))
    if "n_list" in raw:
        kw["n_list"] = tuple(int(float(x)) for x in raw["n_list"].split(",") if x.strip())
    return ExperimentConfig(kernel=kernel, driver=driver, sigma=sigma, **kw)


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(fh.read())


# -- reports ---------------------------------------------------------------------------------------------

@dataclass(frozen=True)
class ReportRow:
    n: int
    statistic: str
    mean: float
    median: float
    q05: float
    q95: float
    target: float
    rel_error: float
    count: int


@dataclass
class MCReport:
    rows: list
    config_hash: str
    master_seed: int
    flags: dict = field(default_factory=dict)
    samples: dict = field(default_factory=dict, repr=False)

    def row(self, n: int, statistic: str) -> ReportRow:
        for r in self.rows:
            if r.n == n and r.statistic == statistic:
                return r
        raise KeyError((n, statistic))

    def body_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "statistic", "mean", "median", "q05", "q95", "target", "rel_error", "count"])
        for r in self.rows:
            w.writerow([r.n, r.statistic] + [format(float(v), ".17g") for v in
                                             (r.mean, r.median, r.q05, r.q95, r.target, r.rel_error)]
                       + [r.count])
        return buf.getvalue()

    def write_csv(self, fh, timestamp: bool = True) -> None:
        fh.write(f"# config_hash = {self.config_hash}\n# master_seed = {self.master_seed}\n")
        for key in sorted(self.flags):
            fh.write(f"# {key} = {self.flags[key]}\n")
        if timestamp:
            fh.write(f"# generated = {datetime.now(timezone.utc).isoformat(timespec='seconds')}\n")
        fh.write(self.body_csv())


def _summarise(n, statistic, values, target=np.nan) -> ReportRow:
    v = np.asarray(values, dtype=float)
    v = v[np.isfinite(v)]
    if len(v) == 0:
        return ReportRow(n, statistic, np.nan, np.nan, np.nan, np.nan, target, np.nan, 0)
    med = float(np.median(v))
    rel = abs(med - target) / abs(target) if np.isfinite(target) and target != 0 else np.nan
    return ReportRow(n, statistic, float(np.mean(v)), med, float(np.quantile(v, 0.05)),
                     float(np.quantile(v, 0.95)), float(target), rel, int(len(v)))


# -- single replications -------------------------------------------------------------------------------------

def _sigma_window(cfg: ExperimentConfig, burn: float, rep: int):
    rng = _rng(cfg.master_seed, rep, "sigma")
    path = simulate_sigma(cfg.sigma, -burn, cfg.t_max, 1.0 / max(cfg.n_list), rng)
    if cfg.sigma.bound is not None and not path.bounded_by(cfg.sigma.bound):
        raise SigmaBoundExceeded(f"replication {rep}: sigma leaves [-{cfg.sigma.bound}, {cfg.sigma.bound}]")
    return path


def _ucp_grid(cfg):
    return cfg.t_max * np.arange(1, UCP_POINTS + 1) / UCP_POINTS


def _rep_verify_cp(cfg: ExperimentConfig, rep: int) -> dict:
    """Regimes (i) and (iii) with an exact compound Poisson driver shared across n."""
    kernel, p, k = cfg.kernel, cfg.p, cfg.k
    burn = burnin_truncation(kernel, cfg.theta, cfg.tail_tol, cfg.t_max, 1.0 / max(cfg.n_list))
    sigma = _sigma_window(cfg, burn, rep)
    driver = simulate_compound_poisson(cfg.driver, -burn, cfg.t_max,
                                       _rng(cfg.master_seed, rep, "driver"))
    tag = cfg.mode.split("_")[1]
    out = {}
    if tag == "iii":
        targets = f_power_integral_cumulative(FPathCP(kernel, k, sigma, driver), p, _ucp_grid(cfg))
    for n in cfg.n_list:
        times = np.arange(int(round(cfg.t_max * n)) + 1) / n
        X = simulate_lss_cp(kernel, sigma, driver, times)
        V = power_variation(X, p, k)
        factor = normalization_factor(tag, n, p, k, kernel.alpha, cfg.beta)
        if tag == "i":
            inside = (driver.jump_times > 0) & (driver.jump_times <= cfg.t_max)
            jt = driver.jump_times[inside]
            amps = np.abs(driver.jump_sizes[inside] * sigma.left_limit(jt)) ** p
            _, marks = exact_marks(jt, n)
            vms = np.array([vm_series(kernel.alpha, k, p, float(u)) for u in marks])
            target = abs(kernel.c0) ** p * float(np.sum(amps * vms))
            value = factor * V.values[-1]
            err = abs(value - target) / target if target > 0 else np.nan
            out[n] = {"normalized_V": value, "oracle": target, "rel_error": err,
                      "degenerate": float(target == 0)}
        else:
            norm_t = np.array([factor * V.at(t) for t in _ucp_grid(cfg)])
            target = targets[-1]
            err = abs(norm_t[-1] - target) / target if target > 0 else np.nan
            ucp = np.max(np.abs(norm_t - targets)) / target if target > 0 else np.nan
            out[n] = {"normalized_V": norm_t[-1], "oracle": target, "rel_error": err, "ucp": ucp,
                      "degenerate": float(target == 0)}
    return out


def _rep_verify_ii(cfg: ExperimentConfig, rep: int) -> dict:
    kernel, p, k = cfg.kernel, cfg.p, cfg.k
    beta, gam = cfg.driver.beta, cfg.driver.gamma_scale
    mp = mp_constant(kernel.c0, gam, kernel.alpha, k, beta, p)
    burn = max(SimConfig(n, cfg.t_max, None, cfg.fine_factor, cfg.tail_tol).resolve_burn_in(kernel, beta)
               for n in cfg.n_list)
    sigma = _sigma_window(cfg, burn, rep)
    ts = _ucp_grid(cfg)
    targets = np.array([mp * sigma_power_integral(sigma, p, t) for t in ts])
    out = {}
    for n in cfg.n_list:
        sim = SimConfig(n, cfg.t_max, burn, cfg.fine_factor, cfg.tail_tol, cfg.fine_past)
        X = simulate_lss_stable(kernel, sigma, beta, gam, sim, _rng(cfg.master_seed, rep, "driver", n))
        V = power_variation(X, p, k)
        factor = normalization_factor("ii", n, p, k, kernel.alpha, beta)
        norm_t = np.array([factor * V.at(t) for t in ts])
        out[n] = {"normalized_V": norm_t[-1], "oracle": targets[-1],
                  "rel_error": abs(norm_t[-1] - targets[-1]) / targets[-1],
                  "ucp": float(np.max(np.abs(norm_t - targets)) / targets[-1])}
    return out


def _ri_target(sigma, p, t, t_max):
    return sigma_power_integral(sigma, p, t) / sigma_power_integral(sigma, p, t_max)


def _rep_estimate(cfg: ExperimentConfig, rep: int) -> dict:
    kernel = cfg.kernel
    a0 = kernel.alpha
    b0 = cfg.driver.beta
    H0 = a0 + 1.0 / b0
    out = {}
    if cfg.synthetic:
        ps = cfg.pgrid.array
        S = dict(zip(cfg.pgrid.points, scale_limit(a0, b0, ps)))
        rep_ = fit_alpha_beta(S, cfg.pgrid, ParamDomainJ())
        for n in cfg.n_list:
            out[n] = {"alpha_abs_error": abs(rep_.alpha_hat - a0), "beta_abs_error": abs(rep_.beta_hat - b0),
                      "H_abs_error": abs(rep_.H_hat - H0), "RI_abs_error": 0.0}
        return out
    gam = cfg.driver.gamma_scale
    burn = max(SimConfig(n, cfg.t_max, None, cfg.fine_factor, cfg.tail_tol).resolve_burn_in(kernel, b0)
               for n in cfg.n_list)
    sigma = _sigma_window(cfg, burn, rep)
    ri_true = _ri_target(sigma, cfg.ri_p, cfg.ri_t, cfg.t_max)
    for n in cfg.n_list:
        sim = SimConfig(n, cfg.t_max, burn, cfg.fine_factor, cfg.tail_tol, cfg.fine_past)
        X = simulate_lss_stable(kernel, sigma, b0, gam, sim, _rng(cfg.master_seed, rep, "driver", n))
        try:
            est = estimate_from_values(X.values, n, cfg.pgrid, ParamDomainJ(), cfg.p_ratio, cfg.ri_t, cfg.ri_p)
        except ZeroVariation:
            out[n] = {key: np.nan for key in ("alpha_abs_error", "beta_abs_error", "H_abs_error", "RI_abs_error")}
            continue
        out[n] = {"alpha_hat": est.alpha_hat, "beta_hat": est.beta_hat, "H_hat": est.H_hat,
                  "RI": est.diagnostics["RI"],
                  "alpha_abs_error": abs(est.alpha_hat - a0), "beta_abs_error": abs(est.beta_hat - b0),
                  "H_abs_error": abs(est.H_hat - H0), "RI_abs_error": abs(est.diagnostics["RI"] - ri_true)}
    return out


def run_replication(cfg: ExperimentConfig, rep: int) -> dict:
    """All statistics of replication ``rep``: ``{n: {statistic: value}}``."""
    if cfg.mode in ("verify_i", "verify_iii"):
        if cfg.driver.kind != "compound_poisson":
            return _rep_verify_iii_stable(cfg, rep)
        return _rep_verify_cp(cfg, rep)
    if cfg.mode == "verify_ii":
        return _rep_verify_ii(cfg, rep)
    if cfg.mode == "estimate":
        return _rep_estimate(cfg, rep)
    raise ConfigInvalid(f"mode {cfg.mode!r} has no replications")


def _rep_verify_iii_stable(cfg: ExperimentConfig, rep: int) -> dict:
    """Regime (iii) with a stable driver: F from the same Riemann grid as X."""
    kernel, p, k = cfg.kernel, cfg.p, cfg.k
    beta, gam = cfg.driver.beta, cfg.driver.gamma_scale
    burn = max(SimConfig(n, cfg.t_max, None, cfg.fine_factor, cfg.tail_tol).resolve_burn_in(kernel, beta)
               for n in cfg.n_list)
    sigma = _sigma_window(cfg, burn, rep)
    out = {}
    for n in cfg.n_list:
        sim = SimConfig(n, cfg.t_max, burn, cfg.fine_factor, cfg.tail_tol, cfg.fine_past)
        X = simulate_lss_stable(kernel, sigma, beta, gam, sim, _rng(cfg.master_seed, rep, "driver", n))
        fine = np.arange(int(round(cfg.t_max * n * cfg.fine_factor)) + 1) / (n * cfg.fine_factor)
        F = compute_F_path(kernel, k, sigma, X.driver, fine)
        vals = np.abs(F) ** p
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (vals[1:] + vals[:-1]) * np.diff(fine))])
        ts = _ucp_grid(cfg)
        targets = np.interp(ts, fine, cum)
        V = power_variation(X, p, k)
        factor = normalization_factor("iii", n, p, k, kernel.alpha, beta)
        norm_t = np.array([factor * V.at(t) for t in ts])
        out[n] = {"normalized_V": norm_t[-1], "oracle": targets[-1],
                  "rel_error": abs(norm_t[-1] - targets[-1]) / targets[-1],
                  "ucp": float(np.max(np.abs(norm_t - targets)) / targets[-1])}
    return out


# -- orchestration ---------------------------------------------------------------------------------------

def _collect(cfg: ExperimentConfig) -> list:
    reps = range(cfg.replications)
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            return list(pool.map(run_replication, [cfg] * cfg.replications, reps))
    return [run_replication(cfg, r) for r in reps]


def _aggregate(cfg: ExperimentConfig, results: list, targets: dict) -> MCReport:
    rows, samples = [], {}
    for n in cfg.n_list:
        stats = []
        for res in results:
            for key in res[n]:
                if key not in stats:
                    stats.append(key)
        for key in stats:
            vals = np.array([res[n].get(key, np.nan) for res in results], dtype=float)
            samples[(n, key)] = vals
            rows.append(_summarise(n, key, vals, targets.get((n, key), np.nan)))
    return MCReport(rows, cfg.config_hash(), cfg.master_seed, samples=samples)


def run_verify(cfg: ExperimentConfig) -> MCReport:
    """Replicate the verification pipeline of ``cfg.mode`` and summarise per ``n``."""
    cfg.validate()
    if not cfg.mode.startswith("verify"):
        raise ConfigInvalid("run_verify needs a verify_* mode")
    results = _collect(cfg)
    targets = {}
    if cfg.mode == "verify_ii" and cfg.sigma.kind in ("constant", "step", "deterministic"):
        first = results[0][cfg.n_list[0]]["oracle"]
        for n in cfg.n_list:
            targets[(n, "normalized_V")] = first
    for n in cfg.n_list:
        targets[(n, "rel_error")] = 0.0
    report = _aggregate(cfg, results, targets)
    if cfg.mode == "verify_i":
        for n in cfg.n_list:
            errs = report.samples[(n, "rel_error")]
            ok = np.where(np.isfinite(errs), errs < cfg.rel_tol, False)
            report.rows.append(_summarise(n, "pass_fraction", ok.astype(float)))
        degenerate = int(np.sum(report.samples[(cfg.n_list[0], "degenerate")]))
        report.flags["degenerate_replications"] = degenerate
    return report


def run_estimate(cfg: ExperimentConfig) -> MCReport:
    cfg.validate()
    if cfg.mode != "estimate":
        raise ConfigInvalid("run_estimate needs mode = estimate")
    results = _collect(cfg)
    targets = {(n, key): 0.0 for n in cfg.n_list
               for key in ("alpha_abs_error", "beta_abs_error", "H_abs_error", "RI_abs_error")}
    a0, b0 = cfg.kernel.alpha, cfg.driver.beta
    for n in cfg.n_list:
        targets[(n, "alpha_hat")] = a0
        targets[(n, "beta_hat")] = b0
        targets[(n, "H_hat")] = a0 + 1.0 / b0
    return _aggregate(cfg, results, targets)


def run_oracle(cfg: ExperimentConfig) -> list:
    """Limit constants for the configured parameters as ``(name, params, value)`` rows."""
    kernel, p, k = cfg.kernel, cfg.p, cfg.k
    params = {"alpha": kernel.alpha, "k": k, "p": p, "c0": kernel.c0}
    rows = []
    beta = cfg.beta
    tag = regime_classify(kernel.alpha, beta, p, k)
    rows.append(("regime", dict(params, beta=beta, tag=tag), float("nan")))
    if cfg.driver.kind == "stable":
        gam = cfg.driver.gamma_scale
        bp = dict(params, beta=beta, gamma=gam)
        try:
            rows.append(("hk_abs_power_integral", dict(alpha=kernel.alpha, k=k, q=beta),
                         hk_abs_power_integral(HkParams(kernel.alpha, k), beta)))
        except ValueError:
            pass
        if p < beta:
            rows.append(("abs_moment_stable", dict(beta=beta, p=p), abs_moment_stable(beta, p)))
            if tag == "ii":
                rows.append(("mp_constant", bp, mp_constant(kernel.c0, gam, kernel.alpha, k, beta, p)))
    if tag == "i":
        for u in (0.0, 0.25, 0.5, 0.75, 1.0):
            rows.append(("vm_series", dict(alpha=kernel.alpha, k=k, p=p, u=u),
                         vm_series(kernel.alpha, k, p, u)))
    return rows


def with_overrides(cfg: ExperimentConfig, **kw) -> ExperimentConfig:
    return replace(cfg, **kw)
