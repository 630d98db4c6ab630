import io
import subprocess
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lssvar.cli import main
from lssvar.errors import ConfigInvalid, SigmaBoundExceeded
from lssvar.harness import (CONFIG_KEYS, derive_seed, parse_config,
                            run_estimate, run_oracle, run_replication, run_verify)

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

SMALL_II = """
mode = verify_ii
kernel.alpha = 0.1
driver.kind = stable
driver.beta = 1.5
sigma.kind = step
sigma.breakpoints = 0.5
sigma.levels = 1, 2
p = 1
n_list = 64, 256
replications = 4
master_seed = 99
"""

SMALL_I = """
mode = verify_i
kernel.alpha = 0.3
driver.kind = compound_poisson
driver.rate = 5
p = 3
n_list = 256, 1024
replications = 6
master_seed = 5
"""


def test_derive_seed_no_collisions():
    seeds = {derive_seed(1, r, s) for r in range(5000) for s in ("driver", "sigma", "marks")}
    assert len(seeds) == 15000


def test_derive_seed_avalanche():
    flips = []
    for master in range(200):
        a = derive_seed(master, 0, "driver")
        b = derive_seed(master ^ 1, 0, "driver")
        flips.append(bin(a ^ b).count("1"))
    assert 28 <= np.mean(flips) <= 36


@given(st.integers(0, 2 ** 63), st.integers(0, 10 ** 6))
def test_derive_seed_is_a_pure_function_with_distinct_streams(master, rep):
    seeds = [derive_seed(master, rep, s) for s in ("driver", "sigma", "marks")]
    assert seeds == [derive_seed(master, rep, s) for s in ("driver", "sigma", "marks")]
    assert len(set(seeds)) == 3 and all(0 <= x < 2 ** 64 for x in seeds)


def test_derive_seed_rejects_unknown_stream():
    with pytest.raises(ValueError):
        derive_seed(1, 0, "noise")


def test_parse_config_and_hash_round_trip():
    cfg = parse_config(SMALL_II)
    again = parse_config(cfg.canonical_text())
    assert again == cfg and again.config_hash() == cfg.config_hash()
    assert replace(cfg, workers=4).config_hash() == cfg.config_hash()
    assert replace(cfg, master_seed=100).config_hash() != cfg.config_hash()


@pytest.mark.parametrize("text,fragment", [
    ("mode = verify_ii\ndriver.beta = 1.5\np = 1.5\n", "critical"),
    ("mode = verify_ii\nkernel.alpha = 0.5\ndriver.beta = 1.5\np = 2\n", "critical"),
    ("mode = verify_i\ndriver.beta = 1.5\np = 1\nkernel.alpha = 0.1\n", "regime"),
    ("mode = verify_i\nkernel.alpha = 0.2\ndriver.beta = 1.5\np = 3\n", "compound Poisson"),
    ("mode = nope\n", "mode"),
    ("banana = 1\n", "unknown key"),
    ("p 3\n", "key = value"),
    ("mode = verify_ii\nkernel.alpha = 0.1\ndriver.beta = 1.5\np = 1\nsigma.kind = ou\n", "sigma.bound"),
    ("kernel.alpha = -1\n", "alpha"),
])
def test_config_validation(text, fragment):
    with pytest.raises(ConfigInvalid, match=fragment):
        parse_config(text)


def test_every_config_key_is_documented_in_help(capsys):
    with pytest.raises(SystemExit):
        main(["verify", "--help"])
    out = capsys.readouterr().out
    assert all(key in out for key in CONFIG_KEYS)


@pytest.mark.parametrize("name", sorted(p.name for p in CONFIGS.glob("*.conf")))
def test_shipped_configs_parse(name):
    parse_config((CONFIGS / name).read_text())


def test_verify_is_deterministic_and_order_free():
    cfg = parse_config(SMALL_II)
    a = run_verify(cfg).body_csv()
    b = run_verify(cfg).body_csv()
    c = run_verify(replace(cfg, workers=2)).body_csv()
    assert a == b == c


def test_verify_i_report_rows():
    rep = run_verify(parse_config(SMALL_I))
    assert rep.row(1024, "pass_fraction").count == 6
    assert "degenerate_replications" in rep.flags
    assert rep.row(256, "rel_error").median > rep.row(1024, "rel_error").median * 0.5
    buf = io.StringIO()
    rep.write_csv(buf, timestamp=False)
    head = buf.getvalue().splitlines()
    assert head[0] == f"# config_hash = {rep.config_hash}"
    assert head[3].startswith("n,statistic,mean,median")


def test_verify_iii_stable_driver_runs():
    cfg = parse_config("mode = verify_iii\nkernel.alpha = 1.4\ndriver.beta = 1.5\np = 2\n"
                       "n_list = 64\nreplications = 2\nfine_factor = 4\n")
    res = run_replication(cfg, 0)
    assert set(res[64]) == {"normalized_V", "oracle", "rel_error", "ucp"}


def test_estimate_synthetic_is_exact():
    cfg = parse_config("mode = estimate\nkernel.family = power\nkernel.alpha = 0.2\n"
                       "driver.beta = 1.5\nsynthetic = true\nreplications = 2\nn_list = 100\n")
    rep = run_estimate(cfg)
    assert rep.row(100, "alpha_abs_error").median == pytest.approx(0.0, abs=1e-12)
    assert rep.row(100, "beta_abs_error").median == pytest.approx(0.0, abs=1e-12)


def test_sigma_bound_is_checked_per_path():
    cfg = parse_config("mode = verify_ii\nkernel.alpha = 0.1\ndriver.beta = 1.5\np = 1\n"
                       "sigma.kind = ou\nsigma.jump_rate = 20\nsigma.jump_size = 1\nsigma.bound = 1.01\n"
                       "n_list = 32\nreplications = 1\n")
    with pytest.raises(SigmaBoundExceeded):
        run_verify(cfg)


def test_oracle_rows():
    rows = {name: value for name, _, value in run_oracle(parse_config("mode = oracle\nkernel.alpha = 0.1\n"
                                                                      "driver.beta = 1.5\np = 1\n"))}
    assert rows["mp_constant"] == pytest.approx(1.7049518097705751, rel=1e-8)
    rows = [r for r in run_oracle(parse_config(SMALL_I.replace("verify_i", "oracle")))]
    assert sum(1 for r in rows if r[0] == "vm_series") == 5


def _cli(*args, cwd=None):
    return subprocess.run([sys.executable, "-m", "lssvar", *args], capture_output=True, text=True, cwd=cwd)


def test_cli_pipeline(tmp_path):
    conf = tmp_path / "ii.conf"
    conf.write_text(SMALL_II)
    path_csv = tmp_path / "path.csv"
    r = _cli("simulate", "--config", str(conf), "--n", "128", "--out", str(path_csv))
    assert r.returncode == 0, r.stderr
    r = _cli("powervar", "--input", str(path_csv), "--p", "1", "--alpha", "0.1", "--beta", "1.5")
    assert r.returncode == 0 and r.stdout.splitlines()[1].endswith(",ii")
    r = _cli("estimate", "--input", str(path_csv), "--out", str(tmp_path / "est.csv"))
    assert r.returncode == 0 and "H_hat" in r.stdout
    r1 = _cli("verify", "--config", str(conf), "--no-timestamp")
    r2 = _cli("verify", "--config", str(conf))
    assert r1.returncode == 0 and r2.returncode == 0
    body = lambda s: [line for line in s.splitlines() if not line.startswith("#")]
    assert body(r1.stdout) == body(r2.stdout) and "# generated" in r2.stdout
    r = _cli("oracle", "--config", str(conf))
    assert r.returncode == 0 and r.stdout.startswith("name,parameters,value")


def test_cli_exit_codes(tmp_path):
    bad = tmp_path / "bad.conf"
    bad.write_text("mode = verify_ii\ndriver.beta = 1.5\np = 1.5\n")
    r = _cli("verify", "--config", str(bad))
    assert r.returncode == 2 and "critical" in r.stderr
    assert _cli("verify", "--config", str(tmp_path / "missing.conf")).returncode == 2
    flat = tmp_path / "flat.csv"
    flat.write_text("time,value\n" + "".join(f"{i / 10},1\n" for i in range(11)))
    r = _cli("estimate", "--input", str(flat))
    assert r.returncode == 3 and "numerical failure" in r.stderr
