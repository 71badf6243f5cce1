import json
import subprocess
import sys

import numpy as np
import pytest

from openqmc.cli import main as cli_main
from openqmc.driver import (
    Trajectory,
    config_from_mapping,
    expected_observable,
    load_config,
    run_experiment,
    variance_harness,
)
from openqmc.errors import ConfigError, NumericalCheckError
from openqmc.system import IDENTITY, SIGMA_Z

from test_dyson import rabi_sigma_z

BASE = {
    "method": "dyson-reuse",
    "epsilon": 1.0,
    "delta": 1.0,
    "L": 400,
    "omega_c": 2.5,
    "xi": 0.2,
    "beta": 5.0,
    "dt": 0.05,
    "steps": 8,
    "mbar": 3,
    "m0": 500,
    "seed": 77,
}


def test_expected_observable_simple_cases():
    up = np.array([[0.0, 0.0], [0.0, 1.0]])
    assert expected_observable(SIGMA_Z, up) == pytest.approx(1.0)
    assert expected_observable(SIGMA_Z, 0.5 * IDENTITY) == pytest.approx(0.0)


def test_expected_observable_rejects_non_hermitian():
    bad = np.array([[0.0, 1.0], [0.0, 0.0]])
    with pytest.raises(NumericalCheckError):
        expected_observable(bad, 0.5 * IDENTITY)


def test_expected_observable_rabi(free_modes):
    cfg = config_from_mapping({**BASE, "xi": 0.0, "epsilon": 0.4, "delta": 0.3, "steps": 20})
    traj = run_experiment(cfg)
    exact = rabi_sigma_z(0.4, 0.3, traj.t)
    assert np.abs(traj.obs - exact).max() < 5e-3


def test_config_defaults_and_overrides():
    cfg = config_from_mapping(BASE, overrides={"seed": 5, "method": "btb"})
    assert cfg.seed == 5
    assert cfg.method == "btb"
    assert cfg.bath.omega_max == 10.0  # 4 * omega_c default


def test_config_unknown_key_rejected():
    with pytest.raises(ConfigError, match="unknown keys"):
        config_from_mapping({**BASE, "omega": 3})


def test_config_field_errors_name_the_field():
    with pytest.raises(ConfigError, match="method"):
        config_from_mapping({**BASE, "method": "magic"})
    with pytest.raises(ConfigError, match="mbar"):
        config_from_mapping({**BASE, "mbar": 4})
    with pytest.raises(ConfigError, match="steps"):
        config_from_mapping({**BASE, "steps": 0})
    with pytest.raises(ConfigError, match="xi"):
        config_from_mapping({**BASE, "xi": -1.0})


def test_config_matrix_forms():
    cfg = config_from_mapping(
        {
            **BASE,
            "observable": [[0, [0, -1]], [[0, 1], 0]],  # sigma_y via [re, im]
            "ws": "sigma_x",
            "rho_s": "mixed",
        }
    )
    assert cfg.system.Os[0, 1] == -1j
    assert cfg.system.Ws[0, 1] == 1
    assert np.allclose(cfg.system.rho_s, 0.5 * IDENTITY)


def test_load_config_json_and_toml(tmp_path):
    j = tmp_path / "run.json"
    j.write_text(json.dumps(BASE))
    t = tmp_path / "run.toml"
    t.write_text("\n".join(f"{k} = {json.dumps(v)}" for k, v in BASE.items()))
    a, b = load_config(j), load_config(t)
    assert (a.method, a.dt, a.steps, a.seed, a.bath) == (
        b.method, b.dt, b.steps, b.seed, b.bath,
    )
    assert np.array_equal(a.system.Os, b.system.Os)
    assert a.system.epsilon == b.system.epsilon


def test_trajectory_roundtrip(tmp_path):
    cfg = config_from_mapping({**BASE, "output": str(tmp_path / "t.csv")})
    traj = run_experiment(cfg)
    back = Trajectory.read_csv(tmp_path / "t.csv")
    assert np.allclose(back.G, traj.G, atol=0)
    assert np.allclose(back.obs, traj.obs, atol=0)
    meta = json.loads((tmp_path / "t.csv.meta.json").read_text())
    assert meta["config"]["method"] == "dyson-reuse"
    assert meta["config"]["b_bound"] > 0  # resolved auto bound recorded
    assert "1" in meta["sample_counts"]
    assert meta["wall_times_s"]["total_s"] > 0


def test_metadata_counts_match_budget(tmp_path):
    cfg = config_from_mapping({**BASE, "output": str(tmp_path / "t.csv")})
    traj = run_experiment(cfg)
    # order-1 shell counts: one entry per march step
    assert len(traj.counts[1]) == cfg.steps


@pytest.mark.parametrize("threads", [2, 8])
def test_reproducibility_across_thread_counts(tmp_path, threads):
    out1 = tmp_path / "a.csv"
    out2 = tmp_path / "b.csv"
    for method in ("dyson-reuse", "btb"):
        cfg1 = config_from_mapping(
            {**BASE, "method": method, "threads": 1, "output": str(out1)}
        )
        cfgN = config_from_mapping(
            {**BASE, "method": method, "threads": threads, "output": str(out2)}
        )
        run_experiment(cfg1)
        run_experiment(cfgN)
        assert out1.read_bytes() == out2.read_bytes()


def test_variance_harness_zero_seed_step(tmp_path):
    cfg = config_from_mapping({**BASE, "m0": 300, "steps": 5})
    ref = run_experiment(
        config_from_mapping({**BASE, "m0": 300, "steps": 5, "method": "dyson-reuse"})
    )
    res = variance_harness(cfg, repeats=2, reference=ref, seed_step=0)
    # identical seeds: both repeats coincide, variance is a constant bias
    r1 = res.var_dyson
    res2 = variance_harness(cfg, repeats=3, reference=ref, seed_step=0)
    assert np.allclose(r1, res2.var_dyson)


def test_variance_harness_length_mismatch(tmp_path):
    cfg = config_from_mapping({**BASE, "steps": 5})
    ref = run_experiment(config_from_mapping({**BASE, "steps": 8}))
    with pytest.raises(ConfigError, match="reference"):
        variance_harness(cfg, repeats=2, reference=ref)


def test_cli_run_and_pairings(tmp_path, capsys):
    cfgfile = tmp_path / "cfg.json"
    out = tmp_path / "out.csv"
    cfgfile.write_text(json.dumps({**BASE, "steps": 4}))
    rc = cli_main(["run", "--config", str(cfgfile), "--output", str(out)])
    assert rc == 0
    assert out.exists()
    rc = cli_main(["pairings", "count", "--m", "12", "--family", "all"])
    assert rc == 0
    assert "10395" in capsys.readouterr().out
    rc = cli_main(["pairings", "count", "--m", "8", "--family", "btb", "--ell", "1"])
    assert rc == 0
    assert "36" in capsys.readouterr().out


def test_cli_exit_codes(tmp_path):
    missing = tmp_path / "nope.json"
    assert cli_main(["run", "--config", str(missing)]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({**BASE, "mbar": 2}))
    assert cli_main(["run", "--config", str(bad)]) == 2
    odd = tmp_path / "odd.json"
    odd.write_text(json.dumps({**BASE, "method": "unknown-method"}))
    assert cli_main(["run", "--config", str(odd)]) == 2


def test_cli_entry_point_subprocess(tmp_path):
    cfgfile = tmp_path / "cfg.json"
    cfgfile.write_text(json.dumps({**BASE, "steps": 3, "m0": 200}))
    proc = subprocess.run(
        [sys.executable, "-m", "openqmc.cli", "run", "--config", str(cfgfile)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert "final <O" in proc.stdout


def test_cli_variance_subcommand(tmp_path):
    cfgfile = tmp_path / "cfg.json"
    refcsv = tmp_path / "ref.csv"
    outcsv = tmp_path / "var.csv"
    small = {**BASE, "steps": 4, "m0": 200}
    cfgfile.write_text(json.dumps(small))
    run_experiment(config_from_mapping({**small, "output": str(refcsv)}))
    rc = cli_main(
        [
            "variance",
            "--config", str(cfgfile),
            "--repeats", "2",
            "--reference", str(refcsv),
            "--output", str(outcsv),
        ]
    )
    assert rc == 0
    header = outcsv.read_text().splitlines()[0]
    assert header == "n,t,var_dyson,var_btb,ratio"


def test_bold_table_dump_written(tmp_path):
    out = tmp_path / "btb.csv"
    cfg = config_from_mapping(
        {**BASE, "method": "btb", "steps": 4, "m0": 200, "output": str(out)}
    )
    run_experiment(cfg)
    bold = tmp_path / "btb.csv.bold.csv"
    rows = bold.read_text().splitlines()
    assert rows[0].startswith("k,t,")
    assert len(rows) == 6  # header + steps + 1
