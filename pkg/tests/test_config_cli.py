import csv
import hashlib
import json
import math
import os
import subprocess
import sys

import pytest

from sfhd.cli import main
from sfhd.config import (
    ConfigError,
    RunConfig,
    apply_overrides,
    default_config_dict,
    format_float,
    load_config,
    parse_number_list,
)
from sfhd.spectra import MaternSpectrum, ten_atom_measure


def write_cfg(tmp_path, **changes):
    data = default_config_dict()
    data["output"]["dir"] = str(tmp_path / "out")
    for path, value in changes.items():
        node = data
        keys = path.split("__")
        for k in keys[:-1]:
            node = node[k]
        node[keys[-1]] = value
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(data))
    return str(p)


def read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


class TestFormatting:
    @pytest.mark.parametrize("x, s", [(1.0, "1"), (0.0, "0"), (-0.0, "0"), (0.3, "0.3"), (1e-20, "1e-20"), (1 / 3, "0.3333333333333333")])
    def test_format_float(self, x, s):
        assert format_float(x) == s

    def test_round_trip_digits(self):
        x = math.pi * 1e-7
        assert float(format_float(x)) == x

    def test_number_list(self):
        assert parse_number_list("0, 0.5,1") == [0.0, 0.5, 1.0]
        assert parse_number_list("0:1:5") == [0.0, 0.25, 0.5, 0.75, 1.0]
        assert parse_number_list("2:9:1") == [2.0]
        for bad in ["", "a", "0:1", "0:1:0"]:
            with pytest.raises(ConfigError):
                parse_number_list(bad)


class TestConfig:
    def test_default(self):
        cfg = load_config(None)
        assert cfg.model.alpha == 0.8
        assert cfg.measure == ten_atom_measure()
        assert cfg.simulation.times == (0.0, 0.05)

    def test_round_trip(self):
        cfg = load_config(None)
        again = RunConfig.from_dict(json.loads(cfg.dumps()))
        assert again == cfg
        matern = default_config_dict()
        matern["measure"] = {"matern": {"sigma2": 2.0, "a": 1.5, "nu": 2.0}}
        cfg = RunConfig.from_dict(matern)
        assert cfg.measure == MaternSpectrum(2.0, 1.5, 2.0)
        assert RunConfig.from_dict(json.loads(cfg.dumps())) == cfg

    def test_overrides(self):
        data = apply_overrides(default_config_dict(), [("model.alpha", "0.6"), ("output.dir", "x y"), ("simulation.times", "[0, 1]")])
        assert data["model"]["alpha"] == 0.6
        assert data["output"]["dir"] == "x y"
        assert data["simulation"]["times"] == [0, 1]

    @pytest.mark.parametrize(
        "override, field",
        [
            (("model.alpha", "1.5"), "model.alpha"),
            (("model.beta", "0.1"), "model.beta"),
            (("model.c", "0"), "model.c"),
            (("model.d_coef", "-1"), "model.d_coef"),
            (("kernel.n_terms", "0"), "kernel.n_terms"),
            (("simulation.l_max", "500"), "simulation.l_max"),
            (("measure.discrete.atoms", "[[1, -2]]"), "measure.discrete.atoms"),
            (("measure.discrete.atoms", "[[2, 1], [1, 1]]"), "measure.discrete"),
            (("model.gamma", "1"), "model.gamma"),
            (("verify.tolerance_scale", "0"), "verify.tolerance_scale"),
        ],
    )
    def test_field_specific_errors(self, override, field):
        with pytest.raises(ConfigError, match=f"^{field}"):
            load_config(None, [override])

    def test_unreadable(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(str(tmp_path / "missing.json"))
        bad = tmp_path / "bad.json"
        bad.write_text("{")
        with pytest.raises(ConfigError):
            load_config(str(bad))


class TestCli:
    def test_kernel_rows(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path)
        assert main(["kernel", "--config", cfg, "--mu", "0,1", "--t", "0,0.3"]) == 0
        rows = read_csv(tmp_path / "out" / "kernel.csv")
        assert rows[0] == ["mu", "t", "H", "route"]
        assert ["0", "0.3", "1", "series"] in rows
        assert ["1", "0", "1", "series"] in rows
        assert all(r[3] in {"series", "alpha_eq_beta", "classical", "laplace"} for r in rows[1:])

    def test_kernel_routes(self, tmp_path):
        cfg = write_cfg(tmp_path)
        assert main(["kernel", "--config", cfg, "--mu", "1", "--t", "0.1", "--model.alpha", "1.0", "--model.beta", "1.0"]) == 0
        assert read_csv(tmp_path / "out" / "kernel.csv")[1][3] == "classical"

    def test_spectrum(self, tmp_path):
        cfg = write_cfg(tmp_path)
        assert main(["spectrum", "--config", cfg, "--l-max", "20", "--t", "0"]) == 0
        rows = read_csv(tmp_path / "out" / "spectrum.csv")
        assert rows[0] == ["l", "C_l"] and len(rows) == 22
        assert all(float(r[1]) > 0 for r in rows[1:])

    def test_spectrum_decays_in_time(self, tmp_path):
        cfg = write_cfg(tmp_path)
        vals = {}
        for t in ("0.1", "0.5"):
            assert main(["spectrum", "--config", cfg, "--l-max", "10", "--t", t, "--out", f"s{t}.csv"]) == 0
            vals[t] = [float(r[1]) for r in read_csv(tmp_path / "out" / f"s{t}.csv")[1:]]
        assert sum(vals["0.5"]) < sum(vals["0.1"])

    def test_covariance(self, tmp_path):
        cfg = write_cfg(tmp_path)
        assert main(["covariance", "--config", cfg, "--gamma", "0", "--t", "0"]) == 0
        rows = read_csv(tmp_path / "out" / "covariance.csv")
        assert rows[0] == ["gamma_rad", "t", "t_prime", "R"]
        assert float(rows[1][3]) == pytest.approx(ten_atom_measure().total_mass, rel=1e-15)

    def test_covariance_from_spectrum(self, tmp_path):
        cfg = write_cfg(tmp_path)
        args = ["covariance", "--config", cfg, "--gamma", "0:3.14159:5", "--t", "0.1"]
        assert main(args + ["--out", "d.csv"]) == 0
        assert main(args + ["--from-spectrum", "--out", "s.csv"]) == 0
        d = [float(r[3]) for r in read_csv(tmp_path / "out" / "d.csv")[1:]]
        s = [float(r[3]) for r in read_csv(tmp_path / "out" / "s.csv")[1:]]
        assert max(abs(x - y) for x, y in zip(d, s)) <= 1e-6 * d[0]

    def test_simulate(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, simulation__l_max=20, simulation__grid_n_theta=16, simulation__grid_n_phi=32)
        assert main(["simulate", "--config", cfg]) == 0
        out = capsys.readouterr().out.splitlines()
        assert len(out) == 2 and out[0].startswith("t=0 variance=")
        for i in range(2):
            assert (tmp_path / "out" / f"grid_{i:03d}.csv").exists()
            assert (tmp_path / "out" / f"coefficients_{i:03d}.csv").exists()

    def test_simulate_needs_discrete(self, tmp_path):
        cfg = write_cfg(tmp_path, measure={"matern": {"sigma2": 1, "a": 1, "nu": 2}})
        assert main(["simulate", "--config", cfg]) == 64

    def test_verify_default(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path)
        assert main(["verify", "--config", cfg]) == 0
        report = capsys.readouterr().out
        lines = [l for l in report.splitlines() if l.startswith(("PASS", "FAIL"))]
        assert len(lines) >= 10
        assert report.rstrip().endswith(f"{len(lines)}/{len(lines)} checks passed")

    def test_verify_corrupted_tolerance(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, verify__tolerance_scale=1e-30)
        assert main(["verify", "--config", cfg, "--only", "route_classical", "--only", "addition_theorem"]) == 1

    def test_verify_flags_divergent_condition(self, tmp_path, capsys):
        # nu = 1 at t = 0: the mu^2-weighted integral diverges
        cfg = write_cfg(tmp_path, measure={"matern": {"sigma2": 1, "a": 1, "nu": 1}})
        assert main(["verify", "--config", cfg, "--only", "finiteness_condition"]) == 1
        assert "FAIL  finiteness_condition" in capsys.readouterr().out

    def test_usage_errors(self, tmp_path):
        assert main([]) == 64
        assert main(["bogus"]) == 64
        assert main(["kernel", "--mu", "1"]) == 64
        assert main(["kernel", "--mu", "1", "--t", "1", "--stray"]) == 64

    def test_invalid_model_rejected_at_startup(self, tmp_path):
        cfg = write_cfg(tmp_path)
        assert main(["verify", "--config", cfg, "--model.alpha", "0.4", "--model.beta", "0.5"]) == 64
        assert main(["kernel", "--config", cfg, "--mu", "1", "--t", "1", "--model.c", "-1"]) == 64

    def test_threads_env(self, tmp_path, monkeypatch):
        cfg = write_cfg(tmp_path)
        monkeypatch.setenv("SFHD_THREADS", "zero")
        assert main(["kernel", "--config", cfg, "--mu", "1", "--t", "0"]) == 64

    def test_compute_failure(self, tmp_path, caplog):
        cfg = write_cfg(tmp_path)
        code = main(["kernel", "--config", cfg, "--mu", "1", "--t", "-1"])
        assert code == 2
        assert "mu=1, t=-1" in caplog.text

    def test_console_script(self, tmp_path):
        cfg = write_cfg(tmp_path)
        res = subprocess.run(
            [sys.executable, "-m", "sfhd.cli", "kernel", "--config", cfg, "--mu", "2", "--t", "0.2"],
            capture_output=True,
            text=True,
        )
        assert res.returncode == 0, res.stderr
        assert os.path.exists(res.stdout.strip())

    def test_csv_deterministic(self, tmp_path):
        cfg = write_cfg(tmp_path)
        digests = []
        for name in ("a.csv", "b.csv"):
            assert main(["spectrum", "--config", cfg, "--l-max", "30", "--t", "0.2", "--out", name]) == 0
            digests.append(hashlib.sha256((tmp_path / "out" / name).read_bytes()).hexdigest())
        assert digests[0] == digests[1]
