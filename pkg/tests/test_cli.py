"""Command-line driver: exit codes, determinism, file handling."""

import json

import numpy as np
import pytest

from dualcirc import cli
from dualcirc.circuits import build_aa_floquet, spec_from_text, spec_to_text
from dualcirc.experiments import ExperimentRun, read_csv, resolve_config, write_csv


def run_cli(*argv):
    return cli.main(list(argv))


class TestRotate:
    def test_rotate_prints_table_and_writes(self, tmp_path, capsys):
        spec = tmp_path / "aa.spec"
        spec.write_text(spec_to_text(build_aa_floquet(6, lam=0.3)))
        out = tmp_path / "dual.spec"
        assert run_cli("rotate", str(spec), "--out", str(out)) == 0
        table = capsys.readouterr().out
        assert "ZField" in table or "XXBond" in table
        dual = spec_from_text(out.read_text())
        assert dual.sites == 6

    def test_rotate_missing_file(self, tmp_path, capsys):
        assert run_cli("rotate", str(tmp_path / "nope.spec")) == 2
        assert "error" in capsys.readouterr().err

    def test_rotate_malformed(self, tmp_path, capsys):
        bad = tmp_path / "bad.spec"
        bad.write_text("sites 4\nlayer FrobBond 1 2 3\n")
        assert run_cli("rotate", str(bad)) == 2
        assert "error" in capsys.readouterr().err


class TestRun:
    def test_spectrum_deterministic(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert run_cli("run", "spectrum", "--values", "0.5,1.0", "--out", str(a)) == 0
        assert run_cli("run", "spectrum", "--values", "0.5,1.0", "--out", str(b)) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_param_alias_and_range(self, tmp_path):
        out = tmp_path / "s.csv"
        assert run_cli("run", "spectrum", "--alpha-h", "0.5..0.7",
                       "--out", str(out)) == 0
        records, meta = read_csv(out)
        assert meta["config"]["values"] == [0.5, 0.55, 0.6, 0.65, 0.7]

    def test_spectrum_subcommand(self, tmp_path):
        out = tmp_path / "w.csv"
        assert run_cli("spectrum", "--alpha-h", "1.0,2.0", "--out", str(out)) == 0
        records, _ = read_csv(out)
        assert {r["param_value"] for r in records} == {1.0, 2.0}

    def test_config_file_overrides(self, tmp_path):
        cfgfile = tmp_path / "cfg.json"
        cfgfile.write_text(json.dumps({"sizes": [4], "values": [0.3],
                                       "realizations": 2}))
        out = tmp_path / "c.csv"
        assert run_cli("run", "clifford2d", "--config", str(cfgfile),
                       "--out", str(out)) == 0
        _, meta = read_csv(out)
        assert meta["config"]["sizes"] == [4]
        assert meta["config"]["realizations"] == 2

    def test_flags_beat_config_file(self, tmp_path):
        cfgfile = tmp_path / "cfg.json"
        cfgfile.write_text(json.dumps({"sizes": [4], "values": [0.3],
                                       "realizations": 2}))
        out = tmp_path / "c.csv"
        assert run_cli("run", "clifford2d", "--config", str(cfgfile),
                       "--realizations", "3", "--out", str(out)) == 0
        _, meta = read_csv(out)
        assert meta["config"]["realizations"] == 3

    def test_bad_config_file(self, tmp_path, capsys):
        cfgfile = tmp_path / "cfg.json"
        cfgfile.write_text("{not json")
        assert run_cli("run", "spectrum", "--config", str(cfgfile)) == 2

    def test_unknown_field_in_config(self, tmp_path, capsys):
        cfgfile = tmp_path / "cfg.json"
        cfgfile.write_text(json.dumps({"wibble": 1}))
        assert run_cli("run", "spectrum", "--config", str(cfgfile)) == 2
        assert "unknown config field" in capsys.readouterr().err

    def test_abort_rate_exit_code(self, tmp_path, capsys):
        out = tmp_path / "d.csv"
        code = run_cli("run", "clifford2d-dual", "--sizes", "6", "--values", "0.4",
                       "--realizations", "4", "--zero-weight", "abort",
                       "--out", str(out))
        assert code == 3
        assert "abort rate" in capsys.readouterr().err
        assert out.exists()  # the CSV is still written for inspection

    def test_keep_mode_passes_ceiling(self, tmp_path):
        out = tmp_path / "k.csv"
        assert run_cli("run", "clifford2d-dual", "--sizes", "6", "--values", "0.4",
                       "--realizations", "2", "--out", str(out)) == 0


def synthetic_run(tmp_path, x_c=0.5, nu=1.0):
    rng = np.random.default_rng(0)
    records = []
    for size in (16, 32, 64, 128):
        u = np.linspace(-2.0, 2.0, 21)
        x = x_c + u / size ** (1.0 / nu)
        y = 1.0 + np.abs(u) / np.sqrt(1.0 + u * u)
        for xi, yi in zip(x, y):
            records.append({
                "experiment": "synthetic", "seed": 0, "realization": 0,
                "param_name": "p", "param_value": float(xi), "L": size, "t": 0,
                "observable": "entropy_per_l", "value": float(yi), "sem": None,
            })
    cfg = resolve_config("clifford2d", sizes=(16, 32, 64, 128), values=(0.5,))
    run = ExperimentRun(cfg, records, {})
    path = tmp_path / "synthetic.csv"
    write_csv(path, run)
    return path


class TestCollapse:
    def test_recovers_known_point(self, tmp_path, capsys):
        path = synthetic_run(tmp_path)
        out = tmp_path / "rescaled.csv"
        assert run_cli("collapse", str(path), "--n-boot", "10",
                       "--out", str(out)) == 0
        printed = capsys.readouterr().out
        x_c = float(printed.split("x_c  = ")[1].split()[0])
        nu = float(printed.split("nu   = ")[1].split()[0])
        assert x_c == pytest.approx(0.5, abs=0.02)
        assert nu == pytest.approx(1.0, abs=0.1)
        lines = out.read_text().splitlines()
        assert lines[0] == "L,u,value"
        assert len(lines) == 1 + 4 * 21

    def test_insufficient_sizes(self, tmp_path, capsys):
        cfg = resolve_config("clifford2d", sizes=(4, 6), values=(0.2, 0.3, 0.4))
        records = [
            {"experiment": "x", "seed": 0, "realization": 0, "param_name": "p",
             "param_value": v, "L": L, "t": 0, "observable": "entropy_per_l",
             "value": L * v, "sem": None}
            for L in (4, 6) for v in (0.2, 0.3, 0.4)
        ]
        path = tmp_path / "two.csv"
        write_csv(path, ExperimentRun(cfg, records, {}))
        assert run_cli("collapse", str(path)) == 2

    def test_missing_file(self, tmp_path):
        assert run_cli("collapse", str(tmp_path / "nope.csv")) == 2

    def test_observable_autoselect(self, tmp_path, capsys):
        path = synthetic_run(tmp_path)
        assert run_cli("collapse", str(path), "--n-boot", "5") == 0
        assert "observable: entropy_per_l" in capsys.readouterr().out
