import json

import pytest

from nfvlab import save_generator, reference_code, BitMatrix
from nfvlab.cli import main


def small_fup_config(**overrides):
    config = {
        "scenario": "fup_analyze",
        "seed": 777,
        "trials": 2000,
        "system": {
            "L": 504,
            "r": 0.5,
            "delta": 0.01,
            "latency": {"inv_mu1": 0.0, "mu2": 10.0, "a": 1.0},
        },
        "decoder": {"kind": "bounded_distance", "relative_radius": 0.03},
        "codes": [
            {"kind": "parallel", "N": 8, "label": "parallel"},
            {"kind": "ref84", "label": "ref84"},
        ],
        "time_grid": {"start": 100.0, "stop": 800.0, "points": 8},
    }
    config.update(overrides)
    return config


def write_config(tmp_path, config, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(config))
    return str(path)


def run_cli(*argv):
    return main(list(argv))


class TestRun:
    def test_writes_csv_and_manifest(self, tmp_path, capsys):
        cfg = write_config(tmp_path, small_fup_config())
        out = tmp_path / "out"
        assert run_cli("run", "--config", cfg, "--out", str(out)) == 0
        csv_text = (out / "results.csv").read_text()
        lines = csv_text.split("\n")
        header = lines[0].split(",")
        assert header[0] == "t"
        assert "parallel_ldb" in header and "parallel_ub" in header
        assert "parallel_exact" in header  # closed-form scheme
        assert "ref84_mc" in header and "ref84_mc_hw" in header
        assert len([l for l in lines if l]) == 9  # header + 8 grid rows
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["tool"] == "nfvlab"
        assert manifest["seed"] == 777
        assert manifest["config"]["scenario"] == "fup_analyze"
        assert "nan" not in csv_text.lower()

    def test_exact_columns_for_closed_form_schemes(self, tmp_path):
        # closed-form schemes get an exact column instead of mc columns
        cfg = write_config(tmp_path, small_fup_config())
        out = tmp_path / "o"
        run_cli("run", "--config", cfg, "--out", str(out))
        header = (out / "results.csv").read_text().split("\n")[0]
        assert header.split(",") == [
            "t", "parallel_ldb", "parallel_ub", "parallel_exact",
            "ref84_ldb", "ref84_ub", "ref84_mc", "ref84_mc_hw",
        ]

    def test_byte_identical_across_thread_counts(self, tmp_path):
        cfg = write_config(tmp_path, small_fup_config())
        outs = []
        for threads in ("1", "8"):
            out = tmp_path / f"out{threads}"
            assert run_cli("run", "--config", cfg, "--out", str(out),
                           "--threads", threads) == 0
            outs.append((out / "results.csv").read_bytes())
        assert outs[0] == outs[1]

    def test_manifest_round_trip_reproduces_output(self, tmp_path):
        cfg = write_config(tmp_path, small_fup_config())
        out1 = tmp_path / "a"
        run_cli("run", "--config", cfg, "--out", str(out1))
        out2 = tmp_path / "b"
        assert run_cli("run", "--config", str(out1 / "manifest.json"),
                       "--out", str(out2)) == 0
        assert (out1 / "results.csv").read_bytes() == (out2 / "results.csv").read_bytes()

    def test_set_overrides_and_seed_flag(self, tmp_path):
        cfg = write_config(tmp_path, small_fup_config())
        out = tmp_path / "s"
        run_cli("run", "--config", cfg, "--out", str(out),
                "--set", "trials=500", "--set", "system.delta=0.02", "--seed", "42")
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["config"]["trials"] == 500
        assert manifest["config"]["system"]["delta"] == 0.02
        assert manifest["seed"] == 42

    def test_env_thread_fallback(self, tmp_path, monkeypatch):
        cfg = write_config(tmp_path, small_fup_config())
        out = tmp_path / "env"
        monkeypatch.setenv("NFVLAB_THREADS", "3")
        run_cli("run", "--config", cfg, "--out", str(out))
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["threads"] == 3

    def test_preset_runs(self, tmp_path):
        out = tmp_path / "p"
        assert run_cli("run", "--preset", "fig5", "--out", str(out),
                       "--set", "trials=200",
                       "--set", 'time_grid={"start":100,"stop":700,"points":4}') == 0
        header = (out / "results.csv").read_text().split("\n")[0]
        for label in ("single", "repetition", "parallel", "split_rep", "spc", "ref84"):
            assert f"{label}_ldb" in header

    def test_queue_scenario(self, tmp_path):
        config = {
            "scenario": "queue_simulate",
            "seed": 5,
            "system": {"L": 112, "r": 0.5, "delta": 0.03,
                       "latency": {"inv_mu1": 0.0, "mu2": 500.0, "a": 0.0}},
            "decoder": {"kind": "bounded_distance", "relative_radius": 0.1},
            "codes": [{"kind": "ref84", "label": "ref84"}],
            "queue": {"service": {"mu": 500.0, "mapping": "printed"},
                      "frames": 1500,
                      "sweep": {"kind": "lambda", "values": [1.0, 4.0]}},
        }
        out = tmp_path / "q"
        assert run_cli("run", "--config", write_config(tmp_path, config),
                       "--out", str(out)) == 0
        lines = (out / "results.csv").read_text().strip().split("\n")
        assert lines[0].split(",")[:3] == ["lambda", "ref84_rho", "ref84_pfd_T"]
        assert len(lines) == 3


class TestValidation:
    def test_missing_key_named_in_error(self, tmp_path, capsys):
        config = small_fup_config()
        del config["system"]["delta"]
        code = run_cli("run", "--config", write_config(tmp_path, config),
                       "--out", str(tmp_path / "x"))
        assert code == 2
        assert "system.delta" in capsys.readouterr().err

    def test_empty_time_grid_rejected(self, tmp_path, capsys):
        config = small_fup_config(time_grid=[])
        code = run_cli("run", "--config", write_config(tmp_path, config),
                       "--out", str(tmp_path / "x"))
        assert code == 2
        assert "time_grid" in capsys.readouterr().err

    def test_unknown_scenario_rejected(self, tmp_path, capsys):
        config = small_fup_config(scenario="frobnicate")
        code = run_cli("run", "--config", write_config(tmp_path, config),
                       "--out", str(tmp_path / "x"))
        assert code == 2
        assert "scenario" in capsys.readouterr().err

    def test_duplicate_labels_rejected(self, tmp_path, capsys):
        config = small_fup_config()
        config["codes"] = [{"kind": "parallel", "N": 8, "label": "x"},
                           {"kind": "spc", "N": 8, "label": "x"}]
        code = run_cli("run", "--config", write_config(tmp_path, config),
                       "--out", str(tmp_path / "x"))
        assert code == 2
        assert "labels" in capsys.readouterr().err

    def test_config_and_preset_are_mutually_exclusive(self, tmp_path, capsys):
        code = run_cli("run", "--out", str(tmp_path))
        assert code == 2


class TestCodeInfo:
    def test_reference_code_report(self, tmp_path, capsys):
        path = tmp_path / "ref.txt"
        save_generator(reference_code().generator, path)
        assert run_cli("code-info", str(path)) == 0
        out = capsys.readouterr().out
        assert "d_min:               3" in out
        assert "chromatic number:    3 (exact)" in out
        assert "dependency edges:    12" in out

    def test_identity_report(self, tmp_path, capsys):
        path = tmp_path / "id.txt"
        save_generator(BitMatrix.identity(8), path)
        run_cli("code-info", str(path))
        out = capsys.readouterr().out
        assert "d_min:               1" in out
        assert "chromatic number:    1 (exact)" in out
        assert "dependency edges:    0" in out

    def test_all_ones_report(self, tmp_path, capsys):
        path = tmp_path / "rep.txt"
        save_generator(BitMatrix.ones(1, 8), path)
        run_cli("code-info", str(path))
        out = capsys.readouterr().out
        assert "d_min:               8" in out
        assert "chromatic number:    8 (exact)" in out
        assert "dependency edges:    28" in out

    def test_malformed_file_exit_code_and_line(self, tmp_path, capsys):
        path = tmp_path / "bad.txt"
        path.write_text("2 4\n1010\n10\n")
        assert run_cli("code-info", str(path)) == 2
        assert "line 3" in capsys.readouterr().err


class TestPresets:
    def test_listing(self, capsys):
        assert run_cli("presets") == 0
        out = capsys.readouterr().out
        for name in ("fig5", "fig6", "fig7a-nu", "fig7a-printed",
                     "fig7b-nu", "fig7b-printed", "fig8"):
            assert name in out
