
import pytest

from gsfim.cli import main

CONFIG = """
system.n_users = 2
system.n_tx = 4
system.n_rx = 2
system.n_s = 2
system.n_a = 1
system.n_f = 2
system.n_af = 1
system.mod_order = 2
detector.kind = obmmse
sweep.snr_db = 0:10:10
sweep.seed = 3
sweep.max_trials = 500
sweep.target_errors = 50
"""


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / "scenario.cfg"
    path.write_text(CONFIG)
    return str(path)


class TestSimulate:
    def test_repeat_runs_byte_identical(self, config_path, tmp_path):
        out1 = tmp_path / "a.csv"
        out2 = tmp_path / "b.csv"
        assert main(["simulate", "--config", config_path, "--out", str(out1)]) == 0
        assert main(["simulate", "--config", config_path, "--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_jobs_byte_identical(self, config_path, tmp_path):
        out1 = tmp_path / "a.csv"
        out2 = tmp_path / "b.csv"
        assert main(["simulate", "--config", config_path, "--out", str(out1),
                     "--jobs", "1"]) == 0
        assert main(["simulate", "--config", config_path, "--out", str(out2),
                     "--jobs", "2"]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_seed_override_changes_output(self, config_path, tmp_path):
        out1 = tmp_path / "a.csv"
        out2 = tmp_path / "b.csv"
        main(["simulate", "--config", config_path, "--out", str(out1)])
        main(["simulate", "--config", config_path, "--out", str(out2), "--seed", "99"])
        assert out1.read_bytes() != out2.read_bytes()

    def test_detector_override(self, config_path, tmp_path):
        out = tmp_path / "a.csv"
        assert main(["simulate", "--config", config_path, "--out", str(out),
                     "--detector", "smmp"]) == 0
        assert ",smmp," in out.read_text()

    def test_separate_with_crm_rejected(self, config_path, tmp_path, capsys):
        code = main(["simulate", "--config", config_path, "--out",
                     str(tmp_path / "x.csv"), "--detector", "separate"])
        assert code == 2
        assert "crm_enabled" in capsys.readouterr().err


class TestComplexity:
    def test_prints_all_detectors(self, config_path, capsys):
        assert main(["complexity", "--config", config_path]) == 0
        out = capsys.readouterr().out
        for name in ("smmp", "admm", "obmmse", "mld"):
            assert name in out


class TestValidate:
    def test_default_config_passes(self, config_path, capsys):
        assert main(["validate", "--config", config_path]) == 0
        out = capsys.readouterr().out
        assert "FAIL" not in out
        assert "all " in out


class TestConfigErrors:
    def test_missing_file(self, tmp_path, capsys):
        code = main(["validate", "--config", str(tmp_path / "nope.cfg")])
        assert code == 2
        assert "config error" in capsys.readouterr().err

    def test_malformed_key(self, tmp_path, capsys):
        path = tmp_path / "bad.cfg"
        path.write_text(CONFIG + "\nwhatever.key = 1\n")
        code = main(["validate", "--config", str(path)])
        assert code == 2
        assert "whatever.key" in capsys.readouterr().err
