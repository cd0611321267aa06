import math
from dataclasses import replace

import numpy as np
import pytest


from gsfim.errors import ConfigError
from gsfim.harness import (
    CSV_HEADER,
    RunSpec,
    parse_config_text,
    render_csv,
    run_sweep,
    run_trial,
    serialize_run_spec,
)

from conftest import TINY

GOOD_CONFIG = """
# comment
system.n_users = 2
system.n_tx = 4
system.n_rx = 2
system.n_s = 2
system.n_a = 1
system.n_f = 2
system.n_af = 1
system.mod_order = 2
system.crm_angle_deg = 30
detector.kind = obmmse
sweep.snr_db = 0:5:10
sweep.seed = 7
sweep.max_trials = 500
sweep.target_errors = 50
"""


class TestConfigParsing:
    def test_good_config(self):
        run = parse_config_text(GOOD_CONFIG)
        assert run.cfg.n_users == 2
        assert run.cfg.snr_grid == (0.0, 5.0, 10.0)
        assert run.cfg.seed == 7
        assert abs(run.cfg.crm_angle - math.pi / 6) < 1e-12
        assert run.detector == "obmmse"
        assert run.max_trials == 500

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="unknown config key"):
            parse_config_text(GOOD_CONFIG + "\nsystem.bogus = 1\n")

    def test_duplicate_key(self):
        with pytest.raises(ConfigError, match="duplicate"):
            parse_config_text(GOOD_CONFIG + "\nsystem.n_users = 3\n")

    def test_missing_required(self):
        with pytest.raises(ConfigError, match="system.n_tx"):
            parse_config_text("system.n_users = 2\n")

    def test_bad_snr_format(self):
        bad = GOOD_CONFIG.replace("0:5:10", "0:5")
        with pytest.raises(ConfigError, match="snr_db"):
            parse_config_text(bad)

    def test_both_angle_keys_rejected(self):
        with pytest.raises(ConfigError, match="not both"):
            parse_config_text(GOOD_CONFIG + "\nsystem.crm_angle = 0.5\n")

    def test_separate_requires_no_crm(self):
        bad = GOOD_CONFIG.replace("detector.kind = obmmse", "detector.kind = separate")
        with pytest.raises(ConfigError, match="crm_enabled"):
            parse_config_text(bad)
        ok = bad + "\nsystem.crm_enabled = false\n"
        assert parse_config_text(ok).detector == "separate"

    def test_invariant_violation_reported(self):
        bad = GOOD_CONFIG.replace("system.n_tx = 4", "system.n_tx = 3")
        with pytest.raises(ConfigError, match="n_tx"):
            parse_config_text(bad)

    def test_pdp_parsing(self):
        cfg = GOOD_CONFIG + "\nchannel.kind = tdl\nchannel.pdp = 0:0,3:-3.5\n"
        cfg += "system.total_subcarriers = 8\n"
        run = parse_config_text(cfg)
        assert run.channel.kind == "tdl"
        assert run.channel.pdp == ((0, 0.0), (3, -3.5))

    def test_serialization_roundtrip(self):
        run = parse_config_text(GOOD_CONFIG)
        text = "\n".join(serialize_run_spec(run))
        again = parse_config_text(
            text.replace("sweep.snr_db_values = 0.0,5.0,10.0", "sweep.snr_db = 0:5:10")
        )
        assert again.cfg == run.cfg


class TestRunTrial:
    def test_noiseless_zero_errors(self):
        for detector in ("mld", "obmmse"):
            for t in range(10):
                records = run_trial(TINY, math.inf, np.random.default_rng(t), detector)
                assert all(r.bit_errors == 0 for r in records)

    def test_deterministic(self):
        a = run_trial(TINY, 5.0, np.random.default_rng(3), "obmmse")
        b = run_trial(TINY, 5.0, np.random.default_rng(3), "obmmse")
        assert a == b

    def test_record_fields(self):
        records = run_trial(TINY, 5.0, np.random.default_rng(4), "obmmse")
        assert len(records) == TINY.n_users
        for user, rec in enumerate(records):
            assert rec.user == user
            assert rec.bits_tx == 3
            assert 0 <= rec.bit_errors <= rec.bits_tx
            assert rec.bit_errors == rec.index_bit_errors + rec.payload_bit_errors


class TestRunSweep:
    def make_run(self, snr_grid, seed=0, **kw):
        cfg = replace(TINY, snr_grid=snr_grid, seed=seed)
        defaults = dict(max_trials=2000, target_errors=100)
        defaults.update(kw)
        return RunSpec(cfg=cfg, detector="obmmse", **defaults)

    def test_stopping_contract(self):
        run = self.make_run((0.0, 30.0))
        result = run_sweep(run)
        for row in result.rows:
            assert row.bit_errors >= run.target_errors or row.trials == run.max_trials

    def test_rows_sorted_by_snr(self):
        run = self.make_run((10.0, 0.0, 5.0))
        result = run_sweep(run)
        assert [row.snr_db for row in result.rows] == [0.0, 5.0, 10.0]

    def test_random_guessing_limit(self):
        run = self.make_run((-40.0,), max_trials=2000, target_errors=500)
        row = run_sweep(run).rows[0]
        assert abs(row.ber - 0.5) < 0.02

    def test_jobs_do_not_change_results(self):
        run = self.make_run((0.0, 8.0), seed=5)
        serial = render_csv(run, run_sweep(run, jobs=1))
        parallel = render_csv(run, run_sweep(run, jobs=2))
        assert serial == parallel

    def test_seed_changes_results(self):
        a = run_sweep(self.make_run((3.0,), seed=1)).rows[0]
        b = run_sweep(self.make_run((3.0,), seed=2)).rows[0]
        assert (a.bit_errors, a.bits) != (b.bit_errors, b.bits)

    def test_ber_monotone_within_ci(self):
        run = self.make_run((0.0, 4.0, 8.0, 12.0), max_trials=3000, target_errors=150)
        rows = run_sweep(run, jobs=2).rows
        for lo, hi in zip(rows, rows[1:]):
            assert hi.ber <= lo.ber + lo.ci95_halfwidth + hi.ci95_halfwidth

    def test_missing_grid_rejected(self):
        with pytest.raises(ConfigError, match="snr_db"):
            run_sweep(RunSpec(cfg=TINY, detector="obmmse"))


class TestCsv:
    def test_header_schema(self):
        assert CSV_HEADER == (
            "snr_db,detector,trials,bits,bit_errors,ber,ci95,mean_candidates,flops_model"
        )
        run = RunSpec(cfg=replace(TINY, snr_grid=(0.0,)), detector="obmmse",
                      max_trials=300, target_errors=50)
        text = render_csv(run, run_sweep(run))
        lines = text.splitlines()
        data = [ln for ln in lines if not ln.startswith("#")]
        assert data[0] == CSV_HEADER
        assert len(data) == 2
        assert data[1].split(",")[1] == "obmmse"

    def test_config_echoed_in_comments(self):
        run = RunSpec(cfg=replace(TINY, snr_grid=(0.0,)), detector="obmmse",
                      max_trials=300, target_errors=50)
        text = render_csv(run, run_sweep(run))
        assert "# system.n_users = 2" in text
        assert "SNR definition" in text

    def test_split_diagnostic_lines(self):
        run = RunSpec(cfg=replace(TINY, snr_grid=(0.0,)), detector="obmmse",
                      max_trials=300, target_errors=50, split_diagnostic=True)
        text = render_csv(run, run_sweep(run))
        assert "# split snr_db=0 " in text
