"""Config ingestion, sweep engine, CSV persistence, CLI."""

import json

import numpy as np
import pytest

from swanopt.cli import main as cli_main
from swanopt.geometry import sample_users
from swanopt.harness import (
    CSV_HEADER,
    ExperimentConfig,
    _draw_realization,
    run_bound_sweep,
    run_segment_sweep,
    run_single,
    run_user_sweep,
    sidecar_text,
    sweep_csv_text,
    trace_csv_text,
    write_sweep_result,
)
from swanopt.optimize import greedy_hssa_type1, greedy_hssa_type2

CONFIG_TEXT = """
# tiny experiment
num_users = 2
segment_sweep = 2, 3
grid_points = 30
realizations = 2
master_seed = 11
schemes = hssa-1, full-sa-1
output = out.csv
"""


class TestConfigParsing:
    def test_defaults_match_standard_setup(self):
        cfg = ExperimentConfig()
        assert cfg.carrier_freq_hz == 28e9
        assert cfg.n_eff == 1.4
        assert cfg.tx_power_dbm == 10.0
        assert cfg.noise_dbm == -90.0
        assert cfg.height_m == 3.0
        assert cfg.segment_length_m == 1.0
        assert cfg.region_x_m == 20.0 and cfg.region_y_m == 20.0
        assert cfg.grid_points == 1000
        params = cfg.system_params()
        assert params.min_spacing_m == pytest.approx(params.wavelength_m / 2, rel=1e-12)
        assert params.noise_power_w == pytest.approx(1e-12, rel=1e-12)
        assert cfg.tx_power_w == pytest.approx(0.01, rel=1e-12)

    def test_round_trips_from_text(self):
        cfg = ExperimentConfig.from_text(CONFIG_TEXT)
        assert cfg.num_users == 2
        assert cfg.segment_sweep == (2, 3)
        assert cfg.grid_points == 30
        assert cfg.realizations == 2
        assert cfg.master_seed == 11
        assert cfg.schemes == ("hssa-1", "full-sa-1")
        assert cfg.output == "out.csv"

    def test_unknown_key_rejected(self):
        with pytest.raises(ValueError, match="unknown"):
            ExperimentConfig.from_text("num_userz = 3\n")

    def test_duplicate_key_rejected(self):
        with pytest.raises(ValueError, match="duplicate"):
            ExperimentConfig.from_text("num_users = 3\nnum_users = 4\n")

    def test_malformed_line_rejected(self):
        with pytest.raises(ValueError, match="key = value"):
            ExperimentConfig.from_text("num_users: 3\n")

    def test_conflicting_spacing_keys_rejected(self):
        with pytest.raises(ValueError, match="not both"):
            ExperimentConfig.from_text("min_spacing_m = 0.01\nmin_spacing_wavelengths = 0.5\n")

    def test_absolute_spacing_respected(self):
        cfg = ExperimentConfig.from_text("min_spacing_m = 0.25\n")
        assert cfg.system_params().min_spacing_m == 0.25

    @pytest.mark.parametrize("text", [
        "schemes = hssa-9\n",
        "realizations = 0\n",
        "segment_sweep =\n",
        "user_sweep = 0, 2\n",
        "grid_points = 1\n",
    ])
    def test_invalid_values_rejected(self, text):
        with pytest.raises(ValueError):
            ExperimentConfig.from_text(text)

    def test_hash_is_stable_and_sensitive(self):
        a = ExperimentConfig.from_text(CONFIG_TEXT)
        b = ExperimentConfig.from_text(CONFIG_TEXT)
        assert a.config_hash() == b.config_hash()
        c = ExperimentConfig.from_text(CONFIG_TEXT.replace("master_seed = 11", "master_seed = 12"))
        assert c.config_hash() != a.config_hash()


class TestDrawRealization:
    def test_first_draw_matches_sample_users(self):
        cfg = ExperimentConfig(num_users=3)
        users, bound_users, redraws = _draw_realization(cfg, 3, 5)
        direct = sample_users(3, 20, 20, cfg.tx_power_w, [cfg.master_seed, 5])
        assert np.array_equal(users.x, direct.x) and np.array_equal(users.y, direct.y)
        assert redraws == 0 and bound_users is users

    def test_resampling_confines_bound_users_only(self):
        cfg = ExperimentConfig(num_users=2, master_seed=3)
        layout = cfg.layout_for(3)
        users, bound_users, redraws = _draw_realization(cfg, 2, 0, extent=layout.extent)
        assert np.all(np.abs(bound_users.x) <= 1.5)
        assert redraws >= 1  # a 20 m region almost surely needs redraws for a 3 m extent
        direct = sample_users(2, 20, 20, cfg.tx_power_w, [3, 0])
        assert np.array_equal(users.x, direct.x)


class TestSweepEngine:
    def make_config(self, **kw):
        base = dict(num_users=2, segment_sweep=(2, 3), grid_points=30, realizations=2,
                    master_seed=11, schemes=("hssa-1", "full-sa-1"))
        base.update(kw)
        return ExperimentConfig(**base)

    def test_row_grid_is_complete_and_ordered(self):
        res = run_segment_sweep(self.make_config())
        assert len(res.rows) == 4
        assert [(r.sweep_value, r.scheme) for r in res.rows] == [
            (2, "hssa-1"), (2, "full-sa-1"), (3, "hssa-1"), (3, "full-sa-1")]
        assert all(r.sweep_var == "M" and r.n_real == 2 and r.seed == 11 for r in res.rows)

    def test_reruns_are_byte_identical(self):
        cfg = self.make_config()
        a = sweep_csv_text(run_segment_sweep(cfg))
        b = sweep_csv_text(run_segment_sweep(cfg))
        assert a == b
        assert a.startswith(CSV_HEADER + "\n")
        assert a.endswith("\n") and "\r" not in a

    def test_bound_resampling_does_not_leak_into_optimizers(self):
        with_bounds = run_segment_sweep(self.make_config(schemes=("bound-integral", "hssa-1")))
        without = run_segment_sweep(self.make_config(schemes=("hssa-1",)))
        for m in (2, 3):
            assert with_bounds.row(m, "hssa-1").mean_rate == without.row(m, "hssa-1").mean_rate
        assert any(v > 0 for v in with_bounds.resample_counts.values())
        assert all(v == 0 for v in without.resample_counts.values())

    def test_bound_scheme_dominates_optimizers_with_paired_seeds(self):
        res = run_segment_sweep(self.make_config(
            segment_sweep=(20,), schemes=("bound-exact", "hssa-1", "full-sa-1"), realizations=3))
        cap = res.row(20, "bound-exact").mean_rate
        assert res.row(20, "hssa-1").mean_rate <= cap
        assert res.row(20, "full-sa-1").mean_rate <= cap

    def test_bound_sweep_requires_a_bound_scheme(self):
        with pytest.raises(ValueError, match="bound"):
            run_bound_sweep(self.make_config())
        res = run_bound_sweep(self.make_config(schemes=("bound-integral",), segment_sweep=(4, 5)))
        assert [r.scheme for r in res.rows] == ["bound-integral", "bound-integral"]

    def test_missing_sweep_or_users_rejected(self):
        with pytest.raises(ValueError, match="segment_sweep"):
            run_segment_sweep(self.make_config(segment_sweep=None, num_segments=4))
        with pytest.raises(ValueError, match="num_users"):
            run_segment_sweep(self.make_config(num_users=None))
        with pytest.raises(ValueError, match="user_sweep"):
            run_user_sweep(self.make_config())
        with pytest.raises(ValueError, match="num_segments"):
            run_user_sweep(self.make_config(segment_sweep=None, user_sweep=(1, 2)))

    def test_warns_when_coverage_below_region(self):
        with pytest.warns(RuntimeWarning, match="narrower"):
            run_segment_sweep(self.make_config(schemes=("hssa-1",), segment_sweep=(2,)))

    def test_no_warning_when_segments_cover_region(self):
        import warnings as _warnings

        with _warnings.catch_warnings():
            _warnings.simplefilter("error")
            run_segment_sweep(self.make_config(schemes=("hssa-1",), segment_sweep=(20,),
                                               realizations=1))

    def test_greedy_means_nondecreasing_in_segment_count_within_noise(self):
        # Adding available segments cannot hurt the best stored level beyond
        # Monte Carlo noise; check mean(M2) >= mean(M1) - 2 SE for M2 > M1.
        cfg = self.make_config(segment_sweep=(2, 4, 6, 8), grid_points=50,
                               realizations=10, schemes=("hssa-1", "hssa-2"))
        res = run_segment_sweep(cfg)
        for scheme in cfg.schemes:
            rows = [res.row(m, scheme) for m in (2, 4, 6, 8)]
            for earlier, later in zip(rows, rows[1:]):
                slack = 2 * earlier.std_rate / np.sqrt(earlier.n_real)
                assert later.mean_rate >= earlier.mean_rate - slack

    def test_user_sweep_single_user_point_matches_segment_sweep(self):
        ucfg = self.make_config(segment_sweep=None, num_segments=4, num_users=None,
                                user_sweep=(1,), schemes=("hssa-1",))
        scfg = self.make_config(segment_sweep=(4,), num_users=1, schemes=("hssa-1",))
        urow = run_user_sweep(ucfg).row(1, "hssa-1")
        srow = run_segment_sweep(scfg).row(4, "hssa-1")
        assert urow.mean_rate == srow.mean_rate
        assert urow.sweep_var == "K" and srow.sweep_var == "M"


class TestSingleRun:
    def make_config(self, **kw):
        base = dict(num_users=2, num_segments=3, grid_points=25, master_seed=7,
                    schemes=("hssa-1", "hssa-2"))
        base.update(kw)
        return ExperimentConfig(**base)

    def test_traces_match_library_calls(self):
        cfg = self.make_config()
        traces = run_single(cfg)
        params = cfg.system_params()
        layout = cfg.layout_for(3)
        users, _, _ = _draw_realization(cfg, 2, 0)
        direct1 = greedy_hssa_type1(users, layout, params, 25)
        direct2 = greedy_hssa_type2(users, layout, params, 25)
        assert [l.rate for l in traces["hssa-1"].levels] == [l.rate for l in direct1.levels]
        assert [l.rate for l in traces["hssa-2"].levels] == [l.rate for l in direct2.levels]

    def test_single_segment_gives_one_row(self):
        traces = run_single(self.make_config(num_segments=1, schemes=("hssa-1",)))
        text = trace_csv_text(traces)
        lines = text.strip().split("\n")
        assert len(lines) == 2
        assert lines[1].startswith("hssa-1,1,")
        assert lines[1].endswith(",0,1")  # not degenerate, flagged best

    def test_best_flag_marks_the_maximum(self):
        traces = run_single(self.make_config())
        text = trace_csv_text(traces)
        for scheme, trace in traces.items():
            flagged = [line for line in text.strip().split("\n")[1:]
                       if line.startswith(f"{scheme},") and line.endswith(",1")]
            assert len(flagged) == 1
            level = int(flagged[0].split(",")[1])
            assert trace.levels[level - 1].rate == max(l.rate for l in trace.levels)

    def test_requires_greedy_scheme_and_fixed_sizes(self):
        with pytest.raises(ValueError, match="hssa"):
            run_single(self.make_config(schemes=("full-sa-1",)))
        with pytest.raises(ValueError, match="num_segments"):
            run_single(self.make_config(num_segments=None))


class TestPersistence:
    def test_csv_and_sidecar_written(self, tmp_path):
        cfg = ExperimentConfig(num_users=1, segment_sweep=(2,), grid_points=20,
                               realizations=2, schemes=("bound-integral", "hssa-1"))
        res = run_segment_sweep(cfg)
        out = tmp_path / "sweep.csv"
        write_sweep_result(res, out)
        text = out.read_bytes().decode()
        assert text == sweep_csv_text(res)
        meta = json.loads((tmp_path / "sweep.csv.meta.json").read_text())
        assert meta["config_sha256"] == cfg.config_hash()
        assert meta["sweep_var"] == "M"
        assert meta["tool_version"]
        assert "2" in meta["resample_counts"]
        assert sidecar_text(res) == sidecar_text(res)

    def test_float_formatting_has_full_precision(self):
        cfg = ExperimentConfig(num_users=1, segment_sweep=(2,), grid_points=20,
                               realizations=2, schemes=("hssa-1",))
        res = run_segment_sweep(cfg)
        cell = sweep_csv_text(res).strip().split("\n")[1].split(",")[3]
        assert float(cell) == res.rows[0].mean_rate


class TestCli:
    def write_config(self, tmp_path, text):
        path = tmp_path / "cfg.txt"
        path.write_text(text)
        return str(path)

    def test_segment_sweep_end_to_end(self, tmp_path, capsys):
        cfg = self.write_config(tmp_path, CONFIG_TEXT)
        out = tmp_path / "run.csv"
        code = cli_main(["segment-sweep", "--config", cfg, "--output", str(out)])
        assert code == 0
        assert out.exists() and (tmp_path / "run.csv.meta.json").exists()
        stdout = capsys.readouterr().out
        assert CSV_HEADER in stdout and "wrote" in stdout

    def test_quiet_suppresses_summary(self, tmp_path, capsys):
        cfg = self.write_config(tmp_path, CONFIG_TEXT)
        out = tmp_path / "run.csv"
        assert cli_main(["segment-sweep", "--config", cfg, "--output", str(out), "--quiet"]) == 0
        assert capsys.readouterr().out == ""

    def test_flag_overrides_change_the_result(self, tmp_path):
        cfg = self.write_config(tmp_path, CONFIG_TEXT)
        out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
        assert cli_main(["segment-sweep", "--config", cfg, "--output", str(out1), "--quiet"]) == 0
        assert cli_main(["segment-sweep", "--config", cfg, "--output", str(out2),
                         "--seed", "99", "--realizations", "3", "--quiet"]) == 0
        rows1 = out1.read_text().strip().split("\n")[1:]
        rows2 = out2.read_text().strip().split("\n")[1:]
        assert rows1 != rows2
        assert all(r.endswith(",3,99") for r in rows2)

    def test_single_run_writes_trace(self, tmp_path):
        text = "num_users = 2\nnum_segments = 2\ngrid_points = 20\nschemes = hssa-2\n"
        cfg = self.write_config(tmp_path, text)
        out = tmp_path / "trace.csv"
        assert cli_main(["single-run", "--config", cfg, "--output", str(out), "--quiet"]) == 0
        lines = out.read_text().strip().split("\n")
        assert lines[0].startswith("scheme,level,segment")
        assert len(lines) == 3

    def test_bad_config_reports_error(self, tmp_path, capsys):
        cfg = self.write_config(tmp_path, "bogus_key = 1\n")
        assert cli_main(["bound-sweep", "--config", cfg, "--output", "x.csv"]) == 2
        assert "error" in capsys.readouterr().err

    def test_missing_output_reports_error(self, tmp_path, capsys):
        cfg = self.write_config(tmp_path, "num_users = 1\nsegment_sweep = 2\nschemes = bound-integral\n")
        assert cli_main(["bound-sweep", "--config", cfg]) == 2
        assert "output" in capsys.readouterr().err
