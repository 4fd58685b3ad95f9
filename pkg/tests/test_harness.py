import csv
from pathlib import Path

import numpy as np
import pytest

from railmimo.config import ScenarioConfig, dbm_to_watts, kmh_to_mps
from railmimo.harness import (ConfigError, ExperimentSpec, dump_config, load_config,
                              parse_config_text, run_sweep, run_training,
                              spec_from_values)
from railmimo.model import build_channels, build_geometry, sinr_and_se
from railmimo.optimizers import SumSeObjective, exhaustive_search

from conftest import assert_rel_close


def read_csv(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def strip_wall_ms(path):
    rows = read_csv(path)
    return [{k: v for k, v in row.items() if k != "wall_ms"} for row in rows]


class TestLoadConfig:
    def test_empty_file_gives_defaults(self, tmp_path):
        p = tmp_path / "empty.cfg"
        p.write_text("")
        spec = load_config(p)
        sc = spec.scenario
        assert sc.num_aps == 30 and sc.num_tas == 8 and sc.num_positions == 10
        assert sc.carrier_freq == 1.2e9
        assert sc.sample_duration == 4e-4
        assert_rel_close(sc.noise_power, dbm_to_watts(-96.0), 0, "noise")
        assert sc.train_speed == pytest.approx(kmh_to_mps(300.0), rel=0)
        assert sc.vertical_distance == 50.0
        assert sc.position_step == 0.125  # half wavelength at 1.2 GHz
        assert sc.train_offset == 350.0

    def test_invalid_invariant(self, tmp_path):
        p = tmp_path / "bad.cfg"
        p.write_text("num_positions = 0\n")
        with pytest.raises(ValueError, match="num_positions"):
            load_config(p)

    def test_unknown_key(self, tmp_path):
        p = tmp_path / "bad.cfg"
        p.write_text("numaps = 5\n")
        with pytest.raises(ConfigError, match="unknown key"):
            load_config(p)

    def test_parse_error_has_line_number(self):
        with pytest.raises(ConfigError, match=":2:"):
            parse_config_text("num_aps = 5\nnum_tas\n")
        with pytest.raises(ConfigError, match=":1:.*num_aps"):
            parse_config_text("num_aps = many\n")

    def test_comments_and_blanks(self):
        values = parse_config_text("# header\n\nnum_aps = 4  # trailing\n")
        assert values == {"num_aps": 4}

    def test_round_trip(self, tmp_path):
        p = tmp_path / "full.cfg"
        p.write_text("\n".join([
            "num_aps = 6", "num_tas = 3", "num_positions = 4",
            "vertical_distance_m = 35.5", "train_speed_mps = 20.0",
            "uplink_power_w = 2e-06",
            "sweep_variable = num_aps", "sweep_values = 2,4,6",
            "speeds_kmh = 0.0,300.0", "algorithms = fpa,greedy",
            "seeds = 1,2", "random_budget = 77", "ppo_episodes = 12",
            "ppo_batch_size = 64", "ppo_advantage_norm = true",
        ]) + "\n")
        spec = load_config(p)
        q = tmp_path / "dumped.cfg"
        q.write_text(dump_config(spec))
        assert load_config(q) == spec

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            load_config(tmp_path / "nope.cfg")

    def test_exhaustive_cap_validation(self):
        with pytest.raises(ConfigError, match="exhaustive"):
            spec_from_values({"num_aps": 10, "num_positions": 10,
                              "algorithms": ["exhaustive"]})

    def test_per_ta_powers(self):
        spec = spec_from_values({"num_tas": 3, "uplink_powers_w": [1e-5, 2e-5, 3e-5]})
        assert spec.scenario.uplink_powers == [1e-5, 2e-5, 3e-5]
        with pytest.raises(ValueError, match="uplink_powers"):
            spec_from_values({"num_tas": 2, "uplink_powers_w": [1e-5] * 3})


def small_sweep_spec(**kw):
    scenario = ScenarioConfig(num_aps=4, num_tas=2, num_positions=3,
                              railway_length=800.0, train_length=240.0,
                              train_offset=280.0)
    defaults = dict(scenario=scenario, algorithms=["fpa"], seeds=[0],
                    scenario_id="unit", random_budget=30)
    defaults.update(kw)
    return ExperimentSpec(**defaults)


class TestRunSweep:
    def test_fig2_analog_rows_and_trend(self, tmp_path):
        spec = ExperimentSpec(scenario=ScenarioConfig(),
                              sweep_variable="num_aps",
                              sweep_values=[5, 10, 15, 20, 25, 30],
                              speeds_kmh=[0.0, 300.0],
                              algorithms=["fpa"], seeds=[0], scenario_id="fig2")
        path = run_sweep(spec, out_dir=tmp_path)
        rows = read_csv(path)
        assert len(rows) == 12
        static = sorted(((int(r["L"]), float(r["sum_se_bps_hz"]))
                         for r in rows if float(r["v_kmh"]) == 0.0))
        values = [v for _, v in static]
        assert all(b > a for a, b in zip(values, values[1:]))

    def test_fig3_analog_decreasing(self, tmp_path):
        spec = ExperimentSpec(scenario=ScenarioConfig(),
                              sweep_variable="vertical_distance",
                              sweep_values=[20.0, 60.0, 100.0],
                              speeds_kmh=[0.0, 300.0],
                              algorithms=["fpa"], seeds=[0], scenario_id="fig3")
        rows = read_csv(run_sweep(spec, out_dir=tmp_path))
        for speed in (0.0, 300.0):
            series = sorted((float(r["d_ve_m"]), float(r["sum_se_bps_hz"]))
                            for r in rows if float(r["v_kmh"]) == speed)
            values = [v for _, v in series]
            assert all(b < a for a, b in zip(values, values[1:]))

    def test_duplicate_seeds_duplicate_values(self, tmp_path):
        spec = small_sweep_spec(algorithms=["random"], seeds=[3, 3])
        rows = read_csv(run_sweep(spec, out_dir=tmp_path))
        assert len(rows) == 2
        assert rows[0]["sum_se_bps_hz"] == rows[1]["sum_se_bps_hz"]

    def test_byte_determinism_modulo_wall_ms(self, tmp_path):
        spec = small_sweep_spec(algorithms=["fpa", "random", "greedy"], seeds=[0, 1])
        p1 = run_sweep(spec, out_dir=tmp_path / "a")
        p2 = run_sweep(spec, out_dir=tmp_path / "b")
        assert strip_wall_ms(p1) == strip_wall_ms(p2)

    def test_sidecar_rederivation(self, tmp_path):
        spec = small_sweep_spec(algorithms=["greedy", "random"], seeds=[4],
                                sweep_variable="num_aps", sweep_values=[2, 4])
        result_path = run_sweep(spec, out_dir=tmp_path)
        sidecar = read_csv(Path(str(result_path).replace("_sweep.csv",
                                                         "_sweep_placements.csv")))
        results = read_csv(result_path)
        assert len(sidecar) == len(results)
        for res, side in zip(results, sidecar):
            cfg = spec.scenario.with_overrides(
                num_aps=int(res["L"]),
                vertical_distance=float(res["d_ve_m"]),
                train_speed=kmh_to_mps(float(res["v_kmh"])))
            placement = [int(x) for x in side["placement"].split()]
            geom = build_geometry(cfg)
            ch = build_channels(cfg, geom)
            rep = sinr_and_se(cfg, geom, ch, placement)
            assert rep.sum_se == float(res["sum_se_bps_hz"])

    def test_rail_length_sweep_sets_positions(self, tmp_path):
        base = ScenarioConfig(num_aps=3, num_tas=2, num_positions=4,
                              railway_length=600.0, train_length=200.0,
                              train_offset=200.0)
        spec = ExperimentSpec(scenario=base, sweep_variable="rail_length",
                              sweep_values=[5.0, 10.0], algorithms=["fpa"],
                              seeds=[0], scenario_id="rails")
        rows = read_csv(run_sweep(spec, out_dir=tmp_path))
        # d_s = lambda/2 default, so d_ap = m lambda needs N = 2 m positions
        assert [int(r["N"]) for r in rows] == [10, 20]
        assert [float(r["d_ap_over_lambda"]) for r in rows] == [5.0, 10.0]

    def test_algorithm_sweep(self, tmp_path):
        spec = small_sweep_spec(sweep_variable="algorithm",
                                sweep_values=["fpa", "greedy"], seeds=[0])
        rows = read_csv(run_sweep(spec, out_dir=tmp_path))
        assert [r["algorithm"] for r in rows] == ["fpa", "greedy"]

    def test_error_identifies_sweep_point(self, tmp_path):
        # base scenario passes validation; the L=12 sweep point exceeds the cap
        spec = small_sweep_spec(algorithms=["exhaustive"], exhaustive_cap=100,
                                sweep_variable="num_aps", sweep_values=[2, 12])
        with pytest.raises(Exception, match=r"num_aps=12.*algorithm=exhaustive"):
            run_sweep(spec, out_dir=tmp_path)


class TestRunTraining:
    def make_spec(self, **kw):
        from railmimo.neural import SgdSchedule
        from railmimo.ppo import PpoConfig
        scenario = ScenarioConfig(num_aps=4, num_tas=2, num_positions=4,
                                  railway_length=800.0, train_length=240.0,
                                  train_offset=280.0)
        ppo = PpoConfig(max_episodes=10, schedule=SgdSchedule(batch_size=16),
                        epochs_per_update=1)
        defaults = dict(scenario=scenario, seeds=[0], scenario_id="tr", ppo=ppo)
        defaults.update(kw)
        return ExperimentSpec(**defaults)

    def test_short_run_rows(self, tmp_path):
        paths = run_training(self.make_spec(), out_dir=tmp_path)
        assert len(paths) == 1
        rows = read_csv(paths[0])
        assert len(rows) == 10
        assert set(rows[0]) == {"episode", "reward_raw", "reward_smoothed", "lr"}
        assert float(rows[0]["lr"]) == 3e-4
        # partial-window smoothing is defined from the first episode
        assert rows[0]["reward_smoothed"] == rows[0]["reward_raw"]

    def test_mode_grids_share_rail_span(self, tmp_path):
        spec = self.make_spec(ds_modes=["half-lambda", "lambda"])
        base = spec.scenario
        lam = base.wavelength
        from railmimo.harness import _mode_scenario
        half = _mode_scenario(base, "half-lambda")
        full = _mode_scenario(base, "lambda")
        assert half.rail_span == pytest.approx(base.rail_span, rel=1e-12)
        assert full.rail_span == pytest.approx(base.rail_span, rel=1e-12)
        assert half.position_step == lam / 2 and full.position_step == lam
        # the coarse grid is a subset, so its optimum cannot exceed the fine one
        opt_half = exhaustive_search(SumSeObjective(half), half.num_aps,
                                     half.num_positions)
        opt_full = exhaustive_search(SumSeObjective(full), full.num_aps,
                                     full.num_positions)
        assert opt_half.best_value >= opt_full.best_value
        offsets_full = {n * full.position_step for n in range(1, full.num_positions + 1)}
        offsets_half = {n * half.position_step for n in range(1, half.num_positions + 1)}
        assert all(any(abs(o - oh) < 1e-12 for oh in offsets_half) for o in offsets_full)

    def test_three_modes_write_files(self, tmp_path):
        spec = self.make_spec(ds_modes=["half-lambda", "lambda", "continuous"],
                              seeds=[0, 1])
        paths = run_training(spec, out_dir=tmp_path)
        assert len(paths) == 6
        for p in paths:
            assert p.exists() and p.stat().st_size > 0

    def test_training_csv_deterministic(self, tmp_path):
        p1 = run_training(self.make_spec(), out_dir=tmp_path / "a")[0]
        p2 = run_training(self.make_spec(), out_dir=tmp_path / "b")[0]
        assert p1.read_bytes() == p2.read_bytes()
