"""Experiment configuration, seeded sweeps and CSV persistence.

Configs are plain-text ``key = value`` files (one key per physical symbol,
SI units in the key name, '#' comments).  Unknown keys are an error; missing
keys fall back to the default deployment (30 APs, 8 TAs, 10 rail positions,
1.2 GHz, 0.4 ms sampling, -96 dBm noise, 300 km/h, 50 m vertical distance).

Sweeps write two CSVs: the result table and a placements sidecar from which
every logged sum SE can be re-derived.  All floats print with 17 significant
digits, so identical spec+seeds reproduce byte-identical files (the wall_ms
column is informational and excluded from that guarantee).
"""

import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from .config import ScenarioConfig, dbm_to_watts, kmh_to_mps, mps_to_kmh
from .neural import SgdSchedule
from .optimizers import (DEFAULT_BUDGET_CAP, SumSeObjective, exhaustive_search,
                         fixed_baseline, greedy_coordinate_ascent, random_search)
from .ppo import PpoConfig, train

SWEEP_VARIABLES = ("num_aps", "vertical_distance", "speed", "rail_length", "algorithm")
ALGORITHMS = ("fpa", "random", "greedy", "exhaustive", "ppo")
DS_MODES = ("half-lambda", "lambda", "continuous")

RESULT_COLUMNS = ("scenario_id", "algorithm", "L", "K", "N", "d_s_over_lambda",
                  "d_ve_m", "v_kmh", "d_ap_over_lambda", "seed", "sum_se_bps_hz",
                  "evaluations", "wall_ms")
PLACEMENT_COLUMNS = ("scenario_id", "algorithm", "L", "K", "N", "d_ve_m", "v_kmh",
                     "seed", "placement")
CONVERGENCE_COLUMNS = ("episode", "reward_raw", "reward_smoothed", "lr")


class ConfigError(ValueError):
    """Configuration file could not be parsed or validated."""


@dataclass
class ExperimentSpec:
    scenario: ScenarioConfig
    sweep_variable: Optional[str] = None
    sweep_values: List = field(default_factory=list)
    speeds_kmh: Optional[List[float]] = None   # crossed axis; None = scenario speed
    algorithms: List[str] = field(default_factory=lambda: ["fpa"])
    seeds: List[int] = field(default_factory=lambda: [0])
    output_dir: str = "out"
    scenario_id: str = "scenario"
    random_budget: int = 2000
    greedy_max_passes: int = 8
    exhaustive_cap: int = DEFAULT_BUDGET_CAP
    ds_modes: List[str] = field(default_factory=lambda: ["half-lambda"])
    ppo: PpoConfig = field(default_factory=PpoConfig)

    def validate(self) -> None:
        self.scenario.validate()
        if self.sweep_variable is not None:
            if self.sweep_variable not in SWEEP_VARIABLES:
                raise ConfigError(f"sweep_variable must be one of {SWEEP_VARIABLES}")
            if not self.sweep_values:
                raise ConfigError("sweep_values must be non-empty")
        for a in self.algorithms:
            if a not in ALGORITHMS:
                raise ConfigError(f"unknown algorithm '{a}'")
        for m in self.ds_modes:
            if m not in DS_MODES:
                raise ConfigError(f"unknown d_s mode '{m}'")
        if not self.seeds:
            raise ConfigError("seeds must be non-empty")
        if "exhaustive" in self.algorithms:
            total = self.scenario.num_positions ** self.scenario.num_aps
            if total > self.exhaustive_cap:
                raise ConfigError(
                    f"exhaustive not allowed: N^L = {total} exceeds cap {self.exhaustive_cap}")


def _parse_bool(raw: str) -> bool:
    if raw.lower() in ("true", "1", "yes"):
        return True
    if raw.lower() in ("false", "0", "no"):
        return False
    raise ValueError(f"expected a boolean, got '{raw}'")


def _parse_float_list(raw: str) -> List[float]:
    return [float(x) for x in raw.split(",") if x.strip()]


def _parse_int_list(raw: str) -> List[int]:
    return [int(x) for x in raw.split(",") if x.strip()]


def _parse_str_list(raw: str) -> List[str]:
    return [x.strip() for x in raw.split(",") if x.strip()]


# key -> (parser, description). Scenario keys carry SI units in the name.
CONFIG_KEYS: Dict[str, tuple] = {
    "num_aps": (int, "AP count L"),
    "num_tas": (int, "TA count K"),
    "num_positions": (int, "rail positions per AP, N"),
    "position_step_m": (float, "rail step d_s (m)"),
    "vertical_distance_m": (float, "AP-to-track distance d_ve (m)"),
    "railway_length_m": (float, "railway span (m)"),
    "train_length_m": (float, "train span (m)"),
    "train_offset_m": (float, "train head offset along the railway (m)"),
    "carrier_freq_hz": (float, "carrier frequency f (Hz)"),
    "sample_duration_s": (float, "sampling duration T (s)"),
    "train_speed_mps": (float, "train speed v (m/s)"),
    "noise_power_dbm": (float, "noise power (dBm)"),
    "noise_power_w": (float, "noise power (W); overrides noise_power_dbm"),
    "uplink_power_w": (float, "uplink power applied to every TA (W)"),
    "uplink_powers_w": (_parse_float_list, "per-TA uplink powers (W), comma list"),
    "pathloss_ref": (float, "large-scale gain at 1 km"),
    "pathloss_exp": (float, "path loss exponent"),
    "bandwidth_hz": (float, "signal bandwidth (Hz), informational"),
    "layout": (str, "midpoint | uniform"),
    "layout_seed": (int, "seed for the uniform layout"),
    "scenario_id": (str, "label written into result rows"),
    "sweep_variable": (str, "one of " + ", ".join(SWEEP_VARIABLES)),
    "sweep_values": (_parse_str_list, "comma list of sweep points"),
    "speeds_kmh": (_parse_float_list, "crossed speed axis (km/h)"),
    "algorithms": (_parse_str_list, "subset of " + ", ".join(ALGORITHMS)),
    "seeds": (_parse_int_list, "comma list of run seeds"),
    "output_dir": (str, "directory for CSV outputs"),
    "random_budget": (int, "random-search evaluations"),
    "greedy_max_passes": (int, "greedy sweep limit"),
    "exhaustive_cap": (int, "max enumerable placements"),
    "ds_modes": (_parse_str_list, "subset of " + ", ".join(DS_MODES)),
    "ppo_episodes": (int, "training episodes"),
    "ppo_steps_per_episode": (int, "env steps per episode"),
    "ppo_batch_size": (int, "mini-batch size"),
    "ppo_epochs_per_update": (int, "epochs per update"),
    "ppo_entropy_coef": (float, "entropy bonus coefficient"),
    "ppo_clip": (float, "clipping parameter"),
    "ppo_gamma": (float, "discount factor"),
    "ppo_n_step": (int, "n-step return horizon"),
    "ppo_lr": (float, "initial learning rate"),
    "ppo_lr_decay_rate": (float, "decay factor per decay_steps episodes"),
    "ppo_lr_decay_steps": (float, "episodes per decay interval"),
    "ppo_hidden": (_parse_int_list, "hidden layer widths, comma list"),
    "ppo_pool_capacity": (int, "experience pool size"),
    "ppo_advantage_norm": (_parse_bool, "normalize advantages per batch"),
    "ppo_smoothing_window": (int, "trailing window for the reward curve"),
}


def parse_config_text(text: str, source: str = "<config>") -> Dict[str, object]:
    """Parse key = value lines into typed values; unknown keys are errors."""
    values: Dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got '{stripped}'")
        key, _, raw = stripped.partition("=")
        key, raw = key.strip(), raw.strip()
        if key not in CONFIG_KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key '{key}'")
        parser, _ = CONFIG_KEYS[key]
        try:
            values[key] = parser(raw)
        except ValueError as e:
            raise ConfigError(f"{source}:{lineno}: bad value for '{key}': {e}") from None
    return values


def spec_from_values(values: Dict[str, object]) -> ExperimentSpec:
    scenario_kwargs = {}
    mapping = {
        "num_aps": "num_aps", "num_tas": "num_tas", "num_positions": "num_positions",
        "position_step_m": "position_step", "vertical_distance_m": "vertical_distance",
        "railway_length_m": "railway_length", "train_length_m": "train_length",
        "train_offset_m": "train_offset", "carrier_freq_hz": "carrier_freq",
        "sample_duration_s": "sample_duration", "train_speed_mps": "train_speed",
        "pathloss_ref": "pathloss_ref", "pathloss_exp": "pathloss_exp",
        "bandwidth_hz": "bandwidth", "layout": "layout", "layout_seed": "layout_seed",
    }
    for key, attr in mapping.items():
        if key in values:
            scenario_kwargs[attr] = values[key]
    if "noise_power_dbm" in values:
        scenario_kwargs["noise_power"] = dbm_to_watts(values["noise_power_dbm"])
    if "noise_power_w" in values:
        scenario_kwargs["noise_power"] = values["noise_power_w"]
    scenario = ScenarioConfig(**scenario_kwargs)
    if "uplink_powers_w" in values:
        scenario.uplink_powers = list(values["uplink_powers_w"])
    elif "uplink_power_w" in values:
        scenario.uplink_powers = [values["uplink_power_w"]] * scenario.num_tas

    schedule = SgdSchedule(
        initial_lr=values.get("ppo_lr", 3e-4),
        decay_rate=values.get("ppo_lr_decay_rate", 0.99),
        decay_steps=values.get("ppo_lr_decay_steps", 1e4),
        batch_size=values.get("ppo_batch_size", 2048))
    ppo = PpoConfig(
        discount=values.get("ppo_gamma", 0.0),
        clip_eps=values.get("ppo_clip", 0.2),
        n_step=values.get("ppo_n_step", 1),
        steps_per_episode=values.get("ppo_steps_per_episode", 10),
        max_episodes=values.get("ppo_episodes", 5000),
        epochs_per_update=values.get("ppo_epochs_per_update", 4),
        entropy_coef=values.get("ppo_entropy_coef", 0.01),
        schedule=schedule,
        hidden_sizes=tuple(values.get("ppo_hidden", (256, 256))),
        pool_capacity=values.get("ppo_pool_capacity", 40960),
        advantage_norm=values.get("ppo_advantage_norm", False),
        smoothing_window=values.get("ppo_smoothing_window", 100))

    sweep_variable = values.get("sweep_variable")
    raw_sweep = values.get("sweep_values", [])
    if sweep_variable == "algorithm":
        sweep_values = list(raw_sweep)
    else:
        try:
            sweep_values = [float(v) for v in raw_sweep]
        except ValueError:
            raise ConfigError(f"sweep_values for '{sweep_variable}' must be numeric")

    spec = ExperimentSpec(
        scenario=scenario,
        sweep_variable=sweep_variable,
        sweep_values=sweep_values,
        speeds_kmh=values.get("speeds_kmh"),
        algorithms=values.get("algorithms", ["fpa"]),
        seeds=values.get("seeds", [0]),
        output_dir=values.get("output_dir", "out"),
        scenario_id=values.get("scenario_id", "scenario"),
        random_budget=values.get("random_budget", 2000),
        greedy_max_passes=values.get("greedy_max_passes", 8),
        exhaustive_cap=values.get("exhaustive_cap", DEFAULT_BUDGET_CAP),
        ds_modes=values.get("ds_modes", ["half-lambda"]),
        ppo=ppo)
    spec.validate()
    return spec


def load_config(path) -> ExperimentSpec:
    """Load an ExperimentSpec from a key-value file (missing keys: defaults)."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config: {e}") from None
    return spec_from_values(parse_config_text(text, source=str(path)))


def dump_config(spec: ExperimentSpec) -> str:
    """Serialize an ExperimentSpec back to the key-value format."""
    sc = spec.scenario
    lines = [
        f"num_aps = {sc.num_aps}",
        f"num_tas = {sc.num_tas}",
        f"num_positions = {sc.num_positions}",
        f"position_step_m = {sc.position_step!r}",
        f"vertical_distance_m = {sc.vertical_distance!r}",
        f"railway_length_m = {sc.railway_length!r}",
        f"train_length_m = {sc.train_length!r}",
        f"train_offset_m = {sc.train_offset!r}",
        f"carrier_freq_hz = {sc.carrier_freq!r}",
        f"sample_duration_s = {sc.sample_duration!r}",
        f"train_speed_mps = {sc.train_speed!r}",
        f"noise_power_w = {sc.noise_power!r}",
        "uplink_powers_w = " + ",".join(repr(p) for p in sc.uplink_powers),
        f"pathloss_ref = {sc.pathloss_ref!r}",
        f"pathloss_exp = {sc.pathloss_exp!r}",
        f"bandwidth_hz = {sc.bandwidth!r}",
        f"layout = {sc.layout}",
        f"layout_seed = {sc.layout_seed}",
        f"scenario_id = {spec.scenario_id}",
        f"algorithms = {','.join(spec.algorithms)}",
        f"seeds = {','.join(str(s) for s in spec.seeds)}",
        f"output_dir = {spec.output_dir}",
        f"random_budget = {spec.random_budget}",
        f"greedy_max_passes = {spec.greedy_max_passes}",
        f"exhaustive_cap = {spec.exhaustive_cap}",
        f"ds_modes = {','.join(spec.ds_modes)}",
        f"ppo_episodes = {spec.ppo.max_episodes}",
        f"ppo_steps_per_episode = {spec.ppo.steps_per_episode}",
        f"ppo_batch_size = {spec.ppo.schedule.batch_size}",
        f"ppo_epochs_per_update = {spec.ppo.epochs_per_update}",
        f"ppo_entropy_coef = {spec.ppo.entropy_coef!r}",
        f"ppo_clip = {spec.ppo.clip_eps!r}",
        f"ppo_gamma = {spec.ppo.discount!r}",
        f"ppo_n_step = {spec.ppo.n_step}",
        f"ppo_lr = {spec.ppo.schedule.initial_lr!r}",
        f"ppo_lr_decay_rate = {spec.ppo.schedule.decay_rate!r}",
        f"ppo_lr_decay_steps = {spec.ppo.schedule.decay_steps!r}",
        "ppo_hidden = " + ",".join(str(h) for h in spec.ppo.hidden_sizes),
        f"ppo_pool_capacity = {spec.ppo.pool_capacity}",
        f"ppo_advantage_norm = {spec.ppo.advantage_norm}",
        f"ppo_smoothing_window = {spec.ppo.smoothing_window}",
    ]
    if spec.sweep_variable is not None:
        lines.insert(0, f"sweep_variable = {spec.sweep_variable}")
        vals = spec.sweep_values
        if spec.sweep_variable == "algorithm":
            lines.insert(1, "sweep_values = " + ",".join(vals))
        else:
            lines.insert(1, "sweep_values = " + ",".join(repr(v) for v in vals))
    if spec.speeds_kmh is not None:
        lines.append("speeds_kmh = " + ",".join(repr(v) for v in spec.speeds_kmh))
    return "\n".join(lines) + "\n"


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _apply_sweep_point(scenario: ScenarioConfig, variable: Optional[str], value):
    if variable is None or variable == "algorithm":
        return scenario
    if variable == "num_aps":
        return scenario.with_overrides(num_aps=int(value))
    if variable == "vertical_distance":
        return scenario.with_overrides(vertical_distance=float(value))
    if variable == "speed":
        return scenario.with_overrides(train_speed=kmh_to_mps(float(value)))
    if variable == "rail_length":
        # value is d_ap in wavelengths; d_s stays fixed, N adjusts
        d_ap = float(value) * scenario.wavelength
        n = max(1, round(d_ap / scenario.position_step))
        return scenario.with_overrides(num_positions=n)
    raise ConfigError(f"unknown sweep variable '{variable}'")


def _run_algorithm(algorithm: str, scenario: ScenarioConfig, seed: int,
                   spec: ExperimentSpec):
    """Returns (best_value, evaluations, placement or None)."""
    obj = SumSeObjective(scenario)
    L, N = scenario.num_aps, scenario.num_positions
    if algorithm == "fpa":
        res = fixed_baseline(obj, L)
    elif algorithm == "random":
        res = random_search(obj, L, N, spec.random_budget, rng_seed=seed)
    elif algorithm == "greedy":
        res = greedy_coordinate_ascent(obj, L, N, max_passes=spec.greedy_max_passes)
    elif algorithm == "exhaustive":
        res = exhaustive_search(obj, L, N, budget_cap=spec.exhaustive_cap)
    elif algorithm == "ppo":
        ppo_cfg = replace(spec.ppo, rng_seed=seed)
        log = train(scenario, ppo_cfg)
        return log.best_value, log.evaluations, tuple(int(n) for n in log.best_placement)
    else:
        raise ConfigError(f"unknown algorithm '{algorithm}'")
    return res.best_value, res.evaluations, res.best_placement


def run_sweep(spec: ExperimentSpec, out_dir=None) -> Path:
    """Run sweep points x speeds x algorithms x seeds; write results + sidecar."""
    spec.validate()
    out = Path(out_dir if out_dir is not None else spec.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    result_path = out / f"{spec.scenario_id}_sweep.csv"
    sidecar_path = out / f"{spec.scenario_id}_sweep_placements.csv"

    sweep_points = spec.sweep_values if spec.sweep_variable is not None else [None]
    speeds = spec.speeds_kmh
    if spec.sweep_variable == "speed":
        speeds = [None]
    elif speeds is None:
        speeds = [mps_to_kmh(spec.scenario.train_speed)]

    rows, placements = [], []
    for point in sweep_points:
        for speed in speeds:
            scenario = _apply_sweep_point(spec.scenario, spec.sweep_variable, point)
            if speed is not None:
                scenario = scenario.with_overrides(train_speed=kmh_to_mps(speed))
            algorithms = ([point] if spec.sweep_variable == "algorithm"
                          else spec.algorithms)
            for algorithm in algorithms:
                for seed in spec.seeds:
                    t0 = time.perf_counter()
                    try:
                        value, evals, placement = _run_algorithm(
                            algorithm, scenario, seed, spec)
                    except Exception as e:
                        raise type(e)(
                            f"sweep point ({spec.sweep_variable}={point}, "
                            f"algorithm={algorithm}, seed={seed}): {e}") from e
                    wall_ms = (time.perf_counter() - t0) * 1e3
                    lam = scenario.wavelength
                    rows.append((
                        spec.scenario_id, algorithm,
                        str(scenario.num_aps), str(scenario.num_tas),
                        str(scenario.num_positions),
                        _fmt(scenario.position_step / lam),
                        _fmt(scenario.vertical_distance),
                        _fmt(mps_to_kmh(scenario.train_speed)),
                        _fmt(scenario.rail_span / lam),
                        str(seed), _fmt(value), str(evals), _fmt(wall_ms)))
                    placements.append((
                        spec.scenario_id, algorithm,
                        str(scenario.num_aps), str(scenario.num_tas),
                        str(scenario.num_positions),
                        _fmt(scenario.vertical_distance),
                        _fmt(mps_to_kmh(scenario.train_speed)),
                        str(seed),
                        " ".join(str(n) for n in placement)))

    _write_csv(result_path, RESULT_COLUMNS, rows)
    _write_csv(sidecar_path, PLACEMENT_COLUMNS, placements)
    return result_path


def _mode_scenario(scenario: ScenarioConfig, mode: str) -> ScenarioConfig:
    """d_s modes share the rail span d_ap = N * d_s of the base scenario."""
    lam = scenario.wavelength
    d_ap = scenario.rail_span
    if mode == "half-lambda":
        step = lam / 2.0
    elif mode == "lambda":
        step = lam
    elif mode == "continuous":
        return scenario
    else:
        raise ConfigError(f"unknown d_s mode '{mode}'")
    n = max(1, round(d_ap / step))
    return scenario.with_overrides(position_step=step, num_positions=n)


def run_training(spec: ExperimentSpec, out_dir=None) -> List[Path]:
    """One convergence CSV per (d_s mode x seed): episode, rewards, lr."""
    spec.validate()
    out = Path(out_dir if out_dir is not None else spec.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for mode in spec.ds_modes:
        scenario = _mode_scenario(spec.scenario, mode)
        for seed in spec.seeds:
            ppo_cfg = replace(spec.ppo, rng_seed=seed, continuous=(mode == "continuous"))
            log = train(scenario, ppo_cfg)
            rows = [(str(int(e)), _fmt(r), _fmt(s), _fmt(lr))
                    for e, r, s, lr in zip(log.episodes, log.reward_raw,
                                           log.reward_smoothed, log.lr)]
            path = out / f"{spec.scenario_id}_train_{mode}_seed{seed}.csv"
            _write_csv(path, CONVERGENCE_COLUMNS, rows)
            paths.append(path)
    return paths


def _write_csv(path: Path, columns: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as f:
        f.write(",".join(columns) + "\n")
        for row in rows:
            f.write(",".join(row) + "\n")
