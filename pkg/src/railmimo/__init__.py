"""Movable-antenna cell-free massive MIMO simulator and placement optimizers."""

from .config import ScenarioConfig, dbm_to_watts, kmh_to_mps, mps_to_kmh
from .model import (ChannelSet, Geometry, SEReport, build_channels, build_geometry,
                    combined_signal_terms, report_for_offsets, sinr_and_se,
                    sum_se_for_offsets, validate_placement)
from .neural import Mlp, SgdSchedule, backward, forward, init_mlp, load_mlp, save_mlp, sgd_step
from .optimizers import (BudgetExceededError, OptimizerResult, SumSeObjective,
                         exhaustive_search, fixed_baseline, greedy_coordinate_ascent,
                         random_search)
from .ppo import (ExperiencePool, InsufficientPoolError, MdpState, PlacementEnv,
                  PolicyHeads, PpoConfig, TrainingLog, Transition, advantage,
                  clipped_objective, policy_heads, sample_action, target_value, train,
                  update)

__version__ = "0.1.0"
