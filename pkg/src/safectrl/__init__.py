"""Safe online control of linear systems under bounded non-stochastic noise.

The package simulates linear (time-varying) dynamics under adversarially
bounded noise, runs an online-gradient-descent controller whose gain is
projected each step onto a safe set built from tightened polytopic
constraints, and instruments dynamic regret against per-step hindsight
comparators together with the corresponding upper bound.
"""

__version__ = "0.1.0"

from .controller import ControllerConfig, RunTrace, run
from .gainset import (GainSet, build_gain_set, membership,
                      time_invariant_gain_set, verify_realized_safety)
from .model import (BoundConstants, LossSpec, LtvSystem, SafetySpec,
                    loss_gradient, loss_in_gain, recover_noise, stage_loss,
                    step_dynamics)
from .noise import NoiseModel, centering_shift
from .ogd import BoxDomain, OgdState, TimeVaryingDomain, ogd_step, step_size_default
from .projection import (ProjectionConfig, ProjectionResult, feasibility_probe,
                         project_gain_set, project_halfspace,
                         project_spectral_ball)
from .regret import (RegretReport, compute_comparators, comparator_step,
                     dynamic_regret, path_length, set_variation, theorem_bound)
from .scenarios import ScenarioConfig, build_scenario, load_config

__all__ = [
    "BoundConstants", "BoxDomain", "ControllerConfig", "GainSet", "LossSpec",
    "LtvSystem", "NoiseModel", "OgdState", "ProjectionConfig",
    "ProjectionResult", "RegretReport", "RunTrace", "SafetySpec",
    "ScenarioConfig", "TimeVaryingDomain", "build_gain_set", "build_scenario",
    "centering_shift", "comparator_step", "compute_comparators",
    "dynamic_regret", "feasibility_probe", "load_config", "loss_gradient",
    "loss_in_gain", "membership", "ogd_step", "path_length",
    "project_gain_set", "project_halfspace", "project_spectral_ball",
    "recover_noise", "run", "set_variation", "stage_loss", "step_dynamics",
    "step_size_default", "theorem_bound", "time_invariant_gain_set",
    "verify_realized_safety",
]
