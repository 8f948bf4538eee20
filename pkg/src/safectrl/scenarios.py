"""Scenario presets, weight schedules, and config loading.

Two presets ship with the package:

* ``quadrotor``: hovering control of a linearized quadrotor (position and
  velocity state, roll/pitch/thrust input), box safety constraints, T = 500.
* ``synthetic2d``: a randomly sampled 2-state/1-input time-invariant plant
  with input-only constraints (hence a time-invariant safe gain set) and
  optionally time-varying scalar loss weights.

Configs are YAML mappings; unknown keys are rejected.
"""

import math
from dataclasses import dataclass, field, fields

import numpy as np
import yaml

from .controller import ControllerConfig
from .errors import ParseError, ValidationError
from .gainset import contraction_weight, time_invariant_gain_set
from .model import BoundConstants, LossSpec, LtvSystem, SafetySpec
from .noise import DEFAULT_PARAMS, FAMILIES, NoiseModel

QUADROTOR_A = np.array([
    [1, 0, 0, 0.1, 0, 0],
    [0, 1, 0, 0, 0.1, 0],
    [0, 0, 1, 0, 0, 0.1],
    [0, 0, 0, 1, 0, 0],
    [0, 0, 0, 0, 1, 0],
    [0, 0, 0, 0, 0, 1],
], dtype=float)

QUADROTOR_B = np.array([
    [-4.91 / 100, 0, 0],
    [0, 4.91 / 100, 0],
    [0, 0, 1 / 200],
    [-98.1 / 100, 0, 0],
    [0, 98.1 / 100, 0],
    [0, 0, 1 / 10],
], dtype=float)

# reference cumulative loss reported for the Gaussian quadrotor run; printed
# for context only, never asserted
QUADROTOR_GAUSSIAN_REFERENCE_LOSS = 44.05

PRESETS = ("quadrotor", "synthetic2d", "custom")
WEIGHT_SCHEDULES = ("constant", "sinusoidal", "step")


def sinusoidal_weights(horizon):
    """q_t = sin(t / (10 pi)), r_t = sin(t / (20 pi)), clipped at zero so the
    weights stay PSD (t is 1-based in the formula)."""
    t = np.arange(1, horizon + 1, dtype=float)
    q = np.maximum(np.sin(t / (10.0 * math.pi)), 0.0)
    r = np.maximum(np.sin(t / (20.0 * math.pi)), 0.0)
    return q, r


def step_weights(horizon):
    """Piecewise-constant weights over five equal segments of the horizon."""
    half_log2 = math.log(2.0) / 2.0
    segs = [(half_log2, 1.0), (1.0, 1.0), (half_log2, half_log2),
            (1.0, half_log2), (half_log2, 1.0)]
    q = np.empty(horizon)
    r = np.empty(horizon)
    for i in range(horizon):
        seg = min(5 * i // horizon, 4)
        q[i], r[i] = segs[seg]
    return q, r


def weight_schedule(name, horizon):
    if name == "constant":
        return np.ones(horizon), np.ones(horizon)
    if name == "sinusoidal":
        return sinusoidal_weights(horizon)
    if name == "step":
        return step_weights(horizon)
    raise ValidationError(f"unknown weight schedule {name!r}")


def sample_synthetic2d_system(horizon, noise_bound, system_seed=0,
                              a_scale=0.8):
    """Random 2-state/1-input plant; A is rescaled so ||A|| = a_scale, which
    keeps K = 0 strictly inside the contraction constraint."""
    rng = np.random.Generator(np.random.Philox(key=int(system_seed)))
    a = rng.normal(size=(2, 2))
    b = rng.normal(size=(2, 1))
    a *= a_scale / np.linalg.norm(a, 2)
    if np.linalg.norm(b) < 0.3:
        b = b + 0.3 * np.sign(b + 1e-12)
    return LtvSystem.time_invariant(a, b, horizon, noise_bound)


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated, fully-defaulted run configuration."""

    scenario: str
    horizon: int
    seed: int = 0
    distribution: str = "gaussian"
    distribution_params: dict = field(default_factory=dict)
    eta: float = None
    kappa: float = None
    gamma: float = None
    noise_bound: float = None
    weights: str = "constant"
    comparator: bool = True
    system_seed: int = 0
    out_dir: str = "results"
    # custom-scenario fields
    a_matrix: list = None
    b_matrix: list = None
    state_bound: list = None
    input_bound: list = None

    def __post_init__(self):
        if self.scenario not in PRESETS:
            raise ValidationError(f"unknown scenario {self.scenario!r}")
        if not isinstance(self.horizon, int) or self.horizon < 1:
            raise ValidationError("horizon must be a positive integer")
        if self.distribution not in FAMILIES:
            raise ValidationError(f"unknown distribution {self.distribution!r}")
        if self.weights not in WEIGHT_SCHEDULES:
            raise ValidationError(f"unknown weights {self.weights!r}")
        if self.scenario == "custom":
            for name in ("a_matrix", "b_matrix", "state_bound", "input_bound",
                         "noise_bound"):
                if getattr(self, name) is None:
                    raise ValidationError(f"custom scenario requires {name!r}")


_DEFAULTS = {
    "quadrotor": {"kappa": 10.0, "gamma": 0.01, "noise_bound": 0.1},
    "synthetic2d": {"kappa": 5.0, "gamma": 0.1, "noise_bound": 0.5},
    "custom": {"kappa": 10.0, "gamma": 0.01},
}


def load_config(path):
    """Parse and validate a YAML scenario config."""
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except FileNotFoundError:
        raise ParseError(f"config file not found: {path}")
    except yaml.YAMLError as exc:
        raise ParseError(f"invalid YAML in {path}: {exc}")
    if not isinstance(raw, dict):
        raise ParseError(f"config root must be a mapping in {path}")
    return config_from_dict(raw)


def config_from_dict(raw):
    known = {f.name for f in fields(ScenarioConfig)}
    unknown = set(raw) - known
    if unknown:
        raise ValidationError(f"unknown config keys: {sorted(unknown)}")
    if "scenario" not in raw:
        raise ValidationError("missing required key 'scenario'")
    if "horizon" not in raw:
        raise ValidationError("missing required key 'horizon'")
    merged = dict(raw)
    for key, val in _DEFAULTS.get(raw.get("scenario"), {}).items():
        merged.setdefault(key, val)
    return ScenarioConfig(**merged)


@dataclass(frozen=True)
class Scenario:
    """Concrete objects for one run."""

    config: ScenarioConfig
    sys: LtvSystem
    safety: SafetySpec
    loss: LossSpec
    noise: NoiseModel
    controller: ControllerConfig
    consts: BoundConstants
    fixed_set: object = None     # time-invariant gain set, when applicable


def build_scenario(cfg):
    """Materialize a ScenarioConfig into system/safety/loss/noise objects."""
    weight = None
    if cfg.scenario == "quadrotor":
        sys = LtvSystem.time_invariant(QUADROTOR_A, QUADROTOR_B, cfg.horizon,
                                       cfg.noise_bound)
        safety = SafetySpec.box(np.ones(6), np.array([math.pi, math.pi, 20.0]))
        loss = LossSpec.identity(6, 3)
        fixed_set = None
        # the double-integrator blocks admit no unweighted strict contraction
        # (min over gains of ||A - BK|| equals 1), so the contraction is
        # measured in a plant-adapted similarity norm
        weight = contraction_weight(QUADROTOR_A, QUADROTOR_B, 1.0 - cfg.gamma)
    elif cfg.scenario == "synthetic2d":
        sys = sample_synthetic2d_system(cfg.horizon, cfg.noise_bound,
                                        cfg.system_seed)
        safety = SafetySpec.input_only(
            2, np.array([[1.0], [-1.0]]), np.array([5.0, 5.0]))
        q, r = weight_schedule(cfg.weights, cfg.horizon)
        loss = LossSpec.scaled_identity(q, r, 2, 1)
        fixed_set = "time_invariant"
    else:  # custom
        a = np.asarray(cfg.a_matrix, dtype=float)
        b = np.asarray(cfg.b_matrix, dtype=float)
        sys = LtvSystem.time_invariant(a, b, cfg.horizon, cfg.noise_bound)
        safety = SafetySpec.box(np.asarray(cfg.state_bound, dtype=float),
                                np.asarray(cfg.input_bound, dtype=float))
        loss = LossSpec.identity(sys.d_x, sys.d_u)
        fixed_set = None

    params = dict(DEFAULT_PARAMS[cfg.distribution])
    params.update(cfg.distribution_params)
    noise = NoiseModel(family=cfg.distribution, dim=sys.d_x,
                       bound=cfg.noise_bound, seed=cfg.seed, params=params)
    controller = ControllerConfig(kappa=cfg.kappa, gamma=cfg.gamma, eta=cfg.eta,
                                  contraction_weight=weight)
    consts = BoundConstants.derive(cfg.kappa, cfg.gamma, sys.noise_bound,
                                   loss.grad_scale, sys.kappa_b, sys.d_x,
                                   sys.d_u)
    if fixed_set == "time_invariant":
        fixed_set = time_invariant_gain_set(sys, safety, consts,
                                            consts.d_state_input)
    return Scenario(config=cfg, sys=sys, safety=safety, loss=loss, noise=noise,
                    controller=controller, consts=consts, fixed_set=fixed_set)
