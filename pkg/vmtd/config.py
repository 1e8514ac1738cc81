"""
Experiment configuration. A config file is a YAML (or JSON) mapping whose
keys are the fields of ``ExperimentConfig``; see ``docs/configuration.rst``.
"""

import dataclasses
import os
import typing

import yaml

from .algorithms import Algorithm
from .algorithms import ControlAlgorithm
from .analysis import AnalysisSetting
from .envs import env_key
from .envs import two_state_mdp
from .exceptions import ConfigError
from .features import feature_map_from_dict
from .mdp import MdpSpec
from .mdp import Policy
from .prediction import StepSchedule


EXPERIMENT_KINDS = ("evaluation", "control", "analyze")

METRICS = {
    "evaluation": ("theta_error", "rmsve"),
    "control": ("episode_return", "episode_steps"),
    "analyze": (),
}

SAMPLING_MODES = ("iid", "trajectory")

EVALUATION_RUNS = 100
CONTROL_RUNS = 50

#: Evaluation defaults: alpha0 = 0.1, alpha/beta = 4,
#: alpha/zeta = 5, decaying linearly over the horizon.
EVALUATION_SCHEDULE = {"kind": "linear-decay", "alpha0": 0.1}

# (alpha, zeta, beta) per environment and control algorithm.
_S, _Q, _GQ, _EQ = "Sarsa", "Q", "GQ", "EQ"
CONTROL_RATES: typing.Dict[str, typing.Dict[str, typing.Tuple]] = {
    "maze": {
        _S: (0.1, 0.0, 0.0),
        _Q: (0.1, 0.0, 0.0),
        _GQ: (0.1, 0.003, 0.0),
        _EQ: (0.006, 0.0, 0.0),
        "VM" + _S: (0.1, 0.0, 0.001),
        "VM" + _Q: (0.1, 0.0, 0.001),
        "VM" + _GQ: (0.1, 0.001, 0.001),
        "VM" + _EQ: (0.001, 0.0, 0.0005),
    },
    "cliffwalking": {
        _S: (0.1, 0.0, 0.0),
        _Q: (0.1, 0.0, 0.0),
        _GQ: (0.1, 0.004, 0.0),
        _EQ: (0.005, 0.0, 0.0),
        "VM" + _S: (0.1, 0.0, 1e-4),
        "VM" + _Q: (0.1, 0.0, 1e-4),
        "VM" + _GQ: (0.1, 0.005, 1e-4),
        "VM" + _EQ: (0.005, 0.0, 1e-4),
    },
    "mountaincar": {
        _S: (0.1, 0.0, 0.0),
        _Q: (0.1, 0.0, 0.0),
        _GQ: (0.1, 0.01, 0.0),
        _EQ: (0.001, 0.0, 0.0),
        "VM" + _S: (0.1, 0.0, 1e-4),
        "VM" + _Q: (0.1, 0.0, 1e-4),
        "VM" + _GQ: (0.1, 5e-4, 1e-4),
        "VM" + _EQ: (0.001, 0.0, 1e-4),
    },
    "acrobot": {
        _S: (0.1, 0.0, 0.0),
        _Q: (0.1, 0.0, 0.0),
        _GQ: (0.1, 0.01, 0.0),
        _EQ: (0.0005, 0.0, 0.0),
        "VM" + _S: (0.1, 0.0, 1e-4),
        "VM" + _Q: (0.1, 0.0, 1e-4),
        "VM" + _GQ: (0.1, 5e-4, 1e-4),
        "VM" + _EQ: (0.0005, 0.0, 1e-4),
    },
}


def control_schedule(env: str, algorithm) -> StepSchedule:
    """
    Constant learning rates tuned per environment and algorithm.
    """
    algorithm = ControlAlgorithm.parse(algorithm)
    try:
        alpha, zeta, beta = CONTROL_RATES[env][algorithm.value]
    except KeyError:
        raise ConfigError(
            "No default learning rates for %s on %s; give a schedule"
            % (algorithm.value, env)
        )
    return StepSchedule(kind="constant", alpha0=alpha, zeta0=zeta, beta0=beta)


def _schedule(data, horizon) -> StepSchedule:
    if isinstance(data, StepSchedule):
        return data
    if not isinstance(data, dict):
        raise ConfigError("A schedule must be a mapping")
    data = dict(data)
    if data.get("kind") == "linear-decay":
        data.setdefault("total_steps", horizon)
    return StepSchedule.from_dict(data)


@dataclasses.dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    env: str = "twostate"
    algorithms: typing.Tuple = ()
    env_params: typing.Dict[str, typing.Any] = dataclasses.field(
        default_factory=dict
    )
    #: Schedule shared by every algorithm unless ``schedules`` names it.
    schedule: typing.Optional[typing.Dict[str, typing.Any]] = None
    schedules: typing.Dict[str, typing.Any] = dataclasses.field(
        default_factory=dict
    )
    runs: typing.Optional[int] = None
    horizon: int = 1000
    seed: int = 0
    metric: typing.Optional[str] = None
    #: Evaluation on the two-state chain: ``on`` or ``off`` policy.
    mode: typing.Optional[str] = None
    #: Exact evaluation setting given as plain data (``mdp``, ``features``,
    #: ``behavior``, ``target``) instead of a named environment.
    setting: typing.Optional[typing.Dict[str, typing.Any]] = None
    sampling: str = "iid"
    theta0: typing.Optional[typing.List[float]] = None
    epsilon: float = 0.1
    gamma: typing.Optional[float] = None
    workers: int = 1
    out: typing.Optional[str] = None

    def __post_init__(self):
        if self.kind not in EXPERIMENT_KINDS:
            raise ConfigError(
                "Experiment kind must be one of: %s"
                % ", ".join(EXPERIMENT_KINDS)
            )
        parser = (
            ControlAlgorithm.parse
            if self.kind == "control"
            else Algorithm.parse
        )
        names = self.algorithms or (
            tuple(ControlAlgorithm)
            if self.kind == "control"
            else tuple(Algorithm)
        )
        object.__setattr__(
            self, "algorithms", tuple(parser(name) for name in names)
        )
        if self.runs is None:
            object.__setattr__(
                self,
                "runs",
                CONTROL_RUNS if self.kind == "control" else EVALUATION_RUNS,
            )
        if self.runs < 1:
            raise ConfigError("runs must be at least 1")
        if self.horizon < 1:
            raise ConfigError("horizon must be at least 1")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if self.metric is None and METRICS[self.kind]:
            object.__setattr__(self, "metric", METRICS[self.kind][0])
        if self.metric is not None and self.metric not in METRICS[self.kind]:
            raise ConfigError(
                "Metric %r is not valid for %s experiments"
                % (self.metric, self.kind)
            )
        if self.sampling not in SAMPLING_MODES:
            raise ConfigError(
                "sampling must be one of: %s" % ", ".join(SAMPLING_MODES)
            )
        if self.mode not in (None, "on", "off"):
            raise ConfigError("mode must be 'on' or 'off'")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ConfigError("epsilon must lie in [0, 1]")
        # Fail on bad schedules now rather than inside a worker.
        for algorithm in self.algorithms:
            self.schedule_for(algorithm)

    @property
    def env_key(self) -> str:
        return env_key(self.env)

    def schedule_for(self, algorithm) -> StepSchedule:
        name = algorithm.value if hasattr(algorithm, "value") else algorithm
        for key, data in self.schedules.items():
            if key.lower() == str(name).lower():
                return _schedule(data, self.horizon)
        if self.schedule is not None:
            return _schedule(self.schedule, self.horizon)
        if self.kind == "control":
            return control_schedule(self.env_key, algorithm)
        return _schedule(EVALUATION_SCHEDULE, self.horizon)

    def analysis_setting(self, mode=None) -> AnalysisSetting:
        """
        The exact setting evaluation and analysis run on.
        """
        if self.setting is not None:
            return setting_from_dict(self.setting)
        if self.env_key != "twostate":
            raise ConfigError(
                "%s has no evaluation setting; give 'setting' explicitly"
                % self.env
            )
        return two_state_mdp().setting(mode or self.mode or "on")

    def with_overrides(self, **overrides) -> "ExperimentConfig":
        """
        Copy with every non-``None`` override applied (the CLI flags).
        """
        changes = {k: v for k, v in overrides.items() if v is not None}
        return dataclasses.replace(self, **changes)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("A config must be a mapping")
        fields = {field.name for field in dataclasses.fields(cls)}
        unknown = set(data) - fields
        if unknown:
            raise ConfigError(
                "Unknown config keys: %s" % ", ".join(sorted(unknown))
            )
        if "kind" not in data:
            raise ConfigError("A config must name its experiment 'kind'")
        data = dict(data)
        # YAML 1.1 reads a bare on/off as a boolean.
        if isinstance(data.get("mode"), bool):
            data["mode"] = "on" if data["mode"] else "off"
        if "algorithms" in data:
            data["algorithms"] = tuple(data["algorithms"] or ())
        return cls(**data)


def setting_from_dict(data: dict) -> AnalysisSetting:
    try:
        return AnalysisSetting(
            mdp=MdpSpec.from_dict(data["mdp"]),
            features=feature_map_from_dict(data["features"]),
            behavior=Policy.from_dict(data["behavior"]),
            target=Policy.from_dict(data.get("target", data["behavior"])),
        )
    except KeyError as err:
        raise ConfigError("Setting is missing %s" % err) from err


def load_config(path) -> ExperimentConfig:
    """
    Read a YAML or JSON config file.
    """
    with open(os.fspath(path), encoding="utf-8") as handle:
        try:
            data = yaml.safe_load(handle)
        except yaml.YAMLError as err:
            raise ConfigError("Cannot parse %s: %s" % (path, err)) from err
    return ExperimentConfig.from_dict(data or {})
