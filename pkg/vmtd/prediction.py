"""
Online linear policy evaluation: TD(0), TDC and ETD and their
variance-minimizing counterparts, as pure single-step update functions.

Each variance-minimizing learner keeps a scalar ``omega`` that tracks the
expected (importance-weighted, and for VMETD emphasized) TD error and learns
from the centered error ``delta - omega``. The baselines run through the same
kernels with ``omega`` pinned at zero, so e.g. VMTD with ``omega = 0`` and
``beta = 0`` produces bit-for-bit the TD update.
"""

import dataclasses
import typing

import numpy as np

from .algorithms import Algorithm
from .exceptions import ConfigError
from .exceptions import DimensionError


class Rates(typing.NamedTuple):
    """
    Step sizes for one update: ``alpha`` for ``theta``, ``zeta`` for the
    secondary weights ``u`` and ``beta`` for ``omega``.
    """

    alpha: float
    zeta: float = 0.0
    beta: float = 0.0


class FeatTransition(typing.NamedTuple):
    phi: np.ndarray
    phi_next: np.ndarray
    r: float
    rho: float = 1.0
    done: bool = False


@dataclasses.dataclass(frozen=True, eq=False)
class PredictionLearnerState:
    algorithm: Algorithm
    theta: np.ndarray
    gamma: float
    omega: float = 0.0
    u: typing.Optional[np.ndarray] = None
    F: float = 1.0
    prev_rho: float = 0.0
    step_index: int = 0

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float)
        if theta.ndim != 1:
            raise DimensionError("theta must be a vector")
        object.__setattr__(self, "theta", theta)
        if self.u is None:
            object.__setattr__(self, "u", np.zeros_like(theta))
        elif np.shape(self.u) != theta.shape:
            raise DimensionError("u and theta must have the same length")
        if self.F < 0:
            raise ValueError("The follow-on trace cannot be negative")

    @property
    def m(self) -> int:
        return len(self.theta)


def initial_state(
    algorithm, m: int, gamma: float, theta0=None
) -> PredictionLearnerState:
    """
    Fresh learner: ``theta = theta0`` (zeros by default), ``omega = 0``,
    ``u = 0``, ``F = 1`` and ``prev_rho = 0``.
    """
    theta = np.zeros(m) if theta0 is None else np.array(theta0, dtype=float)
    if theta.shape != (m,):
        raise DimensionError("theta0 must have length %d" % m)
    return PredictionLearnerState(
        algorithm=Algorithm.parse(algorithm), theta=theta, gamma=gamma
    )


def start_episode(state: PredictionLearnerState) -> PredictionLearnerState:
    """
    Reset the trajectory-bound follow-on trace. ``omega`` persists.
    """
    return dataclasses.replace(state, F=1.0, prev_rho=0.0)


def td_error(state: PredictionLearnerState, t: FeatTransition) -> float:
    if len(t.phi) != state.m or len(t.phi_next) != state.m:
        raise DimensionError(
            "Transition features do not have length %d" % state.m
        )
    bootstrap = 0.0 if t.done else state.gamma * float(state.theta @ t.phi_next)
    return float(t.r + bootstrap - state.theta @ t.phi)


def _require(state, algorithms):
    if state.algorithm not in algorithms:
        raise ConfigError(
            "%s update applied to a %s learner"
            % ("/".join(a.value for a in algorithms), state.algorithm.value)
        )


# -----------------------------------------------------------------------------
# Shared kernels.
# -----------------------------------------------------------------------------


def _semi_gradient(state, t, rates, omega):
    correction = t.rho * td_error(state, t) - omega
    return dataclasses.replace(
        state,
        theta=state.theta + rates.alpha * correction * t.phi,
        omega=omega + rates.beta * correction,
        step_index=state.step_index + 1,
    )


def _gradient_correction(state, t, rates, omega):
    correction = t.rho * td_error(state, t) - omega
    projected = float(t.phi @ state.u)
    gamma_next = 0.0 if t.done else state.gamma
    theta = state.theta + rates.alpha * (
        correction * t.phi - gamma_next * t.rho * projected * t.phi_next
    )
    return dataclasses.replace(
        state,
        theta=theta,
        u=state.u + rates.zeta * (correction - projected) * t.phi,
        omega=omega + rates.beta * correction,
        step_index=state.step_index + 1,
    )


def _emphatic(state, t, rates, omega):
    F = state.gamma * state.prev_rho * state.F + 1.0
    correction = F * t.rho * td_error(state, t) - omega
    return dataclasses.replace(
        state,
        theta=state.theta + rates.alpha * correction * t.phi,
        omega=omega + rates.beta * correction,
        F=F,
        prev_rho=float(t.rho),
        step_index=state.step_index + 1,
    )


# -----------------------------------------------------------------------------
# Public step functions.
# -----------------------------------------------------------------------------


def td_step(state, t: FeatTransition, rates: Rates) -> PredictionLearnerState:
    """
    ``theta += alpha rho delta phi``.
    """
    _require(state, (Algorithm.TD,))
    return _semi_gradient(state, t, rates, 0.0)


def vmtd_step(
    state, t: FeatTransition, rates: Rates
) -> PredictionLearnerState:
    """
    ``theta += alpha (rho delta - omega) phi`` and
    ``omega += beta (rho delta - omega)``, both from pre-update values.
    """
    _require(state, (Algorithm.VMTD,))
    return _semi_gradient(state, t, rates, state.omega)


def tdc_step(state, t: FeatTransition, rates: Rates) -> PredictionLearnerState:
    _require(state, (Algorithm.TDC,))
    return _gradient_correction(state, t, rates, 0.0)


def vmtdc_step(
    state, t: FeatTransition, rates: Rates
) -> PredictionLearnerState:
    """
    TDC on the centered error ``rho delta - omega``:

    * ``theta += alpha [(rho delta - omega) phi - gamma rho phi' (phi.u)]``
    * ``u += zeta (rho delta - omega - phi.u) phi``
    * ``omega += beta (rho delta - omega)``
    """
    _require(state, (Algorithm.VMTDC,))
    return _gradient_correction(state, t, rates, state.omega)


def etd_step(state, t: FeatTransition, rates: Rates) -> PredictionLearnerState:
    _require(state, (Algorithm.ETD,))
    return _emphatic(state, t, rates, 0.0)


def vmetd_step(
    state, t: FeatTransition, rates: Rates
) -> PredictionLearnerState:
    """
    ``F = gamma prev_rho F + 1``, then ``theta += alpha (F rho delta - omega)
    phi`` and ``omega += beta (F rho delta - omega)``.
    """
    _require(state, (Algorithm.VMETD,))
    return _emphatic(state, t, rates, state.omega)


STEP_FUNCTIONS: typing.Dict[Algorithm, typing.Callable] = {
    Algorithm.TD: td_step,
    Algorithm.TDC: tdc_step,
    Algorithm.ETD: etd_step,
    Algorithm.VMTD: vmtd_step,
    Algorithm.VMTDC: vmtdc_step,
    Algorithm.VMETD: vmetd_step,
}


def step(state, t: FeatTransition, rates: Rates) -> PredictionLearnerState:
    return STEP_FUNCTIONS[state.algorithm](state, t, rates)


_KERNELS = {
    Algorithm.TD: _semi_gradient,
    Algorithm.TDC: _gradient_correction,
    Algorithm.ETD: _emphatic,
}


def apply_update(state, t: FeatTransition, rates: Rates, algorithm):
    """
    Run ``algorithm``'s update on any learner state with the prediction
    fields (``theta``, ``omega``, ``u``, ``F``, ``prev_rho``, ``gamma``,
    ``step_index``). The control learners use this over state-action
    features.
    """
    algorithm = Algorithm.parse(algorithm)
    omega = state.omega if algorithm.variance_minimizing else 0.0
    return _KERNELS[algorithm.base](state, t, rates, omega)


# -----------------------------------------------------------------------------
# Step-size schedules.
# -----------------------------------------------------------------------------


SCHEDULE_KINDS = ("constant", "linear-decay")


@dataclasses.dataclass(frozen=True)
class StepSchedule:
    """
    Step sizes as a function of the update index. ``zeta`` and ``beta``
    default to ``alpha / alpha_zeta_ratio`` and ``alpha / alpha_beta_ratio``;
    ``zeta0``/``beta0`` set them explicitly instead. Under ``linear-decay``
    all three shrink by ``1 - k / total_steps``, floored at zero.
    """

    kind: str = "constant"
    alpha0: float = 0.1
    total_steps: typing.Optional[int] = None
    alpha_beta_ratio: float = 4.0
    alpha_zeta_ratio: float = 5.0
    beta0: typing.Optional[float] = None
    zeta0: typing.Optional[float] = None

    def __post_init__(self):
        if self.kind not in SCHEDULE_KINDS:
            raise ConfigError(
                "Unknown schedule kind %r; expected one of: %s"
                % (self.kind, ", ".join(SCHEDULE_KINDS))
            )
        if not self.alpha0 > 0:
            raise ConfigError("alpha0 must be positive")
        if self.kind == "linear-decay" and not self.total_steps:
            raise ConfigError("linear-decay needs a positive total_steps")
        if self.alpha_beta_ratio <= 0 or self.alpha_zeta_ratio <= 0:
            raise ConfigError("Step-size ratios must be positive")
        for name in ("beta0", "zeta0"):
            value = getattr(self, name)
            if value is not None and value < 0:
                raise ConfigError("%s cannot be negative" % name)

    @property
    def base_rates(self) -> Rates:
        zeta = self.zeta0
        if zeta is None:
            zeta = self.alpha0 / self.alpha_zeta_ratio
        beta = self.beta0
        if beta is None:
            beta = self.alpha0 / self.alpha_beta_ratio
        return Rates(alpha=self.alpha0, zeta=zeta, beta=beta)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "StepSchedule":
        fields = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - fields
        if unknown:
            raise ConfigError(
                "Unknown schedule keys: %s" % ", ".join(sorted(unknown))
            )
        return cls(**data)


def rate_at(schedule: StepSchedule, k: int) -> Rates:
    if k < 0:
        raise ConfigError("Step index cannot be negative")
    rates = schedule.base_rates
    if schedule.kind == "constant":
        return rates
    factor = max(0.0, 1.0 - k / schedule.total_steps)
    return Rates(*(rate * factor for rate in rates))
