"""
Action-value control with linear state-action features and epsilon-greedy
exploration. Each control algorithm runs the update of its prediction
counterpart (see ``ControlAlgorithm.prediction_counterpart``) over stacked
features ``phi(s, a)``, bootstrapping from the sampled next action (Sarsa
family) or the greedy one (everything else).

The variance-minimizing variants learn from ``delta - omega``, i.e. they act
like their base learner on rewards shifted by ``-omega``. A constant shift
changes every return by the same amount per step, so on episodic tasks
with fixed-length optimal paths the greedy policy is unchanged.
"""

import dataclasses
import typing

import numpy as np

from . import prediction
from .algorithms import ControlAlgorithm
from .exceptions import ConfigError
from .exceptions import DimensionError
from .features import FeatureMap
from .features import stack_action
from .prediction import FeatTransition
from .prediction import Rates


@dataclasses.dataclass(frozen=True, eq=False)
class ControlLearnerState:
    algorithm: ControlAlgorithm
    theta: np.ndarray
    n_actions: int
    gamma: float
    epsilon: float = 0.1
    omega: float = 0.0
    u: typing.Optional[np.ndarray] = None
    F: float = 1.0
    prev_rho: float = 0.0
    step_index: int = 0

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float)
        if theta.ndim != 1 or self.n_actions < 1:
            raise DimensionError("theta must be a vector")
        if len(theta) % self.n_actions:
            raise DimensionError(
                "theta length %d is not a multiple of %d actions"
                % (len(theta), self.n_actions)
            )
        if not 0.0 <= self.epsilon <= 1.0:
            raise ConfigError("epsilon must lie in [0, 1]")
        object.__setattr__(self, "theta", theta)
        if self.u is None:
            object.__setattr__(self, "u", np.zeros_like(theta))

    @property
    def m(self) -> int:
        return len(self.theta)

    @property
    def n_features(self) -> int:
        """
        Length of the state features ``phi(s)``.
        """
        return len(self.theta) // self.n_actions


def initial_state(
    algorithm, n_features: int, n_actions: int, gamma: float, epsilon=0.1
) -> ControlLearnerState:
    return ControlLearnerState(
        algorithm=ControlAlgorithm.parse(algorithm),
        theta=np.zeros(n_features * n_actions),
        n_actions=n_actions,
        gamma=gamma,
        epsilon=epsilon,
    )


def start_episode(state: ControlLearnerState) -> ControlLearnerState:
    return dataclasses.replace(state, F=1.0, prev_rho=0.0)


def q_values(state: ControlLearnerState, phi_s: np.ndarray) -> np.ndarray:
    phi_s = np.asarray(phi_s, dtype=float)
    if phi_s.shape != (state.n_features,):
        raise DimensionError(
            "State features have length %d, expected %d"
            % (len(phi_s), state.n_features)
        )
    return state.theta.reshape(state.n_actions, state.n_features) @ phi_s


def _maximizers(q):
    return np.flatnonzero(q == q.max())


def epsilon_greedy(q, epsilon: float, rng: np.random.Generator) -> int:
    """
    With probability ``epsilon`` a uniformly random action, otherwise a
    uniformly random maximizer of ``q``.
    """
    q = np.asarray(q, dtype=float)
    if q.size == 0:
        raise DimensionError("Cannot choose from an empty action set")
    if rng.random() < epsilon:
        return int(rng.integers(q.size))
    best = _maximizers(q)
    return int(best[rng.integers(len(best))])


def greedy_ratio(q: np.ndarray, a: int, epsilon: float) -> float:
    """
    ``pi(a|s) / mu(a|s)`` for the greedy target ``pi`` (uniform over
    maximizers) and the epsilon-greedy behavior ``mu`` built on the same
    ``q``.
    """
    best = _maximizers(q)
    if a not in best:
        return 0.0
    target = 1.0 / len(best)
    behavior = (1.0 - epsilon) * target + epsilon / len(q)
    return target / behavior


class ControlTransition(typing.NamedTuple):
    s: typing.Any
    a: int
    r: float
    s_next: typing.Any
    done: bool


def control_step(
    state: ControlLearnerState,
    transition: ControlTransition,
    features: FeatureMap,
    rates: Rates,
    rng: np.random.Generator,
) -> typing.Tuple[ControlLearnerState, typing.Optional[int]]:
    """
    Apply one update for ``transition`` and choose the behavior action for
    ``s_next``. Returns ``(state, None)`` when the transition ends the
    episode.
    """
    algorithm = state.algorithm
    n_actions = state.n_actions
    phi_s = features.featurize(transition.s)
    if transition.done:
        phi_next = np.zeros(state.n_features)
        next_action = None
        target_action = 0
    else:
        phi_next = features.featurize(transition.s_next)
        q_next = q_values(state, phi_next)
        next_action = epsilon_greedy(q_next, state.epsilon, rng)
        if algorithm.on_policy_target:
            target_action = next_action
        else:
            target_action = int(_maximizers(q_next)[0])
    rho = 1.0
    if algorithm.base is ControlAlgorithm.EQ:
        rho = greedy_ratio(
            q_values(state, phi_s), transition.a, state.epsilon
        )
    t = FeatTransition(
        phi=stack_action(phi_s, transition.a, n_actions),
        phi_next=stack_action(phi_next, target_action, n_actions),
        r=transition.r,
        done=transition.done,
    )
    new_state = prediction.apply_update(
        state, t, rates, algorithm.prediction_counterpart
    )
    if algorithm.base is ControlAlgorithm.EQ:
        # The ratio only feeds the follow-on trace.
        new_state = dataclasses.replace(new_state, prev_rho=rho)
    return new_state, next_action


def greedy_policy(
    state: ControlLearnerState, features: FeatureMap, n_states: int
) -> typing.List[typing.FrozenSet[int]]:
    """
    The set of greedy actions in each discrete state.
    """
    return [
        frozenset(_maximizers(q_values(state, features.featurize(s))).tolist())
        for s in range(n_states)
    ]
