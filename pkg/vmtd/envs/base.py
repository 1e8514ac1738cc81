"""
Episodic environment interface shared by the exact-MDP tasks and the
continuous-state simulators.
"""

import typing

import numpy as np

from ..exceptions import ConfigError
from ..exceptions import DimensionError
from ..exceptions import VMTDError
from ..features import FeatureMap
from ..features import TabularFeatures
from ..mdp import MdpSpec
from ..mdp import draw_index


class EnvOutcome(typing.NamedTuple):
    observation: typing.Any
    reward: float
    done: bool
    truncated: bool


class EnvInstance:
    """
    One running environment. ``reset`` starts an episode; ``step`` advances
    it and sets ``truncated`` on the step that reaches ``max_steps`` without
    terminating.
    """

    kind = ""
    n_actions = 0

    #: Discount the control experiments use on this task.
    gamma = 1.0

    def __init__(self, max_steps: int):
        if max_steps < 1:
            raise ConfigError("max_steps must be positive")
        self.max_steps = int(max_steps)
        self.steps_in_episode = 0
        self.state = None

    @property
    def observation(self):
        return self.state

    def _initial_state(self, rng: np.random.Generator):
        raise NotImplementedError

    def _transition(self, action: int, rng: np.random.Generator):
        """
        Advance ``self.state``; return ``(reward, done)``.
        """
        raise NotImplementedError

    def default_features(self) -> FeatureMap:
        raise NotImplementedError

    def reset(self, rng: np.random.Generator):
        self.steps_in_episode = 0
        self.state = self._initial_state(rng)
        return self.observation

    def step(self, action: int, rng: np.random.Generator) -> EnvOutcome:
        if self.state is None:
            raise VMTDError("reset() must be called before step()")
        if not 0 <= action < self.n_actions:
            raise DimensionError(
                "Action %r outside 0..%d" % (action, self.n_actions - 1)
            )
        reward, done = self._transition(int(action), rng)
        self.steps_in_episode += 1
        truncated = not done and self.steps_in_episode >= self.max_steps
        return EnvOutcome(self.observation, float(reward), done, truncated)


class DiscreteEnv(EnvInstance):
    """
    Sampler over an exact ``MdpSpec``: episodes begin in ``start`` and end on
    entering a terminal state.
    """

    def __init__(
        self,
        kind: str,
        mdp: MdpSpec,
        start: int,
        max_steps: int,
        gamma: float = 1.0,
    ):
        super().__init__(max_steps)
        if not 0 <= start < mdp.n_states:
            raise DimensionError("Start state %d is not in the MDP" % start)
        self.kind = kind
        self.mdp = mdp
        self.start = start
        self.n_actions = mdp.n_actions
        self.gamma = gamma

    @property
    def n_states(self) -> int:
        return self.mdp.n_states

    def _initial_state(self, rng):
        return self.start

    def _transition(self, action, rng):
        s = self.state
        s_next = draw_index(self.mdp.transition[s, action], rng)
        self.state = s_next
        return self.mdp.reward[s, action, s_next], bool(
            self.mdp.terminal[s_next]
        )

    def default_features(self) -> FeatureMap:
        return TabularFeatures(self.n_states)
