"""
The two-state chain: actions ``left``/``right`` move deterministically to
state 0/1, every reward is zero, ``gamma = 0.9`` and the single feature is
``phi = (1, 2)``. ``policy-1`` picks either action with probability 0.5,
``policy-2`` always goes right.
"""

import typing

import numpy as np

from ..analysis import AnalysisSetting
from ..exceptions import ConfigError
from ..features import MatrixFeatures
from ..mdp import MdpSpec
from ..mdp import Policy
from .base import DiscreteEnv


LEFT = 0
RIGHT = 1

GAMMA = 0.9

#: Behavior and target policy names per evaluation mode.
MODES = {
    "on": ("policy-1", "policy-1"),
    "off": ("policy-1", "policy-2"),
}


class TwoStateBundle(typing.NamedTuple):
    mdp: MdpSpec
    features: MatrixFeatures
    policies: typing.Dict[str, Policy]

    def setting(self, mode: str) -> AnalysisSetting:
        try:
            behavior, target = MODES[mode]
        except KeyError:
            raise ConfigError("Mode must be 'on' or 'off', not %r" % mode)
        return AnalysisSetting(
            mdp=self.mdp,
            features=self.features,
            behavior=self.policies[behavior],
            target=self.policies[target],
        )


def two_state_mdp() -> TwoStateBundle:
    transition = np.zeros((2, 2, 2))
    transition[:, LEFT, 0] = 1.0
    transition[:, RIGHT, 1] = 1.0
    mdp = MdpSpec(transition, np.zeros_like(transition), GAMMA)
    return TwoStateBundle(
        mdp=mdp,
        features=MatrixFeatures([[1.0], [2.0]]),
        policies={
            "policy-1": Policy.uniform(2, 2),
            "policy-2": Policy.deterministic([RIGHT, RIGHT], 2),
        },
    )


def two_state_env(max_steps: int = 1000) -> DiscreteEnv:
    """
    Sampler over the chain, starting in state 0. The chain never
    terminates, so episodes end only by truncation.
    """
    return DiscreteEnv(
        "TwoState", two_state_mdp().mdp, 0, max_steps, gamma=GAMMA
    )
