import numpy as np
import pytest

from vmtd.analysis import AnalysisSetting
from vmtd.envs import two_state_mdp
from vmtd.features import MatrixFeatures
from vmtd.mdp import MdpSpec
from vmtd.mdp import Policy


@pytest.fixture
def twostate():
    return two_state_mdp()


@pytest.fixture
def on_setting(twostate):
    return twostate.setting("on")


@pytest.fixture
def off_setting(twostate):
    return twostate.setting("off")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def _random_setting(rng, n_states, n_actions, m, on_policy=False):
    """
    Every transition and policy probability is strictly positive, so the
    chain is ergodic and the behavior covers the target.
    """
    transition = rng.dirichlet(np.ones(n_states), size=(n_states, n_actions))
    reward = rng.normal(size=(n_states, n_actions, n_states))
    gamma = rng.uniform(0.5, 0.95)
    behavior = Policy(rng.dirichlet(np.ones(n_actions), size=n_states))
    if on_policy:
        target = behavior
    else:
        target = Policy(rng.dirichlet(np.ones(n_actions), size=n_states))
    return AnalysisSetting(
        mdp=MdpSpec(transition, reward, gamma),
        features=MatrixFeatures(rng.normal(size=(n_states, m))),
        behavior=behavior,
        target=target,
    )


@pytest.fixture
def random_setting():
    """
    Factory ``random_setting(rng, on_policy=False)`` for a random ergodic
    setting with 2-6 states, 2-3 actions and fewer features than states.
    """

    def factory(rng, on_policy=False):
        n_states = int(rng.integers(2, 7))
        n_actions = int(rng.integers(2, 4))
        m = int(rng.integers(1, n_states))
        return _random_setting(rng, n_states, n_actions, m, on_policy)

    return factory
