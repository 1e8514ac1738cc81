import typing

from ..exceptions import ConfigError
from .acrobot import acrobot_env
from .base import DiscreteEnv
from .base import EnvInstance
from .base import EnvOutcome
from .gridworld import cliff_walking_env
from .gridworld import maze_env
from .mountain_car import mountain_car_env
from .twostate import two_state_env
from .twostate import two_state_mdp


ENVIRONMENTS: typing.Dict[str, typing.Callable[..., EnvInstance]] = {
    "twostate": two_state_env,
    "maze": maze_env,
    "cliffwalking": cliff_walking_env,
    "mountaincar": mountain_car_env,
    "acrobot": acrobot_env,
}


def env_key(name: str) -> str:
    key = str(name).lower().replace("-", "").replace("_", "")
    if key.endswith(("v0", "v1")):
        key = key[:-2]
    if key not in ENVIRONMENTS:
        raise ConfigError(
            "Unknown environment %r; expected one of: %s"
            % (name, ", ".join(ENVIRONMENTS))
        )
    return key


def make_env(name: str, **params) -> EnvInstance:
    try:
        return ENVIRONMENTS[env_key(name)](**params)
    except TypeError as err:
        raise ConfigError("Bad parameters for %s: %s" % (name, err)) from err


__all__ = [
    "DiscreteEnv",
    "ENVIRONMENTS",
    "EnvInstance",
    "EnvOutcome",
    "env_key",
    "make_env",
    "two_state_mdp",
]
