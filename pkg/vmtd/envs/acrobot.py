"""
Acrobot: a two-link pendulum actuated at the middle joint, integrated with
one fourth-order Runge-Kutta step of ``DT`` seconds per action, using the
classic-control reference constants and the equations of motion from
Sutton and Barto. The episode ends once the tip rises one link length above
the pivot (``-cos(t1) - cos(t1 + t2) > 1``); every other step costs -1.
"""

import math

import numpy as np

from ..features import FeatureMap
from ..features import TileCoder
from .base import EnvInstance


DT = 0.2
LINK_LENGTH_1 = 1.0
LINK_MASS_1 = 1.0
LINK_MASS_2 = 1.0
LINK_COM_POS_1 = 0.5
LINK_COM_POS_2 = 0.5
LINK_MOI = 1.0
G = 9.8
MAX_VEL_1 = 4 * math.pi
MAX_VEL_2 = 9 * math.pi
TORQUES = (-1.0, 0.0, 1.0)

LOW = np.array([-math.pi, -math.pi, -MAX_VEL_1, -MAX_VEL_2])
HIGH = -LOW


def wrap(x: float, low: float, high: float) -> float:
    span = high - low
    while x > high:
        x -= span
    while x < low:
        x += span
    return x


def _derivatives(s: np.ndarray, torque: float) -> np.ndarray:
    m1, m2 = LINK_MASS_1, LINK_MASS_2
    l1 = LINK_LENGTH_1
    lc1, lc2 = LINK_COM_POS_1, LINK_COM_POS_2
    i1 = i2 = LINK_MOI
    theta1, theta2, dtheta1, dtheta2 = s
    d1 = (
        m1 * lc1**2
        + m2 * (l1**2 + lc2**2 + 2 * l1 * lc2 * math.cos(theta2))
        + i1
        + i2
    )
    d2 = m2 * (lc2**2 + l1 * lc2 * math.cos(theta2)) + i2
    phi2 = m2 * lc2 * G * math.cos(theta1 + theta2 - math.pi / 2.0)
    phi1 = (
        -m2 * l1 * lc2 * dtheta2**2 * math.sin(theta2)
        - 2 * m2 * l1 * lc2 * dtheta2 * dtheta1 * math.sin(theta2)
        + (m1 * lc1 + m2 * l1) * G * math.cos(theta1 - math.pi / 2.0)
        + phi2
    )
    ddtheta2 = (
        torque
        + d2 / d1 * phi1
        - m2 * l1 * lc2 * dtheta1**2 * math.sin(theta2)
        - phi2
    ) / (m2 * lc2**2 + i2 - d2**2 / d1)
    ddtheta1 = -(d2 * ddtheta2 + phi1) / d1
    return np.array([dtheta1, dtheta2, ddtheta1, ddtheta2])


def rk4_step(s: np.ndarray, torque: float, dt: float = DT) -> np.ndarray:
    k1 = _derivatives(s, torque)
    k2 = _derivatives(s + dt / 2.0 * k1, torque)
    k3 = _derivatives(s + dt / 2.0 * k2, torque)
    k4 = _derivatives(s + dt * k3, torque)
    return s + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def acrobot_dynamics(s, action: int) -> np.ndarray:
    s = rk4_step(np.asarray(s, dtype=float), TORQUES[action])
    return np.array(
        [
            wrap(s[0], -math.pi, math.pi),
            wrap(s[1], -math.pi, math.pi),
            min(max(s[2], -MAX_VEL_1), MAX_VEL_1),
            min(max(s[3], -MAX_VEL_2), MAX_VEL_2),
        ]
    )


def tip_above_bar(s) -> bool:
    return -math.cos(s[0]) - math.cos(s[1] + s[0]) > 1.0


class AcrobotEnv(EnvInstance):
    kind = "Acrobot"
    n_actions = 3
    gamma = 1.0

    def __init__(self, max_steps: int = 500, tilings=8, tiles=6):
        super().__init__(max_steps)
        self.tilings = tilings
        self.tiles = tiles

    @property
    def observation(self):
        """
        The joint state ``(theta1, theta2, dtheta1, dtheta2)``.
        """
        return None if self.state is None else self.state.copy()

    def reference_observation(self) -> np.ndarray:
        """
        ``(cos t1, sin t1, cos t2, sin t2, dt1, dt2)``.
        """
        t1, t2, dt1, dt2 = self.state
        return np.array(
            [math.cos(t1), math.sin(t1), math.cos(t2), math.sin(t2), dt1, dt2]
        )

    def _initial_state(self, rng):
        return rng.uniform(-0.1, 0.1, size=4)

    def _transition(self, action, rng):
        self.state = acrobot_dynamics(self.state, action)
        done = tip_above_bar(self.state)
        return (0.0 if done else -1.0), done

    def default_features(self) -> FeatureMap:
        return TileCoder(LOW, HIGH, tilings=self.tilings, tiles=self.tiles)


def acrobot_env(max_steps: int = 500, tilings=8, tiles=6):
    return AcrobotEnv(max_steps=max_steps, tilings=tilings, tiles=tiles)
