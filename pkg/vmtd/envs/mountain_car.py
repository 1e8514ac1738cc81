"""
MountainCar with the classic-control reference dynamics::

    v' = clip(v + (a - 1) * 0.001 - 0.0025 * cos(3 x), -0.07, 0.07)
    x' = clip(x + v', -1.2, 0.6)

Velocity is zeroed when the car hits the left wall. The episode ends once
``x >= 0.5`` with non-negative velocity; every step costs -1.
"""

import math

import numpy as np

from ..features import FeatureMap
from ..features import TileCoder
from .base import EnvInstance


FORCE = 0.001
GRAVITY = 0.0025
MIN_POSITION = -1.2
MAX_POSITION = 0.6
MAX_SPEED = 0.07
GOAL_POSITION = 0.5
GOAL_VELOCITY = 0.0

LOW = np.array([MIN_POSITION, -MAX_SPEED])
HIGH = np.array([MAX_POSITION, MAX_SPEED])


def mountain_car_dynamics(position: float, velocity: float, action: int):
    velocity += (action - 1) * FORCE - GRAVITY * math.cos(3 * position)
    velocity = min(max(velocity, -MAX_SPEED), MAX_SPEED)
    position += velocity
    position = min(max(position, MIN_POSITION), MAX_POSITION)
    if position == MIN_POSITION and velocity < 0:
        velocity = 0.0
    return position, velocity


class MountainCarEnv(EnvInstance):
    kind = "MountainCar"
    n_actions = 3
    gamma = 1.0

    def __init__(self, max_steps: int = 1000, tilings=8, tiles=8):
        super().__init__(max_steps)
        self.tilings = tilings
        self.tiles = tiles

    @property
    def observation(self):
        return None if self.state is None else np.array(self.state)

    def _initial_state(self, rng):
        return (float(rng.uniform(-0.6, -0.4)), 0.0)

    def _transition(self, action, rng):
        position, velocity = mountain_car_dynamics(*self.state, action)
        self.state = (position, velocity)
        done = position >= GOAL_POSITION and velocity >= GOAL_VELOCITY
        return -1.0, done

    def default_features(self) -> FeatureMap:
        return TileCoder(LOW, HIGH, tilings=self.tilings, tiles=self.tiles)


def mountain_car_env(max_steps: int = 1000, tilings=8, tiles=8):
    return MountainCarEnv(max_steps=max_steps, tilings=tilings, tiles=tiles)
