"""
Feature maps turning states (or continuous observations) into dense feature
vectors, plus the stacked state-action layout used by the control learners.
"""

import typing

import numpy as np

from .exceptions import ConfigError
from .exceptions import DimensionError


class FeatureMap:
    """
    Base class. Subclasses set ``kind`` and implement ``featurize``.
    """

    kind = ""

    m: int

    def featurize(self, s) -> np.ndarray:
        raise NotImplementedError

    def matrix(self, n_states: int) -> np.ndarray:
        """
        The ``|S| x m`` matrix whose rows are the feature vectors of the
        discrete states ``0 .. n_states-1``.
        """
        return np.vstack([self.featurize(s) for s in range(n_states)])

    def to_dict(self) -> dict:
        return {"kind": self.kind}


class TabularFeatures(FeatureMap):
    kind = "tabular"

    def __init__(self, n_states: int):
        if n_states < 1:
            raise ConfigError("Tabular features need at least one state")
        self.m = int(n_states)

    def featurize(self, s) -> np.ndarray:
        s = int(s)
        if not 0 <= s < self.m:
            raise DimensionError("State %d outside 0..%d" % (s, self.m - 1))
        phi = np.zeros(self.m)
        phi[s] = 1.0
        return phi

    def matrix(self, n_states: int) -> np.ndarray:
        if n_states != self.m:
            raise DimensionError(
                "Tabular features cover %d states, not %d" % (self.m, n_states)
            )
        return np.eye(self.m)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "n_states": self.m}


class MatrixFeatures(FeatureMap):
    """
    Explicit ``|S| x m`` feature matrix; row ``s`` is ``phi(s)``.
    """

    kind = "explicit-matrix"

    def __init__(self, phi):
        phi = np.array(phi, dtype=float)
        if phi.ndim != 2 or 0 in phi.shape:
            raise DimensionError("Feature matrix must be a non-empty 2D array")
        phi.setflags(write=False)
        self.phi = phi
        self.m = phi.shape[1]

    def featurize(self, s) -> np.ndarray:
        s = int(s)
        n_states = self.phi.shape[0]
        if not 0 <= s < n_states:
            raise DimensionError("State %d outside 0..%d" % (s, n_states - 1))
        return self.phi[s].copy()

    def matrix(self, n_states: int) -> np.ndarray:
        if n_states != self.phi.shape[0]:
            raise DimensionError(
                "Feature matrix has %d rows for %d states"
                % (self.phi.shape[0], n_states)
            )
        return self.phi.copy()

    def to_dict(self) -> dict:
        return {"kind": self.kind, "phi": self.phi.tolist()}


class TileCoder(FeatureMap):
    """
    Grid tile coding over a box of observations. Each of the ``tilings``
    grids has ``tiles`` intervals per dimension (plus one to absorb the
    offset), and tiling ``k`` is displaced along dimension ``d`` by
    ``(k * (2d + 1) mod tilings) / tilings`` of a tile width. Observations
    are clamped to ``[low, high]``.
    """

    kind = "tile-coding"

    def __init__(self, low, high, tilings: int = 8, tiles=8):
        self.low = np.array(low, dtype=float)
        self.high = np.array(high, dtype=float)
        if self.low.ndim != 1 or self.low.shape != self.high.shape:
            raise DimensionError("low and high must be matching 1D bounds")
        if np.any(self.high <= self.low):
            raise ConfigError("Every upper bound must exceed its lower bound")
        if tilings < 1:
            raise ConfigError("Tile coding needs at least one tiling")
        dims = len(self.low)
        self.tiles = np.broadcast_to(np.asarray(tiles, dtype=int), (dims,))
        if np.any(self.tiles < 1):
            raise ConfigError("Tile counts must be positive")
        self.tilings = int(tilings)
        self.grid_shape = tuple(int(n) + 1 for n in self.tiles)
        self.cells = int(np.prod(self.grid_shape))
        self.m = self.tilings * self.cells
        displacement = 2 * np.arange(dims) + 1
        self.offsets = (
            np.outer(np.arange(self.tilings), displacement) % self.tilings
        ) / self.tilings

    def active_tiles(self, obs) -> np.ndarray:
        obs = np.asarray(obs, dtype=float)
        if obs.shape != self.low.shape:
            raise DimensionError(
                "Observation shape %s does not match bounds %s"
                % (obs.shape, self.low.shape)
            )
        clamped = np.clip(obs, self.low, self.high)
        scaled = (clamped - self.low) / (self.high - self.low) * self.tiles
        coords = np.floor(scaled + self.offsets).astype(int)
        coords = np.minimum(coords, self.tiles)
        flat = np.ravel_multi_index(tuple(coords.T), self.grid_shape)
        return np.arange(self.tilings) * self.cells + flat

    def featurize(self, s) -> np.ndarray:
        phi = np.zeros(self.m)
        phi[self.active_tiles(s)] = 1.0
        return phi

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "low": self.low.tolist(),
            "high": self.high.tolist(),
            "tilings": self.tilings,
            "tiles": self.tiles.tolist(),
        }


FEATURE_KINDS: typing.Dict[str, typing.Callable[..., FeatureMap]] = {
    TabularFeatures.kind: lambda data: TabularFeatures(data["n_states"]),
    MatrixFeatures.kind: lambda data: MatrixFeatures(data["phi"]),
    TileCoder.kind: lambda data: TileCoder(
        data["low"],
        data["high"],
        tilings=data.get("tilings", 8),
        tiles=data.get("tiles", 8),
    ),
}


def feature_map_from_dict(data: dict) -> FeatureMap:
    try:
        factory = FEATURE_KINDS[data["kind"]]
    except KeyError:
        raise ConfigError(
            "Unknown feature kind %r; expected one of: %s"
            % (data.get("kind"), ", ".join(FEATURE_KINDS))
        )
    return factory(data)


def featurize(fm: FeatureMap, s) -> np.ndarray:
    return fm.featurize(s)


def stack_action(phi: np.ndarray, a: int, n_actions: int) -> np.ndarray:
    """
    State-action features: ``phi`` placed in block ``a`` of an
    ``m * n_actions`` vector, every other block zero.
    """
    m = len(phi)
    phi_sa = np.zeros(m * n_actions)
    phi_sa[a * m : (a + 1) * m] = phi
    return phi_sa
