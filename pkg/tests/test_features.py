import numpy as np
import pytest

from vmtd.exceptions import ConfigError
from vmtd.exceptions import DimensionError
from vmtd.features import MatrixFeatures
from vmtd.features import TabularFeatures
from vmtd.features import TileCoder
from vmtd.features import feature_map_from_dict
from vmtd.features import featurize
from vmtd.features import stack_action


def test_tabular_basis_vector():
    assert featurize(TabularFeatures(4), 2).tolist() == [0, 0, 1, 0]
    with pytest.raises(DimensionError):
        featurize(TabularFeatures(4), 4)


def test_explicit_matrix_row():
    assert featurize(MatrixFeatures([[1], [2]]), 1).tolist() == [2]
    for s in (-1, 2):
        with pytest.raises(DimensionError):
            featurize(MatrixFeatures([[1], [2]]), s)


def test_feature_map_from_dict():
    for fm in (
        TabularFeatures(3),
        MatrixFeatures([[1.0, 0.5], [2.0, 0.0]]),
        TileCoder([0, 0], [1, 2], tilings=4, tiles=3),
    ):
        copy = feature_map_from_dict(fm.to_dict())
        assert copy.to_dict() == fm.to_dict()
    with pytest.raises(ConfigError):
        feature_map_from_dict({"kind": "radial"})


class TestTileCoder:
    def coder(self):
        return TileCoder([-1.2, -0.07], [0.6, 0.07], tilings=8, tiles=8)

    def test_size(self):
        assert self.coder().m == 8 * 9 * 9

    def test_exactly_one_tile_per_tiling(self, rng):
        coder = self.coder()
        for obs in rng.uniform(coder.low, coder.high, size=(200, 2)):
            phi = coder.featurize(obs)
            assert phi.sum() == 8
            tiles = coder.active_tiles(obs)
            assert len(set(tiles.tolist())) == 8
            # Tiling k owns indices [k * cells, (k + 1) * cells).
            assert np.array_equal(tiles // coder.cells, np.arange(8))

    def test_out_of_bounds_observations_are_clamped(self):
        coder = self.coder()
        assert np.array_equal(
            coder.active_tiles([5.0, 1.0]), coder.active_tiles([0.6, 0.07])
        )
        assert np.array_equal(
            coder.active_tiles([-5.0, -1.0]),
            coder.active_tiles([-1.2, -0.07]),
        )

    def test_nearby_points_share_tiles(self):
        coder = self.coder()
        a = coder.featurize([0.0, 0.0])
        b = coder.featurize([0.001, 0.0])
        far = coder.featurize([-1.1, 0.06])
        assert a @ b >= 7
        assert a @ far == 0

    def test_bad_observation_shape(self):
        with pytest.raises(DimensionError):
            self.coder().active_tiles([0.0, 0.0, 0.0])

    def test_bad_bounds(self):
        with pytest.raises(ConfigError):
            TileCoder([0.0], [0.0])


def test_stack_action_places_one_block():
    phi_sa = stack_action(np.array([1.0, 2.0]), 1, 3)
    assert phi_sa.tolist() == [0, 0, 1, 2, 0, 0]
