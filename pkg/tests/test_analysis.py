import logging

import numpy as np
import pytest

from vmtd.algorithms import Algorithm
from vmtd.analysis import AnalysisSetting
from vmtd.analysis import analysis_table
from vmtd.analysis import fixed_point
from vmtd.analysis import key_matrix
from vmtd.analysis import min_symmetric_eigenvalue
from vmtd.analysis import pd_diagnostics
from vmtd.analysis import update_matrix
from vmtd.exceptions import DimensionError
from vmtd.exceptions import SingularityError
from vmtd.features import MatrixFeatures
from vmtd.features import TabularFeatures
from vmtd.prediction import Rates


# Minimum eigenvalues of the symmetric key matrices on the two-state chain.
TWO_STATE_EIGENVALUES = {
    "on": {
        "TD": 0.475,
        "VMTD": 0.25,
        "TDC": 0.09025,
        "VMTDC": 0.025,
        "ETD": 4.75,
        "VMETD": 2.5,
    },
    "off": {
        "TD": -0.2,
        "VMTD": 0.25,
        "TDC": 0.016,
        "VMTDC": 0.025,
        "ETD": 3.4,
        "VMETD": 1.15,
    },
}

DEFAULT_RATES = Rates(alpha=0.1, zeta=0.02, beta=0.025)


class TestTwoStateKeyMatrices:
    @pytest.mark.parametrize(
        "mode,algorithm",
        [
            (mode, name)
            for mode, table in TWO_STATE_EIGENVALUES.items()
            for name in table
        ],
    )
    def test_minimum_eigenvalue(self, twostate, mode, algorithm):
        result = key_matrix(twostate.setting(mode), algorithm)
        expected = TWO_STATE_EIGENVALUES[mode][algorithm]
        assert result.A.shape == (1, 1)
        assert abs(result.min_sym_eig - expected) < 1e-10

    @pytest.mark.parametrize("mode", ["on", "off"])
    def test_zero_rewards_give_zero_fixed_point(self, twostate, mode):
        for name, result in analysis_table({mode: twostate.setting(mode)}):
            assert name == mode
            assert np.array_equal(result.b, np.zeros(1))
            assert np.allclose(result.fixed_point, 0.0)

    def test_correction_key_matrices_carry_c(self, on_setting):
        result = key_matrix(on_setting, "TDC")
        assert np.allclose(result.C, [[2.5]])
        assert key_matrix(on_setting, "TD").C is None

    def test_table_order_follows_arguments(self, on_setting, off_setting):
        table = analysis_table(
            {"on": on_setting, "off": off_setting}, ["VMETD", "TD"]
        )
        assert [(n, r.algorithm.value) for n, r in table] == [
            ("on", "VMETD"),
            ("on", "TD"),
            ("off", "VMETD"),
            ("off", "TD"),
        ]


class TestLinearAlgebra:
    def test_identity_eigenvalue(self):
        assert min_symmetric_eigenvalue(np.eye(3)) == pytest.approx(1.0)

    def test_eigenvalue_matches_polynomial_roots(self, rng):
        A = rng.normal(size=(5, 5))
        sym = (A + A.T) / 2
        roots = np.roots(np.poly(sym)).real
        assert min_symmetric_eigenvalue(A) == pytest.approx(
            roots.min(), abs=1e-8
        )

    def test_non_square(self):
        with pytest.raises(DimensionError):
            min_symmetric_eigenvalue(np.ones((2, 3)))

    def test_scalar_fixed_point(self):
        assert fixed_point(np.array([[0.25]]), np.array([0.5])) == [2.0]

    def test_random_fixed_point(self, rng):
        A = rng.normal(size=(6, 6)) + 6 * np.eye(6)
        b = rng.normal(size=6)
        theta = fixed_point(A, b)
        assert np.max(np.abs(A @ theta - b)) < 1e-10

    def test_singular_system(self):
        with pytest.raises(SingularityError) as info:
            fixed_point(np.array([[1.0, 2.0], [2.0, 4.0]]), np.ones(2))
        assert info.value.condition > 1e12


class TestRankDeficientFeatures:
    def setting(self, twostate):
        return AnalysisSetting(
            mdp=twostate.mdp,
            features=MatrixFeatures([[1.0, 1.0], [2.0, 2.0]]),
            behavior=twostate.policies["policy-1"],
            target=twostate.policies["policy-1"],
        )

    def test_warns_and_has_no_fixed_point(self, twostate, caplog):
        setting = self.setting(twostate)
        with caplog.at_level(logging.WARNING, logger="vmtd.analysis"):
            result = key_matrix(setting, "TD")
        assert result.rank_deficient
        assert result.fixed_point is None
        assert "rank deficient" in caplog.text

    def test_correction_needs_invertible_c(self, twostate):
        with pytest.raises(SingularityError):
            key_matrix(self.setting(twostate), "VMTDC")

    def test_tabular_vmtd_is_singular(self, twostate):
        # The constant vector lies in the span of tabular features, and
        # VMTD is blind to constant offsets.
        setting = AnalysisSetting(
            mdp=twostate.mdp,
            features=TabularFeatures(2),
            behavior=twostate.policies["policy-1"],
            target=twostate.policies["policy-1"],
        )
        assert key_matrix(setting, "VMTD").fixed_point is None
        assert key_matrix(setting, "TD").fixed_point is not None


class TestPositiveDefiniteness:
    def test_two_state_core_sums(self, off_setting):
        report = pd_diagnostics(off_setting)
        assert report.column_sums_zero
        assert np.allclose(report.row_sums, [-0.45, 0.45])
        assert report.covariance is None

    def test_random_settings(self, rng, random_setting):
        for _ in range(200):
            on_policy = bool(rng.integers(2))
            setting = random_setting(rng, on_policy=on_policy)
            report = pd_diagnostics(setting)
            gamma = setting.mdp.gamma
            assert report.column_sums_zero
            assert np.allclose(
                report.row_sums, (1 - gamma) * setting.f - setting.d_mu
            )
            for name in ("TDC", "VMTDC"):
                A = key_matrix(setting, name).A
                scale = max(1.0, np.abs(A).max())
                assert min_symmetric_eigenvalue(A) > -1e-10 * scale
            if on_policy:
                assert min_symmetric_eigenvalue(
                    key_matrix(setting, "VMTD").A
                ) > 0
                cov = report.covariance
                assert cov.symmetric_eigenvalues.sum() == pytest.approx(
                    (
                        cov.feature_eigenvalues.sum()
                        + cov.difference_eigenvalues.sum()
                    )
                    / 2
                )
                assert np.all(cov.feature_eigenvalues > -1e-12)
                assert np.all(cov.difference_eigenvalues > -1e-12)

    def test_vmetd_can_be_indefinite_with_full_rank_features(self, twostate):
        # Off-policy with phi = (1, c): the VMETD key matrix is
        # 0.7 c^2 - 0.95 c + 0.25, negative for 0.357 < c < 1.
        setting = AnalysisSetting(
            mdp=twostate.mdp,
            features=MatrixFeatures([[1.0], [0.5]]),
            behavior=twostate.policies["policy-1"],
            target=twostate.policies["policy-2"],
        )
        assert not setting.rank_deficient
        result = key_matrix(setting, "VMETD")
        assert result.min_sym_eig == pytest.approx(-0.05, abs=1e-12)
        assert key_matrix(setting, "ETD").min_sym_eig == pytest.approx(
            0.5125, abs=1e-12
        )

    def test_correction_fixed_points_match_projected(
        self, rng, random_setting
    ):
        for _ in range(200):
            setting = random_setting(rng, on_policy=bool(rng.integers(2)))
            for base, corrected in (("TD", "TDC"), ("VMTD", "VMTDC")):
                expected = key_matrix(setting, base).fixed_point
                theta = key_matrix(setting, corrected).fixed_point
                if expected is None:
                    assert theta is None
                else:
                    assert np.max(np.abs(theta - expected)) <= 1e-8

    def test_on_policy_row_sums_vanish(self, rng, random_setting):
        setting = random_setting(rng, on_policy=True)
        report = pd_diagnostics(setting)
        assert np.allclose(report.row_sums, 0.0)

    def test_covariance_matches_vmtd_key_matrix(self, on_setting):
        report = pd_diagnostics(on_setting)
        assert report.covariance.symmetric_eigenvalues == pytest.approx(
            [0.25]
        )


class TestUpdateSystem:
    @pytest.mark.parametrize("algorithm", list(Algorithm))
    def test_on_policy_updates_are_stable(self, on_setting, algorithm):
        system = update_matrix(on_setting, algorithm, DEFAULT_RATES)
        assert system.stable
        assert system.blocks[0] == "theta"

    def test_off_policy_td_is_unstable(self, off_setting):
        system = update_matrix(off_setting, "TD", DEFAULT_RATES)
        assert system.eigenvalues.real.max() == pytest.approx(0.02)
        assert not system.stable

    @pytest.mark.parametrize("algorithm", ["VMTD", "ETD", "VMETD"])
    def test_off_policy_stable(self, off_setting, algorithm):
        assert update_matrix(off_setting, algorithm, DEFAULT_RATES).stable

    @pytest.mark.parametrize(
        "rates", [DEFAULT_RATES, Rates(alpha=0.01, zeta=0.1, beta=0.1)]
    )
    def test_off_policy_vmtdc_sampled_update_drifts(self, off_setting, rates):
        # The key matrix is positive definite, but the sampled correction
        # term is not centered, so the joint update is not.
        assert key_matrix(off_setting, "VMTDC").min_sym_eig > 0
        system = update_matrix(off_setting, "VMTDC", rates)
        assert system.blocks == ("theta", "u", "omega")
        assert np.linalg.det(system.matrix) > 0
        assert not system.stable
