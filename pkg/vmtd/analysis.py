"""
Exact key-matrix analysis. For a finite MDP, a feature matrix and a
behavior/target pair, every algorithm's expected update can be written as
``b - A theta``; this module computes ``A`` and ``b`` in closed form, the
minimum eigenvalue of the symmetric part of ``A`` (the quantity that orders
convergence rates), fixed points, and the positive-definiteness diagnostics
for the variance-minimizing matrices.
"""

import dataclasses
import functools
import logging
import typing

import numpy as np
import scipy.linalg

from . import mdp as mdp_ops
from .algorithms import Algorithm
from .exceptions import DimensionError
from .exceptions import NumericError
from .exceptions import SingularityError
from .features import FeatureMap
from .prediction import Rates


logger = logging.getLogger(__name__)

MAX_CONDITION = 1e12


@dataclasses.dataclass(frozen=True, eq=False)
class AnalysisSetting:
    """
    Everything needed to write down the expected updates: the MDP, its
    features and the behavior (``mu``) and target (``pi``) policies.
    """

    mdp: mdp_ops.MdpSpec
    features: FeatureMap
    behavior: mdp_ops.Policy
    target: mdp_ops.Policy

    def __post_init__(self):
        for policy in (self.behavior, self.target):
            if policy.probs.shape != (self.mdp.n_states, self.mdp.n_actions):
                raise DimensionError("Policy shape does not match the MDP")
        mdp_ops.check_coverage(self.target, self.behavior)

    @functools.cached_property
    def phi(self) -> np.ndarray:
        return self.features.matrix(self.mdp.n_states)

    @functools.cached_property
    def P_pi(self) -> np.ndarray:
        return mdp_ops.state_transition_matrix(self.mdp, self.target)

    @functools.cached_property
    def d_mu(self) -> np.ndarray:
        P_mu = mdp_ops.state_transition_matrix(self.mdp, self.behavior)
        return mdp_ops.stationary_distribution(P_mu)

    @functools.cached_property
    def f(self) -> np.ndarray:
        return mdp_ops.followon_vector(self.mdp, self.target, self.d_mu)

    @functools.cached_property
    def r_pi(self) -> np.ndarray:
        return mdp_ops.expected_reward(self.mdp, self.target)

    @property
    def M(self) -> np.ndarray:
        """
        ``I - gamma P_pi``.
        """
        return np.eye(self.mdp.n_states) - self.mdp.gamma * self.P_pi

    @functools.cached_property
    def C(self) -> np.ndarray:
        """
        ``E[phi phi^T]`` under the behavior state distribution.
        """
        return self.phi.T @ np.diag(self.d_mu) @ self.phi

    @property
    def on_policy(self) -> bool:
        return np.array_equal(self.behavior.probs, self.target.probs)

    @functools.cached_property
    def rank_deficient(self) -> bool:
        return np.linalg.matrix_rank(self.phi) < self.phi.shape[1]


@dataclasses.dataclass(frozen=True, eq=False)
class KeyMatrixResult:
    algorithm: Algorithm
    A: np.ndarray
    b: np.ndarray
    C: typing.Optional[np.ndarray]
    min_sym_eig: float
    fixed_point: typing.Optional[np.ndarray]
    rank_deficient: bool = False
    condition: float = float("nan")


def min_symmetric_eigenvalue(A: np.ndarray) -> float:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError("Expected a square matrix, got %s" % (A.shape,))
    return float(scipy.linalg.eigvalsh((A + A.T) / 2.0)[0])


def fixed_point(
    A: np.ndarray, b: np.ndarray, max_condition: float = MAX_CONDITION
) -> np.ndarray:
    """
    Solve ``A theta = b``, refusing matrices whose condition number exceeds
    ``max_condition``.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or b.shape != A.shape[:1]:
        raise DimensionError(
            "Cannot solve %s system against %s" % (A.shape, b.shape)
        )
    condition = float(np.linalg.cond(A))
    if not np.isfinite(condition) or condition > max_condition:
        raise SingularityError(
            "Matrix is singular or ill-conditioned (condition %.3g)"
            % condition,
            condition=condition,
        )
    theta = scipy.linalg.solve(A, b)
    # One step of iterative refinement.
    theta = theta + scipy.linalg.solve(A, b - A @ theta)
    scale = max(1.0, np.abs(A).max() * np.abs(theta).max(), np.abs(b).max())
    if np.max(np.abs(A @ theta - b), initial=0.0) >= 1e-8 * scale:
        raise NumericError("Fixed point residual above tolerance")
    return theta


def _solve_c(C: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    condition = float(np.linalg.cond(C))
    if not np.isfinite(condition) or condition > MAX_CONDITION:
        raise SingularityError(
            "Feature covariance C is singular (condition %.3g)" % condition,
            condition=condition,
        )
    return scipy.linalg.solve(C, rhs, assume_a="sym")


def _td_pair(setting):
    D = np.diag(setting.d_mu)
    phi = setting.phi
    return phi.T @ D @ setting.M @ phi, phi.T @ D @ setting.r_pi


def _vmtd_pair(setting):
    d = setting.d_mu
    W = np.diag(d) - np.outer(d, d)
    phi = setting.phi
    return phi.T @ W @ setting.M @ phi, phi.T @ W @ setting.r_pi


def _etd_pair(setting):
    F = np.diag(setting.f)
    phi = setting.phi
    return phi.T @ F @ setting.M @ phi, phi.T @ F @ setting.r_pi


def _vmetd_pair(setting):
    d, f = setting.d_mu, setting.f
    F = np.diag(f)
    phi = setting.phi
    A = phi.T @ (F @ setting.M - np.outer(d, d)) @ phi
    b = phi.T @ (F - np.outer(d, f)) @ setting.r_pi
    return A, b


_PAIRS = {
    Algorithm.TD: _td_pair,
    Algorithm.VMTD: _vmtd_pair,
    Algorithm.ETD: _etd_pair,
    Algorithm.VMETD: _vmetd_pair,
}


def key_matrix(setting: AnalysisSetting, algorithm) -> KeyMatrixResult:
    algorithm = Algorithm.parse(algorithm)
    if setting.rank_deficient:
        logger.warning(
            "Feature matrix is rank deficient; %s results are not unique",
            algorithm.value,
        )
    C = None
    projected = algorithm
    if algorithm.uses_correction:
        projected = (
            Algorithm.VMTD if algorithm.variance_minimizing else Algorithm.TD
        )
    A_base, b_base = _PAIRS[projected](setting)
    if algorithm.uses_correction:
        C = setting.C
        A = A_base.T @ _solve_c(C, A_base)
        b = A_base.T @ _solve_c(C, b_base)
    else:
        A, b = A_base, b_base
    condition = float(np.linalg.cond(A))
    try:
        # A^T C^-1 A theta = A^T C^-1 b has the solution of A theta = b,
        # which is far better conditioned.
        theta = fixed_point(A_base, b_base)
    except SingularityError as err:
        logger.warning("%s has no unique fixed point: %s", algorithm.value, err)
        theta = None
    return KeyMatrixResult(
        algorithm=algorithm,
        A=A,
        b=b,
        C=C,
        min_sym_eig=min_symmetric_eigenvalue(A),
        fixed_point=theta,
        rank_deficient=setting.rank_deficient,
        condition=condition,
    )


def analysis_table(
    settings: typing.Dict[str, AnalysisSetting],
    algorithms: typing.Iterable = tuple(Algorithm),
) -> typing.List[typing.Tuple[str, KeyMatrixResult]]:
    """
    ``key_matrix`` for every (setting name, algorithm) pair, in order.
    """
    algorithms = [Algorithm.parse(a) for a in algorithms]
    return [
        (name, key_matrix(setting, algorithm))
        for name, setting in settings.items()
        for algorithm in algorithms
    ]


# -----------------------------------------------------------------------------
# Positive-definiteness diagnostics.
# -----------------------------------------------------------------------------


@dataclasses.dataclass(frozen=True, eq=False)
class CovarianceReport:
    """
    Spectra behind the on-policy decomposition
    ``sym(Cov(phi, phi - g phi')) = ((1 - g^2) Cov(phi, phi)
    + Cov(phi - g phi', phi - g phi')) / 2``.
    """

    symmetric_eigenvalues: np.ndarray
    feature_eigenvalues: np.ndarray
    difference_eigenvalues: np.ndarray


@dataclasses.dataclass(frozen=True, eq=False)
class PDReport:
    core: np.ndarray
    row_sums: np.ndarray
    column_sums: np.ndarray
    on_policy: bool
    covariance: typing.Optional[CovarianceReport] = None

    @property
    def row_sums_positive(self) -> bool:
        return bool(np.all(self.row_sums > 0))

    @property
    def column_sums_zero(self) -> bool:
        return bool(np.all(np.abs(self.column_sums) < 1e-10))


def _covariance_report(setting: AnalysisSetting) -> CovarianceReport:
    phi, d, P = setting.phi, setting.d_mu, setting.P_pi
    gamma = setting.mdp.gamma
    mean_phi = phi.T @ d
    cov_phi = phi.T @ np.diag(d) @ phi - np.outer(mean_phi, mean_phi)
    # Joint law of (s, s') is d(s) P(s, s').
    weights = d[:, None] * P
    diffs = phi[:, None, :] - gamma * phi[None, :, :]
    mean_diff = np.einsum("ij,ijk->k", weights, diffs)
    cov_diff = np.einsum("ij,ijk,ijl->kl", weights, diffs, diffs) - np.outer(
        mean_diff, mean_diff
    )
    cross = phi.T @ np.diag(d) @ setting.M @ phi - np.outer(
        mean_phi, setting.M.T @ d @ phi
    )
    return CovarianceReport(
        symmetric_eigenvalues=scipy.linalg.eigvalsh((cross + cross.T) / 2.0),
        feature_eigenvalues=scipy.linalg.eigvalsh((1 - gamma**2) * cov_phi),
        difference_eigenvalues=scipy.linalg.eigvalsh(cov_diff),
    )


def pd_diagnostics(setting: AnalysisSetting) -> PDReport:
    """
    Row and column sums of ``X = F (I - gamma P_pi) - d_mu d_mu^T``, the
    state-space core of the VMETD key matrix, and (on-policy) the covariance
    decomposition of the VMTD key matrix.
    """
    d = setting.d_mu
    core = np.diag(setting.f) @ setting.M - np.outer(d, d)
    on_policy = setting.on_policy
    return PDReport(
        core=core,
        row_sums=core.sum(axis=1),
        column_sums=core.sum(axis=0),
        on_policy=on_policy,
        covariance=_covariance_report(setting) if on_policy else None,
    )


# -----------------------------------------------------------------------------
# Mean dynamics of the sampled updates.
# -----------------------------------------------------------------------------


@dataclasses.dataclass(frozen=True, eq=False)
class UpdateSystem:
    """
    Expected one-step change ``matrix @ z + offset`` of the joint parameter
    vector ``z``, whose blocks are listed in ``blocks`` (``theta`` first,
    then ``u`` and/or ``omega``).
    """

    matrix: np.ndarray
    offset: np.ndarray
    blocks: typing.Tuple[str, ...]

    @property
    def eigenvalues(self) -> np.ndarray:
        return scipy.linalg.eigvals(self.matrix)

    @property
    def stable(self) -> bool:
        return bool(np.all(self.eigenvalues.real < 0))


def update_matrix(
    setting: AnalysisSetting, algorithm, rates: Rates
) -> UpdateSystem:
    """
    Mean-ODE system of the stochastic update as actually sampled (TD error
    weighted by the importance ratio, TDC correction term included), over
    all of the algorithm's parameters at once. Unlike ``key_matrix`` it does
    not assume the auxiliary parameters have equilibrated.
    """
    algorithm = Algorithm.parse(algorithm)
    alpha, zeta, beta = rates
    phi, d = setting.phi, setting.d_mu
    emphasis = setting.f if algorithm.emphatic else d
    m = phi.shape[1]
    weights = np.diag(emphasis)
    # E[w rho delta phi] = b1 - A1 theta and E[w rho delta] = b0 - a0 theta.
    A1 = phi.T @ weights @ setting.M @ phi
    b1 = phi.T @ weights @ setting.r_pi
    a0 = emphasis @ setting.M @ phi
    b0 = emphasis @ setting.r_pi
    mean_phi = phi.T @ d
    blocks = ["theta"]
    if algorithm.uses_correction:
        blocks.append("u")
    if algorithm.variance_minimizing:
        blocks.append("omega")
    sizes = {"theta": m, "u": m, "omega": 1}
    starts = np.cumsum([0] + [sizes[name] for name in blocks])
    index = {
        name: slice(starts[i], starts[i + 1]) for i, name in enumerate(blocks)
    }
    n = starts[-1]
    G = np.zeros((n, n))
    g = np.zeros(n)
    t = index["theta"]
    G[t, t] = -alpha * A1
    g[t] = alpha * b1
    if "omega" in index:
        w = index["omega"]
        G[t, w] = -alpha * mean_phi[:, None]
        G[w, t] = -beta * a0
        G[w, w] = -beta
        g[w] = beta * b0
    if "u" in index:
        u = index["u"]
        K = phi.T @ setting.P_pi.T @ np.diag(d) @ phi
        G[t, u] = -alpha * setting.mdp.gamma * K
        G[u, t] = -zeta * A1
        G[u, u] = -zeta * setting.C
        g[u] = zeta * b1
        if "omega" in index:
            G[u, w] = -zeta * mean_phi[:, None]
    return UpdateSystem(matrix=G, offset=g, blocks=tuple(blocks))
