"""
Finite-MDP algebra: MDPs and policies as explicit matrices, the transition
and visitation distributions derived from them, and sampled transitions.
"""

import dataclasses
import logging
import typing

import numpy as np
import scipy.linalg

from .exceptions import CoverageError
from .exceptions import DegeneracyError
from .exceptions import DimensionError
from .exceptions import NumericError
from .exceptions import ProbabilityError


logger = logging.getLogger(__name__)

PROB_TOL = 1e-12
EIG_ONE_TOL = 1e-8


def _frozen_array(value, ndim, name):
    array = np.array(value, dtype=float)
    if array.ndim != ndim:
        raise DimensionError(
            "%s must have %d dimensions, got shape %s"
            % (name, ndim, array.shape)
        )
    array.setflags(write=False)
    return array


def _check_stochastic(array, name):
    if np.any(array < 0):
        raise ProbabilityError("%s has negative probabilities" % name)
    sums = array.sum(axis=-1)
    if np.any(np.abs(sums - 1.0) > PROB_TOL):
        raise ProbabilityError("%s rows must sum to 1" % name)


class Transition(typing.NamedTuple):
    s: int
    a: int
    r: float
    s_next: int
    done: bool


@dataclasses.dataclass(frozen=True, eq=False)
class MdpSpec:
    """
    A finite MDP given by its transition tensor ``P[s][a][s']``, reward
    tensor ``R[s][a][s']`` and discount. ``terminal`` flags absorbing states;
    a sampled transition into one of them reports ``done``.
    """

    transition: np.ndarray
    reward: np.ndarray
    gamma: float
    terminal: typing.Optional[np.ndarray] = None

    def __post_init__(self):
        transition = _frozen_array(self.transition, 3, "transition")
        reward = _frozen_array(self.reward, 3, "reward")
        n_states, _, n_next = transition.shape
        if n_states == 0 or n_next != n_states:
            raise DimensionError(
                "transition must have shape (S, A, S), got %s"
                % (transition.shape,)
            )
        if reward.shape != transition.shape:
            raise DimensionError(
                "reward shape %s does not match transition shape %s"
                % (reward.shape, transition.shape)
            )
        _check_stochastic(transition, "transition")
        if not 0.0 < self.gamma < 1.0:
            raise ProbabilityError("gamma must lie strictly inside (0, 1)")
        if self.terminal is None:
            terminal = np.zeros(n_states, dtype=bool)
        else:
            terminal = np.array(self.terminal, dtype=bool)
            if terminal.shape != (n_states,):
                raise DimensionError("terminal must have one flag per state")
        terminal.setflags(write=False)
        object.__setattr__(self, "transition", transition)
        object.__setattr__(self, "reward", reward)
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "terminal", terminal)

    @property
    def n_states(self) -> int:
        return self.transition.shape[0]

    @property
    def n_actions(self) -> int:
        return self.transition.shape[1]

    def to_dict(self) -> dict:
        return {
            "transition": self.transition.tolist(),
            "reward": self.reward.tolist(),
            "gamma": self.gamma,
            "terminal": [int(i) for i in np.flatnonzero(self.terminal)],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MdpSpec":
        transition = np.array(data["transition"], dtype=float)
        reward = data.get("reward")
        if reward is None:
            reward = np.zeros_like(transition)
        terminal = np.zeros(transition.shape[0], dtype=bool)
        terminal[list(data.get("terminal", []))] = True
        return cls(transition, reward, data["gamma"], terminal)


@dataclasses.dataclass(frozen=True, eq=False)
class Policy:
    """
    A stochastic policy as a row-stochastic matrix ``probs[s][a]``.
    """

    probs: np.ndarray

    def __post_init__(self):
        probs = _frozen_array(self.probs, 2, "policy")
        _check_stochastic(probs, "policy")
        object.__setattr__(self, "probs", probs)

    @property
    def n_states(self) -> int:
        return self.probs.shape[0]

    @property
    def n_actions(self) -> int:
        return self.probs.shape[1]

    @classmethod
    def uniform(cls, n_states: int, n_actions: int) -> "Policy":
        return cls(np.full((n_states, n_actions), 1.0 / n_actions))

    @classmethod
    def deterministic(cls, actions, n_actions: int) -> "Policy":
        actions = np.asarray(actions, dtype=int)
        probs = np.zeros((len(actions), n_actions))
        probs[np.arange(len(actions)), actions] = 1.0
        return cls(probs)

    def to_dict(self) -> dict:
        return {"probs": self.probs.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "Policy":
        return cls(data["probs"])


def _check_policy(mdp: MdpSpec, pi: Policy):
    if pi.probs.shape != (mdp.n_states, mdp.n_actions):
        raise DimensionError(
            "policy shape %s does not match MDP (%d states, %d actions)"
            % (pi.probs.shape, mdp.n_states, mdp.n_actions)
        )


def state_transition_matrix(mdp: MdpSpec, pi: Policy) -> np.ndarray:
    """
    ``P_pi[s][s'] = sum_a pi[s][a] P[s][a][s']``.
    """
    _check_policy(mdp, pi)
    return np.einsum("sa,sat->st", pi.probs, mdp.transition)


def expected_reward(mdp: MdpSpec, pi: Policy) -> np.ndarray:
    """
    Expected one-step reward ``r_pi[s]`` under ``pi``.
    """
    _check_policy(mdp, pi)
    return np.einsum("sa,sat,sat->s", pi.probs, mdp.transition, mdp.reward)


def stationary_distribution(P_pi: np.ndarray) -> np.ndarray:
    """
    Stationary distribution of a row-stochastic matrix, from a dense
    eigen-solve of ``P_pi.T``.
    """
    P_pi = np.asarray(P_pi, dtype=float)
    if P_pi.ndim != 2 or P_pi.shape[0] != P_pi.shape[1]:
        raise DimensionError("P_pi must be square, got %s" % (P_pi.shape,))
    eigvals, eigvecs = scipy.linalg.eig(P_pi.T)
    near_one = np.flatnonzero(np.abs(eigvals - 1.0) < EIG_ONE_TOL)
    if len(near_one) != 1:
        raise DegeneracyError(
            "Chain has %d eigenvalues at 1; the stationary distribution is "
            "not unique" % len(near_one)
        )
    d = np.real(eigvecs[:, near_one[0]])
    d = d / d.sum()
    if np.any(d < -1e-12):
        raise NumericError("Stationary eigenvector has mixed signs")
    d = np.clip(d, 0.0, None)
    return d / d.sum()


def followon_vector(
    mdp: MdpSpec, pi: Policy, d_mu: np.ndarray
) -> np.ndarray:
    """
    Emphatic weighting ``f = (I - gamma P_pi^T)^-1 d_mu``.
    """
    P_pi = state_transition_matrix(mdp, pi)
    d_mu = np.asarray(d_mu, dtype=float)
    if d_mu.shape != (mdp.n_states,):
        raise DimensionError("d_mu must have one entry per state")
    system = np.eye(mdp.n_states) - mdp.gamma * P_pi.T
    try:
        f = scipy.linalg.solve(system, d_mu)
    except (scipy.linalg.LinAlgError, ValueError) as err:
        raise NumericError("Follow-on system is singular: %s" % err) from err
    if np.max(np.abs(system @ f - d_mu)) >= 1e-10:
        raise NumericError("Follow-on solve did not meet residual tolerance")
    return f


def policy_values(mdp: MdpSpec, pi: Policy) -> np.ndarray:
    """
    True state values ``v_pi = (I - gamma P_pi)^-1 r_pi``.
    """
    P_pi = state_transition_matrix(mdp, pi)
    r_pi = expected_reward(mdp, pi)
    return scipy.linalg.solve(np.eye(mdp.n_states) - mdp.gamma * P_pi, r_pi)


def importance_ratio(pi: Policy, mu: Policy, s: int, a: int) -> float:
    target = pi.probs[s, a]
    behavior = mu.probs[s, a]
    if behavior == 0.0:
        if target > 0.0:
            raise CoverageError(
                "Behavior policy never takes action %d in state %d" % (a, s)
            )
        return 0.0
    return float(target / behavior)


def check_coverage(pi: Policy, mu: Policy):
    uncovered = np.argwhere((mu.probs == 0.0) & (pi.probs > 0.0))
    if len(uncovered):
        s, a = uncovered[0]
        raise CoverageError(
            "Behavior policy never takes action %d in state %d" % (a, s)
        )


def draw_index(probs: np.ndarray, rng: np.random.Generator) -> int:
    """
    Inverse-CDF draw of one index from a probability vector.
    """
    index = int(np.searchsorted(np.cumsum(probs), rng.random(), side="right"))
    return min(index, len(probs) - 1)


def sample_transition(
    mdp: MdpSpec, mu: Policy, s: int, rng: np.random.Generator
) -> Transition:
    a = draw_index(mu.probs[s], rng)
    s_next = draw_index(mdp.transition[s, a], rng)
    return Transition(
        s=s,
        a=a,
        r=float(mdp.reward[s, a, s_next]),
        s_next=s_next,
        done=bool(mdp.terminal[s_next]),
    )


def value_iteration(
    mdp: MdpSpec, tol: float = 1e-10, max_iterations: int = 100_000
) -> typing.Tuple[np.ndarray, np.ndarray]:
    """
    Optimal state and action values. Terminal states are worth zero.
    """
    live = ~mdp.terminal
    expected_r = np.einsum("sat,sat->sa", mdp.transition, mdp.reward)
    v = np.zeros(mdp.n_states)
    for _ in range(max_iterations):
        q = expected_r + mdp.gamma * mdp.transition @ v
        v_new = np.where(live, q.max(axis=1), 0.0)
        if np.max(np.abs(v_new - v)) < tol:
            v = v_new
            break
        v = v_new
    else:
        logger.warning("Value iteration stopped before reaching %g", tol)
    q = expected_r + mdp.gamma * mdp.transition @ v
    return v, q


def optimal_action_sets(
    q: np.ndarray, tol: float = 1e-9
) -> typing.List[typing.FrozenSet[int]]:
    """
    For each state, the set of actions whose value is within ``tol`` of the
    best one.
    """
    best = q.max(axis=1, keepdims=True)
    return [frozenset(np.flatnonzero(row).tolist()) for row in q >= best - tol]
