"""
Experiment orchestration: seeded multi-run execution of the evaluation and
control protocols, aggregation into mean/std curves, CSV persistence and
plot-data emission.

Every run draws from its own generator, seeded from ``(base seed, run
index)`` and independent of the algorithm, so two algorithms that make the
same decisions consume identical random streams. Runs may execute in a
process pool; results are always aggregated in ``(algorithm, seed)`` order so
the output does not depend on scheduling.
"""

import concurrent.futures
import dataclasses
import json
import logging
import os
import typing

import numpy as np
import pandas as pd

from . import control
from . import mdp as mdp_ops
from . import prediction
from .analysis import AnalysisSetting
from .analysis import key_matrix
from .config import ExperimentConfig
from .envs import make_env
from .envs import two_state_mdp
from .exceptions import ConfigError
from .exceptions import SingularityError
from .prediction import FeatTransition
from .prediction import rate_at


logger = logging.getLogger(__name__)

#: Parameter norm beyond which a run counts as diverged.
DIVERGENCE_NORM = 1e12

CSV_COLUMNS = ["algorithm", "index", "mean", "std", "n_runs"]

#: Analysis table columns; the first four are the stable interface.
ANALYSIS_COLUMNS = [
    "algorithm",
    "policy_mode",
    "min_sym_eig",
    "fixed_point_norm",
    "fixed_point",
    "condition",
    "note",
]


@dataclasses.dataclass(frozen=True, eq=False)
class RunRecord:
    """
    One run's metric series. ``seed`` is the run index the generator was
    seeded with; ``learner`` is the final learner state.
    """

    algorithm: str
    seed: int
    series: np.ndarray
    diverged: bool = False
    learner: typing.Any = None


@dataclasses.dataclass(frozen=True, eq=False)
class CurveSummary:
    algorithm: str
    mean: np.ndarray
    std: np.ndarray
    n_runs: int

    def __post_init__(self):
        if len(self.mean) != len(self.std):
            raise ValueError("mean and std must have the same length")

    @property
    def index(self) -> np.ndarray:
        return np.arange(len(self.mean))


def run_rng(base_seed: int, seed: int) -> np.random.Generator:
    return np.random.default_rng([base_seed, seed])


def _diverged(theta: np.ndarray) -> bool:
    return not np.all(np.isfinite(theta)) or (
        np.linalg.norm(theta) > DIVERGENCE_NORM
    )


# -----------------------------------------------------------------------------
# Evaluation.
# -----------------------------------------------------------------------------


def _metric_function(setting: AnalysisSetting, algorithm, metric: str):
    if metric == "theta_error":
        try:
            theta_star = key_matrix(setting, algorithm).fixed_point
        except SingularityError:
            theta_star = None
        if theta_star is not None:
            return lambda theta: float(np.linalg.norm(theta - theta_star))
        logger.warning(
            "%s has no unique fixed point; reporting rmsve instead",
            algorithm.value,
        )
    v_pi = mdp_ops.policy_values(setting.mdp, setting.target)
    phi, d = setting.phi, setting.d_mu
    return lambda theta: float(np.sqrt(d @ (phi @ theta - v_pi) ** 2))


def evaluation_run(config: ExperimentConfig, algorithm, seed: int):
    """
    Stream behavior-policy transitions through one prediction learner and
    record the metric after every update.
    """
    setting = config.analysis_setting()
    mdp, mu, pi = setting.mdp, setting.behavior, setting.target
    phi, d_mu = setting.phi, setting.d_mu
    rng = run_rng(config.seed, seed)
    schedule = config.schedule_for(algorithm)
    metric = _metric_function(setting, algorithm, config.metric)
    iid = config.sampling == "iid" and not algorithm.emphatic
    state = prediction.initial_state(
        algorithm, phi.shape[1], mdp.gamma, config.theta0
    )
    series = np.empty(config.horizon)
    diverged = False
    s = mdp_ops.draw_index(d_mu, rng)
    for k in range(config.horizon):
        if iid:
            s = mdp_ops.draw_index(d_mu, rng)
        tr = mdp_ops.sample_transition(mdp, mu, s, rng)
        t = FeatTransition(
            phi=phi[tr.s],
            phi_next=phi[tr.s_next],
            r=tr.r,
            rho=mdp_ops.importance_ratio(pi, mu, tr.s, tr.a),
            done=tr.done,
        )
        state = prediction.step(state, t, rate_at(schedule, k))
        if _diverged(state.theta):
            logger.warning(
                "%s run %d diverged at step %d", algorithm.value, seed, k
            )
            series[k:] = np.inf
            diverged = True
            break
        series[k] = metric(state.theta)
        if tr.done:
            s = mdp_ops.draw_index(d_mu, rng)
            state = prediction.start_episode(state)
        else:
            s = tr.s_next
    return RunRecord(algorithm.value, seed, series, diverged, state)


# -----------------------------------------------------------------------------
# Control.
# -----------------------------------------------------------------------------


def control_run(config: ExperimentConfig, algorithm, seed: int):
    """
    Run ``config.horizon`` episodes of one control learner and record the
    undiscounted return (or the length) of each.
    """
    env = make_env(config.env, **config.env_params)
    features = env.default_features()
    rng = run_rng(config.seed, seed)
    schedule = config.schedule_for(algorithm)
    gamma = env.gamma if config.gamma is None else config.gamma
    state = control.initial_state(
        algorithm, features.m, env.n_actions, gamma, config.epsilon
    )
    returns = np.empty(config.horizon)
    lengths = np.empty(config.horizon)
    diverged = False
    for episode in range(config.horizon):
        # Control schedules decay per episode; the horizon counts episodes.
        rates = rate_at(schedule, episode)
        observation = env.reset(rng)
        state = control.start_episode(state)
        q = control.q_values(state, features.featurize(observation))
        action = control.epsilon_greedy(q, state.epsilon, rng)
        total = 0.0
        while True:
            outcome = env.step(action, rng)
            transition = control.ControlTransition(
                s=observation,
                a=action,
                r=outcome.reward,
                s_next=outcome.observation,
                done=outcome.done,
            )
            state, next_action = control.control_step(
                state, transition, features, rates, rng
            )
            total += outcome.reward
            if _diverged(state.theta):
                diverged = True
                break
            if outcome.done or outcome.truncated:
                break
            observation, action = outcome.observation, next_action
        if diverged:
            logger.warning(
                "%s run %d diverged in episode %d",
                algorithm.value,
                seed,
                episode,
            )
            returns[episode:] = np.inf
            lengths[episode:] = np.inf
            break
        returns[episode] = total
        lengths[episode] = env.steps_in_episode
    series = lengths if config.metric == "episode_steps" else returns
    return RunRecord(algorithm.value, seed, series, diverged, state)


# -----------------------------------------------------------------------------
# Execution and aggregation.
# -----------------------------------------------------------------------------


def _record_order(record):
    return record.algorithm, record.seed


def _run_task(task):
    config, algorithm, seed = task
    if config.kind == "control":
        return control_run(config, algorithm, seed)
    return evaluation_run(config, algorithm, seed)


def execute_runs(config: ExperimentConfig) -> typing.List[RunRecord]:
    """
    Every (algorithm, run) pair of ``config``, sorted by algorithm then seed.
    """
    if config.kind == "analyze":
        raise ConfigError("analyze experiments have no runs")
    if config.kind == "evaluation":
        for algorithm in config.algorithms:
            if algorithm.emphatic and config.sampling == "iid":
                logger.warning(
                    "%s follows the behavior trajectory; i.i.d. sampling "
                    "does not apply",
                    algorithm.value,
                )
    tasks = [
        (config, algorithm, seed)
        for algorithm in config.algorithms
        for seed in range(config.runs)
    ]
    logger.info(
        "Running %d %s runs on %s", len(tasks), config.kind, config.env
    )
    if config.workers > 1:
        with concurrent.futures.ProcessPoolExecutor(
            max_workers=config.workers
        ) as executor:
            records = list(executor.map(_run_task, tasks))
    else:
        records = [_run_task(task) for task in tasks]
    return sorted(records, key=_record_order)


def aggregate(
    records: typing.Iterable[RunRecord],
) -> typing.List[CurveSummary]:
    """
    Mean and (population) standard deviation across runs, per algorithm.
    A column containing a diverged run has infinite mean and std.
    """
    records = sorted(records, key=_record_order)
    grouped: typing.Dict[str, typing.List[np.ndarray]] = {}
    for record in records:
        grouped.setdefault(record.algorithm, []).append(record.series)
    summaries = []
    for algorithm, series in grouped.items():
        stacked = np.vstack(series)
        with np.errstate(invalid="ignore"):
            mean = stacked.mean(axis=0)
            std = stacked.std(axis=0)
        std = np.where(np.isinf(mean), np.inf, std)
        summaries.append(CurveSummary(algorithm, mean, std, len(series)))
    return summaries


def run_evaluation(config: ExperimentConfig) -> typing.List[CurveSummary]:
    if config.kind != "evaluation":
        raise ConfigError("Expected an evaluation config")
    return aggregate(execute_runs(config))


def run_control(config: ExperimentConfig) -> typing.List[CurveSummary]:
    if config.kind != "control":
        raise ConfigError("Expected a control config")
    return aggregate(execute_runs(config))


# -----------------------------------------------------------------------------
# Analysis table.
# -----------------------------------------------------------------------------


def _format_vector(vector) -> str:
    if vector is None:
        return ""
    return " ".join("%.12g" % value for value in np.ravel(vector))


def run_analyze(config: ExperimentConfig, modes=None) -> pd.DataFrame:
    """
    Minimum eigenvalue of the symmetric part of each algorithm's key matrix,
    plus its fixed point, for every requested policy mode.
    """
    if config.setting is not None:
        settings = {"custom": config.analysis_setting()}
    else:
        if config.env_key != "twostate":
            raise ConfigError("analyze needs the two-state chain or a setting")
        bundle = two_state_mdp()
        modes = modes or ([config.mode] if config.mode else ["on", "off"])
        settings = {mode: bundle.setting(mode) for mode in modes}
    rows = []
    for mode, setting in settings.items():
        for algorithm in config.algorithms:
            note = "rank-deficient" if setting.rank_deficient else ""
            try:
                result = key_matrix(setting, algorithm)
            except SingularityError as err:
                logger.warning("%s (%s): %s", algorithm.value, mode, err)
                rows.append(
                    {
                        "algorithm": algorithm.value,
                        "policy_mode": mode,
                        "min_sym_eig": np.nan,
                        "fixed_point_norm": np.nan,
                        "fixed_point": "",
                        "condition": err.condition,
                        "note": "singular C",
                    }
                )
                continue
            norm = np.nan
            if result.fixed_point is None:
                note = (note + " no fixed point").strip()
            else:
                norm = float(np.linalg.norm(result.fixed_point))
            rows.append(
                {
                    "algorithm": algorithm.value,
                    "policy_mode": mode,
                    "min_sym_eig": result.min_sym_eig,
                    "fixed_point_norm": norm,
                    "fixed_point": _format_vector(result.fixed_point),
                    "condition": result.condition,
                    "note": note,
                }
            )
    return pd.DataFrame(rows, columns=ANALYSIS_COLUMNS)


def format_table(table: pd.DataFrame) -> str:
    return table.to_string(index=False, float_format=lambda x: "%.10g" % x)


# -----------------------------------------------------------------------------
# Persistence.
# -----------------------------------------------------------------------------


def summaries_frame(summaries: typing.Sequence[CurveSummary]) -> pd.DataFrame:
    if not summaries:
        raise ConfigError("No summaries to write")
    frames = [
        pd.DataFrame(
            {
                "algorithm": summary.algorithm,
                "index": summary.index,
                "mean": summary.mean,
                "std": summary.std,
                "n_runs": summary.n_runs,
            }
        )
        for summary in summaries
    ]
    return pd.concat(frames, ignore_index=True)[CSV_COLUMNS]


def _write_frame(frame: pd.DataFrame, path):
    path = os.fspath(path)
    try:
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        frame.to_csv(path, index=False, lineterminator="\n", encoding="utf-8")
    except OSError as err:
        raise OSError("Cannot write %s: %s" % (path, err)) from err


def write_table(table: pd.DataFrame, path):
    _write_frame(table, path)


def write_csv(summaries: typing.Sequence[CurveSummary], path):
    """
    Columns ``algorithm,index,mean,std,n_runs``, one row per curve point.
    """
    _write_frame(summaries_frame(summaries), path)


def read_csv(path) -> typing.List[CurveSummary]:
    frame = pd.read_csv(
        os.fspath(path),
        float_precision="round_trip",
        dtype={"algorithm": str},
    )
    missing = set(CSV_COLUMNS) - set(frame.columns)
    if missing:
        raise ConfigError(
            "%s is missing columns: %s" % (path, ", ".join(sorted(missing)))
        )
    summaries = []
    for algorithm, group in frame.groupby("algorithm", sort=False):
        group = group.sort_values("index")
        summaries.append(
            CurveSummary(
                algorithm=algorithm,
                mean=group["mean"].to_numpy(dtype=float),
                std=group["std"].to_numpy(dtype=float),
                n_runs=int(group["n_runs"].iloc[0]),
            )
        )
    return summaries


def emit_plot_data(
    summaries: typing.Sequence[CurveSummary], directory, metric: str = ""
) -> typing.List[str]:
    """
    One ``<algorithm>.csv`` (``index,mean,std``) per curve plus a
    ``manifest.json`` listing them. Returns the written paths.
    """
    if not summaries:
        raise ConfigError("No summaries to write")
    directory = os.fspath(directory)
    written = []
    manifest = {"metric": metric, "series": []}
    for summary in summaries:
        name = "%s.csv" % summary.algorithm
        path = os.path.join(directory, name)
        _write_frame(
            pd.DataFrame(
                {
                    "index": summary.index,
                    "mean": summary.mean,
                    "std": summary.std,
                }
            ),
            path,
        )
        written.append(path)
        manifest["series"].append(
            {
                "algorithm": summary.algorithm,
                "file": name,
                "n_runs": summary.n_runs,
                "length": len(summary.mean),
            }
        )
    manifest_path = os.path.join(directory, "manifest.json")
    try:
        with open(manifest_path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(manifest, fh, indent=2)
            fh.write("\n")
    except OSError as err:
        raise OSError("Cannot write %s: %s" % (manifest_path, err)) from err
    written.append(manifest_path)
    return written


def plot_curves(
    summaries: typing.Sequence[CurveSummary], path, ylabel: str = ""
):
    """
    Render mean curves with one-std bands to a PNG. Needs the ``plot``
    extra (matplotlib).
    """
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError as err:
        raise ConfigError(
            "Plotting needs matplotlib: pip install 'vmtd[plot]'"
        ) from err
    fig, ax = plt.subplots(figsize=(6, 4))
    for summary in summaries:
        ax.plot(summary.index, summary.mean, label=summary.algorithm)
        ax.fill_between(
            summary.index,
            summary.mean - summary.std,
            summary.mean + summary.std,
            alpha=0.2,
        )
    ax.set_xlabel("step")
    ax.set_ylabel(ylabel)
    ax.legend()
    fig.tight_layout()
    try:
        fig.savefig(os.fspath(path))
    finally:
        plt.close(fig)
