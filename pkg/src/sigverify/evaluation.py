"""FAR/FRR threshold sweeps, equal error rate and the multi-trial protocols."""

from __future__ import annotations

import csv
import dataclasses
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .dataset import Dataset, Protocol, TrialSplit, make_trial_split
from .errors import ConfigError, ContractError, EvaluationError
from .spectral_select import SelectionParams
from .symbolic_model import (EnrollmentParams, ModelStore, UserModel, best_match,
                             enroll_user, required_count)


def default_tau_grid():
    """0.1, 0.15, ..., 0.9."""
    return np.round(np.linspace(0.1, 0.9, 17), 10)


@dataclass(frozen=True, eq=False)
class ErrorCurve:
    """FAR and FRR at every threshold of an ascending grid.

    Raw error counts are kept alongside the rates so that curves can be
    compared exactly.
    """

    taus: np.ndarray
    far: np.ndarray
    frr: np.ndarray
    false_accepts: np.ndarray
    false_rejects: np.ndarray
    n_forgery: int
    n_genuine: int

    @property
    def points(self):
        return [(float(t), float(a), float(r)) for t, a, r in zip(self.taus, self.far, self.frr)]

    def __len__(self):
        return len(self.taus)


def _check_grid(tau_grid):
    taus = np.asarray(tau_grid, dtype=float)
    if taus.ndim != 1 or taus.size == 0:
        raise ContractError("tau grid must be a non-empty 1-D sequence")
    if np.any(np.diff(taus) <= 0):
        raise ContractError("tau grid must be strictly ascending")
    if taus[0] < 0 or taus[-1] > 1:
        raise ContractError("tau grid must lie in [0, 1]")
    return taus


def _model_for(models, user_id) -> UserModel:
    try:
        return models[user_id]
    except KeyError:
        raise EvaluationError(f"no model for user {user_id!r}") from None


def score_split(models, split: TrialSplit):
    """Acceptance counts of every test attempt against the claimed user's model.

    Returns two lists of ``(acceptance_count, d)`` pairs: genuine attempts and
    forgery attempts.
    """
    genuine, forgery = [], []
    for user in split.test_genuine:
        model = _model_for(models, user)
        for s in split.test_genuine[user]:
            genuine.append((best_match(model, s.features)[0], model.d))
        for s in split.test_forgery.get(user, ()):
            forgery.append((best_match(model, s.features)[0], model.d))
    return genuine, forgery


def curve_from_scores(genuine, forgery, tau_grid) -> ErrorCurve:
    taus = _check_grid(tau_grid)
    if not genuine or not forgery:
        raise EvaluationError(
            f"need genuine and forgery attempts, got {len(genuine)} and {len(forgery)}")
    fa = np.zeros(len(taus), dtype=int)
    fr = np.zeros(len(taus), dtype=int)
    for k, tau in enumerate(taus):
        fr[k] = sum(ac < required_count(tau, d) for ac, d in genuine)
        fa[k] = sum(ac >= required_count(tau, d) for ac, d in forgery)
    return ErrorCurve(taus, fa / len(forgery), fr / len(genuine), fa, fr,
                      len(forgery), len(genuine))


def sweep_thresholds(models, split: TrialSplit, tau_grid=None) -> ErrorCurve:
    """FAR/FRR of a split over ``tau_grid``, pooled across all users.

    Genuine tests are verified against their own user's model and forgeries
    against the model of the user they claim to be.
    """
    if tau_grid is None:
        tau_grid = default_tau_grid()
    genuine, forgery = score_split(models, split)
    return curve_from_scores(genuine, forgery, tau_grid)


def compute_eer(curve) -> float:
    """Equal error rate of a monotone FAR/FRR curve.

    Linear interpolation at the first grid segment where FAR - FRR changes
    sign; when the rates never cross on the grid, the mean of FAR and FRR at
    the point where they are closest.
    """
    far = np.asarray(curve.far if hasattr(curve, "far") else curve[0], dtype=float)
    frr = np.asarray(curve.frr if hasattr(curve, "frr") else curve[1], dtype=float)
    if far.size == 0 or far.shape != frr.shape:
        raise ContractError("curve must hold matching, non-empty FAR and FRR arrays")
    diff = far - frr
    crossing = np.flatnonzero(diff <= 0)
    if crossing.size and diff[0] >= 0:
        i = int(crossing[0])
        if diff[i] == 0 or i == 0:
            return float((far[i] + frr[i]) / 2)
        t = diff[i - 1] / (diff[i - 1] - diff[i])
        return float(far[i - 1] + t * (far[i] - far[i - 1]))
    i = int(np.argmin(np.abs(diff)))
    return float((far[i] + frr[i]) / 2)


# ---------------------------------------------------------------------------
# Protocol runs


@dataclass(frozen=True)
class EvaluationConfig:
    """Settings of :func:`run_protocol`.

    ``d=None`` uses the protocol's default feature count (60 for the
    5-sample protocols, 50 for the 20-sample ones). With
    ``share_training=True`` the Skilled and Random protocols of equal training
    size draw the same training subsets in a given trial.
    """

    n_trials: int = 20
    d: Optional[int] = None
    p: int = 5
    weighting: str = "heat_kernel"
    heat_sigma: Optional[float] = None
    n_eigenvectors: int = 5
    n_clusters: Optional[int] = None
    m: float = 2.0
    alpha: float = 2.0
    tau_grid: tuple = tuple(default_tau_grid().tolist())
    master_seed: int = 0
    share_training: bool = False
    jobs: int = 1

    def feature_count(self, protocol: Protocol) -> int:
        return self.d if self.d is not None else protocol.default_d

    def enrollment(self, protocol: Protocol, seed: int = 0) -> EnrollmentParams:
        sel = SelectionParams(self.feature_count(protocol), self.p, self.weighting,
                              self.heat_sigma, self.n_eigenvectors)
        return EnrollmentParams(sel, self.n_clusters, self.m, self.alpha, seed=seed)

    def echo(self) -> dict:
        out = dataclasses.asdict(self)
        out.pop("jobs")
        out["tau_grid"] = [float(t) for t in self.tau_grid]
        return out


@dataclass(frozen=True, eq=False)
class ProtocolReport:
    protocol: Protocol
    trial_eers: tuple
    trial_seeds: tuple
    curves: tuple
    params: dict = field(default_factory=dict)

    @property
    def mean_eer(self) -> float:
        return float(np.mean(self.trial_eers))

    def mean_curve(self):
        """Trial-averaged ``(taus, far, frr)``."""
        taus = self.curves[0].taus
        far = np.mean([c.far for c in self.curves], axis=0)
        frr = np.mean([c.frr for c in self.curves], axis=0)
        return taus, far, frr

    def to_dict(self) -> dict:
        return {
            "protocol": self.protocol.value,
            "mean_eer": self.mean_eer,
            "trial_eers": [float(e) for e in self.trial_eers],
            "trial_seeds": [int(s) for s in self.trial_seeds],
            "params": self.params,
            "curves": [
                {"trial": i, "tau": c.taus.tolist(), "far": c.far.tolist(), "frr": c.frr.tolist(),
                 "n_genuine": c.n_genuine, "n_forgery": c.n_forgery}
                for i, c in enumerate(self.curves)
            ],
        }


def _derive_seed(*key) -> int:
    ss = np.random.SeedSequence(entropy=key[0], spawn_key=tuple(int(k) for k in key[1:]))
    return int(ss.generate_state(1, np.uint32)[0])


def trial_seed(master_seed: int, protocol: Protocol, trial: int, share_training=False) -> int:
    protocol = Protocol.parse(protocol)
    stream = protocol.train_count if share_training else 100 + list(Protocol).index(protocol)
    return _derive_seed(master_seed, stream, trial)


def enroll_split(split: TrialSplit, params: EnrollmentParams) -> ModelStore:
    """Enroll every user of ``split`` from its training samples.

    The clustering seed of user ``i`` is derived from ``(params.seed, i)``.
    """
    store = ModelStore()
    for i, user in enumerate(split.train):
        user_params = dataclasses.replace(params, seed=_derive_seed(params.seed, i))
        store.add(enroll_user(user, split.train[user], user_params))
    return store


def _run_trial(dataset, protocol, config, trial):
    seed = trial_seed(config.master_seed, protocol, trial, config.share_training)
    split = make_trial_split(dataset, protocol, seed)
    models = enroll_split(split, config.enrollment(protocol, seed))
    curve = sweep_thresholds(models, split, config.tau_grid)
    return seed, curve, compute_eer(curve)


def run_protocol(dataset: Dataset, protocol, config: EvaluationConfig = EvaluationConfig()
                 ) -> ProtocolReport:
    """Repeat split, enrollment and threshold sweep ``config.n_trials`` times.

    Fully determined by ``config.master_seed``; ``config.jobs > 1`` runs trials
    in worker processes without changing the result.
    """
    protocol = Protocol.parse(protocol)
    if config.n_trials < 1:
        raise ConfigError("n_trials must be >= 1")
    d = config.feature_count(protocol)
    if not 1 <= d <= dataset.feature_count:
        raise ConfigError(f"d={d} must lie in [1, K={dataset.feature_count}]")
    _check_grid(config.tau_grid)

    trials = range(config.n_trials)
    if config.jobs > 1 and config.n_trials > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            results = list(pool.map(_run_trial, [dataset] * len(trials),
                                    [protocol] * len(trials), [config] * len(trials), trials))
    else:
        results = [_run_trial(dataset, protocol, config, t) for t in trials]

    params = config.echo()
    params["d"] = d
    return ProtocolReport(protocol,
                          tuple(r[2] for r in results),
                          tuple(r[0] for r in results),
                          tuple(r[1] for r in results),
                          params)


def sweep_feature_counts(dataset: Dataset, protocol, d_values: Sequence[int],
                         config: EvaluationConfig = EvaluationConfig()):
    """Mean EER of ``protocol`` for every feature count in ``d_values``.

    Returns a list of ``(d, mean_eer)`` rows in the order of ``d_values``.
    """
    d_values = [int(d) for d in d_values]
    if not d_values:
        raise ConfigError("d_values is empty")
    if max(d_values) > dataset.feature_count or min(d_values) < 1:
        raise ConfigError(f"feature counts must lie in [1, K={dataset.feature_count}]")
    rows = []
    for d in d_values:
        report = run_protocol(dataset, protocol, dataclasses.replace(config, d=d))
        rows.append((d, report.mean_eer))
    return rows


# ---------------------------------------------------------------------------
# Export


def report_json(report: ProtocolReport) -> str:
    return json.dumps(report.to_dict(), indent=2, allow_nan=False) + "\n"


def write_report(report: ProtocolReport, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(report_json(report))


def write_curve_csv(report: ProtocolReport, path) -> None:
    """Trial-averaged curve, one ``tau,far,frr`` row per threshold."""
    taus, far, frr = report.mean_curve()
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["tau", "far", "frr"])
        for row in zip(taus, far, frr):
            w.writerow([repr(float(v)) for v in row])


def write_sweep_csv(rows, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["d", "mean_eer"])
        for d, eer in rows:
            w.writerow([int(d), repr(float(eer))])
