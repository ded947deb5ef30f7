"""Interval-valued reference signatures, enrollment and verification.

Each fuzzy cluster of a user's training signatures is summarised, feature by
feature, by the interval ``[mean - alpha * std, mean + alpha * std]``. A test
signature is scored by how many of its selected features fall inside the
intervals of the best-matching cluster.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import (ConfigError, ContractError, EmptyClusterError, EnrollmentError,
                     UnknownUserError)
from .fuzzy_cluster import fuzzy_c_means, harden
from .spectral_select import SelectionParams, select_user_features, standardize


@dataclass(frozen=True, eq=False)
class ReferenceInterval:
    """Interval-valued reference signature of one cluster.

    ``lower`` and ``upper`` have one entry per selected feature.
    """

    lower: np.ndarray
    upper: np.ndarray
    cluster_id: int = 0
    member_count: int = 1

    def __post_init__(self):
        lo = np.array(self.lower, dtype=float)
        hi = np.array(self.upper, dtype=float)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ContractError("interval bounds must be 1-D vectors of equal length")
        if np.any(lo > hi):
            raise ContractError("interval lower bound exceeds upper bound")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    def __len__(self):
        return len(self.lower)

    @property
    def midpoint(self):
        return (self.lower + self.upper) / 2.0


@dataclass(frozen=True, eq=False)
class UserModel:
    """Everything stored in the knowledgebase for one enrolled user.

    Intervals live in the user's normalized feature space: a raw feature
    ``x`` is compared as ``(x - mean) / scale`` on ``selected_indices``.
    """

    user_id: str
    selected_indices: np.ndarray
    mean: np.ndarray
    scale: np.ndarray
    alpha: float
    references: tuple
    tau: float = 0.5

    def __post_init__(self):
        idx = np.array(self.selected_indices, dtype=int)
        idx.setflags(write=False)
        object.__setattr__(self, "selected_indices", idx)
        object.__setattr__(self, "references", tuple(self.references))
        for name in ("mean", "scale"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not self.references:
            raise ContractError(f"model {self.user_id!r} has no reference signatures")
        for ref in self.references:
            if len(ref) != len(idx):
                raise ContractError(
                    f"reference {ref.cluster_id} has {len(ref)} intervals, "
                    f"expected {len(idx)}")

    @property
    def d(self) -> int:
        return len(self.selected_indices)

    @property
    def feature_count(self) -> int:
        return len(self.mean)

    def project(self, features) -> np.ndarray:
        """Normalize a raw K-feature vector and keep the selected features."""
        x = np.asarray(features, dtype=float)
        if x.shape != (self.feature_count,):
            raise ContractError(
                f"test signature has {x.size} features, model expects {self.feature_count}")
        idx = self.selected_indices
        return (x[idx] - self.mean[idx]) / self.scale[idx]


@dataclass(frozen=True)
class VerificationResult:
    acceptance_count: int
    best_cluster: int
    per_cluster_counts: tuple
    accepted: bool
    tau_used: float
    d: int


@dataclass(frozen=True)
class EnrollmentParams:
    """Pipeline parameters for :func:`enroll_user`.

    ``n_clusters=None`` picks 3 clusters for 15 or more training samples and
    1 otherwise; the count is never allowed to exceed the sample count.
    """

    selection: SelectionParams
    n_clusters: Optional[int] = None
    m: float = 2.0
    alpha: float = 2.0
    tau: float = 0.5
    seed: int = 0
    tol: float = 1e-6
    max_iter: int = 300
    widen: float = 0.0

    def clusters_for(self, n_train: int) -> int:
        c = self.n_clusters if self.n_clusters is not None else (3 if n_train >= 15 else 1)
        return max(1, min(c, n_train))


def required_count(tau: float, d: int) -> int:
    """Smallest acceptance count that passes threshold ``tau`` with ``d`` features.

    ``ceil(tau * d)``, rounded first so that e.g. ``0.3 * 10`` yields 3.
    """
    if not 0.0 <= tau <= 1.0:
        raise ConfigError(f"tau={tau} must lie in [0, 1]")
    return int(math.ceil(round(tau * d, 9)))


def build_reference(cluster_samples, alpha, cluster_id=0, widen=0.0) -> ReferenceInterval:
    """Interval reference of one cluster: mean -/+ alpha * population std.

    ``widen`` adds a fixed half-width to every interval (off by default); it
    only matters for zero-variance features.
    """
    S = np.atleast_2d(np.asarray(cluster_samples, dtype=float))
    if S.shape[0] == 0 or S.size == 0:
        raise EmptyClusterError(f"cluster {cluster_id} has no members")
    if alpha < 0 or widen < 0:
        raise ConfigError("alpha and widen must be non-negative")
    mean = S.mean(axis=0)
    std = S.std(axis=0)
    half = alpha * std + widen
    return ReferenceInterval(mean - half, mean + half, int(cluster_id), int(S.shape[0]))


def acceptance_count(test_projected, reference: ReferenceInterval) -> int:
    """Number of features of ``test_projected`` lying inside (bounds included)."""
    t = np.asarray(test_projected, dtype=float)
    if t.shape != reference.lower.shape:
        raise ContractError(
            f"test vector has {t.size} features, reference has {len(reference)}")
    return int(np.count_nonzero((t >= reference.lower) & (t <= reference.upper)))


def enroll_user(user_id: str, train, params: EnrollmentParams) -> UserModel:
    """Build a user's model from genuine training samples.

    ``train`` is a sequence of :class:`~sigverify.dataset.SignatureSample` or
    an ``(n, K)`` array.
    """
    X = _as_matrix(train)
    n, K = X.shape
    C = params.clusters_for(n)
    if n < max(2, C):
        raise EnrollmentError(f"user {user_id!r}: {n} training samples are too few")
    if params.selection.d > K:
        raise ConfigError(f"d={params.selection.d} exceeds the {K} available features")

    Z, mean, scale = standardize(X)
    try:
        selection = select_user_features(Z, params.selection)
    except ConfigError as exc:
        raise EnrollmentError(f"user {user_id!r}: {exc}") from exc
    idx = selection.indices
    P = Z[:, idx]

    partition = fuzzy_c_means(P, C, m=params.m, tol=params.tol,
                              max_iter=params.max_iter, seed=params.seed)
    labels, _ = harden(partition)
    refs = [build_reference(P[labels == c], params.alpha, c, params.widen)
            for c in range(C) if np.any(labels == c)]
    return UserModel(user_id, idx, mean, scale, float(params.alpha), refs, float(params.tau))


def _as_matrix(train) -> np.ndarray:
    if isinstance(train, np.ndarray):
        X = np.asarray(train, dtype=float)
    else:
        X = np.vstack([getattr(s, "features", s) for s in train]).astype(float)
    if X.ndim != 2:
        raise ContractError("training data must be a 2-D matrix")
    return X


def best_match(model: UserModel, features) -> tuple[int, int, tuple]:
    """``(acceptance count, best cluster id, per-cluster counts)`` of a raw vector."""
    t = model.project(features)
    counts = tuple(acceptance_count(t, ref) for ref in model.references)
    best = int(np.argmax(counts))
    return counts[best], model.references[best].cluster_id, counts


def verify(test, model: UserModel, tau_override: Optional[float] = None) -> VerificationResult:
    """Accept or reject ``test`` as a genuine signature of ``model.user_id``.

    Accepted when the best per-cluster acceptance count reaches
    ``ceil(tau * d)``.
    """
    features = getattr(test, "features", test)
    tau = model.tau if tau_override is None else float(tau_override)
    need = required_count(tau, model.d)
    ac, cluster, counts = best_match(model, features)
    return VerificationResult(ac, cluster, counts, ac >= need, tau, model.d)


@dataclass
class ModelStore:
    """Models keyed by user id; raises :class:`UnknownUserError` on misses."""

    models: dict = field(default_factory=dict)

    def __getitem__(self, user_id):
        try:
            return self.models[user_id]
        except KeyError:
            raise UnknownUserError(f"no enrolled model for user {user_id!r}") from None

    def __contains__(self, user_id):
        return user_id in self.models

    def __iter__(self):
        return iter(self.models)

    def __len__(self):
        return len(self.models)

    def add(self, model: UserModel):
        self.models[model.user_id] = model

    @classmethod
    def of(cls, models: Sequence[UserModel]) -> "ModelStore":
        store = cls()
        for m in models:
            store.add(m)
        return store
