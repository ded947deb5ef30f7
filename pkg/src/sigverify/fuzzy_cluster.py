"""Fuzzy c-means clustering of one user's training signatures."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np

from .errors import ConfigError, ContractError


@dataclass(frozen=True, eq=False)
class FuzzyPartition:
    """Result of :func:`fuzzy_c_means`.

    Attributes
    ----------
    U : ndarray, shape (C, M)
        Memberships; every column sums to one.
    V : ndarray, shape (C, d)
        Cluster centroids.
    m : float
        Fuzzifier.
    objective_trace : ndarray
        ``J(U, V) = sum_ij u_ij^m ||x_j - v_i||^2`` after every iteration.
    n_iter : int
    converged : bool
        Whether the centroid shift fell below ``tol`` before ``max_iter``.
    """

    U: np.ndarray
    V: np.ndarray
    m: float
    objective_trace: np.ndarray
    n_iter: int
    converged: bool


class Hardening(NamedTuple):
    labels: np.ndarray
    empty: tuple


def random_memberships(n_clusters, n_samples, rng):
    """Random column-stochastic ``(n_clusters, n_samples)`` matrix."""
    U = rng.random((n_clusters, n_samples)) + 1e-3
    return U / U.sum(axis=0)


def update_centroids(X, U, m):
    W = U ** m
    return (W @ X) / W.sum(axis=1, keepdims=True)


def update_memberships(X, V, m):
    """Membership of every sample in every cluster given centroids ``V``.

    A sample sitting on a centroid gets membership 1 in that cluster (the
    lowest-index one if several centroids coincide) and 0 elsewhere.
    """
    d2 = ((X[None, :, :] - V[:, None, :]) ** 2).sum(axis=2)  # (C, M)
    C, M = d2.shape
    U = np.empty_like(d2)
    zero = d2 <= 0.0
    hit = zero.any(axis=0)
    if hit.any():
        U[:, hit] = 0.0
        U[np.argmax(zero[:, hit], axis=0), np.flatnonzero(hit)] = 1.0
    free = ~hit
    if free.any():
        # ratios against the closest centroid avoid overflow for tiny distances
        d = d2[:, free]
        r = (d / d.min(axis=0)) ** (-1.0 / (m - 1.0))
        U[:, free] = r / r.sum(axis=0)
    return U


def objective(X, U, V, m):
    d2 = ((X[None, :, :] - V[:, None, :]) ** 2).sum(axis=2)
    return float(((U ** m) * d2).sum())


def fuzzy_c_means(X, n_clusters, m=2.0, tol=1e-6, max_iter=300, seed=0,
                  init: Optional[np.ndarray] = None,
                  callback: Optional[Callable] = None) -> FuzzyPartition:
    """Cluster the rows of ``X`` into ``n_clusters`` fuzzy clusters.

    Alternates the centroid and membership updates starting from a random
    column-stochastic membership matrix drawn from ``seed`` (or ``init`` when
    given), until the largest centroid move is below ``tol``.
    ``callback(iteration, U, V)`` is invoked after every iteration.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ContractError("X must be a 2-D matrix")
    M = X.shape[0]
    if n_clusters <= 0:
        raise ConfigError("n_clusters must be positive")
    if n_clusters > M:
        raise ConfigError(f"n_clusters={n_clusters} exceeds the {M} samples")
    if m <= 1.0:
        raise ConfigError("fuzzifier m must be > 1")
    if max_iter < 1:
        raise ConfigError("max_iter must be >= 1")

    if init is None:
        U = random_memberships(n_clusters, M, np.random.default_rng(seed))
    else:
        U = np.array(init, dtype=float)
        if U.shape != (n_clusters, M):
            raise ContractError(f"init must have shape {(n_clusters, M)}")
        if np.any(U < 0) or not np.allclose(U.sum(axis=0), 1.0, atol=1e-9):
            raise ContractError("init must be column-stochastic")

    V = update_centroids(X, U, m)
    trace = []
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        U = update_memberships(X, V, m)
        V_new = update_centroids(X, U, m)
        shift = float(np.abs(V_new - V).max())
        V = V_new
        trace.append(objective(X, U, V, m))
        if callback is not None:
            callback(it, U, V)
        if shift < tol:
            converged = True
            break
    return FuzzyPartition(U, V, m, np.array(trace), it, converged)


def harden(partition: FuzzyPartition) -> Hardening:
    """Crisp cluster label per sample (argmax membership, lowest index on ties).

    Also reports the clusters that received no sample.
    """
    U = partition.U
    labels = np.argmax(U, axis=0)
    counts = np.bincount(labels, minlength=U.shape[0])
    return Hardening(labels, tuple(int(i) for i in np.flatnonzero(counts == 0)))
