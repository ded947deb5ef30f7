"""Per-user unsupervised multi-cluster feature selection.

The pipeline for one user's training matrix ``X`` (samples x features):

1. p-nearest-neighbour affinity graph ``W``;
2. degree matrix ``D`` and Laplacian ``L = D - W``;
3. the generalized eigenvectors of ``L y = lam D y`` with the smallest
   nontrivial eigenvalues (a flat embedding of the samples);
4. one sparse regression of every eigenvector on the features, stopped at
   ``d`` nonzero coefficients;
5. each feature scored by its largest absolute coefficient, top ``d`` kept.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
import scipy.linalg
from scipy.spatial.distance import cdist

from .errors import ConfigError, ContractError, DegenerateGraphError
from .lars import lars_regression

WEIGHTINGS = ("binary", "heat_kernel", "dot_product")


class AffinityGraph(NamedTuple):
    W: np.ndarray
    p: int
    weighting: str
    heat_sigma: Optional[float]


class LaplacianPair(NamedTuple):
    D: np.ndarray
    L: np.ndarray


class SpectralEmbedding(NamedTuple):
    Y: np.ndarray
    eigenvalues: np.ndarray


@dataclass(frozen=True, eq=False)
class FeatureSelection:
    """Selected feature indices (best first) and the score of every feature."""

    indices: np.ndarray
    scores: np.ndarray

    def __len__(self):
        return len(self.indices)


@dataclass(frozen=True)
class SelectionParams:
    """Parameters of :func:`select_user_features`.

    ``p`` and ``n_eigenvectors`` are upper bounds: they are clamped to
    ``M - 1`` and ``M - 2`` for a training matrix with ``M`` rows.
    ``heat_sigma=None`` uses the mean squared distance over graph edges.
    """

    d: int
    p: int = 5
    weighting: str = "heat_kernel"
    heat_sigma: Optional[float] = None
    n_eigenvectors: int = 5


def knn_edges(X, p):
    """Boolean M x M matrix, ``E[i, j]`` true when j is among i's p nearest.

    Distance ties are broken by the lower sample index.
    """
    M = X.shape[0]
    dist = cdist(X, X, "sqeuclidean")
    np.fill_diagonal(dist, np.inf)
    order = np.argsort(dist, axis=1, kind="stable")
    E = np.zeros((M, M), dtype=bool)
    rows = np.repeat(np.arange(M), p)
    E[rows, order[:, :p].ravel()] = True
    return E, dist


def build_affinity_graph(X, p=5, weighting="heat_kernel", heat_sigma=None) -> AffinityGraph:
    """Symmetric p-NN affinity graph of the rows of ``X``.

    An edge joins i and j when either is among the other's ``p`` nearest
    Euclidean neighbours. Weights are 1 (``binary``),
    ``exp(-||xi - xj||^2 / heat_sigma)`` (``heat_kernel``) or ``max(<xi, xj>, 0)``
    (``dot_product``).
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ContractError("X must be a 2-D matrix")
    if not np.all(np.isfinite(X)):
        raise ContractError("X must be finite")
    M = X.shape[0]
    if weighting not in WEIGHTINGS:
        raise ConfigError(f"unknown weighting {weighting!r}; choose from {WEIGHTINGS}")
    if p < 1 or p >= M:
        raise ConfigError(f"neighbour count p={p} must lie in [1, M-1] with M={M}")

    E, dist = knn_edges(X, p)
    E = E | E.T
    if weighting == "binary":
        W = E.astype(float)
        sigma = None
    elif weighting == "heat_kernel":
        if heat_sigma is None:
            sigma = float(dist[E].mean())
            if sigma <= 0.0:
                sigma = 1.0  # every point coincides
        else:
            if heat_sigma <= 0:
                raise ConfigError("heat_sigma must be positive")
            sigma = float(heat_sigma)
        W = np.where(E, np.exp(-np.where(E, dist, 0.0) / sigma), 0.0)
    else:
        W = np.where(E, np.maximum(X @ X.T, 0.0), 0.0)
        sigma = None
    np.fill_diagonal(W, 0.0)
    return AffinityGraph(W, p, weighting, sigma)


def degree_and_laplacian(W) -> LaplacianPair:
    W = np.asarray(W, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ContractError("W must be square")
    if not np.allclose(W, W.T, rtol=0.0, atol=1e-12):
        raise ContractError("W must be symmetric")
    if np.any(W < 0):
        raise ContractError("W must be nonnegative")
    if np.any(np.diag(W) != 0):
        raise ContractError("W must have a zero diagonal")
    D = np.diag(W.sum(axis=1))
    return LaplacianPair(D, D - W)


def _fix_signs(Y):
    # largest-magnitude entry of every column made positive
    pivot = np.argmax(np.abs(Y), axis=0)
    signs = np.sign(Y[pivot, np.arange(Y.shape[1])])
    signs[signs == 0] = 1.0
    return Y * signs


def spectral_embedding(L, D, n_eigenvectors, zero_tol=1e-9) -> SpectralEmbedding:
    """Solve ``L y = lam D y`` and keep the smallest nontrivial eigenpairs.

    Exactly one trivial direction, the D-normalized constant vector, is
    removed. On a graph with several connected components the remaining
    zero-eigenvalue vectors are kept; they are D-orthogonal to the constant
    and piecewise constant over the components.

    Returns eigenvectors as the columns of ``Y`` (D-orthonormal) with their
    eigenvalues in ascending order.
    """
    L = np.asarray(L, dtype=float)
    D = np.asarray(D, dtype=float)
    M = L.shape[0]
    if n_eigenvectors < 1:
        raise ConfigError("n_eigenvectors must be >= 1")
    if n_eigenvectors >= M:
        raise ConfigError(f"n_eigenvectors={n_eigenvectors} must be < M={M}")
    deg = np.diag(D)
    if np.any(deg <= 0):
        bad = np.flatnonzero(deg <= 0).tolist()
        raise DegenerateGraphError(
            f"vertices {bad} are isolated (zero degree); increase the neighbour count p")

    vals, vecs = scipy.linalg.eigh(L, D)
    scale = max(float(np.abs(vals).max()), 1.0)
    n_zero = max(1, int(np.sum(vals <= zero_tol * scale)))
    vals[:n_zero] = 0.0

    const = np.ones(M) / np.sqrt(deg.sum())
    null = vecs[:, :n_zero]
    if n_zero > 1:
        # rotate the null space so its first direction is the constant vector
        q = null.T @ (deg * const)
        Q, _ = np.linalg.qr(q.reshape(-1, 1), mode="complete")
        null = null @ Q
    Y = np.hstack([null[:, 1:], vecs[:, n_zero:]])[:, :n_eigenvectors]
    lam = vals[1: 1 + n_eigenvectors]
    return SpectralEmbedding(_fix_signs(Y), lam.copy())


def mcfs_scores(coefficients) -> np.ndarray:
    """Score every feature by its largest absolute coefficient.

    ``coefficients`` holds one coefficient vector per eigenvector
    (shape ``(n_eigenvectors, n_features)``).
    """
    A = np.atleast_2d(np.asarray(coefficients, dtype=float))
    if A.size == 0:
        raise ContractError("coefficient set is empty")
    return np.abs(A).max(axis=0)


def rank_features(scores, d) -> np.ndarray:
    """Indices of the ``d`` best scores; equal scores go to the lower index."""
    scores = np.asarray(scores)
    order = np.lexsort((np.arange(len(scores)), -scores))
    return order[:d]


def standardize(X):
    """Z-score the columns of ``X``; returns ``(Z, mean, scale)``.

    Population standard deviation; zero-variance columns get scale 1 and
    therefore map to all-zero columns.
    """
    X = np.asarray(X, dtype=float)
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale = np.where(scale > 1e-12 * np.maximum(1.0, np.abs(mean)), scale, 1.0)
    return (X - mean) / scale, mean, scale


def select_user_features(X, params: SelectionParams) -> FeatureSelection:
    """Select ``params.d`` features for one user from genuine training data.

    ``X`` is standardized internally. Each eigenvector regression is capped at
    ``min(d, M - 1)`` nonzero coefficients, the most a centred M-row design
    supports; when ``d`` exceeds the number of features with a positive score
    the remainder is filled in ascending index order.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ContractError("X must be a 2-D matrix")
    M, K = X.shape
    d = params.d
    if not 1 <= d <= K:
        raise ConfigError(f"d={d} must lie in [1, K={K}]")
    if M < 2:
        raise ConfigError(f"feature selection needs at least 2 samples, got {M}")

    Z, _, _ = standardize(X)
    p = min(params.p, M - 1)
    n_vec = max(1, min(params.n_eigenvectors, M - 2))
    graph = build_affinity_graph(Z, p, params.weighting, params.heat_sigma)
    lap = degree_and_laplacian(graph.W)
    emb = spectral_embedding(lap.L, lap.D, n_vec)

    cap = min(d, M - 1, K)
    A = np.vstack([lars_regression(Z, emb.Y[:, i], cap) for i in range(emb.Y.shape[1])])
    scores = mcfs_scores(A)
    return FeatureSelection(rank_features(scores, d), scores)
