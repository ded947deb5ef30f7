"""Reference implementations used only by the tests.

Each takes a different route from the package code: coordinate descent
instead of the LARS homotopy, explicit loops instead of vectorized graph
construction, exact rational arithmetic for thresholds.
"""

from fractions import Fraction
from itertools import combinations
import math

import numpy as np


def lasso_cd(X, y, lam, tol=1e-13, max_sweeps=200_000):
    """Coordinate descent for 1/2 ||y - X a||^2 + lam ||a||_1."""
    X = np.asarray(X, float)
    y = np.asarray(y, float)
    n, k = X.shape
    a = np.zeros(k)
    r = y.copy()
    norms = (X ** 2).sum(axis=0)
    for _ in range(max_sweeps):
        biggest = 0.0
        for j in range(k):
            if norms[j] == 0:
                continue
            old = a[j]
            rho = X[:, j] @ r + norms[j] * old
            new = math.copysign(max(abs(rho) - lam, 0.0), rho) / norms[j]
            if new != old:
                r -= X[:, j] * (new - old)
                a[j] = new
                biggest = max(biggest, abs(new - old))
        if biggest < tol:
            break
    return a


def knn_graph_loops(X, p, weighting="binary", sigma=None):
    """Either-neighbour p-NN graph built with plain loops."""
    X = np.asarray(X, float)
    M = len(X)
    dist = [[float(((X[i] - X[j]) ** 2).sum()) for j in range(M)] for i in range(M)]
    near = []
    for i in range(M):
        others = sorted((dist[i][j], j) for j in range(M) if j != i)
        near.append({j for _, j in others[:p]})
    W = np.zeros((M, M))
    edges = [(i, j) for i in range(M) for j in range(M) if i != j and (j in near[i] or i in near[j])]
    if weighting == "heat_kernel" and sigma is None:
        sigma = sum(dist[i][j] for i, j in edges) / len(edges)
    for i, j in edges:
        if weighting == "binary":
            W[i, j] = 1.0
        elif weighting == "heat_kernel":
            W[i, j] = math.exp(-dist[i][j] / sigma)
        else:
            W[i, j] = max(float(X[i] @ X[j]), 0.0)
    return W


def required_count_exact(tau, d):
    """Smallest integer k with k >= tau * d, using the decimal value of tau."""
    need = Fraction(repr(float(tau))) * d
    return math.ceil(need)


def in_interval_count(t, lower, upper):
    return sum(1 for v, lo, hi in zip(t, lower, upper) if lo <= v <= hi)


def enumerate_errors(genuine_counts, forgery_counts, d, taus):
    """FAR/FRR by enumerating every (attempt, threshold) decision."""
    far, frr = [], []
    for tau in taus:
        need = required_count_exact(tau, d)
        fa = sum(1 for c in forgery_counts if c >= need)
        fr = sum(1 for c in genuine_counts if c < need)
        far.append(Fraction(fa, len(forgery_counts)))
        frr.append(Fraction(fr, len(genuine_counts)))
    return far, frr


def eer_by_hand(far, frr):
    """Crossing of the piecewise-linear FAR and FRR, else the closest-point midpoint."""
    for i in range(1, len(far)):
        a0, a1 = far[i - 1] - frr[i - 1], far[i] - frr[i]
        if a0 >= 0 >= a1:
            if a0 == a1:
                return far[i]
            t = a0 / (a0 - a1)
            return far[i - 1] + t * (far[i] - far[i - 1])
    gaps = [abs(a - r) for a, r in zip(far, frr)]
    i = gaps.index(min(gaps))
    return (far[i] + frr[i]) / 2


def best_two_partition(X):
    """Exhaustive minimum within-cluster sum of squares over all 2-partitions."""
    X = np.asarray(X, float)
    M = len(X)
    best, labels = math.inf, None
    for size in range(1, M // 2 + 1):
        for group in combinations(range(M), size):
            mask = np.zeros(M, bool)
            mask[list(group)] = True
            cost = sum(((X[m] - X[m].mean(axis=0)) ** 2).sum() for m in (mask, ~mask))
            if cost < best - 1e-12:
                best, labels = cost, mask.astype(int)
    return labels, best


def population_interval(values, alpha):
    """mean -/+ alpha * population std, computed with Fractions then rounded."""
    vals = [Fraction(repr(float(v))) for v in values]
    mean = sum(vals) / len(vals)
    var = sum((v - mean) ** 2 for v in vals) / len(vals)
    half = alpha * math.sqrt(var)
    return float(mean) - half, float(mean) + half


def path_graph_spectrum(M):
    """Generalized eigenvalues of L y = lam D y for the unweighted path P_M.

    Equal to the normalized-Laplacian spectrum ``1 - cos(pi k / (M - 1))``.
    """
    return np.array([1.0 - math.cos(math.pi * k / (M - 1)) for k in range(M)])
