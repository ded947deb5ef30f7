"""Least angle regression with the lasso modification.

Traces the piecewise-linear solution path of

    min_a  1/2 * ||y - X a||^2 + lam * ||a||_1

from ``lam = max|X^T y|`` downwards. Each breakpoint of the path is recorded
together with its penalty, so callers can stop at a prescribed number of
active features.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import ConfigError, ContractError

_EPS = 1e-12


class LarsPath(NamedTuple):
    """Breakpoints of a lasso path.

    ``coefs[k]`` is the coefficient vector at penalty ``penalties[k]``;
    ``coefs[0]`` is all-zero. ``entered`` lists features in the order they
    joined the active set (a feature may appear again after a drop) and
    ``dropped`` lists ``(step, feature)`` pairs removed by the lasso rule.
    """

    penalties: np.ndarray
    coefs: np.ndarray
    entered: list
    dropped: list


def lars_path(X, y, max_active=None, tol=_EPS) -> LarsPath:
    """Compute the lasso path of ``(X, y)`` by least angle regression.

    Parameters
    ----------
    X : ndarray, shape (n_samples, n_features)
    y : ndarray, shape (n_samples,)
    max_active : int, optional
        Stop at the first breakpoint whose coefficient vector has this many
        nonzero entries. ``None`` follows the path to ``lam = 0`` or until no
        feature can enter.

    Columns with zero norm never enter the active set.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise ContractError(f"shape mismatch: X {X.shape}, y {y.shape}")
    n_features = X.shape[1]
    if max_active is not None and max_active <= 0:
        raise ConfigError("max_active must be positive")

    col_norm2 = np.einsum("ij,ij->j", X, X)
    scale = max(float(col_norm2.max(initial=0.0)), 1.0)
    eligible = col_norm2 > tol * scale
    gram = X.T @ X

    beta = np.zeros(n_features)
    corr = X.T @ y
    active: list[int] = []
    entered: list[int] = []
    dropped: list[tuple[int, int]] = []
    penalties = []
    coefs = []

    inactive_corr = np.where(eligible, np.abs(corr), -np.inf)
    lam = float(inactive_corr.max(initial=0.0)) if eligible.any() else 0.0
    penalties.append(lam)
    coefs.append(beta.copy())
    if lam <= tol:
        return LarsPath(np.array(penalties), np.array(coefs), entered, dropped)

    # ties at entry are broken by lowest index (argmax is first-occurrence)
    j = int(np.argmax(inactive_corr))
    active.append(j)
    entered.append(j)

    step = 0
    while True:
        step += 1
        idx = np.array(active)
        signs = np.sign(corr[idx])
        g_a = gram[np.ix_(idx, idx)]
        if np.linalg.cond(g_a) > 1e10:
            # the newest feature lies in the span of the others: rank exhausted
            break
        try:
            delta = np.linalg.solve(g_a, signs)
        except np.linalg.LinAlgError:
            break
        if not np.all(np.isfinite(delta)):
            break
        # rate at which each correlation decreases per unit decrease of lam
        a = gram[:, idx] @ delta

        gamma = lam  # reach lam = 0
        event, event_j = "end", None

        cand = eligible.copy()
        cand[idx] = False
        with np.errstate(divide="ignore", invalid="ignore"):
            g_pos = np.where(1.0 - a > _EPS, (lam - corr) / (1.0 - a), np.inf)
            g_neg = np.where(1.0 + a > _EPS, (lam + corr) / (1.0 + a), np.inf)
        g_join = np.minimum(np.where(g_pos > tol, g_pos, np.inf),
                            np.where(g_neg > tol, g_neg, np.inf))
        g_join[~cand] = np.inf
        if np.isfinite(g_join).any():
            k = int(np.argmin(g_join))
            if g_join[k] < gamma:
                gamma, event, event_j = float(g_join[k]), "join", k

        with np.errstate(divide="ignore", invalid="ignore"):
            g_drop = np.where(delta != 0.0, -beta[idx] / delta, np.inf)
        g_drop[g_drop <= tol] = np.inf
        if np.isfinite(g_drop).any():
            pos = int(np.argmin(g_drop))
            if g_drop[pos] < gamma:
                gamma, event, event_j = float(g_drop[pos]), "drop", int(idx[pos])

        beta[idx] += gamma * delta
        corr = corr - gamma * a
        lam -= gamma
        if event == "drop":
            beta[event_j] = 0.0
            active.remove(event_j)
            dropped.append((step, event_j))
        elif event == "end":
            lam = 0.0

        # active correlations equal +-lam exactly in exact arithmetic
        corr[idx] = np.sign(corr[idx]) * lam
        penalties.append(lam)
        coefs.append(beta.copy())

        if max_active is not None and np.count_nonzero(beta) >= max_active:
            break
        if event == "end" or lam <= tol:
            break
        if event == "join":
            active.append(event_j)
            entered.append(event_j)
        if not active:
            break

    return LarsPath(np.array(penalties), np.array(coefs), entered, dropped)


def lars_regression(X, y, d, return_penalty=False):
    """Sparse coefficients of ``y`` on the columns of ``X`` with ``d`` nonzeros.

    Follows the lasso path and returns the coefficient vector at the first
    breakpoint carrying ``d`` nonzero entries; if the path ends first (rank
    exhausted, or ``y`` fit exactly) the final breakpoint is returned.
    ``X`` is expected to have centred columns.

    With ``return_penalty=True`` also returns the penalty ``lam`` of that
    breakpoint; the coefficients then solve
    ``min 1/2 ||y - X a||^2 + lam ||a||_1``.
    """
    if d <= 0:
        raise ConfigError(f"d must be positive, got {d}")
    path = lars_path(X, y, max_active=d)
    coef = path.coefs[-1]
    if return_penalty:
        return coef, float(path.penalties[-1])
    return coef
