"""Diffusion adaptation with adaptive cluster beliefs.

Every iteration each agent takes a least-mean-squares step on its own data
and then aggregates the intermediate estimates of the neighbors it currently
believes observe the same model. Beliefs come from a smoothed proximity
test between a neighbor's fresh estimate and the agent's previous
aggregate, so cooperation links form and dissolve as the estimates move.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import DivergenceError, squared_distances


def adapt(psi, u, d, step_size):
    """One least-mean-squares step for every agent.

    psi_new = psi + mu * u^T * (d - u . psi), row-wise over agents.

    Parameters
    ----------
    psi : ndarray, shape (N, M)
        Intermediate estimates before the step.
    u : ndarray, shape (N, M)
        Current regressor rows.
    d : ndarray, shape (N,)
        Current observations.
    step_size : float or ndarray
        Scalar or per-agent adaptation gains.

    Returns
    -------
    ndarray, shape (N, M)
    """
    err = d - (u * psi).sum(axis=1)
    gain = np.asarray(step_size, dtype=float)
    return psi + (gain * err)[:, None] * u


def check_divergence(psi, bound):
    """Abort with the offending agent when an estimate blows up."""
    norms = np.linalg.norm(psi, axis=1)
    if np.isfinite(norms).all() and (norms <= bound).all():
        return
    k = int(np.argmax(~np.isfinite(norms) | (norms > bound)))
    raise DivergenceError(
        f"agent {k + 1} diverged: |estimate| = {norms[k]:.3e} exceeds bound {bound:.3e}"
    )


@dataclass(eq=False)
class ClusterMatrices:
    """Belief state about which neighbors share one's model.

    raw : ndarray of bool, shape (N, N)
        Latest instantaneous proximity indicators; entry (l, k) says agent
        l's fresh estimate passed agent k's proximity test. Zero off the
        graph support.
    smoothed : ndarray, shape (N, N)
        Exponentially smoothed indicators in [0, 1].
    beliefs : ndarray of bool, shape (N, N)
        ``smoothed`` rounded to the nearest integer, ties at 0.5 rounding
        up. Entry (l, k) means k currently believes l observes its model.
    """

    raw: np.ndarray
    smoothed: np.ndarray
    beliefs: np.ndarray

    @classmethod
    def initial(cls, n_agents):
        """Before any data, each agent believes only in itself."""
        eye = np.eye(n_agents, dtype=bool)
        return cls(raw=eye.copy(), smoothed=np.eye(n_agents), beliefs=eye.copy())


def update_cluster_matrices(cm, psi, phi_prev, adjacency, alpha, smoothing):
    """Advance the belief state by one round.

    The instantaneous indicator for (l, k) is the test
    ||psi_l - phi_k_prev||^2 <= alpha restricted to l in k's neighborhood.
    The smoothed value moves toward the instantaneous one with gain
    ``smoothing``; a small gain means long memory, so a belief only forms
    or dissolves after the indicator holds steadily for on the order of
    1/smoothing rounds. That lag is what keeps transient proximity during
    the early adaptation phase from ever being believed.
    """
    d2 = squared_distances(psi, phi_prev)
    raw = (d2 <= alpha) & adjacency
    smoothed = (1.0 - smoothing) * cm.smoothed + smoothing * raw
    return ClusterMatrices(raw=raw, smoothed=smoothed, beliefs=smoothed >= 0.5)


def believed_neighborhoods(beliefs):
    """Column support for aggregation: believed neighbors plus always self."""
    support = beliefs.copy()
    np.fill_diagonal(support, True)
    return support


def combination_weights(support):
    """Uniform column-stochastic weights over each column's support.

    Entry (l, k) is the weight agent k puts on neighbor l. Every column
    must be nonempty (guaranteed when support includes the diagonal).
    """
    counts = support.sum(axis=0)
    if (counts == 0).any():
        raise ValueError("empty aggregation support column")
    return support.astype(float) / counts


def aggregate(weights, psi):
    """Aggregate per-agent estimates: row k is sum_l weights[l, k] psi_l."""
    return weights.T @ psi
