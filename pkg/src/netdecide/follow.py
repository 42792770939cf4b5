"""Follow-the-target variant: anchor relay instead of majority voting.

One designated target agent's adaptation output is relayed hop by hop
through the network. Direct neighbors of the target copy its current
output; everyone else latches onto the first informed neighbor it sees and
keeps refreshing from that source's previous-round anchor, so an agent at
relay depth d holds the target's output from d-1 rounds ago. The relayed
anchor replaces local labeling: weights follow the fresh route when a
neighbor's adaptation output is near one's own anchor.

Source bookkeeping uses 1-based agent ids with 0 meaning "no source yet".
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .diffusion import (ClusterMatrices, adapt, aggregate, believed_neighborhoods,
                        check_divergence, combination_weights, update_cluster_matrices)
from .decision import DesiredMatrices, update_estimate, verify_round, InvariantViolation
from .labeling import agreement_vector
from .metrics import evaluate_success, msd_observed as observed_msd
from .network import (bfs_depths, component_count, pairwise_close,
                      random_assignment, squared_distances)
from .records import RunRecord


@dataclass(eq=False)
class AnchorState:
    """Relayed anchor values and where they come from.

    anchors : ndarray, shape (N, M)
        Each agent's current copy of the target's adaptation output
        (zeros until reached).
    sources : ndarray of int, shape (N,)
        1-based id of the neighbor each agent relays from; 0 while
        uninformed. The target and its direct neighbors point at the
        target itself.
    """

    anchors: np.ndarray
    sources: np.ndarray

    @classmethod
    def initial(cls, n_agents, dim):
        return cls(anchors=np.zeros((n_agents, dim)),
                   sources=np.zeros(n_agents, dtype=int))


def spread_anchor(state, psi, adjacency, target):
    """Advance the relay by one synchronous round.

    Direct neighbors of ``target`` (itself included) copy its current
    adaptation output. An uninformed agent adopts the previous-round
    anchor of its lowest-indexed informed neighbor and records that
    neighbor as its source; an informed agent refreshes from its recorded
    source's previous-round anchor whenever that source is still a
    neighbor, and otherwise keeps its stale copy.
    """
    n = adjacency.shape[0]
    anchors = state.anchors.copy()
    sources = state.sources.copy()

    direct = adjacency[:, target]
    informed_prev = state.sources > 0

    # uninformed agents scan neighbors for anyone informed last round
    candidates = adjacency & informed_prev[:, None]
    has_candidate = candidates.any(axis=0)
    first_candidate = candidates.argmax(axis=0)
    latch = ~direct & ~informed_prev & has_candidate
    anchors[latch] = state.anchors[first_candidate[latch]]
    sources[latch] = first_candidate[latch] + 1

    # informed agents refresh from their recorded source while it stays nearby
    refresh = ~direct & informed_prev
    src = state.sources - 1
    still_linked = np.zeros(n, dtype=bool)
    still_linked[refresh] = adjacency[src[refresh], np.flatnonzero(refresh)]
    refresh &= still_linked
    anchors[refresh] = state.anchors[src[refresh]]

    # a direct link to the target dominates everything
    anchors[direct] = psi[target]
    sources[direct] = target + 1
    return AnchorState(anchors=anchors, sources=sources)


def follow_matrices(state, psi, adjacency, threshold):
    """Split weight matrices driven by the relay instead of labels.

    Neighbors are linked when both ends are informed; uninformed agents
    keep a self-preserving link so their column stays stochastic. A linked
    neighbor's weight rides the fresh route when its adaptation output is
    within ``threshold`` (squared norm) of the agent's anchor.
    """
    informed = state.sources > 0
    linked = adjacency & informed[:, None] & informed[None, :]
    np.fill_diagonal(linked, True)
    weights = combination_weights(linked)
    refresh = squared_distances(psi, state.anchors) <= threshold
    fresh = np.where(refresh, weights, 0.0)
    return DesiredMatrices(linked=linked, weights=weights, fresh=fresh,
                           hold=weights - fresh)


def run_follow(config, topology, models, noise, streams, *, check_invariants=False):
    """Run the follow-the-target loop and return its :class:`RunRecord`.

    The target agent is ``config.target_agent`` (1-based). Success demands
    network-wide agreement on the target's observed model.
    """
    started = time.perf_counter()
    n = topology.n_agents
    n_models = models.n_models
    n_iters = config.max_iters
    target = config.target_agent - 1
    assignment = models.assignment.copy()
    observed = models.models[assignment]
    adjacency = topology.adjacency
    degrees = topology.degrees
    bound = 1e3 * max(np.linalg.norm(models.models, axis=1).max(), 1.0)
    reassign_at = set(config.reassign_at)
    depths = bfs_depths(adjacency, target)

    psi = np.zeros((n, models.dim))
    phi = np.zeros((n, models.dim))
    cluster = ClusterMatrices.initial(n)
    anchor = AnchorState.initial(n, models.dim)
    w_prev = None

    msd_observed = np.full((n_iters, n_models), np.nan)
    msd_desired = np.zeros(n_iters)
    agreed = np.zeros(n_iters, dtype=bool)
    n_desired = np.zeros(n_iters, dtype=int)
    coverage = np.zeros(n_iters, dtype=int)
    p = np.zeros(n)

    for i in range(1, n_iters + 1):
        t = i - 1
        if i in reassign_at:
            assignment = random_assignment(n, n_models, streams.reassign)
            observed = models.models[assignment]

        d, u = streams.data.round(i, observed)
        psi = adapt(psi, u, d, config.step_size)
        check_divergence(psi, bound)
        if i == 1:
            w_prev = psi.copy()

        cluster = update_cluster_matrices(cluster, psi, phi, adjacency,
                                          config.alpha, config.smoothing)
        support = believed_neighborhoods(cluster.beliefs) & adjacency
        np.fill_diagonal(support, True)
        combination = combination_weights(support)
        phi = aggregate(combination, psi)

        anchor = spread_anchor(anchor, psi, adjacency, target)
        coverage[t] = int((anchor.sources > 0).sum())

        close = pairwise_close(w_prev, config.beta)
        p = agreement_vector(close, adjacency, degrees)
        agreed[t] = bool((p == 1.0).all())
        n_desired[t] = component_count(close)

        matrices = follow_matrices(anchor, psi, adjacency, config.beta)
        w = update_estimate(phi, w_prev, matrices)

        msd_observed[t] = observed_msd(phi, models.models, assignment)
        msd_desired[t] = squared_distances(w, models.models[[assignment[target]]]).mean()

        if check_invariants:
            verify_round(combination=combination, support=support,
                         cluster=cluster, matrices=matrices, close=close,
                         adjacency=adjacency, phi=phi, psi=psi)
            ball = np.zeros(n, dtype=bool)
            ball[(depths >= 0) & (depths <= i)] = True
            if not np.array_equal(anchor.sources > 0, ball):
                raise InvariantViolation(
                    f"informed set at round {i} is not the {i}-hop ball around the target")

        w_prev = w

    record = RunRecord(
        mode="follow",
        n_iters=n_iters,
        msd_observed=msd_observed,
        msd_desired=msd_desired,
        all_agreed=agreed,
        n_desired_models=n_desired,
        source_coverage=coverage,
        models=models.models.copy(),
        assignment=assignment,
        final_w=w_prev.copy(),
        final_agreement=p.copy(),
        switch_adopt=np.zeros(n, dtype=int),
        switch_random=np.zeros(n, dtype=int),
        success=False,
        final_model=None,
        target_agent=target,
        threshold=config.beta,
        t_hold=config.t_hold,
        trajectory=None,
        wall_time=time.perf_counter() - started,
    )
    record.success, record.final_model = evaluate_success(record)
    return record
