"""Monte Carlo harness: seeded trial construction and aggregation.

Seed discipline: the master seed feeds one SeedSequence whose spawned
children seed the trials in index order; each trial spawns five children
for topology, models, assignment, noise, and the simulation streams (the
last splits further into per-agent data, per-agent decision, and one
reassignment stream, see network.build_streams). Trials are therefore
independent of scheduling: serial and parallel execution produce
bit-identical aggregates, and summaries carry no wall-clock content.
"""

from __future__ import annotations

import json
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .config import ExperimentConfig
from .decision import run_decision
from .follow import run_follow
from .mobility import MotionDriver, MotionParams, rebuild_topology
from .network import (DivergenceError, assign_agents, build_streams,
                      corner_models, draw_noise_profile, generate_models,
                      generate_topology, network_to_json)
from .records import RunRecord

SUMMARY_SCHEMA = "netdecide.summary/1"


def trial_seeds(master_seed, n_trials):
    """The per-trial seed sequences for a master seed, in trial order."""
    return np.random.SeedSequence(master_seed).spawn(n_trials)


def _seed_state(ss):
    return ss.entropy, tuple(ss.spawn_key)


def _restore_seed(state):
    entropy, spawn_key = state
    return np.random.SeedSequence(entropy, spawn_key=spawn_key)


def run_single_trial(config, trial_seed, *, check_invariants=False,
                     trajectories=False, export_network=False):
    """Build one seeded world and run the configured mode on it.

    Returns ``(record, network_doc_or_None)``; a diverged trial comes back
    as a failure stub instead of raising.
    """
    topo_ss, model_ss, assign_ss, noise_ss, sim_ss = trial_seed.spawn(5)
    if config.mode == "mobile":
        # the swarm takes off from a patch around the box center; sources
        # sit at the corners when there are four of them, so the initial
        # flock is connected while the targets are maximally spread
        lo, hi = config.model_range
        center = 0.5 * (lo + hi)
        positions = np.random.default_rng(topo_ss).uniform(
            center - config.start_extent, center + config.start_extent,
            size=(config.n_agents, 2))
        topology = rebuild_topology(positions, config.comm_radius, config.max_degree)
    else:
        topology = generate_topology(config.n_agents, config.max_degree,
                                     config.radius, seed=topo_ss)
    if config.mode == "mobile" and config.n_models == 4:
        models = corner_models(config.model_range)
    else:
        models = generate_models(config.n_models, config.dim, config.model_range,
                                 seed=model_ss, min_separation_sq=4.0 * config.beta)
    models = assign_agents(models, topology, seed=assign_ss)
    noise = draw_noise_profile(config.n_agents, config.dim, seed=noise_ss,
                               sigma_v2_range=config.sigma_v2_range,
                               reg_power_range=config.reg_power_range)
    streams = build_streams(noise, config.max_iters, sim_ss)
    network_doc = network_to_json(topology, models) if export_network else None

    try:
        if config.mode == "decide":
            record = run_decision(config, topology, models, noise, streams,
                                  check_invariants=check_invariants)
        elif config.mode == "follow":
            record = run_follow(config, topology, models, noise, streams,
                                check_invariants=check_invariants)
        else:
            driver = MotionDriver(
                MotionParams(max_speed=config.max_speed,
                             goal_gain=config.goal_gain,
                             align_gain=config.align_gain,
                             repulse_gain=config.repulse_gain,
                             repulse_radius=config.repulse_radius,
                             comm_radius=config.comm_radius,
                             max_degree=config.max_degree),
                topology.positions, models.models,
                snapshot_iters=config.snapshot_iters if trajectories else (),
            )
            record = run_decision(config, topology, models, noise, streams,
                                  check_invariants=check_invariants,
                                  motion=driver)
    except DivergenceError:
        record = RunRecord.failed(
            config.mode, config.max_iters, models.models, models.assignment,
            config.beta, config.t_hold,
            target_agent=None if config.target_agent is None else config.target_agent - 1,
        )
    return record, network_doc


def _trial_worker(payload):
    config, seed_state, check_invariants, trajectories, export_network = payload
    return run_single_trial(config, _restore_seed(seed_state),
                            check_invariants=check_invariants,
                            trajectories=trajectories,
                            export_network=export_network)


@dataclass(eq=False)
class MonteCarloSummary:
    """Order-independent aggregate of one batch of trials.

    Curve aggregates are nan where no trial contributed at that
    iteration. ``records`` and ``networks`` are session-only extras and
    never serialized.
    """

    config: ExperimentConfig
    n_trials: int
    success_count: int
    diverged_count: int
    trial_success: list
    final_models: list
    mean_msd_observed: np.ndarray
    p10_msd_observed: np.ndarray
    p90_msd_observed: np.ndarray
    mean_msd_desired: np.ndarray
    p10_msd_desired: np.ndarray
    p90_msd_desired: np.ndarray
    desired_support: np.ndarray
    mean_switches_per_trial: float
    records: list | None = None
    networks: list | None = None

    @property
    def success_rate(self):
        return self.success_count / self.n_trials

    def to_json(self):
        def scrub(values):
            out = []
            for v in np.asarray(values, dtype=float).tolist():
                out.append(None if isinstance(v, float) and np.isnan(v) else v)
            return out

        doc = {
            "schema": SUMMARY_SCHEMA,
            "config": json.loads(self.config.to_json()),
            "n_trials": self.n_trials,
            "success_count": self.success_count,
            "success_rate": self.success_rate,
            "diverged_count": self.diverged_count,
            "trial_success": [bool(s) for s in self.trial_success],
            "final_models": [None if m is None else int(m) + 1 for m in self.final_models],
            "mean_msd_observed": [scrub(row) for row in self.mean_msd_observed],
            "p10_msd_observed": [scrub(row) for row in self.p10_msd_observed],
            "p90_msd_observed": [scrub(row) for row in self.p90_msd_observed],
            "mean_msd_desired": scrub(self.mean_msd_desired),
            "p10_msd_desired": scrub(self.p10_msd_desired),
            "p90_msd_desired": scrub(self.p90_msd_desired),
            "desired_support": [int(x) for x in self.desired_support],
            "mean_switches_per_trial": self.mean_switches_per_trial,
        }
        return json.dumps(doc, indent=2, sort_keys=True)


def _nan_stats(stack):
    valid = ~np.isnan(stack)
    counts = valid.sum(axis=0)
    sums = np.nansum(np.where(valid, stack, 0.0), axis=0)
    mean = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        p10 = np.nanpercentile(stack, 10, axis=0)
        p90 = np.nanpercentile(stack, 90, axis=0)
    return mean, p10, p90, counts


def _pad_stack(arrays):
    # trials that stop early contribute nan past their last round
    length = max(a.shape[0] for a in arrays)
    out = np.full((len(arrays), length) + arrays[0].shape[1:], np.nan)
    for i, a in enumerate(arrays):
        out[i, : a.shape[0]] = a
    return out


def summarize(config, records, networks=None, keep_records=False):
    """Aggregate records in trial order into a :class:`MonteCarloSummary`."""
    obs = _pad_stack([r.msd_observed for r in records])
    des = _pad_stack([r.msd_desired for r in records])
    mean_obs, p10_obs, p90_obs, _ = _nan_stats(obs)
    mean_des, p10_des, p90_des, support = _nan_stats(des)
    switches = [int(r.switch_adopt.sum() + r.switch_random.sum()) for r in records]
    return MonteCarloSummary(
        config=config,
        n_trials=len(records),
        success_count=int(sum(1 for r in records if r.success)),
        diverged_count=int(sum(1 for r in records if r.diverged)),
        trial_success=[bool(r.success) for r in records],
        final_models=[r.final_model for r in records],
        mean_msd_observed=mean_obs,
        p10_msd_observed=p10_obs,
        p90_msd_observed=p90_obs,
        mean_msd_desired=mean_des,
        p10_msd_desired=p10_des,
        p90_msd_desired=p90_des,
        desired_support=support,
        mean_switches_per_trial=float(np.mean(switches)),
        records=list(records) if keep_records else None,
        networks=networks,
    )


def run_monte_carlo(config, n_jobs=1, *, keep_records=False, check_invariants=False,
                    trajectories=False, export_networks=False):
    """Run ``config.n_trials`` independent trials and aggregate them.

    ``n_jobs`` > 1 fans trials out to worker processes; results are
    collected in trial order either way, so the aggregate is identical.
    """
    config.validate()
    seeds = trial_seeds(config.seed, config.n_trials)
    payloads = [(config, _seed_state(ss), check_invariants, trajectories,
                 export_networks) for ss in seeds]
    if n_jobs == 1:
        outcomes = [_trial_worker(p) for p in payloads]
    else:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            outcomes = list(pool.map(_trial_worker, payloads, chunksize=1))
    records = [r for r, _ in outcomes]
    networks = [doc for _, doc in outcomes] if export_networks else None
    return summarize(config, records, networks=networks, keep_records=keep_records)


def run_sweep(config, model_counts, n_jobs=1):
    """Monte Carlo batches across model counts, same master seed each."""
    return {int(c): run_monte_carlo(config.replace(n_models=int(c)), n_jobs=n_jobs)
            for c in model_counts}
