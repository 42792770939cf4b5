"""Experiment configuration: one flat record covering every mode.

Configs load from JSON (the documented key-value schema in the README),
from CLI flags, or from the per-mode defaults; explicit values win over
file values, which win over defaults. Agent ids (``target_agent``) are
1-based here, matching every external artifact.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass
class ExperimentConfig:
    mode: str = "decide"
    n_agents: int = 80
    n_models: int = 3
    dim: int = 2
    model_range: tuple = (-1.0, 1.0)
    max_degree: int = 7
    radius: float = 0.22
    alpha: float = 0.04
    beta: float = 0.08
    smoothing: float = 0.005
    step_size: float = 0.01
    max_iters: int = 4000
    t_hold: int = 50
    n_trials: int = 100
    seed: int = 0
    sigma_v2_range: tuple = (1e-3, 1e-2)
    reg_power_range: tuple = (0.8, 1.2)
    equilibrium_break: bool = True
    early_stop: bool = True
    target_agent: int | None = None
    reassign_at: tuple = ()
    comm_radius: float = 11.0
    start_extent: float = 25.0
    max_speed: float = 1.0
    goal_gain: float = 0.6
    align_gain: float = 0.3
    repulse_gain: float = 0.1
    repulse_radius: float = 1.0
    snapshot_iters: tuple = (1, 200, 500, 1000)

    # mode-specific defaults layered on top of the field defaults above;
    # mobile squared-distance thresholds scale with the coordinate range,
    # and the link radius/degree cap open up so votes can cascade through
    # the dense mid-flight crowd (a cap of 7 starves cross-group links
    # once the swarm starts sorting itself spatially)
    MODE_DEFAULTS = {
        "decide": {},
        "follow": {"n_models": 4, "target_agent": 10, "max_iters": 1400},
        "mobile": {"n_models": 4, "dim": 2, "model_range": (-50.0, 50.0),
                   "alpha": 100.0, "beta": 200.0, "max_iters": 1000,
                   "comm_radius": 22.0, "max_degree": 80,
                   "start_extent": 50.0},
    }

    @classmethod
    def for_mode(cls, mode, **overrides):
        if mode not in cls.MODE_DEFAULTS:
            raise ConfigError(f"unknown mode {mode!r}")
        values = {"mode": mode, **cls.MODE_DEFAULTS[mode], **overrides}
        return cls(**values).validate()

    def replace(self, **changes):
        return dataclasses.replace(self, **changes).validate()

    def validate(self):
        c = self
        def need(cond, msg):
            if not cond:
                raise ConfigError(msg)
        need(c.mode in self.MODE_DEFAULTS, f"unknown mode {c.mode!r}")
        need(c.n_agents >= 1, "n_agents must be positive")
        need(1 <= c.n_models <= c.n_agents, "need 1 <= n_models <= n_agents")
        need(c.dim >= 1, "dim must be positive")
        need(c.model_range[1] > c.model_range[0], "model_range must be increasing")
        need(c.max_degree >= 1, "max_degree must be at least 1")
        need(c.radius > 0, "radius must be positive")
        need(c.alpha > 0 and c.beta > 0, "proximity thresholds must be positive")
        need(0.0 <= c.smoothing <= 1.0, "smoothing must lie in [0, 1]")
        need(c.step_size > 0, "step_size must be positive")
        need(c.max_iters >= 1, "max_iters must be positive")
        need(1 <= c.t_hold <= c.max_iters, "need 1 <= t_hold <= max_iters")
        need(c.n_trials >= 1, "n_trials must be positive")
        need(c.sigma_v2_range[0] > 0 and c.sigma_v2_range[1] >= c.sigma_v2_range[0],
             "sigma_v2_range must be positive and ordered")
        need(c.reg_power_range[0] > 0 and c.reg_power_range[1] >= c.reg_power_range[0],
             "reg_power_range must be positive and ordered")
        need(all(1 <= i <= c.max_iters for i in c.reassign_at),
             "reassign_at iterations must lie in [1, max_iters]")
        if c.mode == "follow":
            need(c.target_agent is not None, "follow mode needs target_agent")
            need(1 <= c.target_agent <= c.n_agents,
                 "target_agent must be a 1-based agent id")
        if c.mode == "mobile":
            need(c.dim == 2, "mobile mode requires dim == 2")
            need(c.comm_radius > 0, "comm_radius must be positive")
            need(c.start_extent > 0, "start_extent must be positive")
            need(c.max_speed > 0, "max_speed must be positive")
            need(c.repulse_radius >= 0, "repulse_radius must be nonnegative")
        return self

    def to_json(self):
        doc = {"schema": "netdecide.config/1"}
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            doc[f.name] = list(value) if isinstance(value, tuple) else value
        return json.dumps(doc, indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, values):
        values = dict(values)
        values.pop("schema", None)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(values) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        for key in ("model_range", "sigma_v2_range", "reg_power_range",
                    "reassign_at", "snapshot_iters"):
            if key in values and values[key] is not None:
                values[key] = tuple(values[key])
        return cls(**values).validate()

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    @classmethod
    def from_file(cls, path):
        with open(path) as fh:
            return cls.from_json(fh.read())
