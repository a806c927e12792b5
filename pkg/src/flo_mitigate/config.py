"""Experiment configuration: a flat YAML mapping onto ``ExperimentConfig``."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

import yaml

EXPERIMENTS = ("scatter", "vqe", "heatmap", "flo-check")


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    # lattice and ansatz
    nx: int = 2
    ny: int = 3
    eta_up: int = 2
    eta_down: int = 2
    t: float = 1.0
    U: float = 2.0
    layers: int = 3
    sharing: str = "per_term"
    style: str = "auto"
    # noise and measurement
    noise_rates: tuple[float, ...] = (0.01, 0.02, 0.05, 0.1)
    shots: int = 10000
    postselect: bool = True
    measurement_noise: bool = False
    sector_dim: bool = False
    global_eps: float = 0.0
    backend: str = "auto"
    # scatter
    generic_points: int = 30
    flo_points: int = 10
    # vqe
    iterations: int = 200
    repeats: int = 3
    modes: tuple[str, ...] = ("none", "postselect", "postselect+affine")
    noiseless_baseline: bool = True
    training_points: int = 10
    training_shots: int = 0  # 0: same as shots
    a0: float = 0.0  # 0: calibrate
    c0: float = 0.1
    alpha: float = 0.602
    gamma: float = 0.101
    first_step: float = 0.05
    calibration_samples: int = 20
    # heatmap
    grid_steps: int = 11
    grid_max: float = 1.0
    # flo-check
    circuits: int = 50
    max_modes: int = 8
    max_depth: int = 20
    tolerance: float = 1e-9
    corrupt_sign: bool = False
    # bookkeeping
    seed: int = 0
    out: str = "results"
    plots: bool = True

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"experiment must be one of {EXPERIMENTS}, got {self.experiment!r}")
        object.__setattr__(self, "noise_rates", tuple(float(p) for p in self.noise_rates))
        object.__setattr__(self, "modes", tuple(self.modes))
        for name in ("nx", "ny", "layers", "shots", "iterations", "repeats", "grid_steps", "circuits", "max_modes", "max_depth"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be positive")
        for name in ("eta_up", "eta_down", "generic_points", "flo_points", "training_shots", "calibration_samples"):
            if int(getattr(self, name)) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.training_points < 2:
            raise ValueError("training_points must be at least 2")
        for p in self.noise_rates:
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"noise rate {p} outside [0, 1]")
        if not self.noise_rates:
            raise ValueError("at least one noise rate is required")
        if not 0.0 <= self.global_eps <= 1.0:
            raise ValueError("global_eps must lie in [0, 1]")

    @classmethod
    def from_mapping(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "experiment" not in data:
            raise ValueError("config must name its experiment")
        # per-experiment defaults sit under whatever the file sets
        return cls(**{**DEFAULTS.get(data["experiment"], {}), **data})

    @classmethod
    def load(cls, path: str | Path, experiment: str | None = None) -> "ExperimentConfig":
        data = yaml.safe_load(Path(path).read_text()) or {}
        if not isinstance(data, dict):
            raise ValueError("config file must hold a flat mapping")
        if experiment is not None:
            if data.setdefault("experiment", experiment) != experiment:
                raise ValueError(f"config is for {data['experiment']!r}, not {experiment!r}")
        return cls.from_mapping(data)

    def with_overrides(self, **kwargs) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in kwargs.items() if v is not None})

    def paper_scale(self) -> "ExperimentConfig":
        """Point, iteration and repeat counts of the published runs."""
        if self.experiment == "scatter":
            return replace(self, generic_points=90, flo_points=10, shots=10000)
        if self.experiment == "vqe":
            return replace(self, iterations=1000, repeats=5, shots=1000)
        return self

    def header_lines(self) -> list[str]:
        """Config echo for output files. The output location and plot switch do
        not affect results and are left out, so reruns elsewhere match byte for byte."""
        skip = {"out", "plots"}
        return [f"# {k}: {json.dumps(v)}" for k, v in sorted(self.as_dict().items()) if k not in skip]

    def as_dict(self) -> dict:
        d = asdict(self)
        d["noise_rates"] = list(self.noise_rates)
        d["modes"] = list(self.modes)
        return d

    @property
    def style_or_none(self) -> str | None:
        return None if self.style == "auto" else self.style


DEFAULTS = {
    "scatter": dict(shots=10000, sharing="per_term"),
    "vqe": dict(shots=1000, noise_rates=(0.01,), sharing="per_group"),
    "heatmap": dict(nx=2, ny=1, eta_up=1, eta_down=1, layers=1, sharing="per_group", noise_rates=(0.02,), postselect=False),
    "flo-check": dict(),
}


def default_config(experiment: str, **overrides) -> ExperimentConfig:
    return ExperimentConfig(experiment=experiment, **{**DEFAULTS[experiment], **overrides})


__all__ = ["EXPERIMENTS", "ExperimentConfig", "default_config"]
