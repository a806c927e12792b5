"""Variational energy minimisation with SPSA and optional error mitigation."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .ansatz import AnsatzParams, AnsatzSpec
from .evaluation import NoisyEvaluator
from .lattice import HubbardHamiltonian, exact_ground_energy
from .mitigation import (
    child_seed,
    fit_affine,
    fit_depolarising_training,
    fit_shift,
    generate_training_set,
)
from .noisy import NoiseModel

MODES = ("none", "postselect", "postselect+affine", "postselect+shift", "postselect+depolarising")


@dataclass(frozen=True)
class SpsaConfig:
    """Gains ``a_k = a0 / (k + 1 + A)**alpha`` and ``c_k = c0 / (k + 1)**gamma``.

    ``a0=None`` calibrates ``a0`` from ``calibration_samples`` gradient
    estimates at the start point so the first step is ``first_step`` radians
    per coordinate on average. ``A=None`` means ``iterations / 10``.
    """

    iterations: int = 200
    shots_per_estimate: int = 1000
    a0: float | None = None
    c0: float = 0.1
    A: float | None = None
    alpha: float = 0.602
    gamma: float = 0.101
    seed: int = 0
    first_step: float = 0.05
    calibration_samples: int = 20

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be at least 1")
        if self.shots_per_estimate < 1:
            raise ValueError("shots_per_estimate must be at least 1")
        if not (0 < self.alpha < 1 and 0 < self.gamma < 1):
            raise ValueError("alpha and gamma must lie in (0, 1)")
        if self.c0 <= 0:
            raise ValueError("c0 must be positive")

    @property
    def stability(self) -> float:
        return self.iterations / 10 if self.A is None else self.A


@dataclass
class VqeTrace:
    params: np.ndarray
    raw: np.ndarray
    mitigated: np.ndarray
    error: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.raw)

    def final_error(self, window: int = 5) -> float:
        return float(rolling_mean(self.error, window)[-1])


def _split(value) -> tuple[float, float]:
    if isinstance(value, tuple):
        raw, mitigated = value
        return float(raw), float(mitigated)
    return float(value), float(value)


def spsa_minimize(
    objective: Callable[[np.ndarray, np.random.SeedSequence], float | tuple[float, float]],
    init,
    cfg: SpsaConfig,
    reference: float | None = None,
    scale: float = 1.0,
) -> VqeTrace:
    """Minimise ``objective(x, seed)``; a ``(raw, mitigated)`` return value is
    optimised on its mitigated part.

    Iteration ``k`` evaluates ``x_k +- c_k Delta_k`` and records ``x_k`` with
    the mean of the two evaluations. ``error = |mitigated - reference| / scale``
    when a reference is given.
    """
    x = np.array(init.vector() if isinstance(init, AnsatzParams) else init, dtype=float)
    n = x.size
    rng = np.random.default_rng(child_seed(cfg.seed, 0))
    A = cfg.stability

    a0 = cfg.a0
    if a0 is None:
        mags = []
        for i in range(cfg.calibration_samples):
            delta = rng.choice([-1.0, 1.0], size=n)
            fp = _split(objective(x + cfg.c0 * delta, child_seed(cfg.seed, 2, i, 0)))[1]
            fm = _split(objective(x - cfg.c0 * delta, child_seed(cfg.seed, 2, i, 1)))[1]
            mags.append(abs(fp - fm) / (2 * cfg.c0))
        g = float(np.mean(mags)) if mags else 0.0
        a0 = cfg.first_step * (A + 1) ** cfg.alpha / g if g > 0 else cfg.first_step

    params = np.empty((cfg.iterations, n))
    raw = np.empty(cfg.iterations)
    mitigated = np.empty(cfg.iterations)
    for k in range(cfg.iterations):
        ak = a0 / (k + 1 + A) ** cfg.alpha
        ck = cfg.c0 / (k + 1) ** cfg.gamma
        delta = rng.choice([-1.0, 1.0], size=n)
        rp, mp = _split(objective(x + ck * delta, child_seed(cfg.seed, 1, k, 0)))
        rm, mm = _split(objective(x - ck * delta, child_seed(cfg.seed, 1, k, 1)))
        params[k] = x
        raw[k] = 0.5 * (rp + rm)
        mitigated[k] = 0.5 * (mp + mm)
        x = x - ak * (mp - mm) / (2 * ck) * delta
    if reference is None:
        error = np.full(cfg.iterations, np.nan)
    else:
        error = np.abs(mitigated - reference) / scale
    meta = {"seed": cfg.seed, "a0": a0, "final_params": x.tolist()}
    return VqeTrace(params, raw, mitigated, error, meta)


def rolling_mean(values, window: int = 5) -> np.ndarray:
    """Trailing mean; the first ``window - 1`` entries average the available prefix."""
    if window < 1:
        raise ValueError("window must be at least 1")
    v = np.asarray(values.error if isinstance(values, VqeTrace) else values, dtype=float)
    if v.size == 0:
        raise ValueError("cannot smooth an empty trace")
    csum = np.concatenate([[0.0], np.cumsum(v)])
    idx = np.arange(1, v.size + 1)
    lo = np.maximum(idx - window, 0)
    return (csum[idx] - csum[lo]) / (idx - lo)


def make_corrector(mode: str, spec: AnsatzSpec, H: HubbardHamiltonian, evaluator, count: int, seed, sector_dim: bool = False):
    """Fit the corrector a mode needs from a fresh FLO training set (or ``None``)."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if mode in ("none", "postselect"):
        return None, []
    training = generate_training_set(spec, count, seed, evaluator, H)
    if mode == "postselect+affine":
        corrector = fit_affine(training)
    elif mode == "postselect+shift":
        corrector = fit_shift(training, "mean")
    else:
        sector = (spec.eta_up, spec.eta_down) if sector_dim else None
        corrector = fit_depolarising_training(training, H, sector)
    return corrector, training


def run_vqe(
    spec: AnsatzSpec,
    H: HubbardHamiltonian,
    noise: NoiseModel,
    mode: str,
    cfg: SpsaConfig,
    repeats: int = 3,
    training_count: int = 10,
    training_shots: int | None = None,
    init: AnsatzParams | None = None,
    ground_energy: float | None = None,
    measurement_noise: float = 0.0,
    sector_dim: bool = False,
    threads: int = 1,
) -> list[VqeTrace]:
    """``repeats`` independent SPSA runs; repeat ``r`` uses seed ``(cfg.seed, r)``
    for both its training set and its optimisation."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if repeats < 1:
        raise ValueError("repeats must be at least 1")
    if ground_energy is None:
        ground_energy = exact_ground_energy(H, spec.eta_up, spec.eta_down)
    init = AnsatzParams.zeros(spec) if init is None else init
    postselect = mode != "none"

    def one(r: int) -> VqeTrace:
        rseed = child_seed(cfg.seed, r)
        evaluator = NoisyEvaluator(spec, H, noise, cfg.shots_per_estimate, postselect, measurement_noise)
        train_eval = evaluator
        if training_shots is not None:
            train_eval = NoisyEvaluator(spec, H, noise, training_shots, postselect, measurement_noise)
        corrector, training = make_corrector(mode, spec, H, train_eval, training_count, child_seed(rseed, 0), sector_dim)

        def objective(vec, seed):
            params = AnsatzParams.from_vector(spec, vec)
            value = evaluator.estimate(params, seed).value
            if corrector is None:
                return value
            return value, float(corrector.apply(value, params))

        run_cfg = SpsaConfig(**{**cfg.__dict__, "seed": int(rseed.generate_state(1)[0])})
        trace = spsa_minimize(objective, init, run_cfg, ground_energy, H.n_sites)
        trace.metadata.update(
            repeat=r,
            mode=mode,
            noise=noise.p,
            ground_energy=ground_energy,
            training=[(d.exact, d.noisy) for d in training],
            corrector=None if corrector is None else corrector.__dict__,
        )
        return trace

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(one, range(repeats)))
    return [one(r) for r in range(repeats)]


def median_final_error(traces: list[VqeTrace], window: int = 5) -> float:
    return float(np.median([t.final_error(window) for t in traces]))
