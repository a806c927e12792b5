"""The scatter, VQE, heatmap and FLO-check experiments.

Each command writes CSV files whose header lines echo the full config, so a
file identifies the run that produced it. Rows are produced in a fixed order
and floats are written with ``repr``, which makes reruns byte-identical.
"""

from __future__ import annotations

import hashlib
import io
import itertools
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg

from . import fock
from .ansatz import AnsatzParams, build_circuit, flo_reference_energy, make_spec, random_params
from .config import ExperimentConfig
from .evaluation import NoisyEvaluator, derive_seed, noiseless_energy
from .flo import (
    QuadraticGenerator,
    SlaterState,
    evolve,
    expect_hopping,
    expect_onsite_pair,
    one_body_rdm,
    overlap,
)
from .lattice import HubbardParams, LatticeGeometry, build_hubbard, exact_ground_energy
from .mitigation import (
    TrainingDatum,
    apply_affine,
    apply_shift,
    average_difference,
    corrector_record,
    fit_affine,
    fit_depolarising_training,
    fit_shift,
)
from .noisy import NoiseModel
from .vqe import SpsaConfig, median_final_error, rolling_mean, run_vqe

THREADS_ENV = "FLO_MITIGATE_THREADS"


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def ordered_map(fn, items) -> list:
    """``map`` over worker threads; results keep the input order."""
    items = list(items)
    n = thread_count()
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(n) as pool:
        return list(pool.map(fn, items))


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path: Path, cfg: ExperimentConfig, columns: list[str], rows) -> Path:
    buf = io.StringIO()
    for line in cfg.header_lines():
        buf.write(line + "\n")
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(buf.getvalue())
    return path


def params_hash(params: AnsatzParams) -> str:
    return hashlib.sha256(params.vector().tobytes()).hexdigest()[:16]


@dataclass
class ExperimentResult:
    files: list[Path] = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    ok: bool = True


def _geometry(cfg: ExperimentConfig) -> LatticeGeometry:
    return LatticeGeometry(cfg.nx, cfg.ny)


def _hamiltonian(cfg: ExperimentConfig):
    return build_hubbard(_geometry(cfg), HubbardParams(cfg.t, cfg.U))


def _maybe_plot(cfg: ExperimentConfig, fn, *args):
    if not cfg.plots:
        return None
    try:
        from . import plotting
    except ImportError:  # pragma: no cover - matplotlib missing
        return None
    return getattr(plotting, fn)(*args)


def _out_dir(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# -- scatter -----------------------------------------------------------------


def cmd_scatter(cfg: ExperimentConfig) -> ExperimentResult:
    """Random generic and FLO points per noise rate; affine fit on the FLO points."""
    geometry = _geometry(cfg)
    H = _hamiltonian(cfg)
    ns = geometry.n_sites
    spec = make_spec(geometry, cfg.layers, cfg.eta_up, cfg.eta_down, cfg.style_or_none, cfg.sharing)
    out = _out_dir(cfg)
    result = ExperimentResult()
    summary_rows = []
    n_total = cfg.generic_points + cfg.flo_points

    for ri, p in enumerate(cfg.noise_rates):
        rng = np.random.default_rng(derive_seed(cfg.seed, ri, 0))
        points = [(random_params(spec, rng), False) for _ in range(cfg.generic_points)]
        points += [(random_params(spec, rng, flo=True), True) for _ in range(cfg.flo_points)]
        evaluator = NoisyEvaluator(
            spec, H, NoiseModel(p), cfg.shots, cfg.postselect,
            p if cfg.measurement_noise else 0.0, cfg.backend,
        )

        def evaluate(i, points=points, evaluator=evaluator, ri=ri):
            params, is_flo = points[i]
            exact = flo_reference_energy(spec, params, H) if is_flo else noiseless_energy(spec, params, H)
            est = evaluator.estimate(params, derive_seed(cfg.seed, ri, 1, i))
            return params, is_flo, exact, est

        records = ordered_map(evaluate, range(n_total))
        training = [TrainingDatum(pr, ex, est.value) for pr, flo, ex, est in records if flo]
        fit = fit_affine(training)
        rows = []
        before, after = [], []
        for i, (params, is_flo, exact, est) in enumerate(records):
            corrected = apply_affine(fit, est.value)
            rows.append([i, params_hash(params), is_flo, exact, est.value, corrected,
                         exact / ns, est.value / ns, corrected / ns, est.shots_discarded])
            if not is_flo:
                before.append(abs(est.value - exact) / ns)
                after.append(abs(corrected - exact) / ns)
        mb = float(np.mean(before)) if before else float("nan")
        ma = float(np.mean(after)) if after else float("nan")
        cols = ["index", "theta_hash", "is_flo", "exact", "noisy", "corrected",
                "exact_per_site", "noisy_per_site", "corrected_per_site", "shots_discarded"]
        result.files.append(write_csv(out / f"scatter_p{p:g}.csv", cfg, cols, rows))
        (out / f"scatter_p{p:g}_corrector.json").write_text(
            corrector_record(fit, training, cfg.seed).to_json() + "\n"
        )
        summary_rows.append([p, len(before), mb, ma, fit.a, fit.b])
        result.summary[p] = {"mean_error_before": mb, "mean_error_after": ma, "a": fit.a, "b": fit.b}
        _maybe_plot(cfg, "scatter_plot", out / f"scatter_p{p:g}.svg", rows, fit, p)

    result.files.append(write_csv(
        out / "scatter_summary.csv", cfg,
        ["noise", "generic_points", "mean_error_before", "mean_error_after", "a", "b"], summary_rows,
    ))
    return result


# -- vqe -----------------------------------------------------------------


def spsa_config(cfg: ExperimentConfig) -> SpsaConfig:
    return SpsaConfig(
        iterations=cfg.iterations,
        shots_per_estimate=cfg.shots,
        a0=cfg.a0 or None,
        c0=cfg.c0,
        alpha=cfg.alpha,
        gamma=cfg.gamma,
        seed=cfg.seed,
        first_step=cfg.first_step,
        calibration_samples=cfg.calibration_samples,
    )


def cmd_vqe(cfg: ExperimentConfig) -> ExperimentResult:
    geometry = _geometry(cfg)
    H = _hamiltonian(cfg)
    spec = make_spec(geometry, cfg.layers, cfg.eta_up, cfg.eta_down, cfg.style_or_none, cfg.sharing)
    E0 = exact_ground_energy(H, cfg.eta_up, cfg.eta_down)
    p = cfg.noise_rates[0]
    scfg = spsa_config(cfg)
    runs = [(mode, p) for mode in cfg.modes]
    if cfg.noiseless_baseline:
        runs.append(("noiseless", 0.0))

    def run(item):
        mode, rate = item
        return run_vqe(
            spec, H, NoiseModel(rate), "none" if mode == "noiseless" else mode, scfg,
            repeats=cfg.repeats, training_count=cfg.training_points,
            training_shots=cfg.training_shots or None, ground_energy=E0,
            measurement_noise=rate if cfg.measurement_noise else 0.0, sector_dim=cfg.sector_dim,
        )

    traces = dict(zip([m for m, _ in runs], ordered_map(run, runs)))
    out = _out_dir(cfg)
    rows, summary_rows = [], []
    result = ExperimentResult()
    for mode, ts in traces.items():
        for t in ts:
            smooth = rolling_mean(t.error, 5)
            for k in range(len(t)):
                rows.append([k, t.metadata["repeat"], mode, t.raw[k], t.mitigated[k], t.error[k], smooth[k]])
        finals = [t.final_error(5) for t in ts]
        med = median_final_error(ts, 5)
        summary_rows.append([mode, rate_of(mode, p), med, min(finals), max(finals)])
        result.summary[mode] = {"median": med, "min": min(finals), "max": max(finals)}
    cols = ["iteration", "repeat", "mode", "raw", "mitigated", "error", "error_rolling5"]
    result.files.append(write_csv(out / "vqe_traces.csv", cfg, cols, rows))
    result.files.append(write_csv(out / "vqe_summary.csv", cfg,
                                  ["mode", "noise", "final_median_error", "final_min_error", "final_max_error"],
                                  summary_rows))
    result.summary["ground_energy"] = E0
    _maybe_plot(cfg, "vqe_plot", out / "vqe.svg", traces)
    return result


def rate_of(mode: str, p: float) -> float:
    return 0.0 if mode == "noiseless" else p


# -- heatmap ---------------------------------------------------------------


def heatmap_grid(cfg: ExperimentConfig) -> np.ndarray:
    return np.round(np.linspace(0.0, cfg.grid_max, cfg.grid_steps), 12)


def cmd_heatmap(cfg: ExperimentConfig) -> ExperimentResult:
    """Noisy energies of the two-site circuit over the (phi, theta) grid, then
    mean-shift, per-theta and depolarising corrections trained on phi = 0."""
    geometry = _geometry(cfg)
    H = _hamiltonian(cfg)
    ns = geometry.n_sites
    spec = make_spec(geometry, cfg.layers, cfg.eta_up, cfg.eta_down, cfg.style_or_none, "per_group")
    if spec.n_onsite != 1 or spec.n_hopping != 1 or spec.layers != 1:
        raise ValueError("the heatmap needs a one-layer ansatz with one onsite and one hopping angle")
    grid = heatmap_grid(cfg)
    p = cfg.noise_rates[0]
    evaluator = NoisyEvaluator(
        spec, H, NoiseModel(p), cfg.shots, cfg.postselect,
        p if cfg.measurement_noise else 0.0, cfg.backend, cfg.global_eps,
    )
    cells = list(itertools.product(range(grid.size), range(grid.size)))

    def evaluate(cell):
        i, j = cell
        params = AnsatzParams([[grid[i]]], [[grid[j]]])
        exact = noiseless_energy(spec, params, H)
        if grid[i] == 0:
            exact_flo = flo_reference_energy(spec, params, H)
            if abs(exact_flo - exact) > 1e-9:
                raise AssertionError(f"FLO and dense energies disagree at theta={grid[j]}")
        return params, exact, evaluator.estimate(params, derive_seed(cfg.seed, i, j)).value

    results = ordered_map(evaluate, cells)
    exact = np.zeros((grid.size, grid.size))
    noisy = np.zeros_like(exact)
    for (i, j), (_, e, n) in zip(cells, results):
        exact[i, j], noisy[i, j] = e, n
    training = [TrainingDatum(results[j][0], exact[0, j], noisy[0, j]) for j in range(grid.size)]

    mean_shift = fit_shift(training, "mean")
    per_theta = fit_shift(training, "per_theta")
    sector = (spec.eta_up, spec.eta_down) if cfg.sector_dim else None
    depol = fit_depolarising_training(training, H, sector)
    corrected = {
        "raw": noisy,
        "mean_shift": np.vectorize(lambda x: apply_shift(mean_shift, x))(noisy),
        "per_theta": np.array([[apply_shift(per_theta, noisy[i, j], [grid[j]]) for j in range(grid.size)]
                               for i in range(grid.size)]),
        "depolarising": np.vectorize(depol.apply)(noisy) if depol.usable else np.full_like(noisy, np.nan),
    }
    out = _out_dir(cfg)
    result = ExperimentResult()
    rows = []
    for i, j in cells:
        rows.append([grid[i], grid[j], exact[i, j], exact[i, j] / ns] + [corrected[k][i, j] for k in corrected])
    cols = ["phi", "theta", "exact", "exact_per_site"] + list(corrected)
    result.files.append(write_csv(out / "heatmap.csv", cfg, cols, rows))
    diffs = {k: average_difference(v / ns, exact / ns) for k, v in corrected.items()}
    result.files.append(write_csv(
        out / "heatmap_summary.csv", cfg, ["estimate", "average_difference_per_site", "parameter"],
        [["raw", diffs["raw"], ""], ["mean_shift", diffs["mean_shift"], mean_shift.mu],
         ["per_theta", diffs["per_theta"], ""], ["depolarising", diffs["depolarising"], depol.eps]],
    ))
    for name, c in (("mean_shift", mean_shift), ("per_theta", per_theta), ("depolarising", depol)):
        (out / f"heatmap_{name}.json").write_text(corrector_record(c, training, cfg.seed).to_json() + "\n")
    result.summary = {"average_difference": diffs, "eps_est": depol.eps, "mu": mean_shift.mu}
    _maybe_plot(cfg, "heatmap_plot", out / "heatmap.svg", grid, corrected, exact, diffs, ns)
    return result


# -- flo-check ---------------------------------------------------------------


@dataclass(frozen=True)
class FloCircuit:
    n: int
    occupied: tuple[int, ...]
    generators: tuple[QuadraticGenerator, ...]


def random_flo_circuit(rng: np.random.Generator, max_modes: int = 8, max_depth: int = 20) -> FloCircuit:
    """Random two-mode and dense quadratic generators applied to a basis state."""
    n = int(rng.integers(2, max_modes + 1))
    eta = int(rng.integers(0, n + 1))
    occupied = tuple(sorted(int(m) for m in rng.choice(n, size=eta, replace=False)))
    gens = []
    for _ in range(int(rng.integers(1, max_depth + 1))):
        if rng.random() < 0.8:
            j, k = (int(v) for v in rng.choice(n, size=2, replace=False))
            c = complex(rng.normal(), rng.normal())
            gens.append(QuadraticGenerator.two_mode(n, j, k, c, float(rng.uniform(0, 2))))
        else:
            m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
            gens.append(QuadraticGenerator(m + m.conj().T, float(rng.uniform(0, 1))))
    return FloCircuit(n, occupied, tuple(gens))


def dense_flo_statevector(circ: FloCircuit) -> np.ndarray:
    psi = np.zeros(1 << circ.n, dtype=complex)
    psi[sum(1 << (circ.n - 1 - m) for m in circ.occupied)] = 1.0
    for g in circ.generators:
        op = fock.quadratic_operator(g.h).toarray()
        psi = scipy.linalg.expm(-1j * g.time * op) @ psi
    return psi


def check_flo_circuit(circ: FloCircuit, corrupt_sign: bool = False) -> dict:
    """Maximum deviations of the FLO simulator from the dense oracle."""
    state = SlaterState.from_occupied(circ.occupied, circ.n)
    for g in circ.generators:
        state = evolve(state, g)
    psi = dense_flo_statevector(circ)
    n, eta = circ.n, len(circ.occupied)
    amp_err = 0.0
    for subset in itertools.combinations(range(n), eta):
        amp = overlap(state, subset)
        if corrupt_sign:
            amp = -amp
        idx = sum(1 << (n - 1 - m) for m in subset)
        amp_err = max(amp_err, abs(amp - psi[idx]))
    d = one_body_rdm(state).matrix
    rdm_err = hop_err = onsite_err = 0.0
    for j in range(n):
        for k in range(n):
            op = (fock.creation(j, n) @ fock.annihilation(k, n))
            rdm_err = max(rdm_err, abs(d[j, k] - np.vdot(psi, op @ psi)))
    for j, k in itertools.combinations(range(n), 2):
        hop = fock.creation(j, n) @ fock.annihilation(k, n)
        hop = hop + hop.conj().T
        ref = np.vdot(psi, hop @ psi).real
        ons = np.vdot(psi, fock.number(j, n) @ fock.number(k, n) @ psi).real
        for method in ("wick", "decomposition"):
            hop_err = max(hop_err, abs(expect_hopping(state, j, k, method) - ref))
            onsite_err = max(onsite_err, abs(expect_onsite_pair(state, j, k, method) - ons))
    return {"n": n, "eta": eta, "depth": len(circ.generators), "amplitude": amp_err,
            "rdm": rdm_err, "hopping": hop_err, "onsite": onsite_err}


def cmd_flo_check(cfg: ExperimentConfig) -> ExperimentResult:
    rng = np.random.default_rng(derive_seed(cfg.seed, 0))
    circuits = [random_flo_circuit(rng, cfg.max_modes, cfg.max_depth) for _ in range(cfg.circuits)]
    checks = ordered_map(lambda c: check_flo_circuit(c, cfg.corrupt_sign), circuits)
    keys = ["amplitude", "rdm", "hopping", "onsite"]
    rows = []
    worst = 0.0
    for i, c in enumerate(checks):
        err = float(max(c[k] for k in keys))
        worst = max(worst, err)
        rows.append([i, c["n"], c["eta"], c["depth"]] + [c[k] for k in keys] + [err <= cfg.tolerance])
    out = _out_dir(cfg)
    result = ExperimentResult()
    result.files.append(write_csv(out / "flo_check.csv", cfg,
                                  ["index", "modes", "particles", "depth"] + keys + ["pass"], rows))
    result.ok = bool(worst <= cfg.tolerance)
    result.summary = {"circuits": len(checks), "max_error": worst, "passed": result.ok}
    return result


COMMANDS = {"scatter": cmd_scatter, "vqe": cmd_vqe, "heatmap": cmd_heatmap, "flo-check": cmd_flo_check}


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    return COMMANDS[cfg.experiment](cfg)


__all__ = ["COMMANDS", "ExperimentResult", "build_circuit", "run_experiment"]
