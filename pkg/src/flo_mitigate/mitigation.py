"""Learning noise-inversion maps from FLO training circuits.

Training circuits are ansatz circuits with every onsite angle set to zero.
Their exact energies come from the polynomial-time FLO simulator and their
noisy energies from the (simulated) device. A corrector fitted on these pairs
is then applied to the noisy energies of arbitrary parameter points.
"""

from __future__ import annotations

import json
from math import comb
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .ansatz import AnsatzParams, AnsatzSpec, flo_reference_energy, random_params
from .lattice import HubbardHamiltonian

DENOMINATOR_TOL = 1e-9
EPS_LIMIT = 1 - 1e-6


class FitError(ValueError):
    """The training data cannot determine the corrector."""


class UnusableCorrector(RuntimeError):
    """The estimated noise is too strong for the inversion to be meaningful."""


@dataclass(frozen=True)
class TrainingDatum:
    params: AnsatzParams
    exact: float
    noisy: float

    def __post_init__(self):
        if not self.params.is_flo:
            raise ValueError("training points must have zero onsite angles")


def child_seed(seed, *path: int) -> np.random.SeedSequence:
    """Deterministic child stream; unlike ``SeedSequence.spawn`` it does not
    mutate ``seed``, so repeated calls give the same children."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return np.random.SeedSequence(ss.entropy, spawn_key=tuple(ss.spawn_key) + tuple(int(p) for p in path))


def generate_training_set(
    spec: AnsatzSpec,
    count: int,
    seed,
    evaluator: Callable[[AnsatzParams, np.random.SeedSequence], float],
    H: HubbardHamiltonian | None = None,
) -> list[TrainingDatum]:
    """``count`` FLO points with uniformly random hopping angles.

    ``evaluator(params, seed)`` supplies the noisy energy; ``H`` defaults to
    ``evaluator.H``.
    """
    if count < 2:
        raise ValueError("a training set needs at least two points")
    H = H if H is not None else getattr(evaluator, "H", None)
    if H is None:
        raise ValueError("no Hamiltonian given for the exact energies")
    rng = np.random.default_rng(child_seed(seed, 0))
    points = [random_params(spec, rng, flo=True) for _ in range(count)]
    data = []
    for i, params in enumerate(points):
        exact = flo_reference_energy(spec, params, H)
        noisy = float(evaluator(params, child_seed(seed, 1, i)))
        data.append(TrainingDatum(params, exact, noisy))
    return data


def _pairs(training) -> tuple[np.ndarray, np.ndarray]:
    noisy = np.array([d.noisy for d in training], dtype=float)
    exact = np.array([d.exact for d in training], dtype=float)
    return noisy, exact


# -- affine ------------------------------------------------------------------


@dataclass(frozen=True)
class AffineCorrector:
    a: float
    b: float

    method = "affine"

    def apply(self, noisy, params=None):
        return apply_affine(self, noisy)


def fit_affine(training) -> AffineCorrector:
    """Least squares ``min_{a,b} sum (a E_noisy + b - E_exact)^2``."""
    x, y = _pairs(training)
    if x.size < 2:
        raise FitError("an affine fit needs at least two points")
    xc = x - x.mean()
    sxx = float(xc @ xc)
    scale = max(1.0, float(np.abs(x).max()))
    if sxx <= (1e-12 * scale) ** 2 * x.size:
        raise FitError(f"all {x.size} noisy values are equal ({x[0]:.6g}); slope is undetermined")
    a = float(xc @ (y - y.mean())) / sxx
    b = float(y.mean() - a * x.mean())
    if not np.isfinite(a):
        raise FitError(f"fitted slope {a} is not finite")
    return AffineCorrector(a, b)


def apply_affine(c: AffineCorrector, noisy):
    out = c.a * np.asarray(noisy, dtype=float) + c.b
    return float(out) if out.ndim == 0 else out


def affine_residual(training, a: float, b: float) -> float:
    x, y = _pairs(training)
    r = a * x + b - y
    return float(r @ r)


# -- shifts ---------------------------------------------------------------


def theta_key(theta) -> tuple[float, ...]:
    if isinstance(theta, AnsatzParams):
        return tuple(float(v) for v in theta.hopping.ravel())
    return tuple(float(v) for v in np.ravel(theta))


@dataclass(frozen=True)
class ShiftCorrector:
    """``mean``: add ``mean(E) - mu`` with ``mu`` the mean noisy training value.
    ``per_theta``: add ``b(theta) = E - E_noisy`` recorded at the same hopping angles."""

    mode: str
    mu: float = float("nan")
    offset: float = 0.0
    table: tuple[tuple[tuple[float, ...], float], ...] = ()
    tol: float = 1e-9

    method = "shift"

    def lookup(self, theta) -> float:
        key = np.asarray(theta_key(theta))
        for k, b in self.table:
            if len(k) == key.size and np.allclose(k, key, atol=self.tol, rtol=0):
                return b
        raise KeyError(f"no training point at theta={tuple(key)}")

    def apply(self, noisy, params=None):
        return apply_shift(self, noisy, params)


def fit_shift(training, mode: str = "mean") -> ShiftCorrector:
    noisy, exact = _pairs(training)
    if noisy.size == 0:
        raise FitError("empty training set")
    if mode == "mean":
        mu = float(noisy.mean())
        return ShiftCorrector("mean", mu=mu, offset=float(exact.mean()) - mu)
    if mode == "per_theta":
        table = tuple((theta_key(d.params), float(d.exact - d.noisy)) for d in training)
        return ShiftCorrector("per_theta", mu=float(noisy.mean()), table=table)
    raise ValueError(f"unknown shift mode {mode!r}")


def apply_shift(c: ShiftCorrector, noisy, theta=None) -> float:
    if c.mode == "mean":
        return float(noisy) + c.offset
    if theta is None:
        raise ValueError("per-theta correction needs the hopping angles of the point")
    return float(noisy) + c.lookup(theta)


# -- depolarising -----------------------------------------------------------


@dataclass(frozen=True)
class DepolarisingCorrector:
    eps: float
    trE_over_d: float
    d: int

    method = "depolarising"

    @property
    def usable(self) -> bool:
        return bool(np.isfinite(self.eps) and self.eps < EPS_LIMIT)

    def apply(self, noisy, params=None):
        return apply_depolarising_corrector(self, noisy)


def fit_depolarising(E0_noisy, E0_exact, trE: float, d: int) -> DepolarisingCorrector:
    """``eps = (E_noisy - E) / (tr E / d - E)`` averaged over the points whose
    denominator is not negligible."""
    noisy = np.atleast_1d(np.asarray(E0_noisy, dtype=float))
    exact = np.atleast_1d(np.asarray(E0_exact, dtype=float))
    if noisy.shape != exact.shape:
        raise ValueError("noisy and exact values must pair up")
    mixed = trE / d
    den = mixed - exact
    ok = np.abs(den) > DENOMINATOR_TOL
    if not np.any(ok):
        raise FitError("every training point has tr(E)/d equal to its exact energy")
    eps = float(np.mean((noisy[ok] - exact[ok]) / den[ok]))
    return DepolarisingCorrector(eps, float(mixed), int(d))


def apply_depolarising_corrector(c: DepolarisingCorrector, noisy) -> float:
    if not c.usable:
        raise UnusableCorrector(f"estimated depolarising rate {c.eps:.6g} is too close to 1")
    return (float(noisy) - c.eps * c.trE_over_d) / (1 - c.eps)


def depolarising_reference(H: HubbardHamiltonian, sector: tuple[int, int] | None = None) -> tuple[float, int]:
    """``(tr E, d)`` for the depolarising corrector: the full space by default,
    or the fixed-occupation sector the estimates were postselected onto."""
    if sector is None:
        d = 1 << H.n_modes
        return H.trace(), d
    ns = H.n_sites
    d = comb(ns, sector[0]) * comb(ns, sector[1])
    return H.sector_trace_over_dim(*sector) * d, d


def fit_depolarising_training(training, H: HubbardHamiltonian, sector: tuple[int, int] | None = None) -> DepolarisingCorrector:
    noisy, exact = _pairs(training)
    trE, d = depolarising_reference(H, sector)
    return fit_depolarising(noisy, exact, trE, d)


# -- evaluation --------------------------------------------------------------


def average_difference(estimates, exact) -> float:
    est = np.asarray(estimates, dtype=float)
    ref = np.asarray(exact, dtype=float)
    if est.shape != ref.shape:
        raise ValueError(f"grid shapes differ: {est.shape} vs {ref.shape}")
    return float(np.mean(np.abs(est - ref)))


# -- persistence ------------------------------------------------------------


@dataclass
class CorrectorRecord:
    method: str
    coefficients: dict
    training: list = field(default_factory=list)
    seed: int | None = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def corrector_record(corrector, training=(), seed=None) -> CorrectorRecord:
    if isinstance(corrector, AffineCorrector):
        coeffs = {"a": corrector.a, "b": corrector.b}
    elif isinstance(corrector, ShiftCorrector):
        coeffs = {
            "mode": corrector.mode,
            "mu": corrector.mu,
            "offset": corrector.offset,
            "table": [[list(k), b] for k, b in corrector.table],
        }
    elif isinstance(corrector, DepolarisingCorrector):
        coeffs = {"eps": corrector.eps, "trE_over_d": corrector.trE_over_d, "d": corrector.d}
    else:
        raise TypeError(f"unknown corrector {type(corrector).__name__}")
    points = [
        {
            "onsite": d.params.onsite.tolist(),
            "hopping": d.params.hopping.tolist(),
            "exact": d.exact,
            "noisy": d.noisy,
        }
        for d in training
    ]
    method = corrector.method if not isinstance(corrector, ShiftCorrector) else f"shift:{corrector.mode}"
    return CorrectorRecord(method, coeffs, points, None if seed is None else int(seed))


def corrector_from_record(record: CorrectorRecord | dict):
    if isinstance(record, CorrectorRecord):
        record = asdict(record)
    c = record["coefficients"]
    method = record["method"]
    if method == "affine":
        return AffineCorrector(float(c["a"]), float(c["b"]))
    if method.startswith("shift"):
        table = tuple((tuple(float(v) for v in k), float(b)) for k, b in c.get("table", []))
        return ShiftCorrector(c["mode"], mu=float(c["mu"]), offset=float(c["offset"]), table=table)
    if method == "depolarising":
        return DepolarisingCorrector(float(c["eps"]), float(c["trE_over_d"]), int(c["d"]))
    raise ValueError(f"unknown corrector method {method!r}")


def training_from_record(record: CorrectorRecord | dict) -> list[TrainingDatum]:
    if isinstance(record, CorrectorRecord):
        record = asdict(record)
    return [
        TrainingDatum(AnsatzParams(p["onsite"], p["hopping"]), float(p["exact"]), float(p["noisy"]))
        for p in record["training"]
    ]
