"""Qubit-level simulation with depolarising noise and energy estimation.

Three state types share one interface: ``PureState`` (statevector),
``DensityState`` (dense ``2**n x 2**n`` matrix) and
``flo_mitigate.sector.SectorDensityState`` (the same density matrix stored
block-diagonally by spin-sector occupation; exact whenever every gate
conserves those occupations).

Noise model: after every noisy two-qubit gate each of its qubits goes
through ``rho -> (1 - p) rho + p tr_q(rho) (x) I/2``.

Energies are estimated from computational-basis samples. Onsite terms are
read off one group of shots; hopping terms are split into groups with
disjoint support, each measured after a ``HOPBASIS`` rotation on every pair.
Outcome distributions are computed exactly from the state and sampled
multinomially.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import fock
from .gates import PAULIS, Gate, QubitCircuit, gate_matrix
from .lattice import HubbardHamiltonian, LatticeGeometry

MIN_ACCEPT = 1e-12


class UnsampleableError(RuntimeError):
    """Postselection acceptance probability is numerically zero."""


def _apply_to_axes(tensor: np.ndarray, u: np.ndarray, axes) -> np.ndarray:
    k = len(axes)
    ut = u.reshape((2,) * (2 * k))
    out = np.tensordot(ut, tensor, axes=(list(range(k, 2 * k)), list(axes)))
    return np.moveaxis(out, list(range(k)), list(axes))


def _check_qubits(qubits, n: int):
    for q in qubits:
        if not 0 <= q < n:
            raise IndexError(f"qubit {q} out of range for {n} qubits")


@dataclass(frozen=True)
class NoiseModel:
    p: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"depolarising rate must lie in [0, 1], got {self.p}")


@dataclass(eq=False)
class PureState:
    psi: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.psi = np.asarray(self.psi, dtype=complex)
        n = int(np.log2(self.psi.size))
        if 1 << n != self.psi.size:
            raise ValueError("statevector length must be a power of two")
        self.n_qubits = n

    @classmethod
    def zero(cls, n: int) -> "PureState":
        return cls(fock.vacuum(n))

    def copy(self) -> "PureState":
        return PureState(self.psi.copy())

    def apply_unitary(self, u: np.ndarray, qubits) -> None:
        _check_qubits(qubits, self.n_qubits)
        t = self.psi.reshape((2,) * self.n_qubits)
        self.psi = _apply_to_axes(t, u, qubits).reshape(-1)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.psi) ** 2

    def to_density(self) -> "DensityState":
        return DensityState(np.outer(self.psi, self.psi.conj()))

    def norm(self) -> float:
        return float(np.linalg.norm(self.psi))


@dataclass(eq=False)
class DensityState:
    rho: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.rho = np.asarray(self.rho, dtype=complex)
        dim = self.rho.shape[0]
        n = int(np.log2(dim))
        if self.rho.shape != (dim, dim) or 1 << n != dim:
            raise ValueError("density matrix must be square with power-of-two size")
        self.n_qubits = n

    @classmethod
    def zero(cls, n: int) -> "DensityState":
        return PureState.zero(n).to_density()

    @classmethod
    def maximally_mixed(cls, n: int) -> "DensityState":
        return cls(np.eye(1 << n, dtype=complex) / (1 << n))

    def copy(self) -> "DensityState":
        return DensityState(self.rho.copy())

    def _tensor(self) -> np.ndarray:
        return self.rho.reshape((2,) * (2 * self.n_qubits))

    def apply_unitary(self, u: np.ndarray, qubits) -> None:
        _check_qubits(qubits, self.n_qubits)
        n = self.n_qubits
        t = _apply_to_axes(self._tensor(), u, qubits)
        t = _apply_to_axes(t, u.conj(), [q + n for q in qubits])
        self.rho = t.reshape(self.rho.shape)

    def depolarise(self, qubit: int, p: float) -> None:
        _check_qubits([qubit], self.n_qubits)
        if p == 0:
            return
        n = self.n_qubits
        dim = 1 << n
        lo = 1 << (n - 1 - qubit)
        hi = dim // (2 * lo)
        t = self.rho.reshape(hi, 2, lo, hi, 2, lo)
        reduced = t[:, 0, :, :, 0, :] + t[:, 1, :, :, 1, :]
        out = (1 - p) * t
        out[:, 0, :, :, 0, :] += 0.5 * p * reduced
        out[:, 1, :, :, 1, :] += 0.5 * p * reduced
        self.rho = out.reshape(dim, dim)

    def global_depolarise(self, eps: float) -> None:
        dim = self.rho.shape[0]
        self.rho = (1 - eps) * self.rho + eps * np.eye(dim) / dim

    def probabilities(self) -> np.ndarray:
        return np.clip(np.diagonal(self.rho).real, 0.0, None)

    def trace(self) -> float:
        return float(np.trace(self.rho).real)

    def purity(self) -> float:
        return float(np.vdot(self.rho, self.rho).real)

    def expectation(self, op) -> complex:
        """``tr(op rho)`` for a dense or sparse operator."""
        return complex(np.sum((op @ self.rho).diagonal()))

    def project(self, mask: np.ndarray) -> float:
        """Keep the basis states in ``mask``; return the retained weight."""
        keep = mask.astype(float)
        self.rho = self.rho * np.outer(keep, keep)
        return self.trace()

    def scale(self, factor: float) -> None:
        self.rho = self.rho * factor


# -- operations -------------------------------------------------------------


def apply_gate(state, gate: Gate):
    """Apply ``gate`` in place and return the state."""
    state.apply_unitary(gate.matrix(), gate.qubits)
    return state


def apply_depolarising(state, qubit: int, p: float):
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"depolarising rate must lie in [0, 1], got {p}")
    if isinstance(state, PureState):
        raise TypeError("depolarising noise needs a density-matrix state")
    state.depolarise(qubit, p)
    return state


def pauli_twirl_depolarise(rho: np.ndarray, qubit: int, p: float, n: int) -> np.ndarray:
    """``(1 - 3p/4) rho + p/4 (X rho X + Y rho Y + Z rho Z)`` on one qubit.

    Used as an independent check of :meth:`DensityState.depolarise`.
    """
    out = (1 - 0.75 * p) * rho
    for pauli in PAULIS:
        full = np.kron(np.kron(np.eye(1 << qubit), pauli), np.eye(1 << (n - 1 - qubit)))
        out = out + 0.25 * p * full @ rho @ full.conj().T
    return out


def run_noisy(circuit: QubitCircuit, noise: NoiseModel, initial):
    """Run ``circuit`` on a copy of ``initial``; noisy two-qubit gates are followed
    by depolarising noise on both of their qubits."""
    if initial.n_qubits != circuit.n_qubits:
        raise ValueError(f"state has {initial.n_qubits} qubits, circuit {circuit.n_qubits}")
    if noise.p > 0 and isinstance(initial, PureState):
        raise TypeError("noisy evolution needs a density-matrix state")
    state = initial.copy()
    for gate in circuit.gates:
        state.apply_unitary(gate.matrix(), gate.qubits)
        if noise.p > 0 and gate.is_two_qubit and gate.noisy:
            for q in gate.qubits:
                state.depolarise(q, noise.p)
    return state


def run_pure(circuit: QubitCircuit, initial: PureState | None = None) -> PureState:
    state = PureState.zero(circuit.n_qubits) if initial is None else initial.copy()
    for gate in circuit.gates:
        state.apply_unitary(gate.matrix(), gate.qubits)
    return state


def global_depolarise(state, eps: float):
    """Return ``(1 - eps) rho + eps I/d`` as a new state."""
    if not 0.0 <= eps <= 1.0:
        raise ValueError(f"eps must lie in [0, 1], got {eps}")
    if isinstance(state, PureState):
        state = state.to_density()
    else:
        state = state.copy()
    state.global_depolarise(eps)
    return state


def sector_mask(geometry: LatticeGeometry, eta_up: int, eta_down: int) -> np.ndarray:
    ns = geometry.n_sites
    idx = np.arange(1 << (2 * ns), dtype=np.int64)
    up = fock.popcount(idx >> ns)
    down = fock.popcount(idx & ((1 << ns) - 1))
    return (up == eta_up) & (down == eta_down)


def postselect_occupation(state, geometry: LatticeGeometry, eta_up: int, eta_down: int):
    """Project onto the sector; return ``(normalised state, acceptance probability)``."""
    if isinstance(state, PureState):
        state = state.to_density()
    out = state.copy()
    if hasattr(out, "postselect"):
        accept = out.postselect(eta_up, eta_down)
    else:
        accept = out.project(sector_mask(geometry, eta_up, eta_down))
    if accept < MIN_ACCEPT:
        raise UnsampleableError(f"acceptance probability {accept:.3g} is too small to sample")
    out.scale(1.0 / accept)
    return out, float(accept)


# -- measurement ------------------------------------------------------------


@dataclass(frozen=True)
class MeasurementGroup:
    """Terms measured together after ``basis_change``, with per-outcome values."""

    kind: str
    terms: tuple[tuple[int, int, float], ...]
    basis_change: tuple[Gate, ...]

    def outcome_values(self, n: int) -> np.ndarray:
        idx = np.arange(1 << n, dtype=np.int64)
        values = np.zeros(idx.size)
        if self.kind == "diagonal":
            for j, k, c in self.terms:
                values += c * (fock.bit(idx, j, n) & fock.bit(idx, k, n))
            return values
        lam = _hopping_outcome_values()
        for j, k, c in self.terms:
            local = 2 * fock.bit(idx, j, n) + fock.bit(idx, k, n)
            parity = np.zeros_like(idx)
            for m in range(j + 1, k):
                parity ^= fock.bit(idx, m, n)
            values += c * lam[local] * (1 - 2 * parity)
        return values


def _hopping_outcome_values() -> np.ndarray:
    v = gate_matrix("HOPBASIS")
    hop = np.zeros((4, 4))
    hop[1, 2] = hop[2, 1] = 1.0
    rotated = v @ hop @ v.conj().T
    if not np.allclose(rotated, np.diag(np.diagonal(rotated)), atol=1e-12):
        raise AssertionError("HOPBASIS does not diagonalise the hopping operator")
    return np.diagonal(rotated).real.copy()


def measurement_groups(H: HubbardHamiltonian) -> list[MeasurementGroup]:
    """One computational-basis group for the onsite terms, then greedy groups
    of hopping terms whose pairs avoid every other term's pair and JW string."""
    groups = []
    if H.onsite_terms:
        groups.append(MeasurementGroup("diagonal", tuple(H.onsite_terms), ()))
    pending = list(H.hopping_terms)
    while pending:
        chosen, pairs, strings, rest = [], set(), set(), []
        for j, k, c in pending:
            pair = {j, k}
            string = set(range(j + 1, k))
            if pair & (pairs | strings) or string & pairs:
                rest.append((j, k, c))
                continue
            chosen.append((j, k, c))
            pairs |= pair
            strings |= string
        basis = tuple(Gate("HOPBASIS", (j, k), noisy=False) for j, k, _ in chosen)
        groups.append(MeasurementGroup("hopping", tuple(chosen), basis))
        pending = rest
    return groups


def _group_probabilities(state, group: MeasurementGroup, measurement_noise: float = 0.0) -> np.ndarray:
    if not group.basis_change:
        return state.probabilities()
    if hasattr(state, "rotated_probabilities") and measurement_noise == 0:
        return state.rotated_probabilities([(g.matrix(), g.qubits) for g in group.basis_change])
    if measurement_noise == 0:
        work = state.copy()
        for g in group.basis_change:
            work.apply_unitary(g.matrix(), g.qubits)
        return work.probabilities()
    if isinstance(state, PureState):
        raise TypeError("noisy measurement needs a density-matrix state")
    steps = []
    for g in group.basis_change:
        # the rotation is three two-qubit gates on hardware
        q0, q1 = g.qubits
        for kind, qs in (("CNOT", (q0, q1)), ("CH", (q1, q0)), ("CNOT", (q0, q1))):
            steps.append(("gate", gate_matrix(kind), qs))
            steps.extend(("depolarise", q, measurement_noise) for q in qs)
    if hasattr(state, "channel_probabilities"):
        return state.channel_probabilities(steps)
    work = state.copy()
    for step in steps:
        if step[0] == "gate":
            work.apply_unitary(step[1], step[2])
        else:
            work.depolarise(step[1], step[2])
    return work.probabilities()


def _accept_mask(n: int, postselect) -> np.ndarray | None:
    if postselect is None:
        return None
    ns = n // 2
    return sector_mask(LatticeGeometry(ns, 1), *postselect)


@dataclass(frozen=True)
class EnergyEstimate:
    value: float
    shots_used: int
    shots_discarded: int = 0
    stderr: float = float("nan")

    def __post_init__(self):
        if self.shots_used < 1:
            raise ValueError("an estimate needs at least one shot")


def _sample_counts(probs, shots, rng, accept):
    """Multinomial counts of ``shots`` accepted outcomes, redrawing rejects."""
    total = probs.sum()
    probs = probs / total
    if accept is None:
        return rng.multinomial(shots, probs), 0
    accept_prob = probs[accept].sum()
    if accept_prob < MIN_ACCEPT:
        raise UnsampleableError(f"acceptance probability {accept_prob:.3g} is too small to sample")
    counts = np.zeros(probs.size, dtype=np.int64)
    need, discarded = shots, 0
    while need > 0:
        draw = rng.multinomial(need, probs)
        good = np.where(accept, draw, 0)
        got = int(good.sum())
        counts += good
        discarded += need - got
        need -= got
    return counts, discarded


def estimate_energy(
    state,
    H: HubbardHamiltonian,
    shots: int,
    seed,
    postselect: tuple[int, int] | None = None,
    measurement_noise: float = 0.0,
    groups: list[MeasurementGroup] | None = None,
) -> EnergyEstimate:
    """Shot-based energy estimate; deterministic given ``(state, shots, seed)``.

    Shots are shared equally between measurement groups with the remainder
    going to the first. With ``postselect=(eta_up, eta_down)`` outcomes with
    the wrong spin populations are discarded and redrawn.
    """
    groups = measurement_groups(H) if groups is None else groups
    if shots < len(groups):
        raise ValueError(f"{shots} shots cannot cover {len(groups)} measurement groups")
    n = state.n_qubits
    rng = np.random.default_rng(seed)
    accept = _accept_mask(n, postselect)
    base, extra = divmod(shots, len(groups))
    value, var, discarded = 0.0, 0.0, 0
    for i, group in enumerate(groups):
        m = base + (extra if i == 0 else 0)
        probs = _group_probabilities(state, group, measurement_noise)
        counts, d = _sample_counts(probs, m, rng, accept)
        discarded += d
        vals = group.outcome_values(n)
        mean = float(counts @ vals) / m
        value += mean
        var += float(counts @ (vals - mean) ** 2) / max(m - 1, 1) / m
    return EnergyEstimate(value, shots, discarded, float(np.sqrt(var)))


def expected_energy(
    state,
    H: HubbardHamiltonian,
    postselect: tuple[int, int] | None = None,
    measurement_noise: float = 0.0,
    groups: list[MeasurementGroup] | None = None,
) -> float:
    """Infinite-shot limit of :func:`estimate_energy`."""
    groups = measurement_groups(H) if groups is None else groups
    n = state.n_qubits
    accept = _accept_mask(n, postselect)
    total = 0.0
    for group in groups:
        probs = _group_probabilities(state, group, measurement_noise)
        if accept is not None:
            probs = np.where(accept, probs, 0.0)
        mass = probs.sum()
        if mass < MIN_ACCEPT:
            raise UnsampleableError("no weight in the postselected sector")
        total += float(probs @ group.outcome_values(n)) / mass
    return total
