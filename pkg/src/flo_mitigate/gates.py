"""Gate set of the qubit simulators.

Two-qubit matrices are written in the basis ``|q0 q1>`` with the first qubit
of ``Gate.qubits`` as the more significant bit; for controlled gates that is
the control.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

ONE_QUBIT = frozenset({"I", "X", "Y", "Z", "H", "RX", "RY", "RZ"})
TWO_QUBIT = frozenset(
    {"CNOT", "CRX", "CRY", "CRZ", "CPHASE", "CH", "HOP", "GIVENS", "FSWAP", "HOPBASIS"}
)
PARAMETRIC = frozenset({"RX", "RY", "RZ", "CRX", "CRY", "CRZ", "CPHASE", "HOP", "GIVENS"})

_I = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.diag([1.0, -1.0]).astype(complex)
_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_P0 = np.diag([1.0, 0.0]).astype(complex)
_P1 = np.diag([0.0, 1.0]).astype(complex)

PAULIS = (_X, _Y, _Z)


def rx(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]])


def ry(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rz(theta: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


def controlled(u: np.ndarray) -> np.ndarray:
    return np.kron(_P0, _I) + np.kron(_P1, u)


_CNOT = controlled(_X)
_CH_REVERSED = np.kron(_I, _P0) + np.kron(_H, _P1)  # control on the second qubit
_FSWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, -1]], dtype=complex)
# CNOT(0->1), H on qubit 0 controlled by qubit 1, CNOT(0->1): rotates the
# hopping eigenbasis (|01> +- |10>)/sqrt2 onto computational states
_HOPBASIS = _CNOT @ _CH_REVERSED @ _CNOT


@lru_cache(maxsize=None)
def _fixed(kind: str) -> np.ndarray:
    table = {
        "I": _I, "X": _X, "Y": _Y, "Z": _Z, "H": _H,
        "CNOT": _CNOT, "CH": controlled(_H), "FSWAP": _FSWAP, "HOPBASIS": _HOPBASIS,
    }
    m = table[kind].copy()
    m.setflags(write=False)
    return m


def gate_matrix(kind: str, angle: float = 0.0) -> np.ndarray:
    if kind in ("I", "X", "Y", "Z", "H", "CNOT", "CH", "FSWAP", "HOPBASIS"):
        return _fixed(kind)
    if kind == "RX":
        return rx(angle)
    if kind == "RY":
        return ry(angle)
    if kind == "RZ":
        return rz(angle)
    if kind == "CRX":
        return controlled(rx(angle))
    if kind == "CRY":
        return controlled(ry(angle))
    if kind == "CRZ":
        return controlled(rz(angle))
    if kind == "CPHASE":
        return np.diag([1, 1, 1, np.exp(1j * angle)])
    if kind == "HOP":
        # exp(i angle (|01><10| + |10><01|)) = exp(i angle (a_j^dag a_k + h.c.))
        c, s = np.cos(angle), np.sin(angle)
        return np.array([[1, 0, 0, 0], [0, c, 1j * s, 0], [0, 1j * s, c, 0], [0, 0, 0, 1]])
    if kind == "GIVENS":
        # a_j^dag -> c a_j^dag + s a_k^dag, a_k^dag -> -s a_j^dag + c a_k^dag
        c, s = np.cos(angle), np.sin(angle)
        return np.array([[1, 0, 0, 0], [0, c, s, 0], [0, -s, c, 0], [0, 0, 0, 1]], dtype=complex)
    raise ValueError(f"unknown gate kind {kind!r}")


@dataclass(frozen=True)
class Gate:
    kind: str
    qubits: tuple[int, ...]
    angle: float = 0.0
    noisy: bool = True

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if self.kind in ONE_QUBIT:
            expected = 1
        elif self.kind in TWO_QUBIT:
            expected = 2
        else:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if len(self.qubits) != expected:
            raise ValueError(f"{self.kind} acts on {expected} qubit(s), got {self.qubits}")
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError(f"{self.kind} needs distinct qubits, got {self.qubits}")
        if not np.isfinite(self.angle):
            raise ValueError("gate angle must be finite")

    @property
    def is_two_qubit(self) -> bool:
        return len(self.qubits) == 2

    def matrix(self) -> np.ndarray:
        return gate_matrix(self.kind, self.angle)


@dataclass(frozen=True)
class QubitCircuit:
    n_qubits: int
    gates: tuple[Gate, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            if max(g.qubits) >= self.n_qubits or min(g.qubits) < 0:
                raise ValueError(f"gate {g} exceeds {self.n_qubits} qubits")

    def __add__(self, other: "QubitCircuit") -> "QubitCircuit":
        if other.n_qubits != self.n_qubits:
            raise ValueError("circuits act on different numbers of qubits")
        return QubitCircuit(self.n_qubits, self.gates + other.gates)

    def __len__(self) -> int:
        return len(self.gates)

    @property
    def two_qubit_count(self) -> int:
        return sum(g.is_two_qubit for g in self.gates)

    def depth(self) -> int:
        level = [0] * self.n_qubits
        for g in self.gates:
            d = max(level[q] for q in g.qubits) + 1
            for q in g.qubits:
                level[q] = d
        return max(level, default=0)
