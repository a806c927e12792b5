"""Polynomial-time simulation of number-preserving fermionic linear optics.

A state ``prod_r (sum_j A_rj a_j^dag) |vac>`` is stored as its ``eta x n``
coefficient matrix ``A``. Evolution by ``exp(-i t sum h_jk a_j^dag a_k)``
maps every row through ``u = exp(-i h t)``; amplitudes are minors of ``A``
and observables on O(1) modes reduce to determinants.

Two routes to expectation values are provided. ``method="wick"`` contracts
the one-body density matrix. ``method="decomposition"`` writes the observable
as a signed sum of products of ``b^dag b`` operators for linear combinations
``b^dag`` of creation operators and evaluates each product as a determinant
overlap; it needs nothing beyond the determinant formula for amplitudes.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field

import numpy as np

from .lattice import HubbardHamiltonian

HERMITIAN_TOL = 1e-12
ORTHONORMAL_TOL = 1e-10


class DegenerateFermiLevelWarning(UserWarning):
    """The requested ground state is not unique."""


def _check_hermitian(h: np.ndarray, tol: float = HERMITIAN_TOL) -> np.ndarray:
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {h.shape}")
    if not np.allclose(h, h.conj().T, atol=tol, rtol=0):
        raise ValueError("matrix is not hermitian")
    return h


@dataclass(frozen=True, eq=False)
class QuadraticGenerator:
    h: np.ndarray
    time: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "h", _check_hermitian(self.h))

    @property
    def n_modes(self) -> int:
        return self.h.shape[0]

    def unitary(self) -> np.ndarray:
        """``exp(-i h t)`` through the eigendecomposition of ``h``."""
        w, v = np.linalg.eigh(self.h)
        return (v * np.exp(-1j * w * self.time)) @ v.conj().T

    @classmethod
    def two_mode(cls, n: int, j: int, k: int, coefficient: complex, time: float = 1.0):
        """Generator ``c a_j^dag a_k + conj(c) a_k^dag a_j``."""
        h = np.zeros((n, n), dtype=complex)
        h[j, k] = coefficient
        h[k, j] = np.conj(coefficient)
        return cls(h, time)


@dataclass(frozen=True, eq=False)
class SlaterState:
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        a = np.asarray(self.coeffs, dtype=complex)
        if a.ndim != 2:
            raise ValueError("coefficient matrix must be two-dimensional")
        eta, n = a.shape
        if eta > n:
            raise ValueError(f"{eta} particles do not fit in {n} modes")
        if not np.allclose(a @ a.conj().T, np.eye(eta), atol=ORTHONORMAL_TOL, rtol=0):
            raise ValueError("rows of the coefficient matrix are not orthonormal")
        object.__setattr__(self, "coeffs", a)

    @property
    def n_particles(self) -> int:
        return self.coeffs.shape[0]

    @property
    def n_modes(self) -> int:
        return self.coeffs.shape[1]

    @classmethod
    def from_occupied(cls, modes, n: int) -> "SlaterState":
        """The basis state ``a_{m_1}^dag ... a_{m_eta}^dag |vac>``."""
        a = np.zeros((len(modes), n), dtype=complex)
        for r, m in enumerate(modes):
            a[r, m] = 1.0
        return cls(a)

    @classmethod
    def vacuum(cls, n: int) -> "SlaterState":
        return cls(np.zeros((0, n), dtype=complex))

    @classmethod
    def product(cls, *states: "SlaterState") -> "SlaterState":
        """Stack states living on disjoint, consecutive blocks of modes."""
        n = sum(s.n_modes for s in states)
        eta = sum(s.n_particles for s in states)
        a = np.zeros((eta, n), dtype=complex)
        r = c = 0
        for s in states:
            a[r : r + s.n_particles, c : c + s.n_modes] = s.coeffs
            r += s.n_particles
            c += s.n_modes
        return cls(a)


@dataclass(frozen=True, eq=False)
class OneBodyRdm:
    """``D[j, k] = <a_j^dag a_k>``."""

    matrix: np.ndarray = field(repr=False)

    @property
    def n_particles(self) -> float:
        return float(np.trace(self.matrix).real)


def ground_state(h: np.ndarray, eta: int) -> SlaterState:
    """Fill the ``eta`` lowest single-particle orbitals of ``h``."""
    h = _check_hermitian(h)
    n = h.shape[0]
    if not 0 <= eta <= n:
        raise ValueError(f"cannot place {eta} particles in {n} modes")
    w, v = np.linalg.eigh(h)
    order = np.argsort(w, kind="stable")
    w, v = w[order], v[:, order]
    if 0 < eta < n and abs(w[eta] - w[eta - 1]) < 1e-9:
        warnings.warn(
            f"orbital {eta - 1} and {eta} are degenerate (E={w[eta - 1]:.6g}); ground state is not unique",
            DegenerateFermiLevelWarning,
            stacklevel=2,
        )
    # b_r^dag = sum_k V_kr a_k^dag, so row r of A is column r of V
    return SlaterState(v[:, :eta].T.copy())


def ground_state_energy(h: np.ndarray, eta: int) -> float:
    w = np.linalg.eigvalsh(_check_hermitian(h))
    return float(np.sum(w[:eta]))


def evolve(state: SlaterState, g: QuadraticGenerator) -> SlaterState:
    if g.n_modes != state.n_modes:
        raise ValueError(f"generator acts on {g.n_modes} modes, state has {state.n_modes}")
    u = g.unitary()
    return SlaterState(state.coeffs @ u.T)


def overlap(state: SlaterState, occupied) -> complex:
    """Amplitude of ``a_S^dag |vac>`` (ascending order) in ``state``: ``det A_S``."""
    cols = sorted(int(m) for m in occupied)
    if len(cols) != state.n_particles:
        raise ValueError(f"|S|={len(cols)} but the state has {state.n_particles} particles")
    if len(set(cols)) != len(cols):
        raise ValueError("occupied modes must be distinct")
    if not cols:
        return 1.0 + 0j
    return complex(np.linalg.det(state.coeffs[:, cols]))


def slater_overlap(bra: SlaterState, ket: SlaterState) -> complex:
    """``<bra|ket>`` for two determinants of equal particle number."""
    if bra.coeffs.shape != ket.coeffs.shape:
        raise ValueError("states must have the same shape")
    if bra.n_particles == 0:
        return 1.0 + 0j
    return complex(np.linalg.det(bra.coeffs.conj() @ ket.coeffs.T))


def one_body_rdm(state: SlaterState) -> OneBodyRdm:
    a = state.coeffs
    return OneBodyRdm(a.conj().T @ a)


def expect_number_products(state: SlaterState, vectors) -> complex:
    """``<prod_r b_r^dag b_r>`` (operator order left to right) where
    ``b_r^dag = sum_j v_rj a_j^dag``.

    ``1 + b^dag b`` is the exponential of a quadratic operator with
    single-particle matrix ``I + v v^dag``, so ``<prod_{r in T}(1 + b_r^dag b_r)>``
    is a determinant overlap for every subset ``T``; the product itself is
    recovered by inclusion-exclusion over the subsets.
    """
    vectors = [np.asarray(v, dtype=complex) for v in vectors]
    n = state.n_modes
    a = state.coeffs
    m = len(vectors)
    total = 0j
    for size in range(m + 1):
        for subset in itertools.combinations(range(m), size):
            mat = np.eye(n, dtype=complex)
            for r in subset:
                mat = mat @ (np.eye(n) + np.outer(vectors[r], vectors[r].conj()))
            if state.n_particles:
                value = np.linalg.det(a.conj() @ mat @ a.T)
            else:
                value = 1.0
            total += (-1) ** (m - size) * value
    return complex(total)


def _unit(n: int, j: int) -> np.ndarray:
    e = np.zeros(n, dtype=complex)
    e[j] = 1.0
    return e


def _check_pair(state: SlaterState, j: int, k: int):
    if j == k:
        raise ValueError("modes must differ")
    for m in (j, k):
        if not 0 <= m < state.n_modes:
            raise ValueError(f"mode {m} out of range")


def expect_hopping(state: SlaterState, j: int, k: int, method: str = "wick") -> float:
    """``<a_j^dag a_k + a_k^dag a_j>``."""
    _check_pair(state, j, k)
    if method == "wick":
        d = one_body_rdm(state).matrix
        return float(2 * d[j, k].real)
    if method == "decomposition":
        n = state.n_modes
        ej, ek = _unit(n, j), _unit(n, k)
        plus = expect_number_products(state, [ej + ek])
        minus = expect_number_products(state, [ej - ek])
        return float(0.5 * (plus - minus).real)
    raise ValueError(f"unknown method {method!r}")


def expect_onsite_pair(state: SlaterState, j: int, k: int, method: str = "wick") -> float:
    """``<n_j n_k>``."""
    _check_pair(state, j, k)
    if method == "wick":
        d = one_body_rdm(state).matrix
        return float((d[j, j] * d[k, k] - d[j, k] * d[k, j]).real)
    if method == "decomposition":
        n = state.n_modes
        return float(expect_number_products(state, [_unit(n, j), _unit(n, k)]).real)
    raise ValueError(f"unknown method {method!r}")


def expect_double_hopping(state: SlaterState, j: int, k: int, p: int, q: int) -> complex:
    """``<a_j^dag a_k a_p^dag a_q + a_k^dag a_j a_q^dag a_p>`` from four products of
    ``(a^dag + z a^dag)(a + conj(z) a)`` factors, ``z`` in ``{1, -1, i, -i}``.

    The signed sum of the four products equals four times the operator;
    the identity needs four distinct modes.
    """
    _check_pair(state, j, k)
    _check_pair(state, p, q)
    if len({j, k, p, q}) != 4:
        raise ValueError("double hopping needs four distinct modes")
    n = state.n_modes
    ej, ek, ep, eq = (_unit(n, m) for m in (j, k, p, q))
    total = 0j
    for z, sign in ((1, 1), (-1, 1), (1j, -1), (-1j, -1)):
        total += sign * expect_number_products(state, [ej + z * ek, ep + z * eq])
    return total / 4


def quadratic_energy(state: SlaterState, h: np.ndarray) -> float:
    d = one_body_rdm(state).matrix
    return float(np.sum(np.asarray(h) * d).real)


def flo_energy(state: SlaterState, H: HubbardHamiltonian, method: str = "wick") -> float:
    """Energy of a determinant, term by term."""
    if state.n_modes != H.n_modes:
        raise ValueError(f"state has {state.n_modes} modes, Hamiltonian {H.n_modes}")
    if method == "wick":
        d = one_body_rdm(state).matrix
        e = sum(c * 2 * d[j, k].real for j, k, c in H.hopping_terms)
        e += sum(c * (d[j, j] * d[k, k] - d[j, k] * d[k, j]).real for j, k, c in H.onsite_terms)
        return float(e)
    e = sum(c * expect_hopping(state, j, k, method) for j, k, c in H.hopping_terms)
    e += sum(c * expect_onsite_pair(state, j, k, method) for j, k, c in H.onsite_terms)
    return float(e)
