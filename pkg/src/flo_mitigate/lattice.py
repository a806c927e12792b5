"""Rectangular lattices and the Fermi-Hubbard Hamiltonian.

Modes are ordered spin-up first, then spin-down; inside each spin sector the
sites are numbered row-major (``y * nx + x``). Boundaries are open.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from . import fock


class Spin(IntEnum):
    UP = 0
    DOWN = 1

    @classmethod
    def parse(cls, value) -> "Spin":
        if isinstance(value, str):
            return cls[value.upper()]
        return cls(value)


@dataclass(frozen=True)
class LatticeGeometry:
    nx: int
    ny: int

    def __post_init__(self):
        for name in ("nx", "ny"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")

    @property
    def n_sites(self) -> int:
        return self.nx * self.ny

    @property
    def n_modes(self) -> int:
        return 2 * self.n_sites

    def site(self, x: int, y: int) -> int:
        if not (0 <= x < self.nx and 0 <= y < self.ny):
            raise ValueError(f"site ({x}, {y}) outside {self.nx}x{self.ny} lattice")
        return y * self.nx + x

    def coords(self, site: int) -> tuple[int, int]:
        return site % self.nx, site // self.nx

    def horizontal_edges(self) -> list[tuple[int, int]]:
        return [
            (self.site(x, y), self.site(x + 1, y))
            for y in range(self.ny)
            for x in range(self.nx - 1)
        ]

    def vertical_edges(self) -> list[tuple[int, int]]:
        return [
            (self.site(x, y), self.site(x, y + 1))
            for y in range(self.ny - 1)
            for x in range(self.nx)
        ]

    def edges(self) -> list[tuple[int, int]]:
        return self.horizontal_edges() + self.vertical_edges()

    def adjacent(self, s1: int, s2: int) -> bool:
        (x1, y1), (x2, y2) = self.coords(s1), self.coords(s2)
        return abs(x1 - x2) + abs(y1 - y2) == 1


def mode_index(geometry: LatticeGeometry, site: tuple[int, int], spin) -> int:
    """Mode (and Jordan-Wigner qubit) of ``site = (x, y)`` with the given spin."""
    x, y = site
    return Spin.parse(spin) * geometry.n_sites + geometry.site(x, y)


@dataclass(frozen=True)
class HubbardParams:
    t: float = 1.0
    U: float = 2.0

    def __post_init__(self):
        if not (np.isfinite(self.t) and np.isfinite(self.U)):
            raise ValueError("Hubbard parameters must be finite")


@dataclass(frozen=True, eq=False)
class HubbardHamiltonian:
    geometry: LatticeGeometry
    params: HubbardParams
    hopping_terms: tuple[tuple[int, int, float], ...]
    onsite_terms: tuple[tuple[int, int, float], ...]
    quadratic_matrix: np.ndarray = field(repr=False)

    @property
    def n_modes(self) -> int:
        return self.geometry.n_modes

    @property
    def n_sites(self) -> int:
        return self.geometry.n_sites

    def sector_matrix(self, spin) -> np.ndarray:
        """Hopping matrix of one spin sector (``n_sites x n_sites``)."""
        ns = self.n_sites
        off = Spin.parse(spin) * ns
        return self.quadratic_matrix[off : off + ns, off : off + ns]

    def trace(self) -> float:
        """``tr H`` over the full Fock space: hopping terms are traceless and
        each ``n_j n_k`` contributes a quarter of the dimension."""
        return sum(c for _, _, c in self.onsite_terms) * (1 << self.n_modes) / 4

    def sector_trace_over_dim(self, eta_up: int, eta_down: int) -> float:
        """``tr(P H P) / tr P`` for the projector on a fixed-occupation sector."""
        ns = self.n_sites
        return sum(c for _, _, c in self.onsite_terms) * (eta_up / ns) * (eta_down / ns)

    def sparse_operator(self) -> sp.csr_matrix:
        """The many-body Hamiltonian on all ``2**n_modes`` basis states."""
        n = self.n_modes
        op = fock.quadratic_operator(self.quadratic_matrix)
        for j, k, c in self.onsite_terms:
            op = op + c * (fock.number(j, n) @ fock.number(k, n))
        return op.tocsr()


def build_hubbard(geometry: LatticeGeometry, params: HubbardParams) -> HubbardHamiltonian:
    ns = geometry.n_sites
    h = np.zeros((geometry.n_modes, geometry.n_modes))
    hopping = []
    for spin in Spin:
        off = spin * ns
        for s1, s2 in geometry.edges():
            j, k = sorted((off + s1, off + s2))
            hopping.append((j, k, -params.t))
            h[j, k] = h[k, j] = -params.t
    onsite = tuple((s, ns + s, params.U) for s in range(ns))
    return HubbardHamiltonian(geometry, params, tuple(hopping), onsite, h)


def exact_ground_energy(H: HubbardHamiltonian, eta_up: int, eta_down: int, max_dim: int = 20000) -> float:
    """Lowest eigenvalue of ``H`` in the sector with the given spin populations,
    by dense diagonalisation in the occupation basis."""
    ns = H.n_sites
    if not (0 <= eta_up <= ns and 0 <= eta_down <= ns):
        raise ValueError("occupations must lie in [0, n_sites]")
    if H.n_modes > 24:
        raise ValueError("lattice too large for brute-force diagonalisation")
    idx = fock.sector_indices(ns, eta_up, eta_down)
    if len(idx) > max_dim:
        raise ValueError(f"sector dimension {len(idx)} exceeds {max_dim}")
    block = H.sparse_operator()[idx][:, idx].toarray()
    return float(scipy.linalg.eigvalsh(block)[0])
