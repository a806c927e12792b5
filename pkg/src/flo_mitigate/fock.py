"""Dense Jordan-Wigner representation of fermionic operators.

Mode ``j`` is qubit ``j``; qubit 0 is the most significant bit of a basis
index, so the occupation string ``x_0 x_1 ... x_{n-1}`` read as a binary
number is the index of the basis state ``a_{S}^dag |vac>`` (creation
operators in ascending mode order).

Everything here is brute force over the ``2**n`` Fock space. It is used to
diagonalise small Hubbard instances and as an oracle for the fast routines.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
import scipy.sparse as sp


def bit(index: np.ndarray | int, qubit: int, n: int):
    """Occupation of ``qubit`` in basis state ``index`` (qubit 0 is the MSB)."""
    return (index >> (n - 1 - qubit)) & 1


def popcount(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=np.int64)
    out = np.zeros_like(values)
    v = values.copy()
    while np.any(v):
        out += v & 1
        v >>= 1
    return out


@lru_cache(maxsize=64)
def _annihilation(j: int, n: int) -> sp.csr_matrix:
    dim = 1 << n
    idx = np.arange(dim, dtype=np.int64)
    occupied = bit(idx, j, n) == 1
    src = idx[occupied]
    dst = src ^ (1 << (n - 1 - j))
    # JW string: parity of the modes below j
    below = src >> (n - j)
    sign = np.where(popcount(below) % 2 == 0, 1.0, -1.0)
    return sp.csr_matrix((sign, (dst, src)), shape=(dim, dim))


def annihilation(j: int, n: int) -> sp.csr_matrix:
    """Sparse matrix of ``a_j`` on ``n`` modes."""
    if not 0 <= j < n:
        raise ValueError(f"mode {j} out of range for {n} modes")
    return _annihilation(j, n)


def creation(j: int, n: int) -> sp.csr_matrix:
    return annihilation(j, n).T.tocsr()


def number(j: int, n: int) -> sp.csr_matrix:
    dim = 1 << n
    occ = bit(np.arange(dim, dtype=np.int64), j, n).astype(float)
    return sp.diags(occ).tocsr()


def quadratic_operator(h: np.ndarray) -> sp.csr_matrix:
    """Many-body operator ``sum_jk h_jk a_j^dag a_k``."""
    h = np.asarray(h)
    n = h.shape[0]
    dim = 1 << n
    out = sp.csr_matrix((dim, dim), dtype=complex)
    for j, k in zip(*np.nonzero(h)):
        out = out + h[j, k] * (creation(j, n) @ annihilation(k, n))
    return out.tocsr()


def vacuum(n: int) -> np.ndarray:
    psi = np.zeros(1 << n, dtype=complex)
    psi[0] = 1.0
    return psi


def slater_statevector(coeffs: np.ndarray) -> np.ndarray:
    """Expand ``prod_r (sum_j A_rj a_j^dag) |vac>`` into the Fock basis.

    The leftmost factor (row 0) is applied last, matching the written order.
    """
    coeffs = np.atleast_2d(np.asarray(coeffs, dtype=complex))
    eta, n = coeffs.shape
    psi = vacuum(n)
    if coeffs.size == 0:
        return psi
    for r in reversed(range(eta)):
        op = sp.csr_matrix((1 << n, 1 << n), dtype=complex)
        for j in range(n):
            if coeffs[r, j] != 0:
                op = op + coeffs[r, j] * creation(j, n)
        psi = op @ psi
    return psi


def sector_indices(n_sites: int, eta_up: int, eta_down: int) -> np.ndarray:
    """Basis indices with ``eta_up`` particles on the first ``n_sites`` modes
    and ``eta_down`` on the remaining ``n_sites``."""
    n = 2 * n_sites
    idx = np.arange(1 << n, dtype=np.int64)
    up = popcount(idx >> n_sites)
    down = popcount(idx & ((1 << n_sites) - 1))
    return idx[(up == eta_up) & (down == eta_down)]
