"""Density matrices that are block-diagonal in the spin-sector occupations.

Number-conserving gates, diagonal gates and single-qubit depolarising noise
all map a density matrix with no coherence between different
``(n_up, n_down)`` sectors to another such matrix. Storing only those blocks
shrinks the 12-qubit state from ``4096**2`` to ``924**2`` entries.

Layout: ``rho = sum R[(i, k), (j, l)] |i><k| (x) |j><l|`` with ``i, k``
spin-up configurations of equal weight and ``j, l`` spin-down configurations
of equal weight. ``R`` is a dense matrix over these "pair" indices; an
operator on the spin-up qubits acts from the left and one on the spin-down
qubits from the right.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from . import fock
from .noisy import _apply_to_axes

try:
    import numba
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None

TOL = 1e-12
# queued superoperators are multiplied together until they reach this many
# nonzeros per row, then applied to R in one pass
FUSE_LIMIT = 8


def _diagonal_planes_py(code, table, planes, transposed):
    factor = table[code.T if transposed else code]
    re, im = planes.copy()
    planes[0] = re * factor.real - im * factor.imag
    planes[1] = re * factor.imag + im * factor.real


def _csr_planes_py(op: sp.csr_matrix, planes: np.ndarray) -> np.ndarray:
    z = np.asarray(op @ (planes[0] + 1j * planes[1]))
    return np.stack([z.real, z.imag])


_diagonal_planes, _csr_planes = _diagonal_planes_py, _csr_planes_py

if numba is not None:

    @numba.njit(cache=True, fastmath=True, nogil=True)
    def _csr_planes_kernel(indptr, indices, d_re, d_im, src, out):
        # real and imaginary parts in separate planes so the inner loop vectorises
        width = src.shape[2]
        for r in range(indptr.size - 1):
            out[0, r, :] = 0.0
            out[1, r, :] = 0.0
            for idx in range(indptr[r], indptr[r + 1]):
                vr = d_re[idx]
                vi = d_im[idx]
                s = indices[idx]
                for c in range(width):
                    a = src[0, s, c]
                    b = src[1, s, c]
                    out[0, r, c] += vr * a - vi * b
                    out[1, r, c] += vr * b + vi * a

    @numba.njit(cache=True, nogil=True)
    def _diagonal_planes_kernel(code, t_re, t_im, planes, transposed):
        n = code.shape[0]
        for r in range(n):
            for c in range(n):
                k = code[c, r] if transposed else code[r, c]
                a = planes[0, r, c]
                b = planes[1, r, c]
                planes[0, r, c] = a * t_re[k] - b * t_im[k]
                planes[1, r, c] = a * t_im[k] + b * t_re[k]

    def _diagonal_planes(code, table, planes, transposed):
        _diagonal_planes_kernel(code, table.real.copy(), table.imag.copy(), planes, transposed)

    def _csr_planes(op: sp.csr_matrix, planes: np.ndarray) -> np.ndarray:
        out = np.empty_like(planes)
        data = op.data.astype(complex)
        _csr_planes_kernel(op.indptr, op.indices, data.real.copy(), data.imag.copy(), planes, out)
        return out


def _to_planes(R: np.ndarray) -> np.ndarray:
    R = np.asarray(R, dtype=complex)
    return np.stack([R.real, R.imag])


class SectorViolation(ValueError):
    """The operation would create coherence between occupation sectors."""


@dataclass(frozen=True, eq=False)
class SectorLayout:
    n_sites: int
    pair_left: np.ndarray   # configuration i of each pair index
    pair_right: np.ndarray  # configuration k of each pair index
    pair_weight: np.ndarray
    pair_pos: np.ndarray    # (2**ns, 2**ns) -> pair index or -1
    diag_pos: np.ndarray    # config -> index of (c, c)

    @property
    def size(self) -> int:
        return self.pair_left.size

    @property
    def local_dim(self) -> int:
        return 1 << self.n_sites

    def local_bit(self, configs: np.ndarray, q: int) -> np.ndarray:
        return fock.bit(configs, q, self.n_sites)

    def superop(self, u: np.ndarray) -> sp.csr_matrix:
        """``X -> u X u^dag`` on the pair space, for ``u`` on one sector."""
        dim = self.local_dim
        u = np.where(np.abs(u) > TOL, u, 0)
        cols = np.arange(dim)
        nz = [np.nonzero(u[:, c])[0] for c in cols]
        # off-diagonals of the 2x2 local blocks pad to width two at most
        width = max(len(r) for r in nz)
        col_rows = np.zeros((dim, width), dtype=np.int64)
        col_vals = np.zeros((dim, width), dtype=complex)
        for c, r in enumerate(nz):
            col_rows[c, : len(r)] = r
            col_vals[c, : len(r)] = u[r, c]
        i, k = self.pair_left, self.pair_right
        rows_i = col_rows[i][:, :, None]
        rows_k = col_rows[k][:, None, :]
        vals = col_vals[i][:, :, None] * col_vals[k].conj()[:, None, :]
        target = self.pair_pos[rows_i, rows_k]
        src = np.broadcast_to(np.arange(self.size)[:, None, None], vals.shape)
        keep = vals != 0
        if np.any(target[keep] < 0):
            raise SectorViolation("operator changes the occupation of a spin sector")
        return sp.csr_matrix(
            (vals[keep], (target[keep], src[keep])), shape=(self.size, self.size)
        )

    @lru_cache(maxsize=256)
    def depolarising_superop(self, q: int, p: float) -> sp.csr_matrix:
        bi = self.local_bit(self.pair_left, q)
        bk = self.local_bit(self.pair_right, q)
        same = (bi == bk).astype(float)
        flip = 1 << (self.n_sites - 1 - q)
        partner = self.pair_pos[self.pair_left ^ flip, self.pair_right ^ flip]
        src = np.arange(self.size)
        rows = np.concatenate([src, partner[same > 0]])
        cols = np.concatenate([src, src[same > 0]])
        vals = np.concatenate([(1 - p) + 0.5 * p * same, np.full(int(same.sum()), 0.5 * p)])
        return sp.csr_matrix((vals, (rows, cols)), shape=(self.size, self.size))

    @lru_cache(maxsize=64)
    def cross_code(self, q_up: int, q_down: int) -> np.ndarray:
        """Index ``4 (2 b_i + b_j) + (2 b_k + b_l)`` for a diagonal gate on
        spin-up qubit ``q_up`` and spin-down qubit ``q_down``."""
        bi = self.local_bit(self.pair_left, q_up)
        bk = self.local_bit(self.pair_right, q_up)
        bj = self.local_bit(self.pair_left, q_down)
        bl = self.local_bit(self.pair_right, q_down)
        code = 8 * bi[:, None] + 4 * bj[None, :] + 2 * bk[:, None] + bl[None, :]
        return code.astype(np.uint8)


@lru_cache(maxsize=16)
def sector_layout(n_sites: int) -> SectorLayout:
    dim = 1 << n_sites
    configs = np.arange(dim, dtype=np.int64)
    weights = fock.popcount(configs)
    left, right = [], []
    for w in range(n_sites + 1):
        members = configs[weights == w]
        left.append(np.repeat(members, members.size))
        right.append(np.tile(members, members.size))
    left = np.concatenate(left)
    right = np.concatenate(right)
    pos = -np.ones((dim, dim), dtype=np.int64)
    pos[left, right] = np.arange(left.size)
    return SectorLayout(n_sites, left, right, weights[left], pos, pos[configs, configs])


def _local_unitary(u: np.ndarray, local_qubits, n_sites: int) -> np.ndarray:
    eye = np.eye(1 << n_sites, dtype=complex).reshape((2,) * n_sites + (-1,))
    return _apply_to_axes(eye, u, list(local_qubits)).reshape(1 << n_sites, -1)


def _is_diagonal(u: np.ndarray) -> bool:
    return np.allclose(u, np.diag(np.diagonal(u)), atol=TOL, rtol=0)


def _conserves_weight(u: np.ndarray) -> bool:
    w = np.array([0, 1, 1, 2])
    return np.allclose(u[w[:, None] != w[None, :]], 0, atol=TOL)


class SectorDensityState:
    """Block-diagonal density matrix on ``2 * n_sites`` qubits (spin up first)."""

    def __init__(self, n_sites: int, R: np.ndarray, basis: tuple[int, int] | None = None):
        self.layout = sector_layout(n_sites)
        self.n_sites = n_sites
        self.n_qubits = 2 * n_sites
        if R.shape != (self.layout.size, self.layout.size):
            raise ValueError(f"expected a {self.layout.size}-square pair matrix")
        self._planes = _to_planes(R)
        self._transposed = False  # True when the planes hold R.T
        self._basis = basis
        self._pending = [None, None]  # queued superoperators: spin up (left), down (right)

    @classmethod
    def basis_state(cls, n_sites: int, up: int = 0, down: int = 0) -> "SectorDensityState":
        """``|up>|down>`` with each sector's configuration given as an integer."""
        lay = sector_layout(n_sites)
        R = np.zeros((lay.size, lay.size), dtype=complex)
        R[lay.diag_pos[up], lay.diag_pos[down]] = 1.0
        return cls(n_sites, R, (up, down))

    @classmethod
    def zero(cls, n_qubits: int) -> "SectorDensityState":
        if n_qubits % 2:
            raise ValueError("sector states need an even number of qubits")
        return cls.basis_state(n_qubits // 2)

    @classmethod
    def from_dense(cls, rho: np.ndarray, n_sites: int) -> "SectorDensityState":
        lay = sector_layout(n_sites)
        rows = lay.pair_left[:, None] * lay.local_dim + lay.pair_left[None, :]
        cols = lay.pair_right[:, None] * lay.local_dim + lay.pair_right[None, :]
        return cls(n_sites, np.asarray(rho, dtype=complex)[rows, cols].copy())

    def to_dense(self) -> np.ndarray:
        lay = self.layout
        dim = 1 << self.n_qubits
        rho = np.zeros((dim, dim), dtype=complex)
        rows = lay.pair_left[:, None] * lay.local_dim + lay.pair_left[None, :]
        cols = lay.pair_right[:, None] * lay.local_dim + lay.pair_right[None, :]
        rho[rows, cols] = self.R
        return rho

    @property
    def R(self) -> np.ndarray:
        """The pair matrix (a fresh array; assign to ``R`` to modify the state)."""
        planes = self._normal_planes()
        return planes[0] + 1j * planes[1]

    @R.setter
    def R(self, value: np.ndarray) -> None:
        self._pending = [None, None]
        self._transposed = False
        self._planes = _to_planes(value)

    def _normal_planes(self) -> np.ndarray:
        self._flush()
        if self._transposed:
            self._planes = np.ascontiguousarray(self._planes.transpose(0, 2, 1))
            self._transposed = False
        return self._planes

    def copy(self) -> "SectorDensityState":
        out = SectorDensityState.__new__(SectorDensityState)
        out.layout, out.n_sites, out.n_qubits = self.layout, self.n_sites, self.n_qubits
        out._planes = self._normal_planes().copy()
        out._transposed = False
        out._basis = self._basis
        out._pending = [None, None]
        return out

    def _flush(self) -> None:
        """Apply queued operators, ``R <- L R M^T``. Only row-wise products are
        used; ``R`` is transposed in storage instead of multiplied from the right."""
        left, right = self._pending
        self._pending = [None, None]
        first, second = (right, left) if self._transposed else (left, right)
        if first is not None:
            self._planes = _csr_planes(first, self._planes)
        if second is not None:
            flipped = np.ascontiguousarray(self._planes.transpose(0, 2, 1))
            self._planes = _csr_planes(second, flipped)
            self._transposed = not self._transposed

    def _queue(self, side: int, op: sp.csr_matrix) -> None:
        current = self._pending[side]
        if current is not None:
            fused = (op @ current).tocsr()
            if fused.nnz <= FUSE_LIMIT * self.layout.size:
                self._pending[side] = fused
                return
            self._flush()
        self._pending[side] = op

    # evolution ---------------------------------------------------------

    def _split(self, qubits):
        up = [q for q in qubits if q < self.n_sites]
        down = [q - self.n_sites for q in qubits if q >= self.n_sites]
        return up, down

    def _apply_basis_flip(self, u: np.ndarray, qubits) -> bool:
        """Track single-qubit gates on a computational basis state."""
        if self._basis is None or len(qubits) != 1:
            return False
        (q,) = qubits
        up, down = self._basis
        local = q % self.n_sites
        cfg = up if q < self.n_sites else down
        b = (cfg >> (self.n_sites - 1 - local)) & 1
        column = u[:, b]
        if np.count_nonzero(np.abs(column) > TOL) != 1:
            return False
        new_b = int(np.argmax(np.abs(column)))
        cfg ^= (b ^ new_b) << (self.n_sites - 1 - local)
        up, down = (cfg, down) if q < self.n_sites else (up, cfg)
        fresh = SectorDensityState.basis_state(self.n_sites, up, down)
        self.R, self._basis = fresh.R, fresh._basis
        return True

    def apply_unitary(self, u: np.ndarray, qubits) -> None:
        qubits = [int(q) for q in qubits]
        for q in qubits:
            if not 0 <= q < self.n_qubits:
                raise IndexError(f"qubit {q} out of range for {self.n_qubits} qubits")
        up, down = self._split(qubits)
        if len(qubits) == 1 and not _is_diagonal(u):
            if self._apply_basis_flip(u, qubits):
                return
            raise SectorViolation("non-diagonal single-qubit gate on a superposition")
        self._basis = None
        if up and down:
            if not _is_diagonal(u):
                raise SectorViolation("gates across spin sectors must be diagonal")
            d = np.diagonal(u)
            if qubits[0] >= self.n_sites:
                d = d[[0, 2, 1, 3]]
            table = (d[:, None] * d.conj()[None, :]).reshape(-1)
            self._flush()
            code = self.layout.cross_code(up[0], down[0])
            _diagonal_planes(code, table, self._planes, self._transposed)
            return
        if len(qubits) == 2 and not _conserves_weight(u):
            raise SectorViolation("two-qubit gate does not conserve occupation")
        local = up or down
        op = self.layout.superop(_local_unitary(u, local, self.n_sites))
        self._queue(0 if up else 1, op)

    def depolarise(self, qubit: int, p: float) -> None:
        if p == 0:
            return
        self._basis = None
        if qubit < self.n_sites:
            self._queue(0, self.layout.depolarising_superop(qubit, float(p)))
        else:
            self._queue(1, self.layout.depolarising_superop(qubit - self.n_sites, float(p)))

    def global_depolarise(self, eps: float) -> None:
        self._basis = None
        lay = self.layout
        ident = np.zeros(lay.size)
        ident[lay.diag_pos] = 1.0
        self.R = (1 - eps) * self.R + (eps / (1 << self.n_qubits)) * np.outer(ident, ident)

    # readout -----------------------------------------------------------

    def _diag_block(self) -> np.ndarray:
        d = self.layout.diag_pos
        return self.R[d][:, d]

    def probabilities(self) -> np.ndarray:
        return np.clip(self._diag_block().real.reshape(-1), 0.0, None)

    def rotated_probabilities(self, rotations) -> np.ndarray:
        """Computational-basis distribution after noiseless ``(u, qubits)`` rotations."""
        eye = np.eye(self.layout.local_dim, dtype=complex)
        u_up, u_down = eye.copy(), eye.copy()
        for u, qubits in rotations:
            up, down = self._split(qubits)
            if up and down:
                raise SectorViolation("measurement rotation across spin sectors")
            if up:
                u_up = _local_unitary(u, up, self.n_sites) @ u_up
            else:
                u_down = _local_unitary(u, down, self.n_sites) @ u_down
        d = self.layout.diag_pos
        w_up = self.layout.superop(u_up)[d]
        w_down = self.layout.superop(u_down)[d]
        block = np.asarray(w_up @ self.R)
        probs = np.asarray(w_down @ block.T).T
        return np.clip(probs.real.reshape(-1), 0.0, None)

    def channel_probabilities(self, steps) -> np.ndarray:
        """Computational-basis distribution after a noisy readout circuit.

        ``steps`` holds ``("gate", u, qubits)`` and ``("depolarise", q, p)``
        entries, each confined to one spin sector. The gates need not conserve
        occupation: every outcome projector is pulled back through the channel
        and only its in-sector entries are read, which is exact because the
        state has no coherence between sectors.
        """
        dim = self.layout.local_dim
        sides = [[], []]
        for step in steps:
            qubits = step[2] if step[0] == "gate" else (step[1],)
            up, down = self._split(qubits)
            if up and down:
                raise SectorViolation("readout circuit across spin sectors")
            side, local = (0, up) if up else (1, down)
            if step[0] == "gate":
                sides[side].append(("gate", _local_unitary(step[1], local, self.n_sites)))
            else:
                sides[side].append(("depolarise", local[0], float(step[2])))
        lay = self.layout
        paulis = [np.array([[0, 1], [1, 0]]), np.array([[0, -1j], [1j, 0]]), np.diag([1.0, -1.0])]
        w = []
        for ops in sides:
            # M[d] = Phi^dag(|d><d|), built backwards through the steps
            M = np.zeros((dim, dim, dim), dtype=complex)
            M[np.arange(dim), np.arange(dim), np.arange(dim)] = 1.0
            for op in reversed(ops):
                if op[0] == "gate":
                    u = op[1]
                    M = u.conj().T @ M @ u
                else:
                    _, q, p = op
                    acc = (1 - 0.75 * p) * M
                    for s in paulis:
                        s_full = _local_unitary(s.astype(complex), [q], self.n_sites)
                        acc = acc + 0.25 * p * (s_full @ M @ s_full)
                    M = acc
            w.append(M[:, lay.pair_right, lay.pair_left])
        probs = w[0] @ self.R @ w[1].T
        return np.clip(probs.real.reshape(-1), 0.0, None)

    def trace(self) -> float:
        return float(self._diag_block().sum().real)

    def purity(self) -> float:
        return float(np.vdot(self.R, self.R).real)

    def postselect(self, eta_up: int, eta_down: int) -> float:
        w = self.layout.pair_weight
        self._basis = None
        self.R = self.R * np.outer(w == eta_up, w == eta_down)
        return self.trace()

    def scale(self, factor: float) -> None:
        self.R = self.R * factor
