"""Hamiltonian variational ansatz circuits for the Hubbard model.

A layer applies ``exp(i theta_o n_j n_k)`` for every onsite term and then
``exp(i theta_h (a_j^dag a_k + a_k^dag a_j))`` for every hopping term, the
hopping terms ordered by an edge colouring (horizontal edges with even ``x``,
then odd ``x``, then vertical edges with even ``y``, then odd ``y``).

Qubits follow the Jordan-Wigner order of ``lattice``. A horizontal hopping
term joins consecutive qubits; a vertical one skips ``nx - 1`` qubits and is
compiled as a fermionic-swap chain that brings the two modes together, the
two-mode gate, and the inverse chain. The ``"fig1"`` style reproduces the
two-site circuit of the hardware experiment gate for gate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .flo import QuadraticGenerator, SlaterState, evolve, flo_energy, ground_state
from .gates import Gate, QubitCircuit
from .lattice import HubbardHamiltonian, HubbardParams, LatticeGeometry, build_hubbard

STYLES = ("generic", "fig1")
SHARING = ("per_term", "per_group")


@dataclass(frozen=True)
class TermApplication:
    """One term of a layer: gate on modes ``(j, k)`` driven by parameter ``param``
    of its kind (an index into the layer's onsite or hopping angles)."""

    kind: str  # "onsite" | "hopping"
    modes: tuple[int, int]
    param: int
    colour: str = ""


@dataclass(frozen=True)
class AnsatzSpec:
    geometry: LatticeGeometry
    layers: int
    eta_up: int
    eta_down: int
    style: str = "generic"
    sharing: str = "per_group"
    prep_noisy: bool = True
    ordering: tuple[TermApplication, ...] = field(default=(), compare=False)
    n_onsite: int = 0
    n_hopping: int = 0

    @property
    def n_qubits(self) -> int:
        return self.geometry.n_modes

    @property
    def n_params(self) -> int:
        return self.layers * (self.n_onsite + self.n_hopping)

    def describe_ordering(self) -> list[str]:
        return [f"{t.kind}{t.modes}->{t.param}{'/' + t.colour if t.colour else ''}" for t in self.ordering]


def _hopping_classes(geometry: LatticeGeometry):
    """Edge colour classes, each a list of site pairs."""
    classes = []
    for parity in (0, 1):
        edges = [e for e in geometry.horizontal_edges() if geometry.coords(e[0])[0] % 2 == parity]
        if edges:
            classes.append((f"h{parity}", "h", edges))
    for parity in (0, 1):
        edges = [e for e in geometry.vertical_edges() if geometry.coords(e[0])[1] % 2 == parity]
        if edges:
            classes.append((f"v{parity}", "v", edges))
    return classes


def make_spec(
    geometry: LatticeGeometry,
    layers: int,
    eta_up: int,
    eta_down: int,
    style: str | None = None,
    sharing: str = "per_group",
    prep_noisy: bool = True,
) -> AnsatzSpec:
    """Build the spec with its explicit term ordering. ``style=None`` picks
    ``"fig1"`` for the two-site chain and ``"generic"`` otherwise."""
    ns = geometry.n_sites
    if layers < 1:
        raise ValueError("an ansatz needs at least one layer")
    if not (0 <= eta_up <= ns and 0 <= eta_down <= ns):
        raise ValueError(f"occupations must lie in [0, {ns}]")
    if style is None:
        style = "fig1" if (geometry.nx, geometry.ny) == (2, 1) and (eta_up, eta_down) == (1, 1) else "generic"
    if style not in STYLES:
        raise ValueError(f"style must be one of {STYLES}")
    if sharing not in SHARING:
        raise ValueError(f"sharing must be one of {SHARING}")
    if style == "fig1" and ((geometry.nx, geometry.ny) != (2, 1) or (eta_up, eta_down) != (1, 1)):
        raise ValueError("the fig1 circuit is defined for the 2x1 lattice at half filling")

    ordering = []
    n_onsite = ns if sharing == "per_term" else 1
    for s in range(ns):
        ordering.append(TermApplication("onsite", (s, ns + s), s if sharing == "per_term" else 0))
    classes = _hopping_classes(geometry)
    directions = sorted({d for _, d, _ in classes})
    counter = 0
    for off in (0, ns):
        for colour, direction, edges in classes:
            for s1, s2 in edges:
                if sharing == "per_term":
                    param = counter
                    counter += 1
                else:
                    param = directions.index(direction)
                ordering.append(TermApplication("hopping", (off + s1, off + s2), param, colour))
    n_hopping = counter if sharing == "per_term" else len(directions)
    return AnsatzSpec(geometry, layers, eta_up, eta_down, style, sharing, prep_noisy, tuple(ordering), n_onsite, n_hopping)


@dataclass(frozen=True, eq=False)
class AnsatzParams:
    """Angles per layer: ``onsite[l]`` and ``hopping[l]``."""

    onsite: np.ndarray
    hopping: np.ndarray

    def __post_init__(self):
        onsite = np.atleast_2d(np.asarray(self.onsite, dtype=float))
        hopping = np.atleast_2d(np.asarray(self.hopping, dtype=float))
        if onsite.shape[0] != hopping.shape[0]:
            raise ValueError("onsite and hopping angles disagree on the number of layers")
        if not (np.all(np.isfinite(onsite)) and np.all(np.isfinite(hopping))):
            raise ValueError("angles must be finite")
        object.__setattr__(self, "onsite", onsite)
        object.__setattr__(self, "hopping", hopping)

    @property
    def layers(self) -> int:
        return self.onsite.shape[0]

    @property
    def is_flo(self) -> bool:
        return bool(np.all(self.onsite == 0))

    def vector(self) -> np.ndarray:
        """Flat vector, layer by layer, onsite angles before hopping angles."""
        return np.concatenate([self.onsite, self.hopping], axis=1).reshape(-1)

    @classmethod
    def from_vector(cls, spec: AnsatzSpec, vec) -> "AnsatzParams":
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (spec.n_params,):
            raise ValueError(f"expected {spec.n_params} parameters, got shape {vec.shape}")
        per = vec.reshape(spec.layers, spec.n_onsite + spec.n_hopping)
        return cls(per[:, : spec.n_onsite].copy(), per[:, spec.n_onsite :].copy())

    @classmethod
    def zeros(cls, spec: AnsatzSpec) -> "AnsatzParams":
        return cls(np.zeros((spec.layers, spec.n_onsite)), np.zeros((spec.layers, spec.n_hopping)))

    def reduced(self) -> np.ndarray:
        """Angles reduced mod 2 pi, for reporting."""
        return np.mod(self.vector(), 2 * np.pi)

    def __eq__(self, other) -> bool:
        if not isinstance(other, AnsatzParams):
            return NotImplemented
        return np.array_equal(self.onsite, other.onsite) and np.array_equal(self.hopping, other.hopping)


def random_params(spec: AnsatzSpec, rng: np.random.Generator, flo: bool = False) -> AnsatzParams:
    """Angles uniform on ``[0, 2 pi)``; ``flo=True`` zeroes the onsite angles."""
    onsite = rng.uniform(0, 2 * np.pi, size=(spec.layers, spec.n_onsite))
    hopping = rng.uniform(0, 2 * np.pi, size=(spec.layers, spec.n_hopping))
    if flo:
        onsite = np.zeros_like(onsite)
    return AnsatzParams(onsite, hopping)


def to_flo(params: AnsatzParams) -> AnsatzParams:
    return AnsatzParams(np.zeros_like(params.onsite), params.hopping.copy())


def _check_params(spec: AnsatzSpec, params: AnsatzParams):
    if params.onsite.shape != (spec.layers, spec.n_onsite) or params.hopping.shape != (spec.layers, spec.n_hopping):
        raise ValueError(
            f"spec expects {spec.layers} layers of {spec.n_onsite} onsite and {spec.n_hopping} hopping angles, "
            f"got {params.onsite.shape} and {params.hopping.shape}"
        )


# -- initial state --------------------------------------------------------


def noninteracting_matrix(geometry: LatticeGeometry) -> np.ndarray:
    """Single-sector hopping matrix (t = 1) whose ground state is prepared."""
    return build_hubbard(geometry, HubbardParams(t=1.0, U=0.0)).sector_matrix(0)


def givens_angles(coeffs: np.ndarray) -> list[tuple[int, int, float]]:
    """Decompose a real orthonormal ``eta x n`` matrix ``Q`` as
    ``Q = E G_m^T ... G_1^T`` with ``E`` the first ``eta`` unit rows and each
    ``G`` a rotation on neighbouring columns, up to the sign of the last row. Returns ``[(c-1, c, angle), ...]``
    for ``G_1 ... G_m`` in elimination order."""
    q = np.array(coeffs, dtype=float, copy=True)
    eta, n = q.shape
    rotations = []
    for r in range(eta):
        for c in range(n - 1, r, -1):
            x1, x2 = q[r, c - 1], q[r, c]
            norm = np.hypot(x1, x2)
            if norm < 1e-15:
                cs, sn = 1.0, 0.0
            else:
                cs, sn = x1 / norm, x2 / norm
            g = np.array([[cs, -sn], [sn, cs]])
            q[:, [c - 1, c]] = q[:, [c - 1, c]] @ g
            rotations.append((c - 1, c, float(np.arctan2(sn, cs))))
    # a negative last pivot (eta = n, det Q = -1) only flips the global sign
    return rotations


def initial_state_circuit(geometry: LatticeGeometry, eta_up: int, eta_down: int, noisy: bool = True) -> QubitCircuit:
    """X gates on the first ``eta`` qubits of each sector, then Givens rotations
    that turn that basis state into the noninteracting ground state."""
    ns = geometry.n_sites
    h = noninteracting_matrix(geometry)
    sectors = ((0, eta_up), (ns, eta_down))
    for _, eta in sectors:
        if not 0 <= eta <= ns:
            raise ValueError(f"occupation {eta} outside [0, {ns}]")
    gates = [Gate("X", (off + m,)) for off, eta in sectors for m in range(eta)]
    for off, eta in sectors:
        if eta == 0:
            continue
        coeffs = ground_state(h, eta).coeffs
        if np.abs(coeffs.imag).max() > 1e-12:
            raise ValueError("Givens preparation is implemented for real orbitals only")
        for j, k, angle in reversed(givens_angles(coeffs.real)):
            gates.append(Gate("GIVENS", (off + j, off + k), angle, noisy=noisy))
    return QubitCircuit(geometry.n_modes, gates)


def flo_initial_state(geometry: LatticeGeometry, eta_up: int, eta_down: int) -> SlaterState:
    h = noninteracting_matrix(geometry)
    return SlaterState.product(ground_state(h, eta_up), ground_state(h, eta_down))


def _fig1_prep(noisy: bool) -> list[Gate]:
    gates = []
    for q0, q1 in ((0, 1), (2, 3)):
        gates += [
            Gate("X", (q0,)),
            Gate("CNOT", (q0, q1), noisy=noisy),
            Gate("CRY", (q1, q0), -np.pi / 2, noisy=noisy),
            Gate("CNOT", (q0, q1), noisy=noisy),
        ]
    return gates


# -- layers ------------------------------------------------------------------


def _hop_gates(j: int, k: int, theta: float) -> list[Gate]:
    chain = [Gate("FSWAP", (m, m + 1)) for m in range(k - 1, j, -1)]
    return chain + [Gate("HOP", (j, j + 1), theta)] + chain[::-1]


def _fig1_hop(j: int, k: int, theta: float) -> list[Gate]:
    # on the one-particle subspace this is exp(-i theta/2 (a_j^dag a_k + h.c.))
    return [Gate("CNOT", (j, k)), Gate("CRX", (k, j), theta), Gate("CNOT", (j, k))]


def _fig1_onsite(j: int, k: int, phi: float) -> list[Gate]:
    # CRZ(phi) = exp(i phi n_c n_t) exp(-i phi/2 n_c); the second factor is a
    # global phase once both sites of the spin-down sector are included
    return [Gate("CRZ", (k, j), phi)]


# effective hopping angle of one HOP application per unit circuit parameter
HOP_SCALE = {"generic": 1.0, "fig1": -0.5}


def build_circuit(spec: AnsatzSpec, params: AnsatzParams) -> QubitCircuit:
    _check_params(spec, params)
    if spec.style == "fig1":
        gates = _fig1_prep(spec.prep_noisy)
        hop, onsite = _fig1_hop, _fig1_onsite
    else:
        gates = list(initial_state_circuit(spec.geometry, spec.eta_up, spec.eta_down, spec.prep_noisy).gates)
        hop = _hop_gates
        onsite = lambda j, k, phi: [Gate("CPHASE", (j, k), phi)]  # noqa: E731
    for layer in range(spec.layers):
        for term in spec.ordering:
            j, k = term.modes
            if term.kind == "onsite":
                gates += onsite(j, k, float(params.onsite[layer, term.param]))
            else:
                gates += hop(j, k, float(params.hopping[layer, term.param]))
    return QubitCircuit(spec.n_qubits, gates)


def flo_state(spec: AnsatzSpec, params: AnsatzParams) -> SlaterState:
    """The determinant produced by ``build_circuit`` for FLO parameters."""
    _check_params(spec, params)
    if not params.is_flo:
        raise ValueError("onsite angles must be zero for an FLO simulation")
    n = spec.n_qubits
    state = flo_initial_state(spec.geometry, spec.eta_up, spec.eta_down)
    scale = HOP_SCALE[spec.style]
    for layer in range(spec.layers):
        for term in spec.ordering:
            if term.kind != "hopping":
                continue
            theta = scale * float(params.hopping[layer, term.param])
            j, k = term.modes
            # exp(i theta X) = exp(-i h) with h = -theta (E_jk + E_kj)
            state = evolve(state, QuadraticGenerator.two_mode(n, j, k, -theta))
    return state


def flo_reference_energy(spec: AnsatzSpec, params: AnsatzParams, H: HubbardHamiltonian, method: str = "wick") -> float:
    """Exact energy of an FLO parameter point, computed without any qubit simulation."""
    if H.geometry != spec.geometry:
        raise ValueError("Hamiltonian and ansatz live on different lattices")
    return flo_energy(flo_state(spec, params), H, method)


def with_style(spec: AnsatzSpec, style: str) -> AnsatzSpec:
    return make_spec(spec.geometry, spec.layers, spec.eta_up, spec.eta_down, style, spec.sharing, spec.prep_noisy)


__all__ = [
    "AnsatzParams",
    "AnsatzSpec",
    "TermApplication",
    "build_circuit",
    "flo_initial_state",
    "flo_reference_energy",
    "flo_state",
    "givens_angles",
    "initial_state_circuit",
    "make_spec",
    "random_params",
    "to_flo",
]
