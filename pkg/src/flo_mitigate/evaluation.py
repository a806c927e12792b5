"""Energy evaluation of ansatz parameter points on the simulated devices."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .ansatz import AnsatzParams, AnsatzSpec, build_circuit
from .lattice import HubbardHamiltonian
from .noisy import (
    DensityState,
    EnergyEstimate,
    NoiseModel,
    estimate_energy,
    expected_energy,
    measurement_groups,
    run_noisy,
    run_pure,
)
from .sector import SectorDensityState

BACKENDS = ("auto", "dense", "sector")


@lru_cache(maxsize=16)
def _sparse_hamiltonian(H: HubbardHamiltonian):
    return H.sparse_operator()


def noiseless_energy(spec: AnsatzSpec, params: AnsatzParams, H: HubbardHamiltonian) -> float:
    """``<psi|H|psi>`` from a statevector simulation of the circuit."""
    psi = run_pure(build_circuit(spec, params)).psi
    return float(np.vdot(psi, _sparse_hamiltonian(H) @ psi).real)


def choose_backend(spec: AnsatzSpec, backend: str = "auto") -> str:
    if backend not in BACKENDS:
        raise ValueError(f"backend must be one of {BACKENDS}")
    if backend != "auto":
        return backend
    # the two-site circuit uses CNOT-based gates that leave the sector blocks
    if spec.style == "fig1" or spec.n_qubits < 8:
        return "dense"
    return "sector"


@dataclass(eq=False)
class NoisyEvaluator:
    """Prepare the noisy state for a parameter point and estimate its energy.

    ``global_eps`` additionally mixes the final state with the maximally mixed
    state, which is the noise model the depolarising corrector inverts.
    """

    spec: AnsatzSpec
    H: HubbardHamiltonian
    noise: NoiseModel
    shots: int
    postselect: bool = True
    measurement_noise: float = 0.0
    backend: str = "auto"
    global_eps: float = 0.0
    groups: list = field(init=False, repr=False)

    def __post_init__(self):
        if self.shots < 1:
            raise ValueError("shots must be positive")
        if not 0.0 <= self.global_eps <= 1.0:
            raise ValueError("global_eps must lie in [0, 1]")
        self.backend = choose_backend(self.spec, self.backend)
        self.groups = measurement_groups(self.H)

    @property
    def sector(self) -> tuple[int, int]:
        return self.spec.eta_up, self.spec.eta_down

    @property
    def is_noiseless(self) -> bool:
        return self.noise.p == 0 and self.measurement_noise == 0 and self.global_eps == 0

    def state(self, params: AnsatzParams):
        circuit = build_circuit(self.spec, params)
        if self.is_noiseless:
            return run_pure(circuit)
        initial = (SectorDensityState if self.backend == "sector" else DensityState).zero(circuit.n_qubits)
        state = run_noisy(circuit, self.noise, initial)
        if self.global_eps > 0:
            state.global_depolarise(self.global_eps)
        return state

    def estimate(self, params: AnsatzParams, seed, postselect: bool | None = None) -> EnergyEstimate:
        return self.estimate_state(self.state(params), seed, postselect)

    def estimate_state(self, state, seed, postselect: bool | None = None) -> EnergyEstimate:
        ps = self.postselect if postselect is None else postselect
        return estimate_energy(
            state,
            self.H,
            self.shots,
            seed,
            postselect=self.sector if ps else None,
            measurement_noise=self.measurement_noise,
            groups=self.groups,
        )

    def __call__(self, params: AnsatzParams, seed) -> float:
        return self.estimate(params, seed).value

    def expectation(self, params: AnsatzParams, postselect: bool | None = None) -> float:
        """Infinite-shot value of :meth:`estimate`."""
        ps = self.postselect if postselect is None else postselect
        return expected_energy(
            self.state(params),
            self.H,
            postselect=self.sector if ps else None,
            measurement_noise=self.measurement_noise,
            groups=self.groups,
        )


def derive_seed(master: int, *path: int) -> np.random.SeedSequence:
    """Independent, reproducible stream for a point identified by ``path``."""
    return np.random.SeedSequence([int(master), *map(int, path)])
