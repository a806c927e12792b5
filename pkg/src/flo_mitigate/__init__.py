"""Error mitigation for fermionic VQE on the Hubbard model, trained on
free-fermion (FLO) circuits that a classical computer simulates exactly."""

from .ansatz import AnsatzParams, AnsatzSpec, build_circuit, make_spec
from .config import ExperimentConfig, default_config
from .evaluation import NoisyEvaluator, noiseless_energy
from .flo import QuadraticGenerator, SlaterState, flo_energy
from .lattice import HubbardParams, LatticeGeometry, build_hubbard, exact_ground_energy
from .mitigation import fit_affine, fit_depolarising_training, fit_shift, generate_training_set
from .noisy import NoiseModel
from .vqe import SpsaConfig, run_vqe, spsa_minimize

__version__ = "0.1.0"

__all__ = [
    "AnsatzParams",
    "AnsatzSpec",
    "ExperimentConfig",
    "HubbardParams",
    "LatticeGeometry",
    "NoiseModel",
    "NoisyEvaluator",
    "QuadraticGenerator",
    "SlaterState",
    "SpsaConfig",
    "build_circuit",
    "build_hubbard",
    "default_config",
    "exact_ground_energy",
    "fit_affine",
    "fit_depolarising_training",
    "fit_shift",
    "flo_energy",
    "generate_training_set",
    "make_spec",
    "noiseless_energy",
    "run_vqe",
    "spsa_minimize",
]
