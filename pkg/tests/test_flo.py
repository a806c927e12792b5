import itertools
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracle
from flo_mitigate.flo import (
    DegenerateFermiLevelWarning,
    QuadraticGenerator,
    SlaterState,
    evolve,
    expect_double_hopping,
    expect_hopping,
    expect_number_products,
    expect_onsite_pair,
    flo_energy,
    ground_state,
    ground_state_energy,
    one_body_rdm,
    overlap,
    slater_overlap,
)
from flo_mitigate.lattice import HubbardParams, LatticeGeometry, build_hubbard


@st.composite
def flo_circuits(draw, max_modes=6, max_depth=8):
    n = draw(st.integers(2, max_modes))
    eta = draw(st.integers(0, n))
    occupied = sorted(draw(st.permutations(range(n)))[:eta])
    seed = draw(st.integers(0, 2**32 - 1))
    depth = draw(st.integers(1, max_depth))
    rng = np.random.default_rng(seed)
    gens = []
    for _ in range(depth):
        m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        if rng.random() < 0.5:
            j, k = rng.choice(n, 2, replace=False)
            gens.append(QuadraticGenerator.two_mode(n, j, k, m[0, 0], rng.uniform(0, 2)))
        else:
            gens.append(QuadraticGenerator(m + m.conj().T, rng.uniform(0, 1)))
    return n, occupied, gens


def simulate(n, occupied, gens):
    state = SlaterState.from_occupied(occupied, n)
    psi = np.zeros(1 << n, dtype=complex)
    psi[oracle.basis_index(occupied, n)] = 1
    for g in gens:
        state = evolve(state, g)
        psi = oracle.evolve_statevector(g.h, g.time, psi)
    return state, psi


@given(flo_circuits())
def test_amplitudes_match_oracle(circ):
    n, occupied, gens = circ
    state, psi = simulate(n, occupied, gens)
    total = 0.0
    for subset in itertools.combinations(range(n), len(occupied)):
        amp = overlap(state, subset)
        assert abs(amp - psi[oracle.basis_index(subset, n)]) < 1e-9
        total += abs(amp) ** 2
    assert total == pytest.approx(1.0, abs=1e-9)


@given(flo_circuits())
def test_rdm_and_local_expectations_match_oracle(circ):
    n, occupied, gens = circ
    state, psi = simulate(n, occupied, gens)
    d = one_body_rdm(state).matrix
    for j in range(n):
        for k in range(n):
            ref = np.vdot(psi, oracle.creation(j, n) @ oracle.annihilation(k, n) @ psi)
            assert abs(d[j, k] - ref) < 1e-9
    for j, k in itertools.combinations(range(n), 2):
        hop = oracle.creation(j, n) @ oracle.annihilation(k, n)
        ref_hop = np.vdot(psi, (hop + hop.T) @ psi).real
        ref_ons = np.vdot(psi, oracle.number(j, n) @ oracle.number(k, n) @ psi).real
        for method in ("wick", "decomposition"):
            assert abs(expect_hopping(state, j, k, method) - ref_hop) < 1e-9
            assert abs(expect_onsite_pair(state, j, k, method) - ref_ons) < 1e-9


@given(flo_circuits(max_modes=5, max_depth=4), st.data())
def test_double_hopping_matches_oracle(circ, data):
    n, occupied, gens = circ
    state, psi = simulate(n, occupied, gens)
    if n < 4:
        n, occupied = 4, [m for m in occupied if m < 4]
        gens = [QuadraticGenerator(np.pad(g.h, (0, 4 - g.h.shape[0])), g.time) for g in gens]
        state, psi = simulate(n, occupied, gens)
    j, k, p, q = data.draw(st.permutations(range(n)))[:4]
    op = oracle.creation(j, n) @ oracle.annihilation(k, n) @ oracle.creation(p, n) @ oracle.annihilation(q, n)
    ref = np.vdot(psi, (op + op.conj().T) @ psi)
    assert abs(expect_double_hopping(state, j, k, p, q) - ref) < 1e-9


@given(flo_circuits(max_modes=5, max_depth=3))
def test_evolution_preserves_orthonormality_and_number(circ):
    n, occupied, gens = circ
    state, _ = simulate(n, occupied, gens)
    a = state.coeffs
    np.testing.assert_allclose(a @ a.conj().T, np.eye(len(occupied)), atol=1e-10)
    assert one_body_rdm(state).n_particles == pytest.approx(len(occupied))


def test_number_products_of_unit_vectors_are_occupations():
    state = SlaterState.from_occupied([0, 2], 4)
    e = np.eye(4)
    assert expect_number_products(state, [e[0], e[2]]) == pytest.approx(1.0)
    assert expect_number_products(state, [e[0], e[1]]) == pytest.approx(0.0)
    assert expect_number_products(state, []) == pytest.approx(1.0)


def test_overlap_validation():
    state = SlaterState.from_occupied([1], 3)
    with pytest.raises(ValueError):
        overlap(state, [0, 1])
    assert overlap(SlaterState.vacuum(3), []) == 1
    with pytest.raises(ValueError):
        overlap(SlaterState.from_occupied([1, 2], 3), [2, 2])


def test_slater_overlap_is_inner_product():
    rng = np.random.default_rng(4)
    m = rng.normal(size=(4, 4))
    g = QuadraticGenerator(m + m.T, 0.7)
    a = SlaterState.from_occupied([0, 3], 4)
    b = evolve(a, g)
    _, psi_b = simulate(4, [0, 3], [g])
    psi_a = np.zeros(16, dtype=complex)
    psi_a[oracle.basis_index([0, 3], 4)] = 1
    assert slater_overlap(a, b) == pytest.approx(np.vdot(psi_a, psi_b), abs=1e-12)


def test_rejects_non_hermitian_and_bad_states():
    with pytest.raises(ValueError):
        QuadraticGenerator(np.array([[0, 1], [0, 0]]))
    with pytest.raises(ValueError):
        SlaterState(np.array([[1.0, 1.0]]))
    with pytest.raises(ValueError):
        SlaterState(np.zeros((3, 2)))
    with pytest.raises(ValueError):
        expect_hopping(SlaterState.vacuum(2), 1, 1)
    with pytest.raises(ValueError):
        expect_double_hopping(SlaterState.vacuum(4), 0, 1, 1, 2)


def test_ground_state_energy_and_degeneracy_warning():
    h = build_hubbard(LatticeGeometry(2, 3), HubbardParams(1.0, 0.0)).sector_matrix("up")
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        gs = ground_state(h, 2)
    energy = float(np.sum(h * one_body_rdm(gs).matrix).real)
    assert energy == pytest.approx(ground_state_energy(h, 2))
    with pytest.warns(DegenerateFermiLevelWarning):
        ground_state(np.zeros((3, 3)), 1)


@pytest.mark.parametrize("method", ["wick", "decomposition"])
def test_flo_energy_of_noninteracting_ground_state(method):
    # at U=0 the FLO ground state is exact, so its energy is the sector minimum
    H = build_hubbard(LatticeGeometry(2, 2), HubbardParams(1.0, 0.0))
    h = H.sector_matrix("up")
    gs = SlaterState.product(ground_state(h, 1), ground_state(h, 1))
    ref = oracle.sector_ground_energy(oracle.hubbard_matrix(2, 2, 1.0, 0.0), 4, 1, 1)
    assert flo_energy(gs, H, method) == pytest.approx(ref, abs=1e-10)


def test_flo_energy_mode_mismatch():
    H = build_hubbard(LatticeGeometry(2, 1), HubbardParams())
    with pytest.raises(ValueError):
        flo_energy(SlaterState.vacuum(3), H)
