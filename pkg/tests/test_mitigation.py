import json

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from flo_mitigate.ansatz import AnsatzParams, make_spec
from flo_mitigate.evaluation import NoisyEvaluator
from flo_mitigate.lattice import HubbardParams, LatticeGeometry, build_hubbard
from flo_mitigate.mitigation import (
    AffineCorrector,
    DepolarisingCorrector,
    FitError,
    TrainingDatum,
    UnusableCorrector,
    affine_residual,
    apply_affine,
    apply_depolarising_corrector,
    apply_shift,
    average_difference,
    child_seed,
    corrector_from_record,
    corrector_record,
    depolarising_reference,
    fit_affine,
    fit_depolarising,
    fit_depolarising_training,
    fit_shift,
    generate_training_set,
    training_from_record,
)
from flo_mitigate.noisy import NoiseModel

finite = st.floats(-50, 50, allow_nan=False)


def datum(noisy, exact, theta=0.0):
    return TrainingDatum(AnsatzParams([[0.0]], [[theta]]), float(exact), float(noisy))


def training(xs, ys):
    return [datum(x, y, i * 0.1) for i, (x, y) in enumerate(zip(xs, ys))]


@given(st.lists(finite, min_size=2, max_size=20, unique=True), st.floats(-5, 5), st.floats(-5, 5))
def test_affine_recovers_exact_relation(xs, a, b):
    assume(abs(a) > 1e-3)
    assume(np.ptp(xs) > 1e-3)
    fit = fit_affine(training(xs, [a * x + b for x in xs]))
    assert fit.a == pytest.approx(a, abs=1e-12 * max(1, abs(a)) * 1e3)
    assert fit.b == pytest.approx(b, abs=1e-10 * max(1.0, float(np.max(np.abs(xs)))) * 1e2)


def test_affine_examples():
    fit = fit_affine(training([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]))
    assert fit.a == pytest.approx(1.0, abs=1e-12) and fit.b == pytest.approx(0.0, abs=1e-12)
    fit = fit_affine(training([0.3, -1.0, 2.5], [2 * x + 0.6 for x in (0.3, -1.0, 2.5)]))
    assert abs(fit.a - 2) < 1e-12 and abs(fit.b - 0.6) < 1e-12
    assert apply_affine(AffineCorrector(2.0, 0.6), 1.0) == pytest.approx(2.6)


def test_affine_recovery_to_1e12():
    xs = np.linspace(-3, 1, 10)
    fit = fit_affine(training(xs, 0.8 * xs - 0.25))
    assert abs(fit.a - 0.8) < 1e-12 and abs(fit.b + 0.25) < 1e-12


@given(st.lists(st.tuples(finite, finite), min_size=3, max_size=12), st.floats(-0.5, 0.5), st.floats(-0.5, 0.5))
def test_affine_is_least_squares_optimal(pairs, da, db):
    xs, ys = zip(*pairs)
    assume(np.ptp(xs) > 1e-2)
    data = training(xs, ys)
    fit = fit_affine(data)
    best = affine_residual(data, fit.a, fit.b)
    assert best <= affine_residual(data, fit.a + da, fit.b + db) + 1e-9 * (1 + best)


def test_affine_grid_search():
    rng = np.random.default_rng(0)
    xs = rng.uniform(-2, 0, 15)
    ys = 1.3 * xs + 0.2 + rng.normal(0, 0.05, 15)
    data = training(xs, ys)
    fit = fit_affine(data)
    grid = [(a, b) for a in np.linspace(0.5, 2, 61) for b in np.linspace(-1, 1, 61)]
    assert affine_residual(data, fit.a, fit.b) <= min(affine_residual(data, a, b) for a, b in grid)


@given(st.lists(finite, min_size=2, max_size=10), st.floats(0.01, 5), st.floats(-5, 5))
def test_positive_slope_preserves_argmin(values, a, b):
    out = apply_affine(AffineCorrector(a, b), values)
    assert int(np.argmin(out)) == int(np.argmin(values)) or out[np.argmin(values)] == np.min(out)


def test_affine_degenerate_inputs():
    with pytest.raises(FitError):
        fit_affine(training([1.0, 1.0, 1.0], [0.0, 1.0, 2.0]))
    with pytest.raises(FitError):
        fit_affine(training([1.0], [0.0]))
    flat = fit_affine(training([1.0, 2.0], [3.0, 3.0]))
    assert (flat.a, flat.b) == (0.0, 3.0)


def test_apply_affine_shapes():
    c = AffineCorrector(2.0, 1.0)
    assert apply_affine(c, 1.5) == 4.0
    np.testing.assert_allclose(apply_affine(c, [0.0, 1.0]), [1.0, 3.0])
    assert c.apply(1.5) == 4.0


def test_mean_shift_uses_average_offset():
    data = training([-1.0, -2.0, -0.5], [-1.4, -2.2, -1.1])
    c = fit_shift(data, "mean")
    assert c.mu == pytest.approx(np.mean([-1.0, -2.0, -0.5]))
    assert c.offset == pytest.approx(np.mean([-0.4, -0.2, -0.6]))
    assert apply_shift(c, -1.0) == pytest.approx(-1.0 + c.offset)


@given(st.lists(st.tuples(finite, finite), min_size=1, max_size=10))
def test_per_theta_shift_is_exact_on_training_points(pairs):
    xs, ys = zip(*pairs)
    data = training(xs, ys)
    c = fit_shift(data, "per_theta")
    for d in data:
        assert apply_shift(c, d.noisy, d.params) == pytest.approx(d.exact, abs=1e-9)


def test_per_theta_lookup_errors():
    c = fit_shift(training([-1.0], [-1.2]), "per_theta")
    with pytest.raises(KeyError):
        apply_shift(c, -1.0, [0.5])
    with pytest.raises(ValueError):
        apply_shift(c, -1.0)
    with pytest.raises(ValueError):
        fit_shift(training([-1.0], [-1.2]), "median")
    with pytest.raises(FitError):
        fit_shift([], "mean")


@given(st.floats(0.0, 0.9), st.lists(st.floats(-3, -0.5), min_size=1, max_size=6))
def test_depolarising_fit_inverts_global_channel(eps, exact):
    trE, d = 2.0 * 4, 16
    noisy = [(1 - eps) * e + eps * trE / d for e in exact]
    c = fit_depolarising(noisy, exact, trE, d)
    assert c.eps == pytest.approx(eps, abs=1e-9)
    for e, n in zip(exact, noisy):
        assert apply_depolarising_corrector(c, n) == pytest.approx(e, abs=1e-9)


def test_depolarising_edge_cases():
    with pytest.raises(FitError):
        fit_depolarising([0.5], [0.5], 8.0, 16)
    with pytest.raises(ValueError):
        fit_depolarising([0.5, 1.0], [0.5], 8.0, 16)
    c = DepolarisingCorrector(1.0, 0.5, 16)
    assert not c.usable
    with pytest.raises(UnusableCorrector):
        apply_depolarising_corrector(c, -1.0)
    # a fit below zero is kept as is
    assert fit_depolarising([-1.1], [-1.0], 8.0, 16).eps < 0


def test_depolarising_reference():
    H = build_hubbard(LatticeGeometry(2, 1), HubbardParams(1.0, 2.0))
    assert depolarising_reference(H) == (pytest.approx(H.trace()), 16)
    trE, d = depolarising_reference(H, (1, 1))
    assert d == 4 and trE / d == pytest.approx(H.sector_trace_over_dim(1, 1))


def test_average_difference():
    assert average_difference([[1.0, 2.0]], [[1.5, 1.0]]) == pytest.approx(0.75)
    with pytest.raises(ValueError):
        average_difference([1.0], [1.0, 2.0])


def test_child_seed_is_pure():
    root = np.random.SeedSequence(5)
    a = child_seed(root, 1, 2).generate_state(2)
    b = child_seed(root, 1, 2).generate_state(2)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, child_seed(root, 2, 1).generate_state(2))
    assert child_seed(5, 1).generate_state(1)[0] == child_seed(root, 1).generate_state(1)[0]


def test_training_set_is_flo_and_reproducible():
    g = LatticeGeometry(2, 1)
    H = build_hubbard(g, HubbardParams(1.0, 2.0))
    spec = make_spec(g, 1, 1, 1)
    ev = NoisyEvaluator(spec, H, NoiseModel(0.02), 2000)
    a = generate_training_set(spec, 5, 3, ev)
    b = generate_training_set(spec, 5, 3, ev)
    assert [d.noisy for d in a] == [d.noisy for d in b]
    assert all(d.params.is_flo for d in a)
    with pytest.raises(ValueError):
        generate_training_set(spec, 1, 3, ev)
    with pytest.raises(ValueError):
        TrainingDatum(AnsatzParams([[0.1]], [[0.0]]), 0.0, 0.0)


def test_depolarising_training_fit_on_two_site_model():
    g = LatticeGeometry(2, 1)
    H = build_hubbard(g, HubbardParams(1.0, 2.0))
    spec = make_spec(g, 1, 1, 1)
    ev = NoisyEvaluator(spec, H, NoiseModel(0.0), 100, postselect=False, global_eps=0.3)
    data = generate_training_set(spec, 4, 0, lambda p, s: ev.expectation(p), H)
    c = fit_depolarising_training(data, H)
    assert c.eps == pytest.approx(0.3, abs=1e-9)


@pytest.mark.parametrize(
    "corrector",
    [AffineCorrector(0.9, -0.1), DepolarisingCorrector(0.2, 0.5, 16)],
)
def test_record_round_trip(corrector):
    data = training([-1.0, -0.5], [-1.2, -0.4])
    rec = corrector_record(corrector, data, 7)
    loaded = json.loads(rec.to_json())
    assert corrector_from_record(loaded) == corrector
    back = training_from_record(loaded)
    assert [(d.exact, d.noisy) for d in back] == [(d.exact, d.noisy) for d in data]


def test_shift_record_round_trip():
    data = training([-1.0, -0.5], [-1.2, -0.4])
    for mode in ("mean", "per_theta"):
        c = fit_shift(data, mode)
        assert corrector_from_record(json.loads(corrector_record(c, data).to_json())) == c
    with pytest.raises(TypeError):
        corrector_record(object())
    with pytest.raises(ValueError):
        corrector_from_record({"method": "magic", "coefficients": {}})
