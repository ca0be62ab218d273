"""SINDy and gEDMD baselines: displays, consistency, eigenfunctions."""

import numpy as np
import pytest

from qendy.baselines import (
    GedmdModel, SindyModel, gedmd_fit, gedmd_from_json, gedmd_rhs_many,
    gedmd_to_json, koopman_eigenfunctions, sindy_fit, sindy_from_json,
    sindy_rhs, sindy_rhs_many, sindy_to_json,
)
from qendy.dictionary import Dictionary, feature_matrix, feature_time_derivatives
from qendy.dynamics import exact_derivatives, sample_uniform
from qendy.fitting import fit
from qendy.model import extract_rhs_many
from qendy.systems import (
    pendulum, pendulum_dictionary, quartic_decoupled, quartic_dictionary,
    rational_decay, rational_dictionary,
)

# minimum-norm regression target of -x/(1+x) on [x, 1/(1+x), x/(1+x)^2] over
# the unit interval, computed with a normalized order-40 Gauss rule
RATIONAL_XI_STAR = np.array([-0.29914052, 0.00835665, -0.84426716])

QUARTIC_THETA = np.array([[1.0, 0.0, -1.0], [0.0, 2.0, 0.0], [0.0, 0.0, 8.0]])


def _pendulum_training(m=100, seed=0):
    pts = sample_uniform([(-1.0, 1.0)] * 2, m, seed=seed)
    return exact_derivatives(pendulum(c=0.1), pts)


def _quartic_training(m=50, seed=3):
    pts = sample_uniform([(-2.0, 2.0)] * 2, m, seed=seed)
    return exact_derivatives(quartic_decoupled(), pts)


# ---------------------------------------------------------------------------
# SINDy


def test_sindy_pendulum_coefficients():
    """In-span target: xi rows are (0,1,0,0) and (0,-0.1,-1,0)."""
    model = sindy_fit(pendulum_dictionary(), _pendulum_training())
    expected = np.array([[0.0, 1.0, 0.0, 0.0], [0.0, -0.1, -1.0, 0.0]])
    dev = np.abs(model.xi - expected).max()
    assert dev < 1e-8, f"dev={dev:.2e}"


def test_sindy_rhs_at_upright_point():
    model = sindy_fit(pendulum_dictionary(), _pendulum_training())
    out = sindy_rhs(model, [np.pi / 2, 0.0])
    assert np.abs(out - np.array([0.0, -1.0])).max() < 1e-8


def test_sindy_rhs_many_matches_scalar():
    model = sindy_fit(pendulum_dictionary(), _pendulum_training(m=40))
    pts = np.random.default_rng(5).uniform(-1, 1, size=(8, 2))
    batch = sindy_rhs_many(model, pts)
    for k in range(8):
        assert np.abs(batch[k] - sindy_rhs(model, pts[k])).max() < 1e-12


def test_sindy_in_span_residual_vanishes():
    ts = _pendulum_training(m=80, seed=11)
    model = sindy_fit(pendulum_dictionary(), ts)
    resid = np.sum((sindy_rhs_many(model, ts.states) - ts.derivatives) ** 2)
    assert resid < 1e-10 * np.sum(ts.derivatives ** 2)


def test_sindy_out_of_span_residual_persists():
    """-x/(1+x) = -1 + 1/(1+x) needs a constant the dictionary lacks."""
    pts = sample_uniform([(0.0, 1.0)], 200, seed=2)
    ts = exact_derivatives(rational_decay(), pts)
    model = sindy_fit(rational_dictionary(), ts)
    resid = np.sum((sindy_rhs_many(model, ts.states) - ts.derivatives) ** 2)
    assert resid > 1e-12 * np.sum(ts.derivatives ** 2)


def test_sindy_threshold_prunes_and_refits():
    model = sindy_fit(pendulum_dictionary(), _pendulum_training(), threshold=0.5)
    assert model.xi[0, 1] != 0.0
    assert np.abs(np.delete(model.xi[0], 1)).max() == 0.0
    # the damping coefficient -0.1 falls below the cut
    assert model.xi[1, 1] == 0.0
    assert model.xi[1, 2] != 0.0


def test_sindy_monte_carlo_consistency():
    """Out-of-span regressions approach the continuum solution as m grows."""
    d = rational_dictionary()
    vf = rational_decay()
    sample_sizes = [100, 1000, 10000]
    means = []
    for i, m in enumerate(sample_sizes):
        errors = []
        for s in range(20):
            pts = sample_uniform([(0.0, 1.0)], m, seed=1000 * i + s)
            model = sindy_fit(d, exact_derivatives(vf, pts))
            errors.append(np.linalg.norm(model.xi[0] - RATIONAL_XI_STAR))
        means.append(np.mean(errors))
    assert means[0] > means[1] > means[2], f"means={means}"
    slope = np.polyfit(np.log(sample_sizes), np.log(means), 1)[0]
    assert -0.7 < slope < -0.35, f"slope={slope:.3f}"


def test_sindy_dimension_mismatch():
    with pytest.raises(ValueError):
        sindy_fit(rational_dictionary(), _pendulum_training(m=10))


# ---------------------------------------------------------------------------
# gEDMD


def test_gedmd_quartic_generator_matrix():
    """phi = (x1, x2, x2^4) under (x1 - x2^4, 2 x2) gives an exact lift."""
    model = gedmd_fit(quartic_dictionary(), _quartic_training())
    dev = np.abs(model.theta - QUARTIC_THETA).max()
    assert dev < 1e-8, f"dev={dev:.2e}"


def test_gedmd_constant_function_row_is_zero():
    d = Dictionary.from_strings(1, ["1", "x1"])
    pts = sample_uniform([(0.5, 2.0)], 30, seed=7)
    from qendy.dynamics import VectorField
    ts = exact_derivatives(VectorField.from_exprs(1, ["2*x1"]), pts)
    model = gedmd_fit(d, ts)
    assert np.abs(model.theta[0]).max() < 1e-10
    assert np.abs(model.theta[1] - np.array([0.0, 2.0])).max() < 1e-10


def test_gedmd_reconstructs_state_field():
    """G theta phi matches the pendulum field on a grid."""
    d = pendulum_dictionary()
    model = gedmd_fit(d, _pendulum_training())
    g = np.array([[1.0, 0, 0, 0], [0, 1.0, 0, 0]])
    grid = np.stack(np.meshgrid(np.linspace(-1, 1, 12),
                                np.linspace(-1, 1, 12)), axis=-1).reshape(-1, 2)
    sup = np.abs(gedmd_rhs_many(model, g, grid) - pendulum(c=0.1).many(grid)).max()
    assert sup < 1e-6, f"sup={sup:.2e}"


def test_gedmd_agrees_with_quadratic_fit():
    """Both identifications reproduce the same state field on the quartic system."""
    d = quartic_dictionary()
    ts = _quartic_training(m=60, seed=9)
    g = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    linear = gedmd_rhs_many(gedmd_fit(d, ts), g, ts.states)
    quadratic = extract_rhs_many(fit(d, ts, g=g), ts.states)
    assert np.abs(linear - quadratic).max() < 1e-8


def test_gedmd_dimension_mismatch():
    with pytest.raises(ValueError):
        gedmd_fit(rational_dictionary(), _pendulum_training(m=10))


# ---------------------------------------------------------------------------
# eigenfunctions


def test_koopman_eigenvalues_sorted():
    model = gedmd_fit(quartic_dictionary(), _quartic_training())
    funcs = koopman_eigenfunctions(model)
    values = [f.eigenvalue for f in funcs]
    assert np.abs(np.array(values) - np.array([1.0, 2.0, 8.0])).max() < 1e-8


def test_koopman_eigenvector_display():
    """Eigenvalue 1 pairs with the unit vector along (7, 0, 1)."""
    model = gedmd_fit(quartic_dictionary(), _quartic_training())
    first = koopman_eigenfunctions(model)[0]
    expected = np.array([7.0, 0.0, 1.0]) / np.sqrt(50.0)
    assert np.abs(first.coefficients - expected).max() < 1e-8


def test_koopman_eigenfunctions_satisfy_generator_identity():
    """For each pair, grad(psi) . F = eigenvalue * psi pointwise."""
    d = quartic_dictionary()
    model = gedmd_fit(d, _quartic_training())
    pts = sample_uniform([(-2.0, 2.0)] * 2, 25, seed=13)
    derivs = quartic_decoupled().many(pts)
    phi = feature_matrix(d, pts)
    phi_dot = feature_time_derivatives(d, pts, derivs)
    for func in koopman_eigenfunctions(model):
        lhs = phi_dot.T @ func.coefficients
        rhs = func.eigenvalue * (phi.T @ func.coefficients)
        assert np.abs(lhs - rhs).max() < 1e-6, f"eigenvalue {func.eigenvalue}"


def test_koopman_eigenfunction_call_matches_many():
    model = gedmd_fit(quartic_dictionary(), _quartic_training())
    func = koopman_eigenfunctions(model)[1]
    pts = np.array([[0.3, -1.2], [1.0, 0.5]])
    batch = func.evaluate_many(pts)
    assert abs(batch[0] - func(pts[0])) < 1e-12
    assert abs(batch[1] - func(pts[1])) < 1e-12


# ---------------------------------------------------------------------------
# serialization


def test_sindy_json_round_trip():
    model = sindy_fit(pendulum_dictionary(), _pendulum_training(m=30))
    payload = sindy_to_json(model)
    assert payload["state_dim"] == 2
    back = sindy_from_json(payload)
    assert np.array_equal(back.xi, model.xi)
    assert back.dictionary.size == 4


def test_gedmd_json_round_trip():
    model = gedmd_fit(quartic_dictionary(), _quartic_training(m=20))
    payload = gedmd_to_json(model)
    assert np.asarray(payload["Theta"]).shape == (3, 3)
    back = gedmd_from_json(payload)
    assert np.array_equal(back.theta, model.theta)


def test_model_shape_validation():
    with pytest.raises(ValueError):
        SindyModel(np.zeros((3, 4)), pendulum_dictionary())
    with pytest.raises(ValueError):
        GedmdModel(np.zeros((2, 2)), pendulum_dictionary())
