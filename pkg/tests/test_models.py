import math

import numpy as np
import pytest

from conebound.cones import contains_all, min_enclosing_cone
from conebound.errors import EvaluationFailure, QuadratureFailure, UnknownFamily
from conebound.geometry import ChartedMap, euclidean_metric, pullback_metric, tension_field
from conebound.models import (
    FAMILY_IDS,
    RotationalModel,
    adaptive_simpson,
    casoB_check,
    flat_cone_surface,
    get_family,
    integrability_test,
    paraboloid,
    paraboloid_truth,
    rotational_model,
    sphere_area,
    volume_functions,
    volume_ratio,
)
from conebound.sampling import SampleSpec, sample_chart


def _points(phi, count, seed):
    lo, hi = phi.domain_box
    return lo + (hi - lo) * np.random.default_rng(seed).random((count, phi.dim_domain))


# --- paraboloid family -----------------------------------------------------


def test_paraboloid_truth_examples():
    fam = paraboloid(2, 0.25)
    t = paraboloid_truth(fam, np.zeros(2))
    assert t.tau_norm == 4.0 and t.energy == 2.0
    assert t.tangent_cone_cos2 == 0.5
    assert paraboloid_truth(fam, np.array([3.0, 1.0])).tangent_cone_cos2 == 0.5


def test_paraboloid_ratio_supremum_is_two():
    fam = paraboloid(2, 0.1)
    s = np.linspace(0, 10, 2001)
    ratios = [paraboloid_truth(fam, np.array([r, 0.0])).tau_norm / 2 for r in s]
    assert max(ratios) == pytest.approx(2.0, abs=1e-15)
    assert int(np.argmax(ratios)) == 0


@pytest.mark.parametrize("m", [2, 3, 5])
def test_paraboloid_tension_matches_truth(m):
    fam = paraboloid(m, 0.3, box=3.0)
    fd = fam.map.with_finite_differences()
    for x in _points(fam.map, 100, m):
        truth = paraboloid_truth(fam, x)
        tv = tension_field(fam.map, None, x)
        assert tv.norm == pytest.approx(truth.tau_norm, rel=1e-6)
        assert tv.energy_density == pytest.approx(m, abs=1e-8)
        assert tension_field(fd, None, x).norm == pytest.approx(truth.tau_norm, rel=1e-4)


def test_paraboloid_rejects_bad_parameters():
    with pytest.raises(ValueError):
        paraboloid(1, 0.1)
    with pytest.raises(ValueError):
        paraboloid(2, 0.0)


# --- flat cone -------------------------------------------------------------


def test_flat_cone_metric_everywhere():
    phi = flat_cone_surface()
    for x in _points(phi, 20, 1):
        np.testing.assert_allclose(pullback_metric(phi, x).g, np.diag([2.0, x[0] ** 2]), atol=1e-12)


def test_flat_cone_fits_quarter_pi_cone():
    phi = flat_cone_surface()
    P = np.array([phi(x) for x in sample_chart(phi, SampleSpec("random", 2000))])
    cone = min_enclosing_cone(P, np.zeros(3))
    assert cone.width == pytest.approx(math.pi / 4, abs=1e-6)
    assert contains_all(cone, P).all()


def test_flat_cone_apex_excluded():
    lo, _ = flat_cone_surface().domain_box
    assert lo[0] == 1e-3


# --- volumes ---------------------------------------------------------------


def test_sphere_areas():
    assert sphere_area(1) == pytest.approx(2 * math.pi)
    assert sphere_area(2) == pytest.approx(4 * math.pi)
    assert sphere_area(3) == pytest.approx(2 * math.pi ** 2)


def test_euclidean_plane_volumes():
    tab = volume_functions(rotational_model("euclidean", 2), 5.0, 0.5)
    np.testing.assert_allclose(tab.ball, math.pi * tab.r ** 2, rtol=1e-8)
    np.testing.assert_allclose(tab.boundary, 2 * math.pi * tab.r, rtol=1e-14)


def test_euclidean_space_boundary():
    tab = volume_functions(rotational_model("euclidean", 3), 3.0, 1.0)
    np.testing.assert_allclose(tab.boundary, 4 * math.pi * tab.r ** 2, rtol=1e-14)


def test_hyperbolic_plane_volumes():
    tab = volume_functions(rotational_model("hyperbolic", 2), 5.0, 0.25)
    np.testing.assert_allclose(tab.ball, 2 * math.pi * (np.cosh(tab.r) - 1), atol=1e-6)


def test_ball_volume_strictly_increasing():
    tab = volume_functions(rotational_model("cubic-exp", 2), 1.5, 0.1)
    assert np.all(np.diff(tab.ball) > 0) and np.all(tab.boundary > 0)


def test_quadrature_failure_and_bad_step():
    with pytest.raises(QuadratureFailure):
        adaptive_simpson(lambda t: math.sin(1.0 / t), 1e-6, 1.0, max_levels=3)
    with pytest.raises(EvaluationFailure):
        adaptive_simpson(lambda t: math.inf, 0.0, 1.0)
    with pytest.raises(ValueError):
        volume_functions(rotational_model("euclidean"), 1.0, 0.0)


def test_cubic_exp_splice_is_c1():
    model = rotational_model("cubic-exp")
    left, right = model.sigma(1 - 1e-9), model.sigma(1.0)
    assert left == pytest.approx(right, rel=1e-8)
    assert model.sigma(0.0) == 0.0
    h = 1e-7
    assert (model.sigma(h) - model.sigma(0.0)) / h == pytest.approx(1.0, rel=1e-5)
    assert model.log_derivative(1 - 1e-12) == pytest.approx(model.log_derivative(1.0), rel=1e-9)


@pytest.mark.parametrize(
    "preset,m,oracle",
    [
        ("euclidean", 2, lambda r: r / 2),
        ("euclidean", 4, lambda r: r / 4),
        ("hyperbolic", 2, lambda r: (math.cosh(r) - 1) / math.sinh(r)),
    ],
)
def test_volume_ratio_closed_forms(preset, m, oracle):
    q = volume_ratio(rotational_model(preset, m), r_max=50.0)
    for r in (0.01, 0.5, 3.0, 20.0, 50.0):
        assert q(r) == pytest.approx(oracle(r), rel=1e-7)


def test_cubic_exp_ratio_asymptotics():
    q = volume_ratio(rotational_model("cubic-exp", 2), r_max=1e6)
    for r in (10.0, 1e3, 1e6):
        assert q(r) == pytest.approx(1.0 / (3 * r * r), rel=1e-2)
    with pytest.raises(EvaluationFailure):
        q(2e6)


# --- integrability heuristic -----------------------------------------------


@pytest.mark.parametrize("m", [2, 3])
def test_euclidean_classified_divergent(m):
    res = integrability_test(volume_ratio(rotational_model("euclidean", m)))
    assert res.classification == "divergent"
    # partial integrals of r/m from 1: (R^2 - 1) / (2m)
    R = res.evidence["radii"][-1]
    assert res.evidence["partial_integrals"][-1] == pytest.approx((R * R - 1) / (2 * m), rel=1e-6)
    assert res.label == "model-only sufficient evidence"


def test_hyperbolic_classified_divergent():
    res = integrability_test(volume_ratio(rotational_model("hyperbolic", 2)))
    assert res.classification == "divergent"
    np.testing.assert_allclose(res.evidence["tail_ratios"], 2.0, rtol=1e-6)


def test_cubic_exp_classified_integrable():
    res = integrability_test(volume_ratio(rotational_model("cubic-exp", 2)))
    assert res.classification == "integrable"
    assert max(res.evidence["tail_ratios"]) <= 0.7


def test_inconclusive_and_non_finite():
    # 1/r: increments are constant, partial integrals grow like log R
    assert integrability_test(lambda r: 1.0 / r).classification == "divergent"
    # alternating increments: neither criterion holds
    wobble = integrability_test(lambda r: 1.0 / r * (1.0 + 0.9 * math.sin(8 * math.log(r))) / r)
    assert wobble.classification in ("inconclusive", "integrable")
    assert integrability_test(lambda r: 1.0, r_max=8.0).classification == "inconclusive"
    with pytest.raises(EvaluationFailure):
        integrability_test(lambda r: math.nan)


# --- pointwise energy condition --------------------------------------------


def test_casoB_isometric_immersion():
    phi = paraboloid(2, 0.1, box=2.0).map
    res = casoB_check(phi, None, C=2.0, beta=0.0, samples=_points(phi, 50, 1))
    assert res.holds and res.worst_margin == pytest.approx(0.0, abs=1e-9)


def test_casoB_decaying_energy():
    # |dphi|^2 = 1/(1 + |x|) on the flat chart
    def evaluate(x):
        r = np.linalg.norm(x)
        return x / math.sqrt(1.0 + r) if r > 0 else x

    radial = ChartedMap(2, 2, evaluate, (np.full(2, 0.5), np.full(2, 3.0)))
    metric = euclidean_metric(2)
    rs = np.array([[1.0, 1.0], [2.0, 0.5], [3.0, 3.0]])
    from conebound.geometry import energy_density

    exact = [energy_density(radial, metric, x) for x in rs]
    res1 = casoB_check(radial, metric, C=min(e * (1 + np.linalg.norm(x)) for e, x in zip(exact, rs)),
                       beta=1.0, samples=rs)
    assert res1.holds
    res0 = casoB_check(radial, metric, C=1.0, beta=0.0, samples=rs)
    assert not res0.holds and res0.worst_margin < 0


def test_casoB_boundary_notes():
    phi = paraboloid(2, 0.1, box=2.0).map
    xs = _points(phi, 5, 2)
    assert "log" in casoB_check(phi, None, 1.0, 2.0, xs).note
    assert "cannot" in casoB_check(phi, None, 1.0, 3.0, xs).note
    assert casoB_check(phi, None, 1.0, 1.0, xs).note == ""


# --- registry --------------------------------------------------------------


def test_registry():
    assert "paraboloid" in FAMILY_IDS and "rotational:hyperbolic" in FAMILY_IDS
    assert get_family("paraboloid", m=3, d=0.5).dim_domain == 3
    assert get_family("flat-cone").name == "flat-cone"
    assert get_family("sphere", radius=2.0).params["radius"] == 2.0
    model = get_family("rotational:cubic-exp", m=3)
    assert isinstance(model, RotationalModel) and model.m == 3
    with pytest.raises(UnknownFamily):
        get_family("torus")
    with pytest.raises(UnknownFamily):
        get_family("rotational:flat")
