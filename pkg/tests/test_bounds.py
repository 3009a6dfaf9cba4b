import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conebound.bounds import (
    A_SUP,
    AuxParams,
    aux_quantities,
    certify_theorem1,
    certify_theorem2,
    compute_A,
    delta_u_chain_rule,
    delta_u_closed_form,
    finale_check,
    hess_u_direction,
    hess_u_fd,
    median_base_point,
    omega_region,
    otsuki_direction,
    params_at,
    s_function,
    theorem1_bound,
    theorem2_bound,
)
from conebound.errors import (
    CodimensionOutOfRange,
    DegenerateCone,
    DegeneratePlane,
    HypothesisViolated,
    InvalidParameters,
    PreconditionUnverified,
    SingularMetric,
)
from conebound.geometry import (
    ChartedMap,
    euclidean_metric,
    orthonormal_basis,
    pullback_metric,
    second_fundamental_form,
    tension_field,
)
from conebound.models import affine_map, flat_cone_surface, paraboloid, plane, saddle, sphere
from conebound.sampling import SampleSpec, sample_chart

from oracles import a_eta

# A_eta by the one-dimensional reduction in oracles.a_eta, frozen
A_ORACLE = {
    0.5: 0.05853759057788837,
    1.0: 0.185903200617956,
    2.0: 0.3229536910051388,
    4.0: 0.3689799391107393,
    8.0: 0.3808978527984138,
    16.0: 0.3838982716756971,
}


def _points(phi, count, seed):
    lo, hi = phi.domain_box
    return lo + (hi - lo) * np.random.default_rng(seed).random((count, phi.dim_domain))


def _unit(n, k=-1):
    v = np.zeros(n)
    v[k] = 1.0
    return v


# --- A_eta -----------------------------------------------------------------


def test_frozen_oracle_values_reproduce():
    for eta in (1.0, 16.0):
        assert a_eta(eta) == pytest.approx(A_ORACLE[eta], abs=1e-14)
    # closed form at eta = 1: max of t (1 - t)^(3/2) at t = 2/5
    assert A_ORACLE[1.0] == pytest.approx(0.4 * 0.6 ** 1.5, abs=1e-15)


@pytest.mark.parametrize("eta", sorted(A_ORACLE))
def test_compute_A_matches_oracle(eta):
    assert compute_A(eta).value == pytest.approx(A_ORACLE[eta], abs=1e-6)


def test_compute_A_large_eta_reaches_supremum():
    assert compute_A(1e6).value == pytest.approx(2 / (3 * math.sqrt(3)), abs=1e-6)


@pytest.mark.parametrize("eta", [0.1, 1.0, 3.0, 50.0])
def test_aeta_result_invariants(eta):
    res = compute_A(eta)
    xi, alpha = res.argmax
    assert 0 < xi < 1 and 0 < alpha < min(1.0, eta * math.sqrt(1 - xi))
    assert res.value == pytest.approx(xi * alpha ** 2 * math.sqrt(1 - alpha ** 2), abs=1e-12)
    assert 0 < res.value <= A_SUP
    assert res.resolution < 1e-5


def test_compute_A_rejects_non_positive_eta():
    with pytest.raises(ValueError):
        compute_A(0.0)


def test_compute_A_monotone_on_grid():
    vals = [compute_A(eta).value for eta in (0.5, 1, 2, 4, 8)]
    assert all(a <= b for a, b in zip(vals, vals[1:]))
    assert max(vals) <= A_SUP + 1e-9


@settings(max_examples=30, deadline=None)
@given(e1=st.floats(0.05, 100.0), e2=st.floats(0.05, 100.0))
def test_compute_A_monotone_property(e1, e2):
    lo, hi = sorted((e1, e2))
    assert compute_A(lo).value <= compute_A(hi).value + 1e-9
    assert compute_A(hi).value <= A_SUP + 1e-9


@pytest.mark.parametrize("eta", [0.5, 1.0, 7.0])
def test_compute_A_seed_stability(eta):
    base = compute_A(eta).value
    for seed in (1, 2, 3):
        assert abs(compute_A(eta, seed=seed).value - base) < 1e-9


# --- bound formulas --------------------------------------------------------


def test_bounds_vanish_for_harmonic_or_touching_images():
    assert theorem1_bound(0.3, 0.0, 0.2) == 0.0
    assert theorem1_bound(0.0, 2.0, 0.2) == 0.0
    assert theorem2_bound(0.5, 0.0, 0.2) == 0.0
    assert theorem2_bound(0.0, 1.0, 0.2) == 0.0


def test_theorem2_arithmetic():
    assert theorem2_bound(0.1, 1.0, 0.185903) == pytest.approx(0.7334, abs=1e-4)


def test_paraboloid_bound_with_A2_holds():
    A2 = compute_A(2).value
    rhs = theorem1_bound(0.25, 2.0, A2)
    assert rhs == min(1.0, math.sqrt(0.5 / A2))
    assert rhs >= math.sqrt(0.5)


@settings(max_examples=100, deadline=None)
@given(
    d=st.floats(0, 10), r=st.floats(0, 10), A=st.floats(0.01, 0.38),
    dd=st.floats(0, 1), dr=st.floats(0, 1), dA=st.floats(0, 0.2),
)
def test_bounds_monotone_in_each_argument(d, r, A, dd, dr, dA):
    for f in (theorem1_bound, theorem2_bound):
        b = f(d, r, A + dA)
        assert f(d + dd, r, A + dA) >= b
        assert f(d, r + dr, A + dA) >= b
        assert 0.0 <= b <= 1.0


# --- certification ---------------------------------------------------------


@pytest.mark.parametrize("d", [0.01, 0.1, 1.0])
def test_certify_paraboloid(d):
    phi = paraboloid(2, d, box=10.0).map
    rep = certify_theorem1(phi, np.zeros(3), spec=SampleSpec("polar", 10000), isometric=True)
    assert rep.satisfied and not rep.failures
    assert rep.sup_ratio == pytest.approx(2.0, abs=1e-3)
    assert rep.A_used == pytest.approx(A_ORACLE[2.0], abs=1e-6) and rep.eta == 2
    ratio = rep.lhs ** 2 / rep.rhs_unclamped ** 2
    assert ratio == pytest.approx(2 * A_ORACLE[2.0] / (1 + 4 * d), rel=0.05)
    assert ratio < 1
    assert rep.unconstrained == (rep.rhs_unclamped > 1)
    assert rep.margin == pytest.approx(rep.rhs_bound - rep.lhs)


def test_certify_report_fields():
    rep = certify_theorem1(paraboloid(2, 0.1, box=2.0).map, np.zeros(3), spec=SampleSpec("random", 50))
    doc = rep.as_dict()
    for key in ("family", "parameters", "sample_count", "sup_ratio", "d", "cone", "A_used", "eta",
                "rhs_bound", "lhs", "satisfied", "margin", "failures"):
        assert key in doc
    assert doc["eta"] == 1.0 and doc["sample_count"] == 50


def test_certify_plane_through_vertex_is_degenerate():
    with pytest.raises(DegenerateCone):
        certify_theorem1(plane(2, 0.0), np.zeros(3), spec=SampleSpec("random", 200))


def test_certify_sphere_smoke():
    rep = certify_theorem1(sphere(1.0), np.zeros(3), spec=SampleSpec("random", 300))
    assert rep.satisfied
    assert rep.sup_ratio == pytest.approx(1.0, abs=1e-9)  # |tau| / |dphi|^2 = (2/R) / 2


def test_singular_metric_records_sample():
    cusp = ChartedMap(2, 3, lambda x: np.array([x[0] ** 3, x[1], 1.0 + x[0] ** 2]),
                      (-np.ones(2), np.ones(2)))
    with pytest.raises(SingularMetric) as info:
        certify_theorem1(cusp, np.zeros(3), spec=SampleSpec("grid", 9))
    # rank drops along the whole line x0 = 0
    assert info.value.point[0] == 0.0


def test_fixed_axis_certification():
    phi = paraboloid(2, 0.1, box=10.0).map
    rep = certify_theorem1(phi, np.zeros(3), v=np.array([0, 0, 1.0]), spec=SampleSpec("polar", 2500))
    np.testing.assert_allclose(rep.cone.axis, [0, 0, 1.0])
    assert rep.satisfied


def test_theorem2_codimension_checked():
    with pytest.raises(CodimensionOutOfRange):
        certify_theorem2(affine_map(np.eye(4)[:, :2], np.ones(4)), np.zeros(4), 1.0)


def test_theorem2_lists_curvature_failures():
    phi = paraboloid(2, 0.1, box=3.0).map
    ok = certify_theorem2(phi, np.zeros(3), 2.0, spec=SampleSpec("polar", 400))
    assert ok.satisfied and not ok.failures and ok.sup_ratio == 2.0
    bad = certify_theorem2(phi, np.zeros(3), 1.0, spec=SampleSpec("polar", 400))
    assert bad.failures
    assert all("sectional curvature" in f["reason"] for f in bad.failures)


# --- auxiliary function ----------------------------------------------------


def test_aux_params_invariants():
    with pytest.raises(InvalidParameters):
        AuxParams(0.0, 0.5, 0.5, 0.5)
    with pytest.raises(InvalidParameters):
        AuxParams(1.0, 1.0, 0.5, 0.5)
    # xi + a^2/b^2 >= 1
    with pytest.raises(InvalidParameters):
        AuxParams(1.0, 0.5, 0.5, math.sqrt(0.5))
    p = AuxParams(2.0, 0.8, 0.3, 0.5)
    assert p.a == pytest.approx(0.4)
    assert p.phi_max == pytest.approx(2.0 / math.sqrt(0.64 - 0.16))


def test_s_vanishes_at_vertex_and_stays_below_limit():
    assert s_function(0.0, 1.0, 0.3) == 0.0
    p = AuxParams(1.0, 0.8, 0.3, 0.5)
    for r in np.linspace(0, p.phi_max, 20):
        assert s_function(r, p.T, p.a) < p.a ** 2 / p.b


def test_harmonic_linear_map_delta_u():
    A = np.array([[1.0, 0.2], [0.3, 1.5], [0.1, -0.4]])
    phi = affine_map(A, np.array([0.0, 0.0, 4.0]))
    p = AuxParams(1.5, 0.7, 0.4, 0.6)
    v = _unit(3)
    for x in _points(phi, 20, 1):
        q = aux_quantities(phi, x, p, np.zeros(3), v, metric=euclidean_metric(2))
        assert tension_field(phi, euclidean_metric(2), x).norm == 0.0
        assert q.delta_u_analytic == pytest.approx(q.delta_u_numeric, rel=1e-3)


def test_paraboloid_delta_u_example():
    d = 0.25
    phi = paraboloid(2, d).map
    p = AuxParams(d, math.sqrt(4 * d / (1 + 4 * d)), 0.5, 0.5)
    q = aux_quantities(phi, np.array([1.0, 0.0]), p, np.zeros(3), _unit(3))
    assert q.delta_u_analytic == pytest.approx(q.delta_u_numeric, rel=1e-3)
    assert q.Lu == pytest.approx(q.delta_u_analytic / 2.0)


FAMILIES = {
    "paraboloid": (paraboloid(2, 0.25, box=2.0).map, np.zeros(3)),
    "paraboloid-m3": (paraboloid(3, 0.1, box=2.0).map, np.zeros(4)),
    "sphere": (sphere(1.0), np.zeros(3)),
    "flat-cone": (flat_cone_surface(0.1, 5.0), np.array([0.0, 0.0, -1.0])),
    "plane": (plane(2, 1.0), np.zeros(3)),
    # vertex just below the image z in [-4, 4]; a distant vertex makes |u| large
    # against the Delta u terms and lifts the finite-difference noise floor
    "saddle": (saddle(), np.array([0.0, 0.0, -5.0])),
}


def _term_scale(phi, x, p, o, v):
    """Sum of the magnitudes of the terms that make up Delta u."""
    jet = phi.jet(x)
    ms = pullback_metric(phi, x)
    tau = tension_field(phi, None, x).tau
    z = jet.value - o
    R = math.sqrt(p.T ** 2 + p.a ** 2 * z @ z)
    k = p.a ** 2 / R
    proj = jet.d1 @ z
    return abs((k * z - v) @ tau) + k * phi.dim_domain + k * k / R * proj @ ms.g_inv @ proj


@pytest.mark.parametrize("name", sorted(FAMILIES))
def test_delta_u_three_routes(name):
    phi, o = FAMILIES[name]
    v = _unit(phi.dim_ambient)
    p = AuxParams(2.0, 0.8, 0.3, 0.5)
    for x in _points(phi, 100, 2):
        q = aux_quantities(phi, x, p, o, v)
        err = abs(q.delta_u_analytic - q.delta_u_numeric)
        assert err / abs(q.delta_u_analytic) < 1e-3
        assert err / max(abs(q.delta_u_analytic), _term_scale(phi, x, p, o, v)) < 1e-6
        jet, ms = phi.jet(x), pullback_metric(phi, x)
        tau = tension_field(phi, None, x).tau
        closed, _ = delta_u_closed_form(jet, ms, p, o, v, tau)
        assert closed == pytest.approx(delta_u_chain_rule(jet, ms, p, o, v, tau), rel=1e-12, abs=1e-14)


# --- region and floor checks -----------------------------------------------


def test_omega_region_at_argmax_is_singleton():
    phi = paraboloid(2, 0.25, box=2.0).map
    xs = _points(phi, 200, 3)
    p = AuxParams(0.25, 0.7, 0.5, 0.5)
    region = omega_region(phi, xs, p, np.zeros(3), _unit(3))
    best = int(np.argmax(region.u))
    top = omega_region(phi, xs, p, np.zeros(3), _unit(3), x_o_index=best)
    assert list(top.indices) == [best]


def _plane_setup(count=400):
    phi = plane(2, 1.0, box=1.0)
    xs = sample_chart(phi, SampleSpec("random", count, 0))
    v = _unit(3)
    b = math.cos(math.atan(math.sqrt(2.0))) * 0.999
    idx, params = median_base_point(phi, xs, np.zeros(3), v, b, 0.5, 0.5)
    return phi, xs, v, idx, params


def test_median_base_point():
    phi, xs, v, idx, params = _plane_setup()
    assert params.T == pytest.approx(1.0)
    region = omega_region(phi, xs, params, np.zeros(3), v)
    assert region.x_o_index == idx


def test_region_checks_on_harmonic_plane():
    phi, xs, v, idx, params = _plane_setup()
    region = omega_region(phi, xs, params, np.zeros(3), v, x_o_index=idx)
    assert region.ok and len(region.indices) >= len(xs) // 2
    fin = finale_check(phi, xs[region.indices], params, np.zeros(3), v)
    assert fin.positive and not fin.hypothesis_violated
    assert fin.min_Lu >= params.delta - 1e-9


def test_paraboloid_region_passes_bounds():
    d = 0.25
    phi = paraboloid(2, d, box=10.0).map
    xs = sample_chart(phi, SampleSpec("polar", 900))
    p = params_at(phi, np.zeros(2), np.zeros(3), _unit(3), 0.999 * math.sqrt(4 * d / (1 + 4 * d)), 0.5, 0.5)
    region = omega_region(phi, xs, p, np.zeros(3), _unit(3))
    assert region.ok


def test_paraboloid_violates_tension_hypothesis():
    phi = paraboloid(2, 0.25, box=2.0).map
    xs = _points(phi, 50, 4)
    p = AuxParams(0.25, math.sqrt(0.5), 0.5, 0.5)
    fin = finale_check(phi, xs, p, np.zeros(3), _unit(3))
    assert fin.hypothesis_violated and fin.violations
    with pytest.raises(HypothesisViolated) as info:
        finale_check(phi, xs, p, np.zeros(3), _unit(3), raise_on_violation=True)
    assert info.value.index == fin.violations[0]["index"]


# --- Hessian of u along directions -----------------------------------------


def test_hess_u_on_plane_reduces_to_curvature_free_terms():
    phi = plane(2, 1.0)
    p = AuxParams(1.0, 0.6, 0.4, 0.5)
    x = np.array([0.3, -0.2])
    W = np.array([0.6, 0.8])
    z = phi(x)
    R = math.sqrt(p.T ** 2 + p.a ** 2 * z @ z)
    S = p.a ** 2 * np.linalg.norm(z) / R
    n = np.linalg.norm(z)
    expected = S / n - S ** 3 / (p.a ** 2 * n ** 3) * (np.append(W, 0.0) @ z) ** 2
    assert hess_u_direction(phi, x, W, p, np.zeros(3), _unit(3)) == pytest.approx(expected, rel=1e-13)


@pytest.mark.parametrize("name", sorted(FAMILIES))
def test_hess_u_matches_generic_route(name):
    phi, o = FAMILIES[name]
    v = _unit(phi.dim_ambient)
    p = AuxParams(2.0, 0.8, 0.3, 0.5)
    rng = np.random.default_rng(5)
    for x in _points(phi, 30, 5):
        E = orthonormal_basis(pullback_metric(phi, x).g)
        w = rng.standard_normal(phi.dim_domain)
        W = E @ (w / np.linalg.norm(w))
        assert hess_u_direction(phi, x, W, p, o, v) == pytest.approx(hess_u_fd(phi, x, W, p, o, v), rel=1e-3)


def test_paraboloid_hess_u_example():
    phi = paraboloid(2, 0.25).map
    x = np.array([1.0, 0.0])
    W = np.array([1.0 / math.sqrt(5.0), 0.0])  # d_1 normalised, |d_1|^2 = 5
    p = AuxParams(0.25, math.sqrt(0.5), 0.5, 0.5)
    a = hess_u_direction(phi, x, W, p, np.zeros(3), _unit(3))
    assert a == pytest.approx(hess_u_fd(phi, x, W, p, np.zeros(3), _unit(3)), rel=1e-3)


def test_hess_u_requires_unit_direction():
    with pytest.raises(DegeneratePlane):
        hess_u_direction(sphere(), np.array([1.0, 1.0]), np.array([1.0, 1.0]),
                         AuxParams(1.0, 0.5, 0.5, 0.5), np.zeros(3), _unit(3))


# --- Otsuki directions -----------------------------------------------------


@pytest.mark.parametrize("R", [0.5, 2.0])
def test_otsuki_on_sphere(R):
    res = otsuki_direction(second_fundamental_form(sphere(R), np.array([1.0, 0.5])), 1.0 / R)
    assert res.value == pytest.approx(1.0 / R, rel=1e-9)


def test_otsuki_on_saddle_finds_asymptotic_direction():
    res = otsuki_direction(second_fundamental_form(saddle(), np.zeros(2)), 0.0)
    assert res.value < 1e-6
    assert abs(abs(res.W[0]) - abs(res.W[1])) < 1e-6
    assert np.linalg.norm(res.W) == pytest.approx(1.0)


def test_otsuki_on_paraboloid_origin():
    res = otsuki_direction(second_fundamental_form(paraboloid(2, 0.3).map, np.zeros(2)), 2.0)
    assert res.value == pytest.approx(2.0, abs=1e-12)


def test_otsuki_preconditions():
    with pytest.raises(CodimensionOutOfRange):
        otsuki_direction(second_fundamental_form(affine_map(np.eye(4)[:, :2], np.ones(4)), np.zeros(2)), 1.0)
    with pytest.raises(PreconditionUnverified):
        otsuki_direction(second_fundamental_form(sphere(1.0), np.array([1.0, 0.5])), 0.5)
