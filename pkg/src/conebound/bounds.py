"""Width bounds for maps into cones, and numerical checks of the supporting identities.

The width of a cone containing ``phi(M)`` is bounded by

    cos(theta) <= sqrt(d * sup(|tau| / |dphi|^2) / A_eta)

where ``d`` is the distance from the image to the hyperplane through the
vertex orthogonal to the axis, and ``A_eta`` is the constant computed by
:func:`compute_A` (``eta = 1`` in general, ``eta = m`` for isometric
immersions). For isometric immersions with sectional curvature at most
``chi^2`` and codimension below ``m`` the tension ratio is replaced by ``chi``.

The rest of the module evaluates the auxiliary function

    u = sqrt(T^2 + a^2 |phi|^2) - <phi, v>

and its Laplacian and Hessian in closed form, so they can be compared
against finite-difference routes.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np

from ._parallel import pmap
from .cones import Cone, cone_with_axis, contains_all, min_enclosing_cone, plane_distance
from .errors import (
    ApexSample,
    CodimensionOutOfRange,
    HypothesisViolated,
    InvalidParameters,
    PreconditionUnverified,
    SearchFailure,
    SingularMetric,
)
from .geometry import (
    InducedMetric,
    _pullback_from_jet,
    check_orthonormal,
    hessian_scalar,
    laplace_beltrami_fd,
    max_sectional_curvature,
    orthonormal_basis,
    sample_planes,
    second_fundamental_form,
    tension_field,
)
from .sampling import SampleSpec, sample_chart

A_SUP = 2.0 / (3.0 * math.sqrt(3.0))
SATISFIED_TOL = 1e-9

# ---------------------------------------------------------------------------
# A_eta
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AetaResult:
    eta: float
    value: float
    argmax: tuple
    resolution: float


def _a_objective(xi, alpha):
    return xi * alpha ** 2 * np.sqrt(1.0 - alpha ** 2)


def compute_A(eta, grid=200, passes=3, seed=0, shrink=1e-9):
    """Supremum of ``xi alpha^2 sqrt(1 - alpha^2)`` over the admissible ``(xi, alpha)``.

    The feasible set ``0 < xi < 1``, ``0 < alpha < min(1, eta sqrt(1 - xi))``
    is parametrised by the unit box ``(r, s)`` through
    ``alpha = r min(1, eta)`` and ``xi = s (1 - alpha^2 / eta^2)``. The
    objective increases in ``s``, so the maximiser sits on the straight edge
    ``s = 1`` for every ``eta``. A ``grid x grid`` search over the
    ``shrink``-shrunken closed box is followed by `passes` zoomed grids, each
    with a cell ten times smaller. `seed` jitters interior coarse nodes.
    """
    if not eta > 0:
        raise ValueError("eta must be positive")
    lo, hi = shrink, 1.0 - shrink
    rng = np.random.default_rng(seed)
    alpha_top = min(1.0, eta)

    def to_xi_alpha(r, s):
        alpha = r * alpha_top
        return s * (1.0 - (alpha / eta) ** 2), alpha

    def nodes(a, b, jitter):
        x = np.linspace(a, b, grid)
        if jitter:
            cell = (b - a) / (grid - 1)
            x[1:-1] += rng.uniform(-0.25, 0.25, grid - 2) * cell
        return x

    rs, ss = nodes(lo, hi, True), nodes(lo, hi, True)
    cell_r = cell_s = (hi - lo) / (grid - 1)
    best = (-np.inf, None, None)
    for level in range(passes + 1):
        R, S = np.meshgrid(rs, ss, indexing="ij")
        vals = _a_objective(*to_xi_alpha(R, S))
        k = np.unravel_index(int(np.argmax(vals)), vals.shape)
        if vals[k] > best[0]:
            best = (float(vals[k]), float(R[k]), float(S[k]))
        if level == passes:
            break
        _, br, bs = best
        wr, ws = 10.0 * cell_r, 10.0 * cell_s
        ra, rb = max(lo, br - wr), min(hi, br + wr)
        sa, sb = max(lo, bs - ws), min(hi, bs + ws)
        rs, ss = nodes(ra, rb, False), nodes(sa, sb, False)
        cell_r, cell_s = (rb - ra) / (grid - 1), (sb - sa) / (grid - 1)
    _, r, s_ = best
    xi, alpha = to_xi_alpha(r, s_)
    return AetaResult(float(eta), float(_a_objective(xi, alpha)), (float(xi), float(alpha)),
                      max(cell_r, cell_s))


@functools.lru_cache(maxsize=32)
def _cached_A(eta):
    return compute_A(eta).value


# ---------------------------------------------------------------------------
# bounds
# ---------------------------------------------------------------------------


def raw_bound(d, ratio, A):
    if d < 0 or ratio < 0 or not A > 0:
        raise ValueError("bound inputs must be non-negative with A > 0")
    return math.sqrt(d * ratio / A)


def theorem1_bound(d, sup_ratio, A):
    """``sqrt(d * sup_ratio / A)`` clamped to [0, 1]; an upper bound on ``cos(theta)``."""
    return min(1.0, raw_bound(d, sup_ratio, A))


def theorem2_bound(d, chi, A1):
    """``sqrt(d * chi / A1)`` clamped to [0, 1]."""
    return min(1.0, raw_bound(d, chi, A1))


@dataclass
class VerificationReport:
    family: str
    parameters: dict
    sample_count: int
    sup_ratio: float
    d: float
    cone: Cone
    A_used: float
    eta: float
    rhs_bound: float
    rhs_unclamped: float
    lhs: float
    satisfied: bool
    margin: float
    failures: list = field(default_factory=list)
    theorem: str = "theorem1"
    unconstrained: bool = False
    sample_spec: dict = field(default_factory=dict)
    domain_box: list = field(default_factory=list)
    assumptions: list = field(default_factory=list)

    def as_dict(self):
        return {
            "theorem": self.theorem,
            "family": self.family,
            "parameters": self.parameters,
            "sample_count": self.sample_count,
            "sample_spec": self.sample_spec,
            "domain_box": self.domain_box,
            "sup_ratio": self.sup_ratio,
            "d": self.d,
            "cone": self.cone.as_dict(),
            "A_used": self.A_used,
            "eta": self.eta,
            "rhs_bound": self.rhs_bound,
            "rhs_unclamped": self.rhs_unclamped,
            "lhs": self.lhs,
            "satisfied": self.satisfied,
            "margin": self.margin,
            "unconstrained": self.unconstrained,
            "assumptions": self.assumptions,
            "failures": self.failures,
        }


def _fit(points, o, v, seed):
    if v is None:
        return min_enclosing_cone(points, o, seed=seed)
    return cone_with_axis(points, o, v)


def _tension_ratio(phi, metric, x):
    jet = phi.jet(x)
    try:
        if metric is None:
            tv = tension_field(phi, None, x, jet=jet)
        else:
            tv = tension_field(phi, metric, x, jet=jet)
    except SingularMetric as exc:
        exc.point = np.asarray(x).tolist()
        raise
    return jet.value, tv.norm / tv.energy_density, tv.norm, tv.energy_density


def _certify(phi, o, v, spec, family, theorem, eta, seed, sampler, fixed_ratio=None):
    """Shared sampling/fit/bound pipeline; returns the report and per-sample values."""
    samples = sample_chart(phi, spec)
    evaluated = pmap(sampler, samples)
    points = np.array([e[0] for e in evaluated])
    values = np.array([e[1] for e in evaluated])
    o = np.asarray(o, dtype=float)
    cone = _fit(points, o, v, seed)
    d = plane_distance(points, o, cone.axis)
    A = _cached_A(float(eta))
    ratio = float(np.max(values)) if fixed_ratio is None else float(fixed_ratio)
    raw = raw_bound(max(d, 0.0), ratio, A)
    rhs = min(1.0, raw)
    lhs = cone.cos_width
    margin = rhs - lhs
    inside = contains_all(cone, points)
    failures = []
    for i in np.nonzero(~inside | ~np.isfinite(values))[0]:
        reason = "outside fitted cone" if not inside[i] else "non-finite sample value"
        failures.append({"index": int(i), "x": samples[i].tolist(), "reason": reason})
    report = VerificationReport(
        family=family or phi.name,
        parameters=dict(phi.params),
        sample_count=int(len(samples)),
        sup_ratio=ratio,
        d=d,
        cone=cone,
        A_used=A,
        eta=float(eta),
        rhs_bound=rhs,
        rhs_unclamped=raw,
        lhs=lhs,
        satisfied=bool(margin >= -SATISFIED_TOL),
        margin=margin,
        failures=failures,
        theorem=theorem,
        unconstrained=bool(raw > 1.0),
        sample_spec=spec.as_dict(),
        domain_box=[b.tolist() for b in phi.domain_box],
    )
    return report, samples, values


def certify_theorem1(phi, o, v=None, spec=None, metric=None, isometric=False, family=None, seed=0):
    """Sample `phi`, fit the cone and evaluate the tension bound.

    Parameters
    ----------
    phi : ChartedMap
    o : vertex of the cone
    v : axis, optional
        When given, the narrowest cone with this axis is used; otherwise the
        minimal enclosing cone with vertex `o`.
    spec : SampleSpec
    metric : metric field, optional
        Domain metric; ``None`` means the induced metric.
    isometric : bool
        Use ``A_m`` instead of ``A_1``.

    The supremum of ``|tau| / |dphi|^2`` is the maximum over the samples, so
    the report certifies the sampled set only.
    """
    spec = spec or SampleSpec()
    eta = phi.dim_domain if isometric else 1
    rep, _, _ = _certify(phi, o, v, spec, family, "theorem1", eta, seed,
                         lambda x: _tension_ratio(phi, metric, x)[:2])
    rep.assumptions = ["L-stochastic completeness of the domain (not checked)"]
    if isometric:
        rep.assumptions.append("phi is an isometric immersion (induced metric)")
    return rep


def certify_theorem2(phi, o, chi, v=None, spec=None, family=None, seed=0, planes=4):
    """Curvature version of the width bound for isometric immersions.

    Checks ``0 < n - m < m``; samples whose sampled sectional curvature
    exceeds ``chi^2`` are listed in ``failures``. ``sup_ratio`` holds ``chi``.
    """
    spec = spec or SampleSpec()
    m, n = phi.dim_domain, phi.dim_ambient
    if not 0 < n - m < m:
        raise CodimensionOutOfRange(f"codimension {n - m} not in (0, {m})")
    plane_set = sample_planes(m, planes, np.random.default_rng(seed))

    def sampler(x):
        return phi(x), max_sectional_curvature(second_fundamental_form(phi, x), plane_set)

    rep, samples, curv = _certify(phi, o, v, spec, family, "theorem2", 1, seed, sampler,
                                  fixed_ratio=chi)
    for i in np.nonzero(curv > chi ** 2 + 1e-9)[0]:
        rep.failures.append({"index": int(i), "x": samples[i].tolist(),
                             "reason": f"sectional curvature {curv[i]:.6g} > chi^2"})
    rep.assumptions = ["weak maximum principle for the Hessian (no finite certificate)"]
    return rep


# ---------------------------------------------------------------------------
# auxiliary function u
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AuxParams:
    """Parameters of ``u``: ``T > 0``, ``b = cos(theta)``, ``xi``, ``alpha``; ``a = b alpha``."""

    T: float
    b: float
    xi: float
    alpha: float

    def __post_init__(self):
        if not self.T > 0:
            raise InvalidParameters("T must be positive")
        if not 0 < self.b < 1:
            raise InvalidParameters("b must lie in (0, 1)")
        if not 0 < self.xi < 1:
            raise InvalidParameters("xi must lie in (0, 1)")
        if not 0 < self.alpha < math.sqrt(1 - self.xi):
            raise InvalidParameters("alpha must lie in (0, sqrt(1 - xi)), i.e. xi + a^2/b^2 < 1")

    @property
    def a(self):
        return self.b * self.alpha

    @property
    def phi_max(self):
        return self.T / math.sqrt(self.b ** 2 - self.a ** 2)

    @property
    def delta(self):
        """Floor for ``|dphi|^-2 Delta u`` on the superlevel region."""
        a, b = self.a, self.b
        return a * a * math.sqrt(b * b - a * a) / (b * self.T) * (1 - self.xi - a * a / (b * b))

    @property
    def tension_threshold(self):
        """``xi a^2 sqrt(b^2 - a^2) / (b T)``: admissible ``|tau|/|dphi|^2`` (or ``chi``)."""
        a, b = self.a, self.b
        return self.xi * a * a * math.sqrt(b * b - a * a) / (b * self.T)

    def as_dict(self):
        return {"T": self.T, "b": self.b, "xi": self.xi, "alpha": self.alpha, "a": self.a}


def s_function(phi_norm, T, a):
    """``S = a^2 |phi| / sqrt(T^2 + a^2 |phi|^2)``."""
    return a * a * phi_norm / math.sqrt(T * T + a * a * phi_norm * phi_norm)


def u_value(z, params, v):
    """``u`` at an ambient point `z` given relative to the vertex."""
    a = params.a
    return math.sqrt(params.T ** 2 + a * a * float(z @ z)) - float(z @ v)


@dataclass(frozen=True)
class AuxQuantities:
    u: float
    S: float
    phi_max: float
    delta_u_analytic: float
    delta_u_numeric: float
    Lu: float
    energy: float
    tau_norm: float
    phi_norm: float


def _relative(phi, x, o):
    z = phi(x) - o
    if np.linalg.norm(z) < 1e-14 * (1.0 + np.linalg.norm(o)):
        raise ApexSample("phi(x) coincides with the vertex")
    return z


def _u_function(phi, params, o, v):
    def u(x):
        return u_value(phi(x) - o, params, v)

    return u


def delta_u_closed_form(jet, metric, params, o, v, tau):
    """Laplacian of ``u`` in the frame-sum form, plus ``|dphi|^2``."""
    z = jet.value - o
    a, T = params.a, params.T
    R = math.sqrt(T * T + a * a * float(z @ z))
    k = a * a / R  # S / |phi|
    energy = float(np.einsum("ij,ia,ja->", metric.g_inv, jet.d1, jet.d1))
    proj = jet.d1 @ z  # <phi, d_i phi>
    frame_sum = float(proj @ metric.g_inv @ proj)
    value = float((k * z - v) @ tau) + k * energy - k * k / R * frame_sum
    return value, energy


def delta_u_chain_rule(jet, metric, params, o, v, tau):
    """Laplacian of ``u = F(phi)`` as ``tr_g(dphi^T Hess F dphi) + <grad F, tau>``."""
    z = jet.value - o
    a, T = params.a, params.T
    R = math.sqrt(T * T + a * a * float(z @ z))
    grad = a * a * z / R - v
    hessF = a * a / R * np.eye(z.size) - a ** 4 / R ** 3 * np.outer(z, z)
    pulled = jet.d1 @ hessF @ jet.d1.T
    return float(np.sum(metric.g_inv * pulled) + grad @ tau)


def aux_quantities(phi, x, params, o, v, metric=None, numeric=True):
    """Evaluate ``u``, ``S``, ``phi_max``, ``Delta u`` (closed form and finite differences) and ``Lu``.

    `metric` is the domain metric field (``None``: induced). Positions are
    taken relative to the vertex `o`.
    """
    x = np.asarray(x, dtype=float)
    o = np.asarray(o, dtype=float)
    v = np.asarray(v, dtype=float)
    _relative(phi, x, o)
    jet = phi.jet(x)
    ms = _pullback_from_jet(jet, x) if metric is None else metric(x)
    tv = tension_field(phi, ms, x, jet=jet)
    z = jet.value - o
    phi_norm = float(np.linalg.norm(z))
    du, energy = delta_u_closed_form(jet, ms, params, o, v, tv.tau)
    if numeric:
        field_ = InducedMetric(phi) if metric is None else metric
        du_num = laplace_beltrami_fd(_u_function(phi, params, o, v), field_(x), x)
    else:
        du_num = float("nan")
    return AuxQuantities(
        u=u_value(z, params, v),
        S=s_function(phi_norm, params.T, params.a),
        phi_max=params.phi_max,
        delta_u_analytic=du,
        delta_u_numeric=du_num,
        Lu=du / energy,
        energy=energy,
        tau_norm=tv.norm,
        phi_norm=phi_norm,
    )


def params_at(phi, x_o, o, v, b, xi, alpha):
    """AuxParams with ``T = <phi(x_o) - o, v>``."""
    T = float((phi(x_o) - np.asarray(o, float)) @ np.asarray(v, float))
    return AuxParams(T, b, xi, alpha)


def median_base_point(phi, samples, o, v, b, xi, alpha):
    """Pick ``x_o`` as the sample of median ``u`` and return ``(index, params)``.

    ``u`` depends on ``T`` and ``T = <phi(x_o) - o, v>`` depends on ``x_o``;
    one fixed-point step starting from the median height settles both.
    """
    o = np.asarray(o, dtype=float)
    v = np.asarray(v, dtype=float)
    Z = np.array([phi(x) for x in np.asarray(samples, dtype=float)]) - o
    heights = Z @ v
    norms = np.linalg.norm(Z, axis=1)
    mid = (len(heights) - 1) // 2
    T0 = float(np.sort(heights)[mid])
    a = b * alpha
    u = np.sqrt(T0 * T0 + a * a * norms ** 2) - heights
    idx = int(np.argsort(u, kind="stable")[mid])
    return idx, AuxParams(float(heights[idx]), b, xi, alpha)


@dataclass
class OmegaRegion:
    indices: np.ndarray
    x_o_index: int
    u: np.ndarray
    violations: list

    @property
    def ok(self):
        return not self.violations


def omega_region(phi, samples, params, o, v, x_o_index=None):
    """Samples with ``u >= u(x_o)``, checking ``u < T`` and ``|phi| <= phi_max`` on them.

    ``x_o`` defaults to the sample of median ``u``. The ``u < T`` check only
    applies where the cone inequality ``<phi, v> >= b |phi|`` holds.
    """
    o = np.asarray(o, dtype=float)
    v = np.asarray(v, dtype=float)
    samples = np.asarray(samples, dtype=float)
    Z = np.array([phi(x) for x in samples]) - o
    a, T, b = params.a, params.T, params.b
    norms = np.linalg.norm(Z, axis=1)
    heights = Z @ v
    u = np.sqrt(T * T + a * a * norms ** 2) - heights
    if x_o_index is None:
        x_o_index = int(np.argsort(u, kind="stable")[(len(u) - 1) // 2])
    idx = np.nonzero(u >= u[x_o_index])[0]
    violations = []
    for i in idx:
        in_cone = heights[i] >= b * norms[i]
        if in_cone and not u[i] < T:
            violations.append({"index": int(i), "check": "u < T", "u": float(u[i])})
        if norms[i] > params.phi_max * (1 + 1e-9):
            violations.append({"index": int(i), "check": "|phi| <= phi_max", "phi_norm": float(norms[i])})
    return OmegaRegion(idx, x_o_index, u, violations)


@dataclass
class FinaleResult:
    min_Lu: float
    delta: float
    positive: bool
    hypothesis_violated: bool
    violations: list
    Lu: np.ndarray


def finale_check(phi, samples, params, o, v, metric=None, raise_on_violation=False):
    """Minimum of ``Lu`` over the samples against the floor ``delta``.

    Every sample is also checked for the strict tension inequality
    ``T |tau| < (xi a^2 sqrt(b^2 - a^2) / b) |dphi|^2``; failures are
    listed in ``violations`` (or raised as :class:`HypothesisViolated`).
    """
    o = np.asarray(o, dtype=float)
    v = np.asarray(v, dtype=float)
    thr = params.tension_threshold
    Lu = []
    violations = []
    for i, x in enumerate(np.asarray(samples, dtype=float)):
        q = aux_quantities(phi, x, params, o, v, metric=metric, numeric=False)
        Lu.append(q.Lu)
        if not q.tau_norm < thr * q.energy:
            violations.append({"index": i, "x": x.tolist(), "ratio": q.tau_norm / q.energy,
                               "threshold": thr})
            if raise_on_violation:
                raise HypothesisViolated(
                    f"tension ratio {q.tau_norm / q.energy:.6g} >= {thr:.6g} at sample {i}", i)
    Lu = np.array(Lu)
    delta = params.delta
    min_Lu = float(Lu.min()) if Lu.size else float("inf")
    return FinaleResult(min_Lu, delta, bool(min_Lu >= delta - 1e-9), bool(violations), violations, Lu)


# ---------------------------------------------------------------------------
# Hessian of u along directions, Otsuki directions
# ---------------------------------------------------------------------------


def hess_u_direction(phi, x, W, params, o, v, sff=None):
    """Second derivative of ``u`` along the geodesic with unit initial velocity `W`.

    For an isometric immersion this is
    ``<(S/|phi|) phi - v, II(W,W)> + S/|phi| - S^3/(a^2 |phi|^3) <dphi(W), phi>^2``.
    """
    x = np.asarray(x, dtype=float)
    W = np.asarray(W, dtype=float)
    o = np.asarray(o, dtype=float)
    z = _relative(phi, x, o)
    sff = second_fundamental_form(phi, x) if sff is None else sff
    check_orthonormal(sff.metric.g, W)
    jet = phi.jet(x)
    a, T = params.a, params.T
    # S/|phi| = a^2 / sqrt(T^2 + a^2 |phi|^2), so S^3/(a^2 |phi|^3) = k^3 / a^2
    k = a * a / math.sqrt(T * T + a * a * float(z @ z))
    dW = W @ jet.d1
    return float((k * z - v) @ sff(W, W) + k - k ** 3 / (a * a) * float(dW @ z) ** 2)


def hess_u_fd(phi, x, W, params, o, v, metric=None):
    """``Hess u (W, W)`` from finite differences of ``u`` and the Christoffel symbols."""
    x = np.asarray(x, dtype=float)
    field_ = InducedMetric(phi) if metric is None else metric
    H = hessian_scalar(_u_function(phi, params, np.asarray(o, float), np.asarray(v, float)), field_(x), x)
    W = np.asarray(W, dtype=float)
    return float(W @ H @ W)


@dataclass(frozen=True)
class OtsukiResult:
    W: np.ndarray
    value: float
    max_sectional: float


def otsuki_direction(sff, chi, grid=1000, steps=50, planes=20, seed=0, check=True):
    """Unit tangent `W` minimising ``|II(W, W)|``.

    Requires ``0 < n - m < m`` and sampled sectional curvatures at most
    ``chi^2 + 1e-9``; then a direction with ``|II(W, W)| <= chi`` exists and
    the search result is checked against it (tolerance 1e-6).
    """
    m, _, n = sff.values.shape
    if not 0 < n - m < m:
        raise CodimensionOutOfRange(f"codimension {n - m} not in (0, {m})")
    rng = np.random.default_rng(seed)
    kmax = max_sectional_curvature(sff, sample_planes(m, planes, rng))
    verified = kmax <= chi * chi + 1e-9
    if check and not verified:
        raise PreconditionUnverified(f"sectional curvature {kmax:.6g} exceeds chi^2 = {chi * chi:.6g}")
    E = orthonormal_basis(sff.metric.g)
    B = np.einsum("ia,jb,ijn->abn", E, E, sff.values)
    if m == 2:
        t = np.pi * np.arange(grid) / grid
        cand = np.stack([np.cos(t), np.sin(t)], axis=1)
    else:
        cand = rng.standard_normal((max(grid, 200 * m), m))
        cand /= np.linalg.norm(cand, axis=1)[:, None]

    def value(w):
        return np.linalg.norm(np.einsum("a,b,abn->n", w, w, B))

    Q = np.einsum("ka,kb,abn->kn", cand, cand, B)
    w = cand[int(np.argmin(np.linalg.norm(Q, axis=1)))]
    f = value(w) ** 2
    for _ in range(steps):
        q = np.einsum("a,b,abn->n", w, w, B)
        g = 4.0 * np.einsum("abn,b,n->a", B, w, q)
        g -= (g @ w) * w
        gn = float(g @ g)
        if gn == 0.0:
            break
        t = 1.0
        for _ in range(40):
            trial = w - t * g
            trial /= np.linalg.norm(trial)
            ft = value(trial) ** 2
            if ft <= f - 1e-4 * t * gn:
                w, f = trial, ft
                break
            t *= 0.5
        else:
            break
    W = E @ w
    val = math.sqrt(f)
    if check and verified and val > chi + 1e-6:
        raise SearchFailure(f"|II(W,W)| = {val:.9g} > chi = {chi:.9g}")
    return OtsukiResult(W, val, float(kmax))
