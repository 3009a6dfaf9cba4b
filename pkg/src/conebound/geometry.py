"""Differential geometry of charted maps into Euclidean space.

A :class:`ChartedMap` is a map ``phi`` from a box in R^m (chart coordinates)
into R^n. Everything here works pointwise on second-order jets of ``phi``:
pullback metric, Christoffel symbols, energy density ``|dphi|^2``, tension
field, second fundamental form, sectional curvature through the Gauss
equation, and covariant Hessians of scalar functions.

Array conventions
-----------------
``jet.d1[i]`` is the partial derivative ``d_i phi`` (shape ``(m, n)``),
``jet.d2[i, j]`` is ``d_i d_j phi`` (shape ``(m, m, n)``) and
``christoffel[k, i, j]`` is ``Gamma^k_{ij}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DegeneratePlane, SingularMetric

EPS = np.finfo(float).eps
RANK_TOL = 1e-10
ORTHONORMAL_TOL = 1e-8


def fd_steps(x):
    """Central-difference steps ``(h1, h2)`` for first and second derivatives at `x`."""
    scale = max(1.0, float(np.linalg.norm(x)))
    return EPS ** (1.0 / 3.0) * scale, EPS ** 0.25 * scale


@dataclass(frozen=True)
class Jet:
    value: np.ndarray
    d1: np.ndarray
    d2: np.ndarray


def finite_difference_jet(evaluate, x):
    """Second-order jet of `evaluate` at `x` by central differences."""
    x = np.asarray(x, dtype=float)
    m = x.size
    h1, h2 = fd_steps(x)
    f0 = np.asarray(evaluate(x), dtype=float)
    n = f0.size
    d1 = np.empty((m, n))
    d2 = np.empty((m, m, n))
    eye = np.eye(m)
    for i in range(m):
        # exactly representable step
        hi = (x[i] + h1) - x[i]
        d1[i] = (evaluate(x + hi * eye[i]) - evaluate(x - hi * eye[i])) / (2.0 * hi)
    e2 = [((x[i] + h2) - x[i]) * eye[i] for i in range(m)]
    for i in range(m):
        hi = e2[i][i]
        d2[i, i] = (evaluate(x + e2[i]) - 2.0 * f0 + evaluate(x - e2[i])) / (hi * hi)
        for j in range(i + 1, m):
            hj = e2[j][j]
            val = (
                evaluate(x + e2[i] + e2[j])
                - evaluate(x + e2[i] - e2[j])
                - evaluate(x - e2[i] + e2[j])
                + evaluate(x - e2[i] - e2[j])
            ) / (4.0 * hi * hj)
            d2[i, j] = val
            d2[j, i] = val
    return Jet(f0, d1, d2)


@dataclass(frozen=True)
class ChartedMap:
    """A map from a chart box in R^m into R^n with second-order derivative access.

    Parameters
    ----------
    dim_domain, dim_ambient : int
        ``m`` and ``n``, both at least 2.
    evaluate : callable
        Chart point (shape ``(m,)``) to a point of R^n.
    domain_box : (lo, hi)
        Axis-aligned sampling box in chart coordinates.
    analytic_jet : callable, optional
        Chart point to :class:`Jet`. When absent, jets are computed by
        central finite differences of `evaluate`.
    """

    dim_domain: int
    dim_ambient: int
    evaluate: Callable[[np.ndarray], np.ndarray]
    domain_box: tuple
    analytic_jet: Optional[Callable[[np.ndarray], Jet]] = None
    name: str = "map"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.dim_domain < 2 or self.dim_ambient < 2:
            raise ValueError("ChartedMap needs m >= 2 and n >= 2")
        lo, hi = (np.asarray(b, dtype=float) for b in self.domain_box)
        if lo.shape != (self.dim_domain,) or hi.shape != (self.dim_domain,):
            raise ValueError("domain_box bounds must have shape (m,)")
        if np.any(hi <= lo):
            raise ValueError("domain_box must have hi > lo in every coordinate")
        object.__setattr__(self, "domain_box", (lo, hi))

    @property
    def jet_kind(self):
        return "analytic" if self.analytic_jet is not None else "finite-difference"

    def jet(self, x):
        x = np.asarray(x, dtype=float)
        if self.analytic_jet is not None:
            return self.analytic_jet(x)
        return finite_difference_jet(self.evaluate, x)

    def __call__(self, x):
        return np.asarray(self.evaluate(np.asarray(x, dtype=float)), dtype=float)

    def with_finite_differences(self):
        """Copy of this map that ignores its analytic jet."""
        return replace(self, analytic_jet=None)


def linear_reparametrization(phi, Q, shift=None):
    """Return ``y -> phi(Q y + shift)``; `Q` must be invertible.

    The new domain box is the bounding box of the image of the old one
    under the inverse change of variables.
    """
    Q = np.asarray(Q, dtype=float)
    m = phi.dim_domain
    shift = np.zeros(m) if shift is None else np.asarray(shift, dtype=float)
    Qinv = np.linalg.inv(Q)
    lo, hi = phi.domain_box
    corners = np.array(np.meshgrid(*zip(lo, hi), indexing="ij")).reshape(m, -1).T
    ys = (corners - shift) @ Qinv.T
    box = (ys.min(axis=0), ys.max(axis=0))

    def evaluate(y):
        return phi.evaluate(Q @ y + shift)

    analytic = None
    if phi.analytic_jet is not None:

        def analytic(y):
            j = phi.analytic_jet(Q @ y + shift)
            d1 = np.einsum("ia,ib->ab", Q, j.d1)
            d2 = np.einsum("ia,jb,ijn->abn", Q, Q, j.d2)
            return Jet(j.value, d1, d2)

    return ChartedMap(m, phi.dim_ambient, evaluate, box, analytic, name=phi.name + "*Q")


def scaled(phi, lam):
    """Return the map ``lam * phi`` (same chart)."""

    def evaluate(x):
        return lam * phi.evaluate(x)

    analytic = None
    if phi.analytic_jet is not None:

        def analytic(x):
            j = phi.analytic_jet(x)
            return Jet(lam * j.value, lam * j.d1, lam * j.d2)

    return ChartedMap(phi.dim_domain, phi.dim_ambient, evaluate, phi.domain_box,
                      analytic, name=f"{lam}*{phi.name}")


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MetricSample:
    g: np.ndarray
    g_inv: np.ndarray
    christoffel: np.ndarray
    source: str = "induced"

    @property
    def dim(self):
        return self.g.shape[0]


def _invert_metric(g, point=None):
    g = 0.5 * (g + g.T)
    try:
        np.linalg.cholesky(g)
    except np.linalg.LinAlgError:
        raise SingularMetric("metric is not positive-definite", point) from None
    w = np.linalg.eigvalsh(g)
    if w[0] < RANK_TOL * w[-1]:
        raise SingularMetric("metric is numerically singular", point)
    return g, np.linalg.inv(g)


def christoffel_from_derivatives(g_inv, dg):
    """``Gamma^k_ij`` from the inverse metric and ``dg[l, i, j] = d_l g_ij``."""
    # lowered symbols Gamma_{l,ij} = 1/2 (d_i g_jl + d_j g_il - d_l g_ij)
    lowered = 0.5 * (
        np.einsum("ijl->lij", dg) + np.einsum("jil->lij", dg) - dg
    )
    return np.einsum("kl,lij->kij", g_inv, lowered)


def metric_derivatives_fd(g_func, x):
    """Central differences ``dg[l, i, j] = d_l g_ij`` of a matrix field."""
    x = np.asarray(x, dtype=float)
    m = x.size
    h1, _ = fd_steps(x)
    dg = np.empty((m, m, m))
    for l in range(m):
        e = np.zeros(m)
        e[l] = (x[l] + h1) - x[l]
        dg[l] = (np.asarray(g_func(x + e)) - np.asarray(g_func(x - e))) / (2.0 * e[l])
    return dg


def pullback_metric(phi, x):
    """Induced metric ``g_ij = <d_i phi, d_j phi>`` at chart point `x`.

    Christoffel symbols come from the jet through
    ``Gamma^k_ij = g^{kl} <d_i d_j phi, d_l phi>``, which is the Levi-Civita
    formula with ``d_l g_ij`` expanded by the product rule.
    """
    x = np.asarray(x, dtype=float)
    jet = phi.jet(x)
    return _pullback_from_jet(jet, x)


def _pullback_from_jet(jet, x=None):
    s = np.linalg.svd(jet.d1, compute_uv=False)
    if s[-1] < RANK_TOL * s[0] or s[0] == 0.0:
        raise SingularMetric("differential has rank < m", x)
    g = jet.d1 @ jet.d1.T
    g, g_inv = _invert_metric(g, x)
    lowered = np.einsum("ijn,ln->lij", jet.d2, jet.d1)
    gamma = np.einsum("kl,lij->kij", g_inv, lowered)
    gamma = 0.5 * (gamma + gamma.transpose(0, 2, 1))
    return MetricSample(g, g_inv, gamma, "induced")


class InducedMetric:
    """Metric field ``x -> pullback_metric(phi, x)``."""

    def __init__(self, phi):
        self.phi = phi

    def __call__(self, x):
        return pullback_metric(self.phi, x)


class ExplicitMetric:
    """A domain metric given as a matrix field, optionally with its derivatives.

    Parameters
    ----------
    g : callable
        Chart point to an ``(m, m)`` symmetric positive-definite matrix.
    dg : callable, optional
        Chart point to ``dg[l, i, j] = d_l g_ij``. Central differences of `g`
        are used when omitted.
    """

    def __init__(self, g, dg=None):
        self.g = g
        self.dg = dg

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        g, g_inv = _invert_metric(np.asarray(self.g(x), dtype=float), x)
        dg = self.dg(x) if self.dg is not None else metric_derivatives_fd(self.g, x)
        return MetricSample(g, g_inv, christoffel_from_derivatives(g_inv, np.asarray(dg)), "explicit")


def euclidean_metric(m):
    eye = np.eye(m)
    zero = np.zeros((m, m, m))
    return ExplicitMetric(lambda x: eye, lambda x: zero)


def christoffel(metric_field, x):
    """Christoffel symbols ``Gamma^k_ij`` of a metric field at `x`.

    `metric_field` is either a metric field returning :class:`MetricSample`
    (its symbols are returned) or a plain callable returning the matrix
    ``g(x)``, which is then differentiated by central differences.
    """
    x = np.asarray(x, dtype=float)
    sample = metric_field(x)
    if isinstance(sample, MetricSample):
        return sample.christoffel
    _, g_inv = _invert_metric(np.asarray(sample, dtype=float), x)
    return christoffel_from_derivatives(g_inv, metric_derivatives_fd(metric_field, x))


def _resolve_metric(phi, metric, x):
    if metric is None:
        return pullback_metric(phi, x)
    if isinstance(metric, MetricSample):
        return metric
    return metric(x)


# ---------------------------------------------------------------------------
# first and second order quantities
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TensionVector:
    tau: np.ndarray
    energy_density: float

    @property
    def norm(self):
        return float(np.linalg.norm(self.tau))


def energy_density(phi, metric, x, jet=None):
    """``|dphi|^2 = g^{ij} <d_i phi, d_j phi>`` with respect to the domain metric."""
    jet = phi.jet(x) if jet is None else jet
    metric = _resolve_metric(phi, metric, x)
    return float(np.einsum("ij,ia,ja->", metric.g_inv, jet.d1, jet.d1))


def tension_field(phi, metric, x, jet=None):
    """Tension field ``tau^a = g^{ij} (d_i d_j phi^a - Gamma^k_ij d_k phi^a)``.

    `metric` is a metric field, a :class:`MetricSample` already evaluated at
    `x`, or ``None`` for the induced metric.
    """
    x = np.asarray(x, dtype=float)
    jet = phi.jet(x) if jet is None else jet
    if metric is None:
        ms = _pullback_from_jet(jet, x)
    else:
        ms = _resolve_metric(phi, metric, x)
    hess = jet.d2 - np.einsum("kij,kn->ijn", ms.christoffel, jet.d1)
    tau = np.einsum("ij,ijn->n", ms.g_inv, hess)
    energy = float(np.einsum("ij,ia,ja->", ms.g_inv, jet.d1, jet.d1))
    return TensionVector(tau, energy)


def tangent_frame(d1):
    """Ambient-orthonormal basis of span(d_i phi), Gram-Schmidt applied twice."""
    frame = []
    for v in d1:
        w = np.array(v, dtype=float)
        for _ in range(2):
            for e in frame:
                w = w - np.dot(w, e) * e
        norm = np.linalg.norm(w)
        if norm <= RANK_TOL * max(1.0, np.linalg.norm(v)):
            raise SingularMetric("differential has rank < m")
        frame.append(w / norm)
    return np.array(frame)


@dataclass(frozen=True)
class SecondFundamentalForm:
    """Normal-valued second fundamental form in chart coordinates.

    ``values[i, j]`` is ``II(d_i, d_j)``; ``frame`` spans the tangent space.
    ``metric`` is the induced metric used to build it.
    """

    values: np.ndarray
    frame: np.ndarray
    metric: MetricSample

    def __call__(self, X, Y):
        return np.einsum("i,j,ijn->n", np.asarray(X, float), np.asarray(Y, float), self.values)

    def trace(self):
        return np.einsum("ij,ijn->n", self.metric.g_inv, self.values)


def second_fundamental_form(phi, x, jet=None):
    x = np.asarray(x, dtype=float)
    jet = phi.jet(x) if jet is None else jet
    ms = _pullback_from_jet(jet, x)
    frame = tangent_frame(jet.d1)
    hess = jet.d2 - np.einsum("kij,kn->ijn", ms.christoffel, jet.d1)
    normal = hess - np.einsum("ija,ka,kn->ijn", hess, frame, frame)
    normal = 0.5 * (normal + normal.transpose(1, 0, 2))
    return SecondFundamentalForm(normal, frame, ms)


def check_orthonormal(g, X, Y=None, tol=ORTHONORMAL_TOL):
    vectors = [X] if Y is None else [X, Y]
    for V in vectors:
        if abs(V @ g @ V - 1.0) > tol:
            raise DegeneratePlane(f"|V|_g = {np.sqrt(abs(V @ g @ V)):.3g}, expected 1")
    if Y is not None and abs(X @ g @ Y) > tol:
        raise DegeneratePlane(f"<X, Y>_g = {X @ g @ Y:.3g}, expected 0")


def sectional_curvature(phi, x, X, Y, sff=None):
    """Sectional curvature of the plane spanned by `X`, `Y` via the Gauss equation.

    `X` and `Y` are chart-coordinate tangent vectors, orthonormal for the
    induced metric.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    sff = second_fundamental_form(phi, x) if sff is None else sff
    check_orthonormal(sff.metric.g, X, Y)
    return float(np.dot(sff(X, X), sff(Y, Y)) - np.dot(sff(X, Y), sff(X, Y)))


def orthonormal_basis(g):
    """Columns ``E`` with ``E.T @ g @ E = I`` (chart coordinates)."""
    L = np.linalg.cholesky(g)
    return np.linalg.inv(L).T


def hessian_scalar(f, metric, x, orthonormal=False):
    """Covariant Hessian ``d_i d_j f - Gamma^k_ij d_k f`` by central differences.

    Parameters
    ----------
    f : callable
        Scalar function of the chart point.
    metric : metric field or MetricSample
    orthonormal : bool
        Return the matrix in a g-orthonormal frame instead of the chart basis.
    """
    x = np.asarray(x, dtype=float)
    m = x.size
    ms = metric if isinstance(metric, MetricSample) else metric(x)
    h1, h2 = fd_steps(x)
    eye = np.eye(m)
    grad = np.empty(m)
    for k in range(m):
        hk = (x[k] + h1) - x[k]
        grad[k] = (f(x + hk * eye[k]) - f(x - hk * eye[k])) / (2.0 * hk)
    f0 = f(x)
    steps = [((x[i] + h2) - x[i]) * eye[i] for i in range(m)]
    H = np.empty((m, m))
    for i in range(m):
        hi = steps[i][i]
        H[i, i] = (f(x + steps[i]) - 2.0 * f0 + f(x - steps[i])) / (hi * hi)
        for j in range(i + 1, m):
            hj = steps[j][j]
            H[i, j] = H[j, i] = (
                f(x + steps[i] + steps[j])
                - f(x + steps[i] - steps[j])
                - f(x - steps[i] + steps[j])
                + f(x - steps[i] - steps[j])
            ) / (4.0 * hi * hj)
    H = H - np.einsum("kij,k->ij", ms.christoffel, grad)
    H = 0.5 * (H + H.T)
    if orthonormal:
        E = orthonormal_basis(ms.g)
        H = E.T @ H @ E
    return H


def laplace_beltrami_fd(f, metric, x):
    """``Delta f = g^{ij} Hess f_ij`` with the Hessian from :func:`hessian_scalar`."""
    ms = metric if isinstance(metric, MetricSample) else metric(np.asarray(x, float))
    return float(np.sum(ms.g_inv * hessian_scalar(f, ms, x)))


def unit_vectors_in_plane(g, a, b):
    """g-orthonormal pair spanning the plane of chart vectors `a`, `b`."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    X = a / np.sqrt(a @ g @ a)
    Y = b - (X @ g @ b) * X
    Y = Y / np.sqrt(Y @ g @ Y)
    return X, Y


def sample_planes(m, count, rng):
    """Coordinate planes plus `count` random planes, as pairs of chart vectors."""
    planes = []
    eye = np.eye(m)
    for i in range(m):
        for j in range(i + 1, m):
            planes.append((eye[i], eye[j]))
    for _ in range(count):
        a, b = rng.standard_normal((2, m))
        planes.append((a, b))
    return planes


def max_sectional_curvature(sff, planes: Sequence):
    g = sff.metric.g
    best = -np.inf
    for a, b in planes:
        X, Y = unit_vectors_in_plane(g, a, b)
        k = float(np.dot(sff(X, X), sff(Y, Y)) - np.dot(sff(X, Y), sff(X, Y)))
        best = max(best, k)
    return best
