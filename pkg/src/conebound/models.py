"""Built-in families with closed-form ground truth, and rotational models.

Families: the paraboloid graphs ``x -> (x, |x|^2 + d)``, the flat cone
``x3 = sqrt(x1^2 + x2^2)``, round spheres, affine maps and general graphs.
Rotational models ``dr^2 + sigma(r)^2 dS^2`` carry volume growth data for
the integrability heuristics used as stochastic-completeness evidence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp

from .errors import EvaluationFailure, QuadratureFailure, UnknownFamily
from .geometry import ChartedMap, Jet, energy_density

# ---------------------------------------------------------------------------
# charted families
# ---------------------------------------------------------------------------


def graph_map(m, height, gradient, hessian, box, name="graph", params=None):
    """Graph ``x -> (x, height(x))`` of a function on ``[-box, box]^m`` with analytic jets."""
    n = m + 1

    def evaluate(x):
        return np.append(x, height(x))

    def jet(x):
        d1 = np.zeros((m, n))
        d1[:, :m] = np.eye(m)
        d1[:, m] = gradient(x)
        d2 = np.zeros((m, m, n))
        d2[:, :, m] = hessian(x)
        return Jet(evaluate(x), d1, d2)

    lo = -box * np.ones(m)
    return ChartedMap(m, n, evaluate, (lo, -lo), jet, name=name, params=dict(params or {}))


@dataclass(frozen=True)
class ParaboloidFamily:
    m: int
    d: float
    map: ChartedMap


def paraboloid(m=2, d=0.25, box=10.0):
    if m < 2:
        raise ValueError("m >= 2 required")
    if d <= 0:
        raise ValueError("offset d must be positive")
    phi = graph_map(
        m,
        lambda x: float(x @ x) + d,
        lambda x: 2.0 * x,
        lambda x: 2.0 * np.eye(m),
        box,
        name="paraboloid",
        params={"m": m, "d": d, "box": box},
    )
    return ParaboloidFamily(m, d, phi)


@dataclass(frozen=True)
class ParaboloidTruth:
    tau_norm: float
    energy: float
    tangent_cone_cos2: float


def paraboloid_truth(family, x):
    """Closed-form ``|tau|``, ``|dphi|^2`` and tangent-cone ``cos^2`` for the paraboloid."""
    m, d = family.m, family.d
    s2 = float(np.dot(x, x))
    tau = (2 * m + 8 * (m - 1) * s2) / (1 + 4 * s2) ** 1.5
    return ParaboloidTruth(tau, float(m), 4 * d / (1 + 4 * d))


def saddle(box=2.0):
    """``z = x^2 - y^2``; Gauss curvature -4 at the origin."""
    return graph_map(
        2,
        lambda x: float(x[0] ** 2 - x[1] ** 2),
        lambda x: np.array([2 * x[0], -2 * x[1]]),
        lambda x: np.diag([2.0, -2.0]),
        box,
        name="saddle",
        params={"box": box},
    )


def affine_map(A, c, box=1.0):
    """``x -> A x + c`` with ``A`` of shape ``(n, m)``; harmonic for any flat domain metric."""
    A = np.asarray(A, dtype=float)
    c = np.asarray(c, dtype=float)
    n, m = A.shape
    d2 = np.zeros((m, m, n))

    def evaluate(x):
        return A @ x + c

    def jet(x):
        return Jet(evaluate(x), A.T.copy(), d2)

    lo = -box * np.ones(m)
    return ChartedMap(m, n, evaluate, (lo, -lo), jet, name="affine",
                      params={"A": A.tolist(), "c": c.tolist(), "box": box})


def plane(m=2, height=0.0, box=1.0):
    """Isometric embedding ``x -> (x, height)`` of a box of R^m into R^(m+1)."""
    A = np.vstack([np.eye(m), np.zeros((1, m))])
    c = np.zeros(m + 1)
    c[-1] = height
    phi = affine_map(A, c, box)
    return ChartedMap(m, m + 1, phi.evaluate, phi.domain_box, phi.analytic_jet,
                      name="plane", params={"m": m, "height": height, "box": box})


def flat_cone_surface(r_min=1e-3, r_max=10.0):
    """Chart ``(r, t) -> (r cos t, r sin t, r)`` of the cone ``x3 = |(x1, x2)|``, apex excluded."""

    def evaluate(x):
        r, t = x
        return np.array([r * np.cos(t), r * np.sin(t), r])

    def jet(x):
        r, t = x
        c, s = np.cos(t), np.sin(t)
        d1 = np.array([[c, s, 1.0], [-r * s, r * c, 0.0]])
        d2 = np.zeros((2, 2, 3))
        d2[0, 1] = d2[1, 0] = [-s, c, 0.0]
        d2[1, 1] = [-r * c, -r * s, 0.0]
        return Jet(evaluate(x), d1, d2)

    box = (np.array([r_min, 0.0]), np.array([r_max, 2 * np.pi]))
    return ChartedMap(2, 3, evaluate, box, jet, name="flat-cone",
                      params={"r_min": r_min, "r_max": r_max})


def sphere(radius=1.0, center=(0.0, 0.0, 3.0), polar_margin=0.1):
    """Round sphere in polar/azimuth chart, poles excluded by `polar_margin`."""
    R = float(radius)
    c0 = np.asarray(center, dtype=float)

    def evaluate(x):
        a, b = x
        return c0 + R * np.array([np.sin(a) * np.cos(b), np.sin(a) * np.sin(b), np.cos(a)])

    def jet(x):
        a, b = x
        sa, ca, sb, cb = np.sin(a), np.cos(a), np.sin(b), np.cos(b)
        d1 = R * np.array([[ca * cb, ca * sb, -sa], [-sa * sb, sa * cb, 0.0]])
        d2 = np.empty((2, 2, 3))
        d2[0, 0] = -R * np.array([sa * cb, sa * sb, ca])
        d2[0, 1] = d2[1, 0] = R * np.array([-ca * sb, ca * cb, 0.0])
        d2[1, 1] = -R * np.array([sa * cb, sa * sb, 0.0])
        return Jet(evaluate(x), d1, d2)

    box = (np.array([polar_margin, 0.0]), np.array([np.pi - polar_margin, 2 * np.pi]))
    return ChartedMap(2, 3, evaluate, box, jet, name="sphere",
                      params={"radius": R, "center": c0.tolist()})


# ---------------------------------------------------------------------------
# rotational models
# ---------------------------------------------------------------------------


def sphere_area(k):
    """Area of the unit k-sphere, ``2 pi^((k+1)/2) / Gamma((k+1)/2)``."""
    return 2.0 * math.pi ** ((k + 1) / 2.0) / math.gamma((k + 1) / 2.0)


@dataclass(frozen=True)
class RotationalModel:
    """Model ``dr^2 + sigma(r)^2 dS^{m-1}``.

    ``log_derivative`` is ``sigma'/sigma``; it lets the volume quotient be
    integrated at radii where ``sigma`` itself overflows.
    """

    m: int
    sigma: Callable[[float], float]
    log_derivative: Callable[[float], float]
    name: str = "model"
    beta: Optional[float] = None
    params: dict = field(default_factory=dict)

    def boundary_volume(self, r):
        return sphere_area(self.m - 1) * self.sigma(r) ** (self.m - 1)


def _cubic_exp_sigma():
    # C^1 splice of exp(r^3) on [1, inf) with r - 2r^2 + (e+1) r^3 on [0, 1]
    e = math.e

    def sigma(r):
        if r >= 1.0:
            return math.exp(r ** 3)
        return r - 2 * r * r + (e + 1) * r ** 3

    def log_derivative(r):
        if r >= 1.0:
            return 3.0 * r * r
        return (1 - 4 * r + 3 * (e + 1) * r * r) / (r - 2 * r * r + (e + 1) * r ** 3)

    return sigma, log_derivative


def rotational_model(preset, m=2, beta=None):
    if preset == "euclidean":
        return RotationalModel(m, lambda r: r, lambda r: 1.0 / r, "euclidean", beta)
    if preset == "hyperbolic":
        return RotationalModel(m, math.sinh, lambda r: 1.0 / math.tanh(r), "hyperbolic", beta)
    if preset == "cubic-exp":
        s, ld = _cubic_exp_sigma()
        return RotationalModel(m, s, ld, "cubic-exp", beta)
    raise UnknownFamily(f"unknown rotational preset {preset!r}")


ROTATIONAL_PRESETS = ("euclidean", "hyperbolic", "cubic-exp")


def adaptive_simpson(f, a, b, rtol=1e-8, max_levels=20, atol=1e-300):
    """Composite Simpson on ``[a, b]``, doubling panels until the relative change < `rtol`."""
    if b == a:
        return 0.0
    n = 2
    x = np.linspace(a, b, n + 1)
    fx = np.array([f(t) for t in x], dtype=float)
    if not np.all(np.isfinite(fx)):
        raise EvaluationFailure("integrand is not finite on the quadrature nodes")
    h = (b - a) / n
    prev = h / 3.0 * (fx[0] + 4 * fx[1:-1:2].sum() + 2 * fx[2:-1:2].sum() + fx[-1])
    for _ in range(max_levels):
        mids = x[:-1] + 0.5 * np.diff(x)
        fm = np.array([f(t) for t in mids], dtype=float)
        if not np.all(np.isfinite(fm)):
            raise EvaluationFailure("integrand is not finite on the quadrature nodes")
        xx = np.empty(x.size + mids.size)
        ff = np.empty_like(xx)
        xx[0::2], xx[1::2] = x, mids
        ff[0::2], ff[1::2] = fx, fm
        x, fx = xx, ff
        n *= 2
        h = (b - a) / n
        cur = h / 3.0 * (fx[0] + 4 * fx[1:-1:2].sum() + 2 * fx[2:-1:2].sum() + fx[-1])
        if abs(cur - prev) <= rtol * abs(cur) + atol:
            return float(cur)
        prev = cur
    raise QuadratureFailure(f"Simpson refinement on [{a}, {b}] exceeded {max_levels} levels")


@dataclass(frozen=True)
class VolumeTable:
    r: np.ndarray
    boundary: np.ndarray
    ball: np.ndarray


def volume_functions(model, r_max, step):
    """Tabulate ``Vol(dB_r)`` and ``Vol(B_r)`` at ``r = step, 2 step, ..., r_max``."""
    if step <= 0:
        raise ValueError("step must be positive")
    radii = np.arange(step, r_max + 0.5 * step, step)
    omega = sphere_area(model.m - 1)
    k = model.m - 1

    def integrand(t):
        return model.sigma(t) ** k

    pieces = []
    left = 0.0
    for r in radii:
        pieces.append(adaptive_simpson(integrand, left, float(r)))
        left = float(r)
    ball = omega * np.cumsum(pieces)
    boundary = np.array([model.boundary_volume(float(r)) for r in radii])
    return VolumeTable(radii, boundary, ball)


def volume_ratio(model, r_max=1e6, r0=1e-6):
    """``Vol(B_r)/Vol(dB_r)`` on ``[r0, r_max]`` as a callable.

    The quotient ``q`` solves ``q' = 1 - (m-1) (sigma'/sigma) q`` with
    ``q ~ r/m`` at 0. It is integrated in ``s = log r`` with an implicit
    solver, so super-exponential growth causes no overflow.
    """
    k = model.m - 1

    def rhs(s, y):
        r = math.exp(s)
        return [r * (1.0 - k * model.log_derivative(r) * y[0])]

    def jac(s, y):
        r = math.exp(s)
        return [[-r * k * model.log_derivative(r)]]

    sol = solve_ivp(rhs, (math.log(r0), math.log(r_max)), [r0 / model.m], method="Radau",
                    jac=jac, rtol=1e-10, atol=1e-30, dense_output=True)
    if not sol.success:
        raise EvaluationFailure(f"volume quotient integration failed: {sol.message}")
    lo, hi = r0, r_max

    def ratio(r):
        if not lo <= r <= hi * (1 + 1e-12):
            raise EvaluationFailure(f"radius {r} outside tabulated range [{lo}, {hi}]")
        return float(sol.sol(math.log(min(r, hi)))[0])

    return ratio


@dataclass(frozen=True)
class IntegrabilityResult:
    classification: str
    evidence: dict
    label: str = "model-only sufficient evidence"


def integrability_test(integrand, r_start=1.0, r_max=1e6, window=5,
                       divergent_fraction=0.5, decay_ratio=0.7):
    """Heuristic verdict on ``integrand`` being in ``L^1(+inf)``.

    Partial integrals are taken at doubling radii ``r_start 2^k <= r_max``.
    Divergent: each of the last `window` increments is at least
    ``divergent_fraction`` times the median increment. Integrable: the last
    `window` successive increment ratios are all ``<= decay_ratio``.
    Anything else is inconclusive.
    """
    radii = [float(r_start)]
    while radii[-1] * 2.0 <= r_max * (1 + 1e-12):
        radii.append(radii[-1] * 2.0)
    increments = []
    for a, b in zip(radii[:-1], radii[1:]):
        # substitute r = exp(s): nodes are log-spaced in r
        def g(s):
            r = math.exp(s)
            val = integrand(r)
            if not np.isfinite(val):
                raise EvaluationFailure(f"integrand not finite at r = {r!r}")
            return val * r

        increments.append(adaptive_simpson(g, math.log(a), math.log(b)))
    inc = np.array(increments)
    partial = np.concatenate([[0.0], np.cumsum(inc)])
    evidence = {
        "radii": radii,
        "partial_integrals": partial.tolist(),
        "increments": inc.tolist(),
    }
    if inc.size < window + 1:
        return IntegrabilityResult("inconclusive", evidence)
    tail = inc[-window:]
    median = float(np.median(inc))
    ratios = inc[-window:] / np.where(inc[-window - 1:-1] == 0, np.nan, inc[-window - 1:-1])
    evidence["median_increment"] = median
    evidence["tail_ratios"] = ratios.tolist()
    divergent = median > 0 and bool(np.all(tail >= divergent_fraction * median))
    integrable = bool(np.all(np.isfinite(ratios)) and np.all(ratios <= decay_ratio))
    if divergent and not integrable:
        verdict = "divergent"
    elif integrable and not divergent:
        verdict = "integrable"
    else:
        verdict = "inconclusive"
    return IntegrabilityResult(verdict, evidence)


@dataclass(frozen=True)
class CasoBResult:
    holds: bool
    worst_index: int
    worst_margin: float
    note: str = ""


def casoB_check(phi, metric, C, beta, samples, radius=None, rtol=1e-12):
    """Check ``|dphi|^2 >= C / (1 + r)^beta`` at every sample.

    `radius` maps a chart point to ``r(x)``; the chart norm ``|x|`` is used by
    default. The worst sample is the one with the smallest margin
    ``|dphi|^2 - C (1 + r)^(-beta)``; margins down to ``-rtol`` times the
    right-hand side count as equality.
    """
    radius = radius or (lambda x: float(np.linalg.norm(x)))
    rhs = np.array([C / (1.0 + radius(x)) ** beta for x in samples])
    margins = np.array([energy_density(phi, metric, x) for x in samples]) - rhs
    worst = int(np.argmin(margins + rtol * np.abs(rhs)))
    note = ""
    if beta == 2:
        note = "beta = 2: the volume condition must use the log r / (r log Vol(B_r)) variant"
    elif beta > 2:
        note = "beta > 2: the volume condition cannot hold"
    holds = bool(margins[worst] >= -rtol * abs(rhs[worst]))
    return CasoBResult(holds, worst, float(margins[worst]), note)


# ---------------------------------------------------------------------------
# registry
# ---------------------------------------------------------------------------


def get_family(family_id, **params):
    """Build a charted family or a rotational model from its string id.

    Ids: ``paraboloid`` (m, d, box), ``flat-cone`` (r_min, r_max), ``sphere``
    (radius, center), ``plane`` (m, height, box), ``saddle`` (box),
    ``rotational:<preset>`` (m, beta).
    """
    params = {k: v for k, v in params.items() if v is not None}
    if family_id == "paraboloid":
        return paraboloid(**params).map
    if family_id == "flat-cone":
        return flat_cone_surface(**params)
    if family_id == "sphere":
        return sphere(**params)
    if family_id == "plane":
        return plane(**params)
    if family_id == "saddle":
        return saddle(**params)
    if family_id.startswith("rotational:"):
        return rotational_model(family_id.split(":", 1)[1], **params)
    raise UnknownFamily(f"unknown family {family_id!r}")


FAMILY_IDS = ("paraboloid", "flat-cone", "sphere", "plane", "saddle") + tuple(
    "rotational:" + p for p in ROTATIONAL_PRESETS
)
