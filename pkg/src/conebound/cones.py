"""Non-degenerate cones: containment, minimal enclosing cone with fixed vertex, corners."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .errors import ApexSample, DegenerateCone, EmptyInput

THETA_MIN = 1e-12
APEX_TOL = 1e-14
CONTAINS_TOL = 1e-12
DEGENERACY_MARGIN = 1e-9


@dataclass(frozen=True)
class Cone:
    """Cone with vertex ``vertex``, unit axis ``axis`` and half-angle ``width`` in (0, pi/2)."""

    vertex: np.ndarray
    axis: np.ndarray
    width: float

    def __post_init__(self):
        vertex = np.asarray(self.vertex, dtype=float).copy()
        axis = np.asarray(self.axis, dtype=float).copy()
        if vertex.shape != axis.shape or vertex.ndim != 1:
            raise ValueError("vertex and axis must be vectors of the same length")
        norm = np.linalg.norm(axis)
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"axis must be a unit vector (|v| = {norm!r})")
        if not 0.0 < self.width < np.pi / 2:
            raise ValueError(f"width must lie in (0, pi/2), got {self.width!r}")
        object.__setattr__(self, "vertex", vertex)
        object.__setattr__(self, "axis", axis)
        object.__setattr__(self, "width", float(self.width))

    @property
    def cos_width(self):
        return float(np.cos(self.width))

    def as_dict(self):
        return {"vertex": self.vertex.tolist(), "axis": self.axis.tolist(),
                "width": self.width, "cos_width": self.cos_width}


@dataclass(frozen=True)
class DirectionSet:
    directions: np.ndarray
    source_count: int


def _as_points(points, dim=None):
    P = np.asarray(points, dtype=float)
    if P.ndim == 1:
        P = P[None, :]
    if P.size == 0 or P.shape[0] == 0:
        raise EmptyInput("no points given")
    if dim is not None and P.shape[1] != dim:
        raise ValueError(f"points have {P.shape[1]} coordinates, vertex has {dim}")
    return P


def direction_set(points, o):
    """Unit directions ``(z - o)/|z - o|``; raises :class:`ApexSample` on ``z == o``."""
    o = np.asarray(o, dtype=float)
    P = _as_points(points, o.size)
    diff = P - o
    norms = np.linalg.norm(diff, axis=1)
    bad = np.nonzero(norms < APEX_TOL * (1.0 + np.linalg.norm(o)))[0]
    if bad.size:
        raise ApexSample(f"point {int(bad[0])} coincides with the vertex", int(bad[0]))
    return DirectionSet(diff / norms[:, None], P.shape[0])


def angles_to_axis(directions, axis):
    """Angles between unit `directions` and unit `axis`, accurate near 0 and pi."""
    directions = np.atleast_2d(directions)
    a = np.linalg.norm(directions - axis, axis=1)
    b = np.linalg.norm(directions + axis, axis=1)
    return 2.0 * np.arctan2(a, b)


def cone_contains(cone, z):
    z = np.asarray(z, dtype=float)
    diff = z - cone.vertex
    norm = np.linalg.norm(diff)
    if norm < APEX_TOL * (1.0 + np.linalg.norm(cone.vertex)):
        raise ApexSample("point coincides with the cone vertex")
    return bool(np.dot(diff / norm, cone.axis) >= cone.cos_width - CONTAINS_TOL)


def contains_all(cone, points):
    """Vectorised :func:`cone_contains` over the rows of `points`."""
    ds = direction_set(points, cone.vertex)
    return ds.directions @ cone.axis >= cone.cos_width - CONTAINS_TOL


def smallest_cap(directions, seed=0, backend=None):
    """Axis and angular radius of the smallest spherical cap holding `directions`.

    The cap comes from the smallest enclosing ball of the unit vectors; the
    axis is the normalised ball centre and the radius is the largest angle
    between a direction and that axis. Returns ``(axis, angle)``;
    ``axis`` is None when the ball centre is the origin.
    """
    D = np.ascontiguousarray(directions, dtype=float)
    order = np.random.default_rng(seed).permutation(D.shape[0]).astype(np.intp)
    center, _, _ = kernels.get_kernel(backend)(D, order)
    norm = np.linalg.norm(center)
    if norm < 1e-12:
        return None, np.pi
    axis = center / norm
    return axis, float(np.max(angles_to_axis(D, axis)))


def min_enclosing_cone(points, o, theta_min=THETA_MIN, seed=0, backend=None):
    """Narrowest cone with vertex `o` containing every point.

    Raises
    ------
    DegenerateCone
        If the narrowest cone has width >= pi/2 - 1e-9.
    ApexSample
        If a point coincides with `o`.
    """
    ds = direction_set(points, o)
    axis, angle = smallest_cap(ds.directions, seed=seed, backend=backend)
    if axis is None or angle >= np.pi / 2 - DEGENERACY_MARGIN:
        raise DegenerateCone(
            f"points need a cone of width {angle:.12g} >= pi/2; no non-degenerate cone exists",
            angle,
        )
    return Cone(np.asarray(o, dtype=float), axis, max(angle, theta_min))


def cone_with_axis(points, o, v, theta_min=THETA_MIN):
    """Narrowest cone with vertex `o` and the prescribed axis `v` containing the points."""
    v = np.asarray(v, dtype=float)
    v = v / np.linalg.norm(v)
    ds = direction_set(points, o)
    angle = float(np.max(angles_to_axis(ds.directions, v)))
    if angle >= np.pi / 2 - DEGENERACY_MARGIN:
        raise DegenerateCone(f"points leave every cone with this axis (angle {angle:.12g})", angle)
    return Cone(np.asarray(o, dtype=float), v, max(angle, theta_min))


def plane_distance(points, o, v):
    """``min <z - o, v>`` over the points: sampled distance to the hyperplane through `o` normal to `v`."""
    o = np.asarray(o, dtype=float)
    v = np.asarray(v, dtype=float)
    if abs(np.linalg.norm(v) - 1.0) > 1e-12:
        raise ValueError("v must be a unit vector")
    P = _as_points(points, o.size)
    return float(np.min((P - o) @ v))


@dataclass(frozen=True)
class CornerResult:
    is_corner: bool
    witness: Optional[Cone]
    dropped: int
    angle: float


def corner_test(points, p, seed=0, backend=None):
    """Is `p` the vertex of a non-degenerate cone containing the points?

    Points within ``1e-14 * (1 + |p|)`` of `p` are dropped and counted.
    """
    p = np.asarray(p, dtype=float)
    P = _as_points(points, p.size)
    keep = np.linalg.norm(P - p, axis=1) >= APEX_TOL * (1.0 + np.linalg.norm(p))
    dropped = int(np.count_nonzero(~keep))
    if not keep.any():
        raise EmptyInput("every point coincides with the candidate vertex")
    try:
        cone = min_enclosing_cone(P[keep], p, seed=seed, backend=backend)
    except DegenerateCone as exc:
        return CornerResult(False, None, dropped, float(exc.angle))
    return CornerResult(True, cone, dropped, cone.width)
