"""Sample sets over a chart's domain box."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

KINDS = ("random", "grid", "polar")


@dataclass(frozen=True)
class SampleSpec:
    """How to sample a chart.

    ``random``: uniform in the domain box. ``grid``: tensor grid with about
    `count` nodes; even node counts per axis avoid the box centre.
    ``polar``: log-spaced radii times evenly spread directions around the
    box centre, which resolves features at every scale of ``|x|``.
    """

    kind: str = "random"
    count: int = 1000
    seed: int = 0
    inner_fraction: float = 1e-4

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown sample kind {self.kind!r}; choose from {KINDS}")
        if self.count < 1:
            raise ValueError("sample count must be >= 1")

    def as_dict(self):
        return asdict(self)


def _directions(m, count, rng):
    if m == 2:
        t = 2.0 * np.pi * np.arange(count) / count
        return np.stack([np.cos(t), np.sin(t)], axis=1)
    d = rng.standard_normal((count, m))
    return d / np.linalg.norm(d, axis=1)[:, None]


def sample_chart(phi, spec):
    """Chart points for `phi` according to `spec`, shape ``(N, m)``."""
    lo, hi = phi.domain_box
    m = phi.dim_domain
    rng = np.random.default_rng(spec.seed)
    if spec.kind == "random":
        return lo + (hi - lo) * rng.random((spec.count, m))
    if spec.kind == "grid":
        per_axis = max(2, int(round(spec.count ** (1.0 / m))))
        axes = [np.linspace(lo[i], hi[i], per_axis) for i in range(m)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, m)
    center = 0.5 * (lo + hi)
    rmax = 0.5 * float(np.min(hi - lo))
    n_r = max(1, int(math.isqrt(spec.count)))
    n_a = max(1, spec.count // n_r)
    radii = np.geomspace(rmax * spec.inner_fraction, rmax, n_r)
    dirs = _directions(m, n_a, rng)
    pts = center + (radii[:, None, None] * dirs[None, :, :]).reshape(-1, m)
    return pts
