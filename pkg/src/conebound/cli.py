"""Command-line front end.

Exit status: 0 on success or a satisfied bound, 2 on a mathematical finding
(degenerate cone, violated hypothesis, unsatisfied bound), 1 on tool errors
(bad flags, unknown family, unreadable or malformed input).
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import __version__
from .bounds import (
    aux_quantities,
    certify_theorem1,
    certify_theorem2,
    compute_A,
    finale_check,
    hess_u_direction,
    hess_u_fd,
    median_base_point,
    omega_region,
)
from .cones import cone_with_axis, corner_test, min_enclosing_cone
from .errors import (
    ConeboundError,
    DegenerateCone,
    HypothesisViolated,
    InvalidFlag,
    MissingSeries,
    ParseError,
    UnknownFamily,
)
from .geometry import orthonormal_basis, pullback_metric
from .models import FAMILY_IDS, ROTATIONAL_PRESETS, get_family, integrability_test, rotational_model, volume_ratio
from .reporting import dumps, emit_plot_data, read_point_cloud
from .sampling import SampleSpec, sample_chart

EXIT_OK, EXIT_ERROR, EXIT_FINDING = 0, 1, 2
CHART_FAMILIES = ("paraboloid", "flat-cone", "sphere", "plane", "saddle")
SHARPNESS_D = (1e-4, 1.0)
A_ETA_GRID = (0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0)


@dataclass
class RunConfig:
    """Everything that determines a run; embedded verbatim in its report."""

    command: str
    family: Optional[str] = None
    points: Optional[str] = None
    m: Optional[int] = None
    d: Optional[float] = None
    eta: Optional[float] = None
    chi: Optional[float] = None
    beta: Optional[float] = None
    xi: Optional[float] = None
    alpha: Optional[float] = None
    theta: Optional[float] = None
    vertex: Optional[list] = None
    axis: Optional[list] = None
    samples: Optional[int] = None
    sampling: Optional[str] = None
    box: Optional[float] = None
    isometric: bool = False
    preset: Optional[str] = None
    series: Optional[str] = None
    r_max: Optional[float] = None
    seed: int = 0
    out: Optional[str] = None
    format: str = "json"
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.samples is not None and self.samples < 1:
            raise InvalidFlag("--samples must be >= 1")
        if self.box is not None and not self.box > 0:
            raise InvalidFlag("--box must be > 0")
        if self.format not in ("json", "csv"):
            raise InvalidFlag("--format must be json or csv")

    def as_dict(self):
        return {k: v for k, v in asdict(self).items()
                if v is not None and v is not False and v != {}}


@dataclass
class Outcome:
    status: int
    report: dict
    summary: str


def _vector(text, flag):
    if text is None:
        return None
    try:
        return [float(t) for t in text.split(",")]
    except ValueError:
        raise InvalidFlag(f"{flag} expects comma-separated numbers, got {text!r}") from None


def _chart(cfg):
    fam = cfg.family or "paraboloid"
    if fam not in CHART_FAMILIES:
        if fam in FAMILY_IDS:
            raise InvalidFlag(f"family {fam!r} is a rotational model, not a charted map")
        raise UnknownFamily(f"unknown family {fam!r}; choose from {', '.join(CHART_FAMILIES)}")
    params = {
        "paraboloid": {"m": cfg.m, "d": cfg.d, "box": cfg.box},
        "plane": {"m": cfg.m, "height": cfg.d, "box": cfg.box},
        "saddle": {"box": cfg.box},
        "flat-cone": {"r_max": cfg.box},
        "sphere": {},
    }[fam]
    try:
        return get_family(fam, **params)
    except (TypeError, ValueError) as exc:
        raise InvalidFlag(str(exc)) from None


def _spec(cfg, default_kind="random"):
    kind = cfg.sampling or ("polar" if cfg.family in (None, "paraboloid") else default_kind)
    cfg.sampling = kind
    try:
        return SampleSpec(kind=kind, count=cfg.samples, seed=cfg.seed)
    except ValueError as exc:
        raise InvalidFlag(str(exc)) from None


def _vertex(cfg, n):
    o = np.zeros(n) if cfg.vertex is None else np.asarray(cfg.vertex, dtype=float)
    if o.size != n:
        raise InvalidFlag(f"--vertex needs {n} coordinates")
    return o


def _axis(cfg, n):
    if cfg.axis is None:
        return None
    v = np.asarray(cfg.axis, dtype=float)
    if v.size != n or not np.linalg.norm(v) > 0:
        raise InvalidFlag(f"--axis needs {n} coordinates, not all zero")
    return v / np.linalg.norm(v)


def _degenerate(exc):
    return {"type": "DegenerateCone", "message": str(exc), "angle": exc.angle}


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _verify_bound(cfg, theorem):
    phi = _chart(cfg)
    spec = _spec(cfg)
    o = _vertex(cfg, phi.dim_ambient)
    v = _axis(cfg, phi.dim_ambient)
    try:
        if theorem == "theorem1":
            rep = certify_theorem1(phi, o, v, spec=spec, isometric=cfg.isometric,
                                   family=cfg.family or "paraboloid", seed=cfg.seed)
        else:
            if cfg.chi is None or cfg.chi < 0:
                raise InvalidFlag("theorem2 needs --chi >= 0")
            rep = certify_theorem2(phi, o, cfg.chi, v, spec=spec,
                                   family=cfg.family or "paraboloid", seed=cfg.seed)
    except DegenerateCone as exc:
        return Outcome(EXIT_FINDING, {"finding": _degenerate(exc)}, f"degenerate cone: {exc}")
    doc = rep.as_dict()
    ok = rep.satisfied and not rep.failures
    doc["finding"] = None if ok else {"type": "BoundNotSatisfied" if not rep.satisfied else "SampleFailures"}
    summary = (f"{theorem}: cos(theta) = {rep.lhs:.9g}, bound = {rep.rhs_bound:.9g}, "
               f"satisfied = {rep.satisfied}, failures = {len(rep.failures)}")
    return Outcome(EXIT_OK if ok else EXIT_FINDING, doc, summary)


def _relerr(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def _proof_identities(cfg):
    phi = _chart(cfg)
    spec = _spec(cfg, default_kind="random")
    o = _vertex(cfg, phi.dim_ambient)
    samples = sample_chart(phi, spec)
    points = np.array([phi(x) for x in samples])
    try:
        v = _axis(cfg, phi.dim_ambient)
        cone = min_enclosing_cone(points, o, seed=cfg.seed) if v is None else cone_with_axis(points, o, v)
    except DegenerateCone as exc:
        return Outcome(EXIT_FINDING, {"finding": _degenerate(exc)}, f"degenerate cone: {exc}")
    v = cone.axis
    width = cone.width if cfg.theta is None else cfg.theta
    if width < cone.width - 1e-12:
        raise InvalidFlag(f"--theta {cfg.theta} is narrower than the fitted width {cone.width}")
    b = math.cos(width)
    x_o, params = median_base_point(phi, samples, o, v, b, cfg.xi, cfg.alpha)

    du_err, hess_err = [], []
    rng = np.random.default_rng(cfg.seed)
    for x in samples:
        q = aux_quantities(phi, x, params, o, v)
        du_err.append(_relerr(q.delta_u_analytic, q.delta_u_numeric))
        E = orthonormal_basis(pullback_metric(phi, x).g)
        w = rng.standard_normal(phi.dim_domain)
        W = E @ (w / np.linalg.norm(w))
        hess_err.append(_relerr(hess_u_direction(phi, x, W, params, o, v),
                                hess_u_fd(phi, x, W, params, o, v)))
    region = omega_region(phi, samples, params, o, v, x_o_index=x_o)
    fin = finale_check(phi, samples[region.indices], params, o, v)
    doc = {
        "family": phi.name,
        "parameters": dict(phi.params),
        "sample_count": int(len(samples)),
        "cone": cone.as_dict(),
        "aux_params": params.as_dict(),
        "x_o": samples[x_o].tolist(),
        "delta_u_max_relative_error": float(max(du_err)),
        "hess_u_max_relative_error": float(max(hess_err)),
        "omega_count": int(len(region.indices)),
        "omega_violations": region.violations,
        "min_Lu": fin.min_Lu,
        "delta": fin.delta,
        "Lu_floor_holds": fin.positive,
        "hypothesis_violated": fin.hypothesis_violated,
        "hypothesis_violations": len(fin.violations),
    }
    if fin.hypothesis_violated:
        doc["finding"] = {"type": "HypothesisViolated",
                          "message": "tension ratio reaches the threshold on the region",
                          "first": fin.violations[0]}
        status = EXIT_FINDING
    elif region.violations or not fin.positive:
        doc["finding"] = {"type": "RegionCheckFailed"}
        status = EXIT_FINDING
    else:
        doc["finding"] = None
        status = EXIT_OK
    summary = (f"proof identities: max rel err Delta u {doc['delta_u_max_relative_error']:.3g}, "
               f"Hess u {doc['hess_u_max_relative_error']:.3g}; region {doc['omega_count']} samples, "
               f"min Lu {fin.min_Lu:.6g} vs delta {fin.delta:.6g}, hypothesis violated = {fin.hypothesis_violated}")
    return Outcome(status, doc, summary)


def _load_points(cfg):
    if cfg.points is None:
        raise InvalidFlag("--points is required")
    dim = len(cfg.vertex) if cfg.vertex is not None else None
    try:
        return read_point_cloud(cfg.points, dim=dim)
    except OSError as exc:
        raise InvalidFlag(f"cannot read {cfg.points}: {exc.strerror}") from None


def _fit_cone(cfg):
    P = _load_points(cfg)
    o = _vertex(cfg, P.shape[1])
    v = _axis(cfg, P.shape[1])
    try:
        cone = min_enclosing_cone(P, o, seed=cfg.seed) if v is None else cone_with_axis(P, o, v)
    except DegenerateCone as exc:
        return Outcome(EXIT_FINDING, {"point_count": int(len(P)), "finding": _degenerate(exc)},
                       f"degenerate cone: {exc}")
    doc = {"point_count": int(len(P)), "cone": cone.as_dict(), "finding": None}
    return Outcome(EXIT_OK, doc, f"cone width {cone.width:.12g} rad, axis {np.round(cone.axis, 9).tolist()}")


def _corner(cfg):
    P = _load_points(cfg)
    p = _vertex(cfg, P.shape[1])
    res = corner_test(P, p, seed=cfg.seed)
    doc = {"point_count": int(len(P)), "is_corner": res.is_corner, "dropped": res.dropped,
           "angle": res.angle, "witness": res.witness.as_dict() if res.witness else None,
           "finding": None}
    return Outcome(EXIT_OK, doc, f"corner = {res.is_corner} (angle {res.angle:.12g})")


def _a_eta(cfg):
    if cfg.eta is None or not cfg.eta > 0:
        raise InvalidFlag("a-eta needs --eta > 0")
    res = compute_A(cfg.eta, seed=cfg.seed)
    doc = {"eta": res.eta, "A": res.value, "argmax": list(res.argmax),
           "resolution": res.resolution, "finding": None}
    return Outcome(EXIT_OK, doc, f"A_{cfg.eta:g} = {res.value:.12g}")


def _stochastic(cfg):
    preset = cfg.preset or "euclidean"
    if preset not in ROTATIONAL_PRESETS:
        raise UnknownFamily(f"unknown preset {preset!r}; choose from {', '.join(ROTATIONAL_PRESETS)}")
    model = rotational_model(preset, m=cfg.m or 2, beta=cfg.beta)
    r_max = cfg.r_max or 1e6
    q = volume_ratio(model, r_max=r_max)
    res = integrability_test(q, r_max=r_max)
    doc = {"model": model.name, "m": model.m, "classification": res.classification,
           "label": res.label, "evidence": res.evidence, "finding": None}
    return Outcome(EXIT_OK, doc, f"{model.name}, m = {model.m}: Vol(B_r)/Vol(dB_r) is "
                                 f"{res.classification} ({res.label})")


def sharpness_series(d_values, samples=10000, box=10.0, seed=0, m=2):
    """Rows ``(d, cos^2(theta_d)/d)`` from minimal cones fitted to paraboloid samples."""
    rows = []
    spec = SampleSpec("polar", samples, seed)
    for d in d_values:
        phi = get_family("paraboloid", m=m, d=float(d), box=box)
        pts = np.array([phi(x) for x in sample_chart(phi, spec)])
        cone = min_enclosing_cone(pts, np.zeros(m + 1), seed=seed)
        rows.append([float(d), cone.cos_width ** 2 / float(d)])
    return rows


def _plot(cfg):
    if cfg.out is None:
        raise InvalidFlag("plot needs --out for the CSV file")
    if cfg.series == "sharpness":
        count = int(cfg.extra.get("points", 13))
        d_values = np.geomspace(*SHARPNESS_D, count)
        rows = sharpness_series(d_values, samples=cfg.samples, box=cfg.box or 10.0,
                                seed=cfg.seed, m=cfg.m or 2)
        series = {"columns": ["d", "cos2_theta_over_d"], "rows": rows}
    elif cfg.series == "a-eta":
        rows = [[eta, compute_A(eta, seed=cfg.seed).value] for eta in A_ETA_GRID]
        series = {"columns": ["eta", "A_eta"], "rows": rows}
    else:
        raise InvalidFlag("--series must be sharpness or a-eta")
    doc = {"series": {cfg.series: series}, "finding": None}
    try:
        emit_plot_data(doc, cfg.series, cfg.out)
    except OSError as exc:
        raise InvalidFlag(f"cannot write {cfg.out}: {exc.strerror}") from None
    return Outcome(EXIT_OK, doc, f"wrote {len(series['rows'])} rows of {cfg.series} to {cfg.out}")


DISPATCH = {
    "verify theorem1": lambda c: _verify_bound(c, "theorem1"),
    "verify theorem2": lambda c: _verify_bound(c, "theorem2"),
    "verify proof-identities": _proof_identities,
    "fit-cone": _fit_cone,
    "corner-test": _corner,
    "a-eta": _a_eta,
    "models stochastic": _stochastic,
    "plot": _plot,
}


def _csv_lines(doc, prefix=""):
    for key in sorted(doc):
        val = doc[key]
        name = f"{prefix}{key}"
        if isinstance(val, dict):
            yield from _csv_lines(val, name + ".")
        elif isinstance(val, (list, tuple)):
            yield f"{name},{dumps(val).strip().replace(chr(10), ' ')!r}"
        else:
            yield f"{name},{dumps(val).strip()}"


def render(doc, fmt):
    if fmt == "json":
        return dumps(doc)
    return "key,value\n" + "\n".join(_csv_lines(doc)) + "\n"


def run(cfg):
    """Execute `cfg`; returns the :class:`Outcome` with the config embedded in the report."""
    outcome = DISPATCH[cfg.command](cfg)
    outcome.report = {"command": cfg.command, "config": cfg.as_dict(),
                      "version": __version__, "exit_status": outcome.status, **outcome.report}
    return outcome


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _common(p):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="report path (CSV data path for plot)")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--quiet", action="store_true", help="no summary on stderr")


def _family_flags(p):
    p.add_argument("--family", default="paraboloid", help=", ".join(CHART_FAMILIES))
    p.add_argument("--m", type=int)
    p.add_argument("--d", type=float, help="paraboloid offset or plane height")
    p.add_argument("--box", type=float)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--sampling", choices=("random", "grid", "polar"))
    p.add_argument("--vertex", help="comma-separated cone vertex (default origin)")
    p.add_argument("--axis", help="comma-separated cone axis (default fitted)")


def build_parser():
    parser = argparse.ArgumentParser(prog="conebound", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    verify = sub.add_parser("verify", help="certify a width bound or the proof identities")
    vsub = verify.add_subparsers(dest="target", required=True)
    t1 = vsub.add_parser("theorem1", help="tension-ratio width bound")
    _family_flags(t1)
    t1.add_argument("--isometric", action="store_true", help="use A_m (isometric immersion)")
    _common(t1)
    t2 = vsub.add_parser("theorem2", help="curvature width bound")
    _family_flags(t2)
    t2.add_argument("--chi", type=float)
    _common(t2)
    pi = vsub.add_parser("proof-identities", help="Delta u, Hess u and region checks")
    _family_flags(pi)
    pi.add_argument("--xi", type=float, default=0.5)
    pi.add_argument("--alpha", type=float, default=0.5)
    pi.add_argument("--theta", type=float, help="cone width to use (default fitted)")
    _common(pi)

    fit = sub.add_parser("fit-cone", help="minimal enclosing cone of a point cloud")
    fit.add_argument("--points", required=True)
    fit.add_argument("--vertex")
    fit.add_argument("--axis")
    _common(fit)

    corner = sub.add_parser("corner-test", help="is the vertex a corner of the cloud")
    corner.add_argument("--points", required=True)
    corner.add_argument("--vertex", required=True)
    _common(corner)

    aeta = sub.add_parser("a-eta", help="compute A_eta")
    aeta.add_argument("--eta", type=float, required=True)
    _common(aeta)

    models = sub.add_parser("models", help="rotational model diagnostics")
    msub = models.add_subparsers(dest="target", required=True)
    st = msub.add_parser("stochastic", help="volume-growth integrability heuristic")
    st.add_argument("--preset", default="euclidean", help=", ".join(ROTATIONAL_PRESETS))
    st.add_argument("--m", type=int)
    st.add_argument("--beta", type=float)
    st.add_argument("--r-max", type=float, default=1e6)
    _common(st)

    plot = sub.add_parser("plot", help="emit plot-ready two-column CSV data")
    plot.add_argument("--series", required=True, choices=("sharpness", "a-eta"))
    plot.add_argument("--samples", type=int, default=10000)
    plot.add_argument("--box", type=float)
    plot.add_argument("--m", type=int)
    plot.add_argument("--points", type=int, default=13, dest="grid_points",
                      help="number of d values in the sharpness sweep")
    _common(plot)
    return parser


def config_from_args(ns):
    command = ns.command if not getattr(ns, "target", None) else f"{ns.command} {ns.target}"
    keys = {f.name for f in RunConfig.__dataclass_fields__.values()} - {"command", "extra"}
    values = {k: getattr(ns, k) for k in keys if hasattr(ns, k)}
    for key in ("vertex", "axis"):
        if isinstance(values.get(key), str):
            values[key] = _vector(values[key], "--" + key)
    extra = {"points": ns.grid_points} if command == "plot" and ns.series == "sharpness" else {}
    return RunConfig(command=command, extra=extra, **values)


def main(argv=None):
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad usage; usage errors are tool errors here
        return EXIT_ERROR if exc.code else EXIT_OK
    quiet = ns.quiet

    def say(msg):
        if not quiet:
            print(msg, file=sys.stderr)

    try:
        cfg = config_from_args(ns)
        outcome = run(cfg)
    except (ParseError, UnknownFamily, InvalidFlag, MissingSeries) as exc:
        print(f"conebound: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except HypothesisViolated as exc:
        print(f"conebound: hypothesis violated: {exc}", file=sys.stderr)
        return EXIT_FINDING
    except ConeboundError as exc:
        print(f"conebound: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR

    text = render(outcome.report, cfg.format)
    if cfg.command == "plot":
        pass  # the CSV is the product
    elif cfg.out:
        try:
            with open(cfg.out, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"conebound: error: cannot write {cfg.out}: {exc.strerror}", file=sys.stderr)
            return EXIT_ERROR
    elif cfg.command != "a-eta":
        sys.stdout.write(text)
    if cfg.command == "a-eta":
        print("%.17g" % outcome.report["A"])
    say(outcome.summary)
    return outcome.status


if __name__ == "__main__":
    sys.exit(main())
