"""helixlab command line.

    helixlab <subcommand> --config <path|builtin:example-5.1> [--out DIR]
             [--grid NxM] [--tol F] [--check ID]

Exit status: 0 on success, 1 on a failed verification or a numeric error,
2 on invalid input.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .config import ConfigError, JobConfig, load_config
from .constructions import (
    ExtrusionSpec,
    RuledSpec,
    ellipsoid_normal_exprs,
    extrude_helix,
    plane_curve_surface,
    ruled_from_curve,
    sphere_ruled_spec,
)
from .curves import CurveN, frenet, slant_helix_test
from .errors import HelixlabError, InvalidNormal, NotPlanar, NotSupported, ParseError, UnknownParameter
from .mesh import build_mesh, export_obj
from .surfaces import SurfacePatch, forms_grid, geodesic, helix_surface_test, line_of_curvature
from .verification import (
    FAIL,
    VerificationReport,
    verify_developability_equivalence,
    verify_geodesic_slant,
    verify_helix_extrusion,
    verify_line_of_curvature_orthogonality,
    verify_plane_curve_surface,
    verify_vn_normal_slant,
)

SUBCOMMANDS = ("frenet", "slant", "surface-gen", "surface-report", "geodesic", "curvature-line", "verify", "mesh")
CHECK_IDS = (
    "extrusion-helix",
    "geodesic-slant",
    "normal-frame-slant",
    "curvature-line-orthogonality",
    "developability-equivalence",
    "plane-curve-surface",
)
FMT = "%.17g"


class InputError(Exception):
    pass


def _grid_arg(text):
    try:
        n, m = (int(x) for x in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected NxM, got {text!r}") from None
    if n < 2 or m < 2:
        raise argparse.ArgumentTypeError("grid needs at least 2 samples in each direction")
    return n, m


def build_parser():
    ap = argparse.ArgumentParser(prog="helixlab", description="Constant-angle surfaces and curve frames.")
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("target", nargs="?", help="check id or 'all' (verify only)")
    ap.add_argument("--config", required=True, help="YAML job file or builtin:example-5.1")
    ap.add_argument("--out", help="output directory (overrides output.dir)")
    ap.add_argument("--grid", type=_grid_arg, help="sampling grid NxM")
    ap.add_argument("--tol", type=float, help="primary tolerance of the subcommand")
    ap.add_argument("--check", help="check id for verify")
    return ap


# ---------------------------------------------------------------------------
# job context

class Job:
    def __init__(self, cfg: JobConfig, grid=None, tol=None, out=None):
        self.cfg = cfg
        self.grid = tuple(grid or cfg.grid)
        self.tol = tol
        self.out = Path(out or cfg.output.dir)
        self._surface = None

    def tolerance(self, key, default):
        if self.tol is not None:
            return self.tol
        return self.cfg.tolerances.get(key, default)

    def extra_tol(self, key, default):
        return self.cfg.tolerances.get(key, default)

    @property
    def kind(self):
        return "plane-curve-surface" if self.cfg.kind == "builtin:example-5.1" else self.cfg.kind

    def curve(self) -> CurveN:
        c = self.cfg.curve
        return CurveN.from_strings(c.components, c.param, c.domain)

    def surface(self):
        """(patch, axis d, region predicate or None, plane-curve surface or None)."""
        if self._surface is None:
            self._surface = self._build_surface()
        return self._surface

    def _second_param(self):
        return "s" if self.cfg.curve.param != "s" else "w"

    def _build_surface(self):
        cfg = self.cfg
        if self.kind == "curve":
            raise InputError("kind 'curve' defines no surface")
        alpha = self.curve()
        if self.kind == "plane-curve-surface":
            v_dom = cfg.second_domain or (0.0, math.pi)
            v_param = "v" if alpha.param != "v" else "w"
            pcs = plane_curve_surface(alpha, cfg.theta, v_dom, v_param=v_param)
            d = self._axis(pcs.binormal)
            return pcs.patch, d, pcs.regular_region(self.extra_tol("sing", 1e-9)), pcs
        if self.kind == "extrusion":
            if alpha.dim != 2:
                raise InputError("curve: extrusion generators are plane curves with 2 components")
            spec = ExtrusionSpec(alpha, cfg.theta, cfg.second_domain or (0.0, 1.0), self._second_param())
            return extrude_helix(spec), self._axis(np.array([0.0, 0.0, 1.0])), None, None
        if self.kind == "ruled":
            spec = self.ruled_spec()
            patch = ruled_from_curve(spec, validate=not cfg.ruled.literal_tangent)
            d = np.zeros(spec.dim)
            d[-1] = 1.0
            return patch, self._axis(d), None, None
        raise InputError(f"unsupported kind {cfg.kind!r}")

    def ruled_spec(self) -> RuledSpec:
        cfg = self.cfg
        beta = self.curve()
        s_dom = cfg.second_domain or (-1.0, 1.0)
        if cfg.ruled.hypersurface == "sphere":
            spec = sphere_ruled_spec(beta, cfg.theta, s_dom, literal_tangent=cfg.ruled.literal_tangent)
        else:
            axes = cfg.ruled.axes
            if axes is None or len(axes) != beta.dim:
                raise InputError(f"ruled.axes: expected {beta.dim} semi-axes for the ellipsoid")
            spec = RuledSpec(beta, ellipsoid_normal_exprs(beta, axes), cfg.theta, s_dom)
        return RuledSpec(spec.directrix, spec.normal, spec.theta, spec.s_domain, self._second_param())

    def _axis(self, default):
        if self.cfg.direction is None:
            return np.asarray(default, dtype=float)
        d = np.asarray(self.cfg.direction, dtype=float)
        if len(d) != len(default):
            raise InputError(f"direction: expected {len(default)} components")
        n = np.linalg.norm(d)
        if n == 0:
            raise InputError("direction: must be nonzero")
        return d / n

    def surface3(self) -> SurfacePatch:
        patch = self.surface()[0]
        if patch.dim != 3:
            raise InputError(f"this subcommand needs a surface in R^3; the configured surface lies in R^{patch.dim}")
        return patch

    def write(self, name, text) -> Path:
        self.out.mkdir(parents=True, exist_ok=True)
        path = self.out / name
        path.write_text(text)
        return path


def _csv(header, rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(FMT % float(x) for x in row))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# subcommands

def cmd_frenet(job: Job):
    if job.cfg.curve is None:
        raise InputError("curve: required")
    c = job.curve()
    n = c.dim
    header = ["t"] + [f"V{i}_{j}" for i in range(1, n + 1) for j in range(1, n + 1)]
    header += [f"k{i}" for i in range(1, n)]
    rows = []
    for t in c.grid(job.grid[0]):
        fr = frenet(c, t)
        rows.append([t, *np.asarray(fr.frame).ravel(), *fr.curvatures])
    path = job.write("frenet.csv", _csv(header, rows))
    print(f"wrote {path} ({len(rows)} samples)")
    return 0


def cmd_slant(job: Job):
    sl = job.cfg.slant
    if sl is None:
        raise InputError("slant: section with 'index' and 'axis' is required")
    c = job.curve()
    if len(sl.axis) != c.dim:
        raise InputError(f"slant.axis: expected {c.dim} components")
    if sl.index > c.dim:
        raise InputError(f"slant.index: at most {c.dim}")
    X = np.asarray(sl.axis, dtype=float)
    X = X / np.linalg.norm(X)
    r = slant_helix_test(c, sl.index, X, samples=job.grid[0], tol=job.tolerance("const", 1e-6))
    lines = [
        "check: slant",
        f"  scenario: <V_{sl.index}, X> over {job.grid[0]} samples",
        f"  constant: {str(r.constant).lower()}",
        f"  mean: {r.mean:.17g}",
        f"  max_deviation: {r.max_deviation:.17g}",
        f"  tolerance: {r.tol:.17g}",
        f"  perpendicular: {str(r.perpendicular).lower()}",
        f"  excluded: {r.excluded}",
    ]
    text = "\n".join(lines) + "\n"
    job.write("slant.txt", text)
    print(text, end="")
    return 0


def cmd_surface_gen(job: Job):
    patch = job.surface()[0]
    us, vs = patch.grid(*job.grid)
    U, V = np.meshgrid(us, vs, indexing="ij")
    P = patch.jet_function(vectorized=True)(U, V)[0]
    header = list(patch.params) + [f"x{i}" for i in range(1, patch.dim + 1)]
    rows = np.column_stack([U.ravel(), V.ravel()] + [P[i].ravel() for i in range(patch.dim)])
    path = job.write("surface.csv", _csv(header, rows))
    print(f"wrote {path} ({len(rows)} samples)")
    return 0


def cmd_surface_report(job: Job):
    patch = job.surface3()
    _, d, region, _ = job.surface()
    f, us, vs, mask = forms_grid(patch, *job.grid, tol_sing=job.extra_tol("sing", 1e-9))
    U, V = np.meshgrid(us, vs, indexing="ij")
    cols = [U, V, mask.astype(float)] + [f[k] for k in "EFGLMNKH"] + [f["Z"][i] for i in range(3)]
    header = list(patch.params) + ["regular", "E", "F", "G", "L", "M", "N", "K", "H", "Z1", "Z2", "Z3"]
    rows = np.column_stack([c.ravel() for c in cols])
    job.write("surface_report.csv", _csv(header, rows))

    K, H = f["K"][mask], f["H"][mask]
    helix = helix_surface_test(patch, d, job.grid, tol=job.tolerance("const", 1e-6), region=region)
    lines = [
        "summary: surface-report",
        f"  grid: {job.grid[0]}x{job.grid[1]}",
        f"  regular_points: {int(mask.sum())}",
        f"  singular_points: {int((~mask).sum())}",
        f"  K_min: {K.min():.17g}",
        f"  K_max: {K.max():.17g}",
        f"  H_min: {H.min():.17g}",
        f"  H_max: {H.max():.17g}",
        f"  axis: {' '.join(FMT % x for x in d)}",
        f"  normal_axis_mean: {helix.mean:.17g}",
        f"  normal_axis_deviation: {helix.max_deviation:.17g}",
        f"  helix_surface: {str(helix.constant).lower()}",
        f"  helix_excluded: {helix.excluded}",
    ]
    text = "\n".join(lines) + "\n"
    job.write("surface_summary.txt", text)
    print(text, end="")
    return 0


def _trace_rows(tr, with_lambda=False):
    cols = [tr.s, tr.uv[:, 0], tr.uv[:, 1]] + [tr.points[:, i] for i in range(3)]
    cols += [tr.tangents[:, i] for i in range(3)]
    if with_lambda:
        cols.append(tr.eigenvalues)
    return np.column_stack(cols)


def cmd_geodesic(job: Job):
    g = job.cfg.geodesic
    if g is None:
        raise InputError("geodesic: section with 'start', 'direction' and 'length' is required")
    patch = job.surface3()
    tr = geodesic(patch, g.start, g.direction, g.length, g.step)
    u, v = patch.params
    header = ["s", u, v, "x", "y", "z", "T1", "T2", "T3"]
    path = job.write("geodesic.csv", _csv(header, _trace_rows(tr)))
    print(f"wrote {path} ({len(tr.s)} points, speed error {tr.max_speed_error:.3e})")
    return 0


def cmd_curvature_line(job: Job):
    cl = job.cfg.curvature_line
    if cl is None:
        raise InputError("curvature_line: section with 'start' and 'length' is required")
    patch = job.surface3()
    tr = line_of_curvature(patch, cl.start, cl.branch, cl.length, cl.step)
    u, v = patch.params
    header = ["s", u, v, "x", "y", "z", "T1", "T2", "T3", "lambda"]
    path = job.write("curvature_line.csv", _csv(header, _trace_rows(tr, True)))
    print(f"wrote {path} ({len(tr.s)} points)")
    return 0


def cmd_mesh(job: Job):
    patch = job.surface3()
    mesh = build_mesh(patch, *job.grid, tol_sing=job.extra_tol("sing", 1e-9))
    job.out.mkdir(parents=True, exist_ok=True)
    path = export_obj(mesh, job.out / "mesh.obj")
    print(f"wrote {path} ({len(mesh.vertices)} vertices, {len(mesh.faces)} faces, "
          f"{len(mesh.excluded_cells)} excluded cells)")
    return 0


# ---------------------------------------------------------------------------
# verification

def _available_checks(job: Job) -> dict:
    """Check id -> list of zero-argument callables returning reports."""
    cfg = job.cfg
    kind = job.kind
    checks = {}
    if kind == "plane-curve-surface":
        checks["plane-curve-surface"] = [lambda: _check_plane_curve(job)]
        checks["normal-frame-slant"] = [lambda: _check_normal_frame(job)]
    if kind == "extrusion":
        checks["extrusion-helix"] = [lambda: _check_extrusion(job)]
    if kind == "ruled":
        checks["developability-equivalence"] = [lambda: _check_developability(job)]
    if kind in ("plane-curve-surface", "extrusion"):
        if cfg.geodesic is not None:
            checks["geodesic-slant"] = [lambda: _check_geodesic(job)]
        if cfg.curvature_line is not None:
            branches = [cfg.curvature_line.branch]
            if kind == "plane-curve-surface":
                branches = ["max", "min"]
            checks["curvature-line-orthogonality"] = [
                (lambda b=b: _check_curvature_line(job, b)) for b in branches
            ]
    return checks


def _check_plane_curve(job: Job):
    cfg = job.cfg
    return verify_plane_curve_surface(
        job.curve(), cfg.theta, job.grid, cfg.second_domain or (0.0, math.pi),
        tol_angle=job.tolerance("angle", 1e-8),
        tol_K=job.extra_tol("K", 1e-8),
        tol_det=job.extra_tol("det", 1e-10),
        tol_H=job.extra_tol("H", 1e-8),
        tol_minimal=job.extra_tol("minimal", 1e-10),
        tol_sing=job.extra_tol("sing", 1e-9),
    )


def _check_normal_frame(job: Job):
    patch, d, region, pcs = job.surface()
    return verify_vn_normal_slant(patch, d, pcs.curve, samples=job.grid[0],
                                  tol=job.tolerance("premise", 1e-4), region=region)


def _check_extrusion(job: Job):
    cfg = job.cfg
    thetas = cfg.extrusion_thetas or [cfg.theta]
    return verify_helix_extrusion(job.curve(), thetas, job.grid, tol=job.tolerance("const", 1e-9),
                                  s_domain=cfg.second_domain or (0.0, 1.0))


def _check_geodesic(job: Job):
    g = job.cfg.geodesic
    patch, d, region, _ = job.surface()
    return verify_geodesic_slant(patch, d, g.start, g.direction, g.length, g.step or 1e-3 * g.length,
                                 tol=job.tolerance("geodesic", 1e-4), region=region)


def _check_curvature_line(job: Job, branch):
    cl = job.cfg.curvature_line
    patch, d, region, _ = job.surface()
    return verify_line_of_curvature_orthogonality(patch, d, cl.start, branch, cl.length, cl.step,
                                                  tol=job.tolerance("curvature_line", 1e-5), region=region)


def _check_developability(job: Job):
    return verify_developability_equivalence(
        job.ruled_spec(), samples=job.grid[0],
        tol_premise=job.tolerance("premise", 1e-8), tol_dev=job.tolerance("developable", 1e-8),
    )


def _run_guarded(check_id, fn):
    try:
        return fn()
    except (InputError, InvalidNormal, NotPlanar, NotSupported):
        raise
    except HelixlabError as err:
        rep = VerificationReport(check_id, "aborted by a numeric error")
        rep.notes.append(f"error: {err}")
        return rep.finish(FAIL)


def _threads() -> int:
    raw = os.environ.get("HELIXLAB_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = os.cpu_count() or 1
    return max(1, n)


def cmd_verify(job: Job, target):
    available = _available_checks(job)
    if target is None:
        raise InputError("verify: give a check id or 'all'")
    if target == "all":
        selected = [cid for cid in CHECK_IDS if cid in available]
    elif target not in CHECK_IDS:
        raise InputError(f"unknown check {target!r}; expected one of {', '.join(CHECK_IDS)} or all")
    elif target not in available:
        raise InputError(f"check {target!r} is not available for kind {job.cfg.kind!r}")
    else:
        selected = [target]
    if not selected:
        raise InputError(f"no checks are available for kind {job.cfg.kind!r}")
    # builds the surface once, before any worker thread touches it
    if job.kind != "ruled":
        job.surface()
    tasks = [(cid, fn) for cid in selected for fn in available[cid]]
    with ThreadPoolExecutor(max_workers=min(_threads(), len(tasks))) as pool:
        reports = list(pool.map(lambda t: _run_guarded(*t), tasks))
    text = "\n\n".join(r.to_text() for r in reports) + "\n"
    job.write("verify.txt", text)
    print(text, end="")
    failed = [r.check for r in reports if r.failed]
    print(f"verdict: {'fail' if failed else 'pass'} ({len(reports) - len(failed)}/{len(reports)} checks not failed)")
    return 1 if failed else 0


# ---------------------------------------------------------------------------

def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    target = args.target
    if args.subcommand == "verify":
        if args.check and target and args.check != target:
            parser.error("conflicting check ids given")
        target = args.check or target
    elif target is not None:
        parser.error(f"unexpected argument {target!r}")
    if args.tol is not None and not args.tol > 0:
        parser.error("--tol must be positive")
    try:
        cfg = load_config(args.config)
    except ConfigError as err:
        for path, msg in err.errors:
            print(f"config error: {path}: {msg}", file=sys.stderr)
        return 2
    job = Job(cfg, args.grid, args.tol, args.out)
    handlers = {
        "frenet": cmd_frenet,
        "slant": cmd_slant,
        "surface-gen": cmd_surface_gen,
        "surface-report": cmd_surface_report,
        "geodesic": cmd_geodesic,
        "curvature-line": cmd_curvature_line,
        "mesh": cmd_mesh,
    }
    try:
        if args.subcommand == "verify":
            return cmd_verify(job, target)
        return handlers[args.subcommand](job)
    except (InputError, InvalidNormal, NotPlanar, NotSupported, ParseError, UnknownParameter, ValueError) as err:
        print(f"input error: {err}", file=sys.stderr)
        return 2
    except (HelixlabError, FloatingPointError) as err:
        print(f"numeric error: {err}", file=sys.stderr)
        return 1
    except OSError as err:
        print(f"i/o error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
