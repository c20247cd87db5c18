"""Command line front end.

Usage::

    lovol volumes --manifold sphere --dim 4 --radius 1 --k 2
    lovol coeffs --n 4 --k 2
    lovol curvature --manifold sphere --dim 2 --export out/
    lovol spectral-check --sides 6.283185307179586,6.283185307179586 --format csv
    lovol report --manifold product --dim 2 --sides 6.28,6.28 --out report/

Exit status is 0 on success, 1 for input errors and 2 for numerical
failures; on failure a JSON error object is written to standard error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import catalog, coefficients, curvature, spectral, volumes
from .chart import MIN_RESOLUTION, GridMetric, read_grid_metric, sample, write_grid_metric
from .errors import BadParameter, InputError, LovolError, NumericalError
from .quadrature import IntegrandError

SCHEMA = "lovol/1"
COMMANDS = ("volumes", "coeffs", "curvature", "spectral-check", "report")
MANIFOLDS = ("sphere", "torus", "flat_torus", "product")
CURVATURE_RESOLUTION = 8
FIELD_EXPORT_MAX_DIM = 3
DEFAULT_CUTOFF = 300
HEAT_TIMES = tuple(10.0 ** e for e in np.arange(-3.0, 1.01, 0.5))
CSV_COMMANDS = ("curvature", "spectral-check")
EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL = 0, 1, 2


@dataclass(frozen=True)
class RunConfig:
    command: str
    manifold: Optional[str] = None
    dim: Optional[int] = None
    radius: float = 1.0
    sides: Optional[tuple] = None
    metric_file: Optional[str] = None
    k: Optional[tuple] = None
    resolution: Optional[int] = None
    stencil_order: int = 4
    method: str = "auto"
    out: Optional[str] = None
    format: str = "json"
    cutoff: int = DEFAULT_CUTOFF
    export: Optional[str] = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise BadParameter(f"unknown command {self.command!r}")
        if self.resolution is not None and self.resolution < MIN_RESOLUTION:
            raise BadParameter(f"resolution must be >= {MIN_RESOLUTION}, got {self.resolution}")
        if self.stencil_order not in (2, 4):
            raise BadParameter(f"stencil order must be 2 or 4, got {self.stencil_order}")
        if self.format not in ("json", "csv"):
            raise BadParameter(f"unknown output format {self.format!r}")
        if self.command in ("volumes", "curvature", "report"):
            if (self.manifold is None) == (self.metric_file is None):
                raise BadParameter("give exactly one of --manifold and --metric-file")

    def as_dict(self) -> dict:
        d = asdict(self)
        for key in ("sides", "k"):
            if d[key] is not None:
                d[key] = list(d[key])
        return d


def _float_list(text: str) -> tuple:
    try:
        values = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _int_list(text: str) -> tuple:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise BadParameter(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--manifold", choices=MANIFOLDS,
                        help="catalog manifold; product means S^dim(radius) x T(sides)")
    common.add_argument("--dim", "--n", dest="dim", type=int, help="dimension (sphere, product sphere factor, coeffs)")
    common.add_argument("--radius", type=float, default=1.0)
    common.add_argument("--sides", type=_float_list, help="torus side lengths, comma separated")
    common.add_argument("--metric-file", help="grid-metric JSON file instead of a catalog manifold")
    common.add_argument("--k", type=_int_list, help="orders k, comma separated (default: all)")
    common.add_argument("--resolution", type=int, help="nodes per axis")
    common.add_argument("--stencil-order", type=int, choices=(2, 4), default=4)
    common.add_argument("--method", choices=("auto", "homogeneous", "quadrature"), default="auto")
    common.add_argument("--out", help="output file (report: output directory)")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--cutoff", type=int, default=DEFAULT_CUTOFF, help="spectral frequency cutoff")

    parser = _Parser(prog="lovol", description="Lower dimensional volumes of Riemannian manifolds.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("volumes", parents=[common], help="Vol^(k) reports")
    sub.add_parser("coeffs", parents=[common], help="dimension constants nu_{n,k}")
    curv = sub.add_parser("curvature", parents=[common], help="curvature scalars on the chart nodes")
    curv.add_argument("--export", metavar="DIR", help="write grid_metric.json (and fields.csv for n <= 3)")
    sub.add_parser("spectral-check", parents=[common], help="heat trace and Dixmier slope on a flat torus")
    sub.add_parser("report", parents=[common], help="all of the above into a directory")
    return parser


def parse_config(argv: Sequence[str]) -> RunConfig:
    ns = build_parser().parse_args(list(argv))
    return RunConfig(
        command=ns.command,
        manifold=ns.manifold,
        dim=ns.dim,
        radius=ns.radius,
        sides=ns.sides,
        metric_file=ns.metric_file,
        k=ns.k,
        resolution=ns.resolution,
        stencil_order=ns.stencil_order,
        method=ns.method,
        out=ns.out,
        format=ns.format,
        cutoff=ns.cutoff,
        export=getattr(ns, "export", None),
    )


# ---------------------------------------------------------------- serialization

def _plain(obj):
    """Convert numpy scalars/arrays and non-finite floats to JSON-safe values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def dumps(doc: dict) -> str:
    """Canonical JSON: sorted keys, shortest round-trip float repr."""
    return json.dumps(_plain(doc), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


# ---------------------------------------------------------------- commands

def _load_manifold(cfg: RunConfig, resolution=None):
    res = cfg.resolution if cfg.resolution is not None else resolution
    if cfg.metric_file is not None:
        return read_grid_metric(cfg.metric_file)
    if cfg.manifold == "sphere":
        if cfg.dim is None:
            raise BadParameter("--manifold sphere needs --dim")
        return catalog.sphere(cfg.dim, cfg.radius, resolution=res)
    if cfg.manifold in ("torus", "flat_torus"):
        if cfg.sides is None:
            raise BadParameter("--manifold torus needs --sides")
        return catalog.flat_torus(*cfg.sides, resolution=res)
    if cfg.dim is None or cfg.sides is None:
        raise BadParameter("--manifold product needs --dim (sphere factor) and --sides (torus factor)")
    return catalog.product(
        catalog.sphere(cfg.dim, cfg.radius), catalog.flat_torus(*cfg.sides), resolution=res
    )


def _describe(m) -> dict:
    if isinstance(m, GridMetric):
        return {"name": "grid_metric", "parameters": {}, "chart": m.chart.as_dict()}
    d = {"name": m.name, "parameters": m.parameters, "chart": m.chart.as_dict()}
    if getattr(m, "reference", None) is not None:
        d["reference"] = m.reference.as_dict()
    return d


def _orders(cfg: RunConfig, n: int) -> tuple:
    ks = cfg.k if cfg.k is not None else tuple(range(1, n + 1))
    bad = [k for k in ks if not 1 <= k <= n]
    if bad:
        raise BadParameter(f"orders {bad} outside 1..{n}")
    return ks


def _volume_rows(m, cfg: RunConfig) -> list:
    kw = dict(method=cfg.method, order=cfg.stencil_order)
    if cfg.k is None:
        rows = volumes.full_report(m, **kw)
    else:
        rows = [volumes.lower_volume(m, k, **kw) for k in sorted(set(_orders(cfg, m.chart.dim)))]
    return [r.as_dict() for r in rows]


def cmd_volumes(cfg: RunConfig) -> dict:
    m = _load_manifold(cfg)
    return {"manifold": _describe(m), "reports": _volume_rows(m, cfg)}


def cmd_coeffs(cfg: RunConfig) -> dict:
    if cfg.dim is None:
        raise BadParameter("coeffs needs --n (or --dim)")
    if cfg.k is not None and len(cfg.k) == 1:
        return coefficients.nu(cfg.dim, cfg.k[0]).as_dict()
    ks = _orders(cfg, cfg.dim)
    return {"n": cfg.dim, "coefficients": [coefficients.nu(cfg.dim, k).as_dict() for k in ks]}


def _curvature_fields(m, cfg: RunConfig):
    """Node coordinates (or None for grids) and scalar fields at every node."""
    if isinstance(m, GridMetric):
        return None, curvature.grid_curvature(m, cfg.stencil_order)
    pts = m.chart.node_points(np.arange(m.chart.node_count))
    kw = dict(chart=m.chart, order=cfg.stencil_order)
    fields = curvature.curvature_scalars(m.source, pts, **kw)
    fields["lap_kappa"] = curvature.laplacian_kappa(m.source, pts, **kw)
    return pts, fields


FIELD_NAMES = ("kappa", "ricci_norm2", "riemann_norm2", "lap_kappa", "density")


def _field_summary(fields) -> dict:
    return {
        name: {"min": float(np.min(fields[name])), "max": float(np.max(fields[name])),
               "mean": float(np.mean(fields[name]))}
        for name in FIELD_NAMES
    }


def _field_csv(m, pts, fields) -> str:
    n = m.chart.dim
    if pts is None:
        pts = m.chart.node_points(np.arange(m.chart.node_count))
    header = [f"x{i}" for i in range(n)] + list(FIELD_NAMES)
    rows = (list(pts[j]) + [fields[f][j] for f in FIELD_NAMES] for j in range(len(pts)))
    return _csv_text(header, rows)


def cmd_curvature(cfg: RunConfig):
    m = _load_manifold(cfg, CURVATURE_RESOLUTION)
    n = m.chart.dim
    pts, fields = _curvature_fields(m, cfg)
    files = {}
    if cfg.export is not None:
        out = Path(cfg.export)
        out.mkdir(parents=True, exist_ok=True)
        grid = m if isinstance(m, GridMetric) else sample(m.source, m.chart)
        write_grid_metric(out / "grid_metric.json", grid)
        files["grid_metric"] = "grid_metric.json"
        if n <= FIELD_EXPORT_MAX_DIM:
            (out / "fields.csv").write_text(_field_csv(m, pts, fields), encoding="utf-8")
            files["fields"] = "fields.csv"
    doc = {"manifold": _describe(m), "summary": _field_summary(fields), "exported": files}
    if cfg.format == "csv":
        if n > FIELD_EXPORT_MAX_DIM:
            raise BadParameter(f"field CSV export is limited to dimension <= {FIELD_EXPORT_MAX_DIM}")
        return _field_csv(m, pts, fields)
    return doc


def _spectral_tables(cfg: RunConfig):
    sides = cfg.sides if cfg.sides is not None else (2 * math.pi, 2 * math.pi)
    spectrum = spectral.torus_spectrum(sides, cfg.cutoff)
    covered = [t for t in HEAT_TIMES if math.exp(-t * spectrum.first_omitted) < spectral.TAIL_TOLERANCE]
    if not covered:
        raise spectral.CutoffTooSmall(spectral.required_cutoff(sides, HEAT_TIMES[-1]))
    heat = spectral.heat_table(spectrum, covered)
    fit = spectral.dixmier_fit(spectrum)
    prediction = spectral.dixmier_prediction(sides, spectrum.multiplicity)
    leading = [spectral.weyl_heat_leading(sides, t, spectrum.multiplicity) for t, _ in heat]
    summary = {
        "sides": list(sides),
        "cutoff": cfg.cutoff,
        "multiplicity": spectrum.multiplicity,
        "eigenvalues": int(spectrum.eigenvalues.size),
        "complete_eigenvalues": int(spectrum.complete().size),
        "dixmier_slope": fit.slope,
        "dixmier_intercept": fit.intercept,
        "dixmier_prediction": prediction,
        "dixmier_relative_error": fit.slope / prediction - 1.0,
        "heat": [{"t": t, "theta": th, "leading": lead} for (t, th), lead in zip(heat, leading)],
        "partial_sums": [{"log_n": float(np.log(N)), "sigma": s}
                         for N, s in zip(fit.ladder, fit.partial_sums)],
    }
    heat_rows = [("heat", t, th) for t, th in heat]
    ladder_rows = [("dixmier", float(np.log(N)), s) for N, s in zip(fit.ladder, fit.partial_sums)]
    return summary, heat_rows + ladder_rows


def cmd_spectral(cfg: RunConfig):
    summary, rows = _spectral_tables(cfg)
    if cfg.format == "csv":
        return _csv_text(["table", "x", "y"], rows)
    return summary


def cmd_report(cfg: RunConfig) -> dict:
    if cfg.out is None:
        raise BadParameter("report needs --out DIR")
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    m = _load_manifold(cfg)
    n = m.chart.dim
    reports = _volume_rows(m, cfg)
    coeffs = [coefficients.nu(n, k).as_dict() for k in range(1, n + 1)]
    doc = {"manifold": _describe(m), "reports": reports, "coefficients": coeffs, "files": {}}

    cols = ["n", "k", "parity_zero", "coefficient", "integral_alpha", "volume_k",
            "error_estimate", "method", "weight", "status"]
    (out / "volumes.csv").write_text(
        _csv_text(cols, ([r[c] for c in cols] for r in reports)), encoding="utf-8")
    cols = ["n", "k", "vanishes", "coefficient", "length_scale"]
    (out / "coefficients.csv").write_text(
        _csv_text(cols, ([c[k] for k in cols] for c in coeffs)), encoding="utf-8")
    doc["files"].update(volumes="volumes.csv", coefficients="coefficients.csv")

    torus_sides = None
    if cfg.manifold in ("torus", "flat_torus"):
        torus_sides = cfg.sides
    if torus_sides is not None and len(torus_sides) <= 3:
        summary, rows = _spectral_tables(
            RunConfig("spectral-check", sides=torus_sides, cutoff=cfg.cutoff)
        )
        doc["spectral"] = summary
        (out / "spectral.csv").write_text(_csv_text(["table", "x", "y"], rows), encoding="utf-8")
        doc["files"]["spectral"] = "spectral.csv"
    return doc


HANDLERS = {
    "volumes": cmd_volumes,
    "coeffs": cmd_coeffs,
    "curvature": cmd_curvature,
    "spectral-check": cmd_spectral,
    "report": cmd_report,
}


def execute(cfg: RunConfig):
    """Run a command and return its output: a JSON document (dict) or CSV text."""
    if cfg.format == "csv" and cfg.command not in CSV_COMMANDS:
        raise BadParameter(f"CSV output is only available for {', '.join(CSV_COMMANDS)}")
    result = HANDLERS[cfg.command](cfg)
    if isinstance(result, dict):
        result = {"schema": SCHEMA, "command": cfg.command, "config": cfg.as_dict(), "result": result}
    return result


def _error_status(exc: BaseException) -> int:
    if isinstance(exc, (NumericalError, IntegrandError, ArithmeticError)):
        return EXIT_NUMERICAL
    return EXIT_INPUT


def _report_error(exc: BaseException, stderr) -> int:
    status = _error_status(exc)
    payload = {"schema": SCHEMA, "error": type(exc).__name__, "message": str(exc), "exit_status": status}
    for attr in ("node", "required", "weight"):
        if getattr(exc, attr, None) is not None:
            payload[attr] = getattr(exc, attr)
    stderr.write(dumps(payload))
    return status


def run(cfg: RunConfig, stdout=None, stderr=None) -> int:
    """Execute ``cfg``, write its output once, and return the exit status."""
    stdout = stdout if stdout is not None else sys.stdout
    stderr = stderr if stderr is not None else sys.stderr
    try:
        result = execute(cfg)
        text = dumps(result) if isinstance(result, dict) else result
        if cfg.command == "report":
            Path(cfg.out, "report.json").write_text(text, encoding="utf-8")
            stdout.write(str(Path(cfg.out, "report.json")) + "\n")
        elif cfg.out is not None:
            Path(cfg.out).write_text(text, encoding="utf-8")
        else:
            stdout.write(text)
    except (LovolError, ValueError, ArithmeticError, OSError) as exc:
        return _report_error(exc, stderr)
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        cfg = parse_config(sys.argv[1:] if argv is None else argv)
    except InputError as exc:
        return _report_error(exc, sys.stderr)
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
