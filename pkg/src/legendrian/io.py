"""Readers and writers for the package's file formats.

JSON files hold TrigPoly records ``{"a0", "cos", "sin"}``. Tables are CSV with
a header row. All writers are deterministic: keys are sorted and floats are
written with ``repr`` precision.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.io

from .diagram import DiagramCurve
from .legendrify import S3Curve
from .tangency import PolyC2, TangencySystem
from .trigpoly import TWO_PI


def _clean(obj):
    """Make ``obj`` JSON-serialisable; non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else str(f)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj))
    return path


def read_json(path):
    return json.loads(Path(path).read_text())


def read_diagram(path) -> DiagramCurve:
    """Diagram JSON: ``{"X": rec, "Y": rec, "gauss_code": "O1+ U2- ...", "name": ...}``."""
    return DiagramCurve.from_dict(read_json(path))


def write_diagram(path, d: DiagramCurve) -> Path:
    return write_json(path, d.to_dict())


def read_s3curve(path) -> S3Curve:
    """S3Curve JSON: ``{"numerators": [rec x 4], "rho": rec}``; ``rho`` may be omitted."""
    return S3Curve.from_dict(read_json(path))


def write_s3curve(path, c: S3Curve) -> Path:
    return write_json(path, c.to_dict())


def write_table(path, header: Sequence[str], rows: Iterable) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return path


def read_table(path) -> tuple[list, list]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def write_curve_csv(path, c: S3Curve, samples: int = 2048) -> Path:
    """Uniform samples ``(t, x1, y1, x2, y2)`` of an S^3 curve."""
    t = TWO_PI * np.arange(samples) / samples
    P = c.sample(samples)
    return write_table(path, ["t", "x1", "y1", "x2", "y2"], (
        (float(t[k]), *map(float, P[k])) for k in range(samples)))


def write_candidate_table(path, poly: PolyC2, tol: float = 0.0) -> Path:
    """Nonzero coefficients as ``(i, j, re, im)`` rows."""
    return write_table(path, ["i", "j", "re", "im"], poly.to_table(tol))


def read_candidate_table(path, n: int | None = None) -> PolyC2:
    _, rows = read_table(path)
    return PolyC2.from_table([(int(i), int(j), float(re), float(im)) for i, j, re, im in rows], n)


def write_system(path_A, path_y, sys: TangencySystem) -> None:
    """Matrix Market files for ``A`` and, when present, ``y``."""
    for p in (path_A, path_y):
        Path(p).parent.mkdir(parents=True, exist_ok=True)
    scipy.io.mmwrite(str(path_A), sys.A, comment=f"n={sys.n} parity={sys.parity} D={sys.D}")
    if sys.y is not None and path_y is not None:
        scipy.io.mmwrite(str(path_y), sys.y.reshape(-1, 1))


def write_frames_csv(path, frames) -> Path:
    """One row ``(t, index, x, y, z, converged)`` per sample per frame."""
    def rows():
        for f in frames:
            for k, (p, ok) in enumerate(zip(f.points, f.converged)):
                yield float(f.t), k, float(p[0]), float(p[1]), float(p[2]), int(bool(ok))
    return write_table(path, ["t", "index", "x", "y", "z", "converged"], rows())


def write_frames_json(path, frames) -> Path:
    return write_json(path, {"frames": [f.to_dict() for f in frames]})


# ---------------------------------------------------------------------------
# SVG
# ---------------------------------------------------------------------------

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def svg_polylines(polylines: Sequence[np.ndarray], *, size: int = 600, margin: int = 20,
                  closed: bool = True, stroke: float = 1.0) -> str:
    """Fit 2D polylines into a square canvas; y points up."""
    pts = np.concatenate([np.asarray(p, dtype=float)[:, :2] for p in polylines]) if polylines else np.zeros((1, 2))
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    span = float(max(hi[0] - lo[0], hi[1] - lo[1], 1e-12))
    k = (size - 2 * margin) / span
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
           f'viewBox="0 0 {size} {size}">']
    for idx, p in enumerate(polylines):
        p = np.asarray(p, dtype=float)
        u = margin + (p[:, 0] - lo[0]) * k
        v = size - margin - (p[:, 1] - lo[1]) * k
        coords = " ".join(f"{a:.3f},{b:.3f}" for a, b in zip(u, v))
        tag = "polygon" if closed else "polyline"
        out.append(f'  <{tag} points="{coords}" fill="none" stroke="{_COLORS[idx % len(_COLORS)]}" '
                   f'stroke-width="{stroke}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg(path, polylines, **kw) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(svg_polylines(polylines, **kw))
    return path


def write_diagram_svg(path, d: DiagramCurve, samples: int = 2048) -> Path:
    t = TWO_PI * np.arange(samples) / samples
    return write_svg(path, [d.point(t)])


__all__ = [
    "dumps", "write_json", "read_json", "read_diagram", "write_diagram", "read_s3curve",
    "write_s3curve", "write_table", "read_table", "write_curve_csv", "write_candidate_table",
    "read_candidate_table", "write_system", "write_frames_csv", "write_frames_json",
    "svg_polylines", "write_svg", "write_diagram_svg",
]
