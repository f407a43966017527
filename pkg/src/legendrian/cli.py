"""Command line entry point: ``legendrian <command> ...``.

Inputs may be files or built-in fixtures written as ``fixture:NAME``.
Each command writes machine-readable JSON into ``--out`` and prints a short
``key: value`` summary. Any package error ends the run with exit status 1.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from contextlib import nullcontext
from pathlib import Path

import numpy as np

from . import fixtures, io, knots
from .config import RunConfig
from .diagram import DiagramCurve
from .errors import LegendrianError, NotLegendrian
from .legendrify import S3Curve, build_pipeline, s3_to_r3
from .trigpoly import TWO_PI

log = logging.getLogger("legendrian")

EXIT_OK, EXIT_ERROR, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# Inputs
# ---------------------------------------------------------------------------

def _fixture_name(src: str) -> str | None:
    return src.split(":", 1)[1] if src.startswith("fixture:") else None


def load_diagram(src: str) -> DiagramCurve:
    name = _fixture_name(src)
    if name is not None:
        if name not in fixtures.DIAGRAMS:
            raise UsageError(f"unknown diagram fixture {name!r}; choose from {sorted(fixtures.DIAGRAMS)}")
        return fixtures.DIAGRAMS[name]()
    return io.read_diagram(src)


def load_curve(src: str) -> S3Curve:
    name = _fixture_name(src)
    if name is not None:
        if name not in fixtures.CURVES:
            raise UsageError(f"unknown curve fixture {name!r}; choose from {sorted(fixtures.CURVES)}")
        return fixtures.CURVES[name]()
    return io.read_s3curve(src)


def _parse_times(text: str) -> tuple:
    try:
        return tuple(float(s) for s in text.replace(" ", "").split(",") if s)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad time list {text!r}") from exc


def make_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    over = {"residual_tol": args.tolerance, "samples": args.samples, "threads": args.threads,
            "seed": args.seed, "out": args.out, "times": args.times}
    if args.degree is not None:
        over["initial_degree"] = args.degree
        over["degree_cap"] = max(args.degree, cfg.degree_cap)
    return cfg.with_overrides(**over)


def _emit(report: dict, out: Path, name: str = "report.json") -> None:
    io.write_json(out / name, report)
    for k in sorted(report):
        v = report[k]
        if isinstance(v, (dict, list)):
            continue
        print(f"{k}: {v}")


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_build(args, cfg: RunConfig) -> int:
    d = load_diagram(args.diagram)
    out = Path(cfg.out)
    io.write_diagram_svg(out / "diagram.svg", d, cfg.samples)
    res = build_pipeline(d, cfg)
    io.write_s3curve(out / "curve.json", res.s3)
    io.write_json(out / "curve_r3.json", res.r3.to_dict())
    io.write_curve_csv(out / "curve.csv", res.s3, cfg.samples)
    report = res.report()
    reduced = knots.reduce_rm1(res.code)
    report.update({"command": "build", "diagram": d.name or args.diagram,
                   "gauss_code": knots.format_code(knots.relabel(reduced)),
                   "crossings_after_rm1": knots.n_crossings(reduced), "determinant": res.signature[1],
                   "residuals_ok": bool(report["residual_real"] <= cfg.residual_tol
                                        and report["residual_imag"] <= cfg.residual_tol
                                        and report["contact_defect"] <= cfg.coeff_tol)})
    _emit(report, out)
    return EXIT_OK if report["residuals_ok"] else EXIT_ERROR


def _svd_tail(A, k: int = 10) -> list:
    s = np.linalg.svd(A, compute_uv=False) if A.size else np.zeros(0)
    return [float(v) for v in s[-k:]]


def _normalise_phase(poly):
    from .tangency import PolyC2

    c = poly.coeffs
    if not np.any(c):
        return poly
    k = np.unravel_index(np.argmax(np.abs(c)), c.shape)
    return PolyC2(c * (abs(c[k]) / c[k]))


def cmd_solve_g(args, cfg: RunConfig) -> int:
    from .tangency import assemble_A, nullspace, verify_candidate_G

    c = load_curve(args.curve)
    out = Path(cfg.out)
    sys_ = assemble_A(c, args.n, cfg.parity, curve_id=args.curve)
    cands = nullspace(sys_, cfg.rank_tol)
    rows = []
    for k, cand in enumerate(cands):
        g = _normalise_phase(cand.poly)
        io.write_candidate_table(out / f"G_{k}.csv", g, tol=0.0)
        rep = verify_candidate_G(g, c, cfg.samples, seed=cfg.seed)
        rows.append({"index": k, "sigma": cand.sigma, **rep})
    if args.export_system:
        io.write_system(out / "A.mtx", None, sys_)
    report = {"command": "solve-g", "curve": args.curve, "n": args.n, "m": sys_.m, "parity": sys_.parity,
              "dimensions": f"{sys_.shape[0]} × {sys_.shape[1]}", "rows": sys_.shape[0],
              "columns": sys_.shape[1], "n_candidates": len(cands), "rho_scale": sys_.rho_scale,
              "singular_value_tail": _svd_tail(sys_.A), "candidates": rows}
    _emit(report, out)
    return EXIT_OK


def cmd_solve_h(args, cfg: RunConfig) -> int:
    from .tangency import assemble_A, assemble_y, least_squares, tangent_section, verify_candidate_h
    from .errors import DegreeTooSmall

    c = load_curve(args.curve)
    out = Path(cfg.out)
    if args.n < 2:
        raise DegreeTooSmall(f"n = {args.n} < 2")
    data = tangent_section(c, legendrian_tol=max(cfg.residual_tol, 1e-8))
    sys_ = assemble_y(c, args.n, assemble_A(c, args.n, cfg.parity, curve_id=args.curve), data)
    h, resid = least_squares(sys_)
    io.write_candidate_table(out / "h.csv", h, tol=0.0)
    if args.export_system:
        io.write_system(out / "A.mtx", out / "y.mtx", sys_)
    check = verify_candidate_h(h, c, min(cfg.samples, 256), data=data)
    flags = list(check.get("flags", []))
    if h.is_zero() and "ZeroSolution" not in flags:
        flags.append("ZeroSolution")
    report = {"command": "solve-h", "curve": args.curve, "n": args.n, "m": sys_.m,
              "dimensions": f"{sys_.shape[0]} × {sys_.shape[1]}", "lsq_residual": resid,
              "tangent_section_check": data.check, **{k: v for k, v in check.items() if k != "flags"},
              "flags": flags}
    _emit(report, out)
    return EXIT_OK


def cmd_evolve(args, cfg: RunConfig) -> int:
    from .dynamics import escape_time, evolve_frames

    c = load_curve(args.curve)
    out = Path(cfg.out)
    frames = evolve_frames(c, cfg.times, cfg.samples)
    io.write_frames_csv(out / "frames.csv", frames)
    io.write_frames_json(out / "frames.json", frames)
    for k, f in enumerate(frames):
        io.write_svg(out / f"frame_{k:02d}.svg", [f.points[:, :2]])
    report = {"command": "evolve", "curve": args.curve, "samples": cfg.samples,
              "frames": [{"t": f.t, "all_converged": f.all_converged, "max_residual": f.max_residual,
                          "mean_z": float(f.points[:, 2].mean()), "min_distance": f.min_distance(),
                          "z_histogram": f.z_histogram} for f in frames],
              "all_converged": all(f.all_converged for f in frames)}
    if not args.no_escape:
        esc = escape_time(c, cfg.escape_radius, samples=min(cfg.samples, 256))
        report.update({"escape_radius": esc.radius, "T_plus": esc.T_plus, "T_minus": esc.T_minus,
                       "escape_profile": [list(p) for p in esc.profile]})
    _emit(report, out)
    return EXIT_OK if report["all_converged"] else EXIT_ERROR


def verify_report(c: S3Curve, cfg: RunConfig) -> dict:
    """Pointwise and coefficient-level residuals with the worst locations."""
    n = cfg.samples
    t = TWO_PI * np.arange(n) / n
    z1, z2 = c.z(t)
    d1, d2 = c.z_prime(t)
    w = np.conj(z1) * d1 + np.conj(z2) * d2
    sphere = np.abs(np.abs(z1) ** 2 + np.abs(z2) ** 2 - 1)
    checks = {"sphere": sphere, "real": np.abs(w.real), "imag": np.abs(w.imag)}
    rep = {"command": "verify", "samples": n, "degree": c.degree, "violations": []}
    for name, arr in checks.items():
        k = int(np.argmax(arr))
        rep[f"residual_{name}"] = float(arr[k])
        rep[f"residual_{name}_at_t"] = float(t[k])
        if arr[k] > cfg.residual_tol:
            rep["violations"].append({"check": name, "value": float(arr[k]), "t": float(t[k]),
                                      "tol": cfg.residual_tol})
    rep["rho_identity_defect"] = c.rho_identity_defect()
    if rep["rho_identity_defect"] > cfg.coeff_tol:
        rep["violations"].append({"check": "rho_identity", "value": rep["rho_identity_defect"],
                                  "tol": cfg.coeff_tol})
    if c.n1.degree == 0 and c.n1.a0 > 0:
        d = s3_to_r3(c).contact_defect()
        coeffs = np.concatenate([[d.a0], d.cos, d.sin])
        k = int(np.argmax(np.abs(coeffs)))
        rep["contact_defect"] = float(abs(coeffs[k]))
        if rep["contact_defect"] > cfg.coeff_tol:
            kind = "a0" if k == 0 else ("cos" if k <= d.degree else "sin")
            freq = 0 if k == 0 else (k if k <= d.degree else k - d.degree)
            rep["violations"].append({"check": "contact_coefficient", "value": rep["contact_defect"],
                                      "term": f"{kind}({freq}t)", "tol": cfg.coeff_tol})
    rep["x1_min"] = float(np.min(z1.real))
    rep["ok"] = not rep["violations"]
    return rep


def cmd_verify(args, cfg: RunConfig) -> int:
    c = load_curve(args.curve)
    rep = verify_report(c, cfg)
    rep["curve"] = args.curve
    _emit(rep, Path(cfg.out))
    if not rep["ok"]:
        raise NotLegendrian(f"{len(rep['violations'])} residual check(s) failed: "
                            + ", ".join(v["check"] for v in rep["violations"]))
    return EXIT_OK


def cmd_export(args, cfg: RunConfig) -> int:
    out = Path(cfg.out)
    src = args.source
    name = _fixture_name(src)
    is_diagram = name in fixtures.DIAGRAMS if name is not None else "X" in io.read_json(src)
    written = []
    if is_diagram:
        d = load_diagram(src)
        stem = d.name or Path(src).stem
        written += [io.write_diagram(out / f"{stem}.json", d),
                    io.write_diagram_svg(out / f"{stem}.svg", d, cfg.samples)]
    else:
        from .dynamics import curve_samples_r3

        c = load_curve(src)
        stem = name or Path(src).stem
        written += [io.write_s3curve(out / f"{stem}.json", c),
                    io.write_curve_csv(out / f"{stem}.csv", c, cfg.samples),
                    io.write_svg(out / f"{stem}.svg", [curve_samples_r3(c, cfg.samples)[:, :2]])]
        if args.n is not None:
            from .tangency import assemble_A, assemble_y

            sys_ = assemble_A(c, args.n, cfg.parity, curve_id=src)
            try:
                assemble_y(c, args.n, sys_)
            except (NotLegendrian, LegendrianError) as exc:
                log.info("no right-hand side: %s", exc)
            io.write_system(out / f"{stem}_A.mtx", out / f"{stem}_y.mtx", sys_)
            written.append(out / f"{stem}_A.mtx")
            if sys_.y is not None:
                written.append(out / f"{stem}_y.mtx")
    report = {"command": "export", "source": src, "files": sorted(str(p) for p in written)}
    _emit(report, out, "export.json")
    return EXIT_OK


COMMANDS = {"build": cmd_build, "solve-g": cmd_solve_g, "solve-h": cmd_solve_h,
            "evolve": cmd_evolve, "verify": cmd_verify, "export": cmd_export}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value config file; flags override it")
    common.add_argument("--degree", type=int, help="initial Fourier degree of the escalation")
    common.add_argument("--tolerance", type=float, help="pointwise residual tolerance")
    common.add_argument("--times", type=_parse_times, help="comma-separated evolution times")
    common.add_argument("--samples", type=int, help="sample count for checks and exports")
    common.add_argument("--threads", type=int, help="BLAS thread limit")
    common.add_argument("--seed", type=int, help="seed for Monte-Carlo diagnostics")
    common.add_argument("--out", help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="legendrian", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    b = sub.add_parser("build", parents=[common], help="diagram -> Legendrian S^3 curve")
    b.add_argument("diagram")
    for name, helptext in (("solve-g", "polynomials vanishing on a curve"),
                           ("solve-h", "Bateman h tangent to a curve")):
        s = sub.add_parser(name, parents=[common], help=helptext)
        s.add_argument("curve")
        s.add_argument("--n", type=int, required=True, help="polynomial degree bound")
        s.add_argument("--export-system", action="store_true", help="also write Matrix Market files")
    e = sub.add_parser("evolve", parents=[common], help="time evolution of the field lines")
    e.add_argument("curve")
    e.add_argument("--no-escape", action="store_true", help="skip the escape-time scan")
    v = sub.add_parser("verify", parents=[common], help="residual checks of an S^3 curve")
    v.add_argument("curve")
    x = sub.add_parser("export", parents=[common], help="write a diagram or curve in every format")
    x.add_argument("source")
    x.add_argument("--n", type=int, help="also write the tangency system for this degree")
    return p


def _thread_limit(n: int):
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:  # pragma: no cover
        return nullcontext()
    return threadpool_limits(limits=n)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = make_config(args)
        with _thread_limit(cfg.threads):
            return COMMANDS[args.command](args, cfg)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (LegendrianError, ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        diag = getattr(exc, "diagnostics", None)
        err = {"error": type(exc).__name__, "message": str(exc), "diagnostics": diag}
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        try:
            io.write_json(Path(args.out or "out") / "error.json", err)
        except OSError:
            pass
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
