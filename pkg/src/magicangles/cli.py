"""Command-line front end.

Every invocation writes one artifact (JSON or CSV) to ``--out`` or stdout.
CSV artifacts start with ``#`` metadata lines; JSON artifacts wrap the
result as ``{"meta": ..., "result": ...}``.  The metadata echoes the fully
resolved configuration so that a run can be repeated exactly; pass
``--no-timing`` to drop the wall-time field and get byte-identical files.

Exit codes: 0 success, 1 certification failure, 2 invalid input,
3 solver non-convergence.
"""

import argparse
import json
import math
import sys
import time

import numpy as np

from . import __version__
from ._pool import default_threads
from .errors import CertificationFailed, MagicAnglesError, NotConverged, ValidationError
from .lattice import K_STAR, OMEGA, complex_from_rect, kpoint_from_complex, kpoint_from_coords
from .potential import PotentialSpec, bracket_field, parse_potential

EXIT_OK, EXIT_CERT, EXIT_INPUT, EXIT_SOLVER = 0, 1, 2, 3


# ---------------------------------------------------------------------------
# Argument helpers
# ---------------------------------------------------------------------------

def _floats(text, count=None, name="value"):
    try:
        vals = [float(t) for t in text.split(",")]
    except ValueError:
        raise ValidationError(f"{name}: expected comma-separated numbers, got {text!r}") from None
    if count is not None and len(vals) != count:
        raise ValidationError(f"{name}: expected {count} numbers, got {len(vals)}")
    return vals


def _range(text, name):
    parts = text.split(":")
    if len(parts) != 3:
        raise ValidationError(f"{name}: expected start:stop:step, got {text!r}")
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise ValidationError(f"{name}: bad number in {text!r}") from None


def _resolve_k(args, default):
    if args.k is not None and args.k_complex is not None:
        raise ValidationError("give either --k or --k-complex, not both")
    if args.k is not None:
        k1, k2 = _floats(args.k, 2, "--k")
        return kpoint_from_coords(k1, k2)
    if args.k_complex is not None:
        if args.k_complex.strip() == "kstar":
            return kpoint_from_complex(K_STAR)
        re, im = _floats(args.k_complex, 2, "--k-complex")
        return kpoint_from_complex(complex(re, im))
    return default


def _resolve_potential(args):
    if args.potential_file:
        with open(args.potential_file, encoding="utf-8") as fh:
            return PotentialSpec.from_json(fh.read())
    return parse_potential(args.potential)


def _kdict(kp):
    return {"k1": kp.k1, "k2": kp.k2, "k_re": kp.k.real, "k_im": kp.k.imag}


# ---------------------------------------------------------------------------
# Subcommands: each returns (format, payload, extra config)
# ---------------------------------------------------------------------------

def cmd_magic(args, spec):
    from .magic import resonant_set
    kp = _resolve_k(args, kpoint_from_coords(0.5, 0.0))
    source = None if args.source == "auto" else args.source
    rs = resonant_set(args.N, kp, spec, count=args.count, source=source)
    cfg = {"N": args.N, "count": args.count, "source": rs.source, **_kdict(kp)}
    if args.format == "csv":
        return "csv", rs.to_csv(), cfg
    res = rs.to_dict()
    res["magic"] = [e.alpha.real for e in rs.magic]
    return "json", res, cfg


def cmd_bands(args, spec):
    from .bands import band_path
    if args.k is not None or args.k_complex is not None:
        path = [_resolve_k(args, None)]
        cfg = {"kpath": "point"}
    else:
        t0, t1, steps = _range(args.kpath, "--kpath")
        if steps < 1 or int(steps) != steps:
            raise ValidationError("--kpath steps must be a positive integer")
        ts = np.linspace(t0, t1, int(steps))
        path = [kpoint_from_complex(t * OMEGA / math.sqrt(3)) for t in ts]
        cfg = {"kpath": f"{t0!r}:{t1!r}:{int(steps)}"}
    table = band_path(args.N, path, args.alpha, args.bands, spec)
    cfg.update({"N": args.N, "alpha": args.alpha, "bands": args.bands})
    return "csv", table.to_csv(), cfg


def cmd_resolvent_scan(args, spec):
    from .bands import alpha_grid, resolvent_scan_alpha
    kp = _resolve_k(args, kpoint_from_complex(K_STAR))
    a0, a1, step = _range(args.alpha_range, "--alpha-range")
    rows = resolvent_scan_alpha(kp, alpha_grid(a0, a1, step), args.N, spec, threads=args.threads)
    lines = ["alpha,log_resolvent_norm"] + [f"{a!r},{v!r}" for a, v in rows]
    cfg = {"N": args.N, "alpha_range": args.alpha_range, **_kdict(kp)}
    if len(rows) >= 2:
        x = np.array([r[0] for r in rows])
        y = np.array([r[1] for r in rows])
        ok = np.isfinite(y)
        if ok.sum() >= 2:
            cfg["lsq_slope"] = float(np.polyfit(x[ok], y[ok], 1)[0])
    return "csv", "\n".join(lines) + "\n", cfg


def cmd_pseudospectrum(args, spec):
    from .bands import pseudospectrum_grid
    window = _floats(args.window, 4, "--window")
    grid = pseudospectrum_grid(args.alpha, window, args.resolution, args.N, args.levels, spec,
                               threads=args.threads)
    cfg = {"N": args.N, "alpha": args.alpha, "window": window, "resolution": args.resolution,
           "level": args.levels, "marked": int(grid.marked.sum())}
    return "csv", grid.to_csv(), cfg


def cmd_trace_check(args, spec):
    from .traces import trace_report
    if not spec.is_standard:
        raise ValidationError("trace-check applies to the standard potential only")
    kp = _resolve_k(args, kpoint_from_coords(0.5, 0.0))
    Ns = args.N or [32, 64]
    rep = trace_report(args.power, Ns, kp)
    cfg = {"power": args.power, "N": list(rep.Ns), **_kdict(kp)}
    return "csv", rep.table(), cfg


def cmd_certify(args, spec):
    from .certify import guarantee, verify_guarantee
    if not spec.is_standard:
        raise ValidationError("certification applies to the standard potential only")
    cert = guarantee(args.delta, args.target, args.N_probe, threads=args.threads)
    cfg = {"delta": args.delta, "target": args.target, "N_probe": args.N_probe, "verify": args.verify}
    if args.verify:
        try:
            cert = verify_guarantee(cert, threads=args.threads)
        except CertificationFailed as exc:
            out = cert.to_dict()
            out.update(status="failed", failure=str(exc), inequality=exc.inequality)
            return "json", out, cfg, EXIT_CERT
    return "json", cert.to_dict(), cfg


def _cell_grid(res):
    # Fundamental cell of the period lattice in rectangular coordinates.
    t = 2 * np.pi * np.arange(res) / res
    y1, y2 = np.meshgrid(t, t, indexing="ij")
    return complex_from_rect(y1, y2)


def cmd_eigenfunction(args, spec):
    from .theta import bloch_recipe, eval_kernel, kernel_vector
    kp = _resolve_k(args, kpoint_from_coords(0.0, 0.0))
    if args.grid < 2:
        raise ValidationError("--grid must be >= 2")
    u = kernel_vector(args.N, args.alpha, spec, warn_near_magic=False)
    z = _cell_grid(args.grid)
    cfg = {"N": args.N, "alpha": args.alpha, "grid": args.grid, **_kdict(kp)}
    if kp.k1 == 0 and kp.k2 == 0:
        vals = eval_kernel(u, z)
    else:
        rec = bloch_recipe(u, kp, spec)
        vals = rec.function(z)
        cfg.update(recipe_residual=rec.residual, used_flip=rec.used_flip)
    mag = np.sqrt(np.abs(vals[0]) ** 2 + np.abs(vals[1]) ** 2)
    with np.errstate(divide="ignore"):
        logm = np.log(mag)
    lines = ["x1,x2,log_abs_u"]
    for zz, lv in zip(z.ravel(), logm.ravel()):
        lines.append(f"{float(zz.real)!r},{float(zz.imag)!r},{float(lv)!r}")
    return "csv", "\n".join(lines) + "\n", cfg


def cmd_squeeze_check(args, spec):
    from .bands import squeeze_check
    kp = _resolve_k(args, kpoint_from_complex(K_STAR))
    alphas = _floats(args.alphas, None, "--alphas")
    rep = squeeze_check(kp, alphas, args.N, args.c0, args.c1, spec, args.bands)
    cfg = {"N": args.N, "alphas": alphas, "c0": args.c0, "c1": args.c1, "bands": args.bands, **_kdict(kp)}
    return "json", {"rows": rep.rows, "passed": rep.passed}, cfg


def cmd_bracket_field(args, spec):
    if args.grid < 2:
        raise ValidationError("--grid must be >= 2")
    z = _cell_grid(args.grid)
    vals = bracket_field(spec, z)
    lines = ["x1,x2,bracket"]
    for zz, v in zip(z.ravel(), np.ravel(vals)):
        lines.append(f"{float(zz.real)!r},{float(zz.imag)!r},{float(v)!r}")
    return "csv", "\n".join(lines) + "\n", {"grid": args.grid}


COMMANDS = {
    "magic": cmd_magic,
    "bands": cmd_bands,
    "resolvent-scan": cmd_resolvent_scan,
    "pseudospectrum": cmd_pseudospectrum,
    "trace-check": cmd_trace_check,
    "certify": cmd_certify,
    "eigenfunction": cmd_eigenfunction,
    "squeeze-check": cmd_squeeze_check,
    "bracket-field": cmd_bracket_field,
}


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _common():
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("common options")
    g.add_argument("--potential", default="std", help="'std' or 'mu=<float>' (default: std)")
    g.add_argument("--potential-file", help="JSON potential {\"coeffs\": {\"1\": [re, im], ...}}")
    g.add_argument("--k", help="quasi-momentum in dual coordinates 'k1,k2'")
    g.add_argument("--k-complex", help="quasi-momentum as 're,im' or 'kstar'")
    g.add_argument("--out", help="output path (default: stdout)")
    g.add_argument("--threads", type=int, default=None,
                   help="worker threads for grid scans (default: $MAGICANGLES_THREADS or 1)")
    g.add_argument("--seed", type=int, default=0, help="seed recorded for reproducibility")
    g.add_argument("--no-timing", action="store_true", help="omit wall time from the metadata")
    return p


def build_parser():
    common = _common()
    parser = argparse.ArgumentParser(prog="magicangles", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"magicangles {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("magic", parents=[common], help="resonant set and magic parameters")
    p.add_argument("--N", type=int, default=16)
    p.add_argument("--count", type=int, default=20)
    p.add_argument("--source", choices=["auto", "B_reduced", "T_full"], default="auto")
    p.add_argument("--format", choices=["json", "csv"], default="json")

    p = sub.add_parser("bands", parents=[common], help="lowest bands along a k-path")
    p.add_argument("--N", type=int, default=24)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--kpath", default="-0.5:0.5:41",
                   help="t0:t1:steps along k = t omega / sqrt 3 (write --kpath=-0.5:0.5:41 for negative t0)")
    p.add_argument("--bands", type=int, default=2)

    p = sub.add_parser("resolvent-scan", parents=[common], help="log resolvent norm versus alpha")
    p.add_argument("--N", type=int, default=32)
    p.add_argument("--alpha-range", default="3:6:0.05", help="start:stop:step")

    p = sub.add_parser("pseudospectrum", parents=[common], help="resolvent norm over a complex k window")
    p.add_argument("--N", type=int, default=16)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--window", default="-1,1,-1,1", help="re_min,re_max,im_min,im_max")
    p.add_argument("--resolution", type=int, default=21)
    p.add_argument("--levels", type=float, default=1e2, help="marking threshold for the norm")

    p = sub.add_parser("trace-check", parents=[common], help="truncated traces of T^4 or T^8")
    p.add_argument("--power", type=int, choices=[4, 8], default=4)
    p.add_argument("--N", type=int, nargs="+", default=None, help="truncations (default: 32 64)")

    p = sub.add_parser("certify", parents=[common], help="required truncation for alpha_j to accuracy delta")
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--target", type=int, choices=[1, 2, 3], required=True)
    p.add_argument("--N-probe", type=int, default=16)
    p.add_argument("--verify", action="store_true", help="re-run the bound at the required N")

    p = sub.add_parser("eigenfunction", parents=[common], help="log |u| on the fundamental cell")
    p.add_argument("--N", type=int, default=16)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--grid", type=int, default=64)

    p = sub.add_parser("squeeze-check", parents=[common], help="bands against c0 exp(-c1 alpha)")
    p.add_argument("--N", type=int, default=48)
    p.add_argument("--alphas", default="2,3,4,5,6")
    p.add_argument("--c0", type=float, default=10.0)
    p.add_argument("--c1", type=float, default=1.0)
    p.add_argument("--bands", type=int, default=1)

    p = sub.add_parser("bracket-field", parents=[common], help="bracket field magnitude on the cell")
    p.add_argument("--grid", type=int, default=64)
    return parser


def _config(args, spec, extra):
    cfg = {"command": args.command, "potential": json.loads(spec.to_json()), "seed": args.seed,
           "threads": args.threads}
    cfg.update(extra)
    return cfg


def _render(fmt, payload, meta):
    if fmt == "json":
        return json.dumps({"meta": meta, "result": payload}, sort_keys=True, indent=2, default=_jsonable) + "\n"
    head = [f"# magicangles {meta['version']}",
            f"# config: {json.dumps(meta['config'], sort_keys=True, default=_jsonable)}"]
    if "wall_time_s" in meta:
        head.append(f"# wall_time_s: {meta['wall_time_s']:.3f}")
    return "\n".join(head) + "\n" + payload


def _jsonable(obj):
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")


def run(argv=None):
    """Parse ``argv``, run one subcommand and return the exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)
    start = time.perf_counter()
    try:
        if args.threads is None:
            args.threads = default_threads()
        if args.threads < 1:
            raise ValidationError("--threads must be >= 1")
        spec = _resolve_potential(args)
        out = COMMANDS[args.command](args, spec)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NotConverged, np.linalg.LinAlgError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except MagicAnglesError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    fmt, payload, extra = out[:3]
    code = out[3] if len(out) > 3 else EXIT_OK
    meta = {"version": __version__, "config": _config(args, spec, extra)}
    if not args.no_timing:
        meta["wall_time_s"] = time.perf_counter() - start
    text = _render(fmt, payload, meta)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


def main():
    sys.exit(run())
