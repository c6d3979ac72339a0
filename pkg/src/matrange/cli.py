"""Command-line surface.

Commands mirror the library: `compute numrange` for classical boundaries,
`sample pq` for certified clouds, `construct ...` for the witness
constructions, `verify ...` for the property suites.  All outputs are
canonical JSON (stdout or --out), so identical flags and seed give
byte-identical bytes; `compute numrange --svg` adds a flat polyline
rendering.

Exit codes: 0 success / accepted; 2 unreadable or invalid input file;
3 structural impossibility (dimensions, preconditions); 4 solver rejection
or stage failure (advisory, not a proof of non-membership); 5 verify suite
below its pass-rate threshold (report still written).
"""

from __future__ import annotations

import argparse
import sys

from .constructions import (
    DeflationError,
    deflated_solve,
    essential_estimate,
    segment_witness,
    star_center_matrix,
    star_center_scalar,
    tverberg_lift,
)
from .feasibility import (
    Rejection,
    SolverOptions,
    StructuralInfeasibility,
    sample_range,
    solve_free,
)
from .io import (
    ParseError,
    SchemaError,
    canonical_dumps,
    certificate_doc,
    cloud_doc,
    load_tuple,
    report_doc,
)
from .linalg import DimensionError, HermitianTuple, RankDeficiencyError
from .ranges import numrange_boundary
from .verify import (
    check_convexity,
    check_corner_inclusions,
    check_nonempty_bounds,
    check_pauli_nonconvexity,
    check_perturbation_equivalence,
    check_star_shaped,
    planted_star_instance,
)

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_STRUCTURAL = 3
EXIT_REJECTED = 4
EXIT_THRESHOLD = 5


def _emit(text: str, out_path) -> None:
    if out_path:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _opts(args) -> SolverOptions:
    return SolverOptions(accept_tol=args.accept_tol, max_restarts=args.restarts,
                         seed=args.seed, threads=args.threads)


def _load_hermitian(path, embed: bool) -> HermitianTuple:
    A = load_tuple(path, embed=embed)
    if not isinstance(A, HermitianTuple):
        raise DimensionError(
            "input tuple is not hermitian; pass --embed to work with the "
            "real/imaginary part 2m-tuple"
        )
    return A


def _rejection_doc(rej: Rejection) -> dict:
    return {
        "kind": "rejection",
        "best_residual": float(rej.best_residual),
        "restarts": int(rej.restarts),
        "message": rej.message,
    }


# ---------------------------------------------------------------------------
# compute


def boundary_svg(bd) -> str:
    """Flat polyline rendering with a fixed 800x800 viewBox."""
    v = bd.vertices
    xs, ys = v.real, v.imag
    xmin, ymin = float(xs.min()), float(ys.min())
    span = max(float(xs.max() - xmin), float(ys.max() - ymin), 1e-9)
    side, pad = 720.0, 40.0

    def fx(x):
        return pad + (x - xmin) / span * side

    def fy(y):
        return pad + side - (y - ymin) / span * side

    lines = ['<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 800 800">']
    if bd.degenerate == "point":
        lines.append(f'<circle cx="{fx(xs[0]):.3f}" cy="{fy(ys[0]):.3f}" '
                     'r="4" fill="black"/>')
    else:
        pts = " ".join(f"{fx(x):.3f},{fy(y):.3f}" for x, y in zip(xs, ys))
        first = f"{fx(xs[0]):.3f},{fy(ys[0]):.3f}"
        lines.append(f'<polyline points="{pts} {first}" fill="none" '
                     'stroke="black" stroke-width="1.5"/>')
    lines.append("</svg>\n")
    return "\n".join(lines)


def cmd_numrange(args) -> int:
    A = load_tuple(args.input)
    if isinstance(A, HermitianTuple):
        if A.m != 1:
            raise DimensionError("numrange needs exactly one matrix")
        M = A.mats[0]
    else:
        if len(A) != 1:
            raise DimensionError("numrange needs exactly one matrix")
        M = A[0]
    bd = numrange_boundary(M, n_angles=args.angles)
    doc = {
        "kind": "numrange-boundary",
        "angles": [float(t) for t in bd.angles],
        "vertices": [[float(z.real), float(z.imag)] for z in bd.vertices],
        "support": [float(s) for s in bd.support],
        "degenerate": bd.degenerate,
    }
    _emit(canonical_dumps(doc), args.out)
    if args.svg:
        with open(args.svg, "w", encoding="utf-8", newline="") as fh:
            fh.write(boundary_svg(bd))
    return EXIT_OK


# ---------------------------------------------------------------------------
# sample


def cmd_sample_pq(args) -> int:
    A = _load_hermitian(args.input, args.embed)
    cloud = sample_range(A, args.p, args.q, args.count, _opts(args))
    _emit(canonical_dumps(cloud_doc(cloud)), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# construct


def cmd_star_center(args) -> int:
    A = _load_hermitian(args.input, args.embed)
    fn = star_center_matrix if args.matrix else star_center_scalar
    out = fn(A, args.p, args.q, _opts(args))
    if isinstance(out, Rejection):
        _emit(canonical_dumps(_rejection_doc(out)), args.out)
        return EXIT_REJECTED
    doc = {
        "kind": "star-center",
        "style": "matrix" if args.matrix else "scalar",
        "p": args.p,
        "q": args.q,
        "level": int(out.certificate.p),
        "certificate": certificate_doc(out.certificate),
        "restricted": certificate_doc(out.restricted),
    }
    _emit(canonical_dumps(doc), args.out)
    return EXIT_OK


def cmd_segment(args) -> int:
    A = _load_hermitian(args.input, args.embed)
    opts = _opts(args)
    first = solve_free(A, args.p, args.q, opts)
    if isinstance(first, Rejection):
        _emit(canonical_dumps(_rejection_doc(first)), args.out)
        return EXIT_REJECTED
    second = deflated_solve(A, first, args.p, args.q,
                            opts.replace(seed=opts.seed + 1))
    if isinstance(second, Rejection):
        _emit(canonical_dumps(_rejection_doc(second)), args.out)
        return EXIT_REJECTED
    cert = segment_witness(A, first, second, args.t)
    doc = {
        "kind": "segment",
        "t": float(args.t),
        "certificate": certificate_doc(cert),
        "endpoints": [certificate_doc(first), certificate_doc(second)],
    }
    _emit(canonical_dumps(doc), args.out)
    return EXIT_OK


def cmd_tverberg(args) -> int:
    A = _load_hermitian(args.input, args.embed)
    try:
        lift = tverberg_lift(A, args.q, args.p, _opts(args))
    except DeflationError as e:
        _emit(canonical_dumps(_rejection_doc(e.rejection) | {"stage": e.stage}),
              args.out)
        return EXIT_REJECTED
    doc = {
        "kind": "tverberg-lift",
        "p": args.p,
        "q": args.q,
        "d": len(lift.family),
        "parts": [list(part) for part in lift.partition.parts],
        "weights": [[float(w) for w in ws] for ws in lift.partition.weights],
        "partitions_scanned": int(lift.partitions_scanned),
        "family_cross_tol": float(lift.family.cross_tol),
        "certificate": certificate_doc(lift.certificate),
    }
    _emit(canonical_dumps(doc), args.out)
    return EXIT_OK


def cmd_essential(args) -> int:
    A = _load_hermitian(args.input, args.embed)
    est = essential_estimate(A, args.q, args.r_max, _opts(args),
                             n_dirs=args.n_dirs, n_free=args.n_free)
    doc = {
        "kind": "essential-estimate",
        "q": args.q,
        "r_max": int(est.r_max),
        "directions": [[float(v) for v in row] for row in est.directions],
        "supports": [[float(v) for v in row] for row in est.supports],
        "intersection": [[float(v) for v in row] for row in est.intersection],
        "failed_r": est.failed_r,
    }
    if est.directions.shape[1] == 1:
        lo, hi = est.interval()
        doc["interval"] = [lo, hi]
    _emit(canonical_dumps(doc), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify


def _finish_verify(report, args) -> int:
    _emit(canonical_dumps(report_doc(report)), args.out)
    return EXIT_OK if report.passed(args.threshold) else EXIT_THRESHOLD


def cmd_verify_star(args) -> int:
    opts = _opts(args)
    if args.planted:
        A, certs = planted_star_instance(args.m, args.p, args.q, args.blocks,
                                         opts.seed)
        report = check_star_shaped(A, args.p, args.q, opts=opts, exact=certs)
    else:
        if args.input is None:
            raise SchemaError("verify star needs --input or --planted")
        A = _load_hermitian(args.input, args.embed)
        report = check_star_shaped(A, args.p, args.q, n_points=args.points,
                                   opts=opts)
    return _finish_verify(report, args)


def cmd_verify_bounds(args) -> int:
    report = check_nonempty_bounds(args.m, args.k, trials=args.trials,
                                   opts=_opts(args), bound=args.bound)
    return _finish_verify(report, args)


def cmd_verify_inclusions(args) -> int:
    report = check_corner_inclusions(m=args.m, n=args.n, p=args.p, q=args.q,
                                     r=args.r, trials=args.trials,
                                     corners=args.corners, opts=_opts(args))
    return _finish_verify(report, args)


def cmd_verify_convexity(args) -> int:
    if args.ensemble == "pauli":
        report = check_pauli_nonconvexity(opts=_opts(args), floor=args.floor)
    else:
        if args.input is None:
            raise SchemaError("verify convexity needs --input or --ensemble")
        A = _load_hermitian(args.input, args.embed)
        report = check_convexity(A, args.p, args.q, pairs=args.pairs,
                                 opts=_opts(args))
    return _finish_verify(report, args)


def cmd_verify_perturbation(args) -> int:
    report = check_perturbation_equivalence(m=args.m, n=args.n, p=args.p,
                                            q=args.q, trials=args.trials,
                                            rank=args.rank, opts=_opts(args))
    return _finish_verify(report, args)


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--accept-tol", type=float, default=1e-8)
    common.add_argument("--restarts", type=int, default=50)
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--out", default=None, help="output path (stdout if omitted)")

    parser = argparse.ArgumentParser(prog="matrange",
                                     description="generalized numerical ranges "
                                                 "with certificates")
    top = parser.add_subparsers(dest="group", required=True)

    compute = top.add_parser("compute").add_subparsers(dest="op", required=True)
    p = compute.add_parser("numrange", parents=[common])
    p.add_argument("--input", required=True)
    p.add_argument("--angles", type=int, default=256)
    p.add_argument("--svg", default=None)
    p.set_defaults(func=cmd_numrange)

    sample = top.add_parser("sample").add_subparsers(dest="op", required=True)
    p = sample.add_parser("pq", parents=[common])
    p.add_argument("--input", required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--count", type=int, default=16)
    p.add_argument("--embed", action="store_true")
    p.set_defaults(func=cmd_sample_pq)

    construct = top.add_parser("construct").add_subparsers(dest="op", required=True)
    p = construct.add_parser("star-center", parents=[common])
    p.add_argument("--input", required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--matrix", action="store_true",
                   help="matrix-valued center at deep level instead of scalar")
    p.add_argument("--embed", action="store_true")
    p.set_defaults(func=cmd_star_center)

    p = construct.add_parser("segment", parents=[common])
    p.add_argument("--input", required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--t", type=float, default=0.5)
    p.add_argument("--embed", action="store_true")
    p.set_defaults(func=cmd_segment)

    p = construct.add_parser("tverberg", parents=[common])
    p.add_argument("--input", required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--embed", action="store_true")
    p.set_defaults(func=cmd_tverberg)

    p = construct.add_parser("essential", parents=[common])
    p.add_argument("--input", required=True)
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--r-max", type=int, required=True)
    p.add_argument("--n-dirs", type=int, default=64)
    p.add_argument("--n-free", type=int, default=4)
    p.add_argument("--embed", action="store_true")
    p.set_defaults(func=cmd_essential)

    verify = top.add_parser("verify").add_subparsers(dest="op", required=True)
    p = verify.add_parser("star", parents=[common])
    p.add_argument("--input", default=None)
    p.add_argument("--planted", action="store_true")
    p.add_argument("--p", type=int, default=1)
    p.add_argument("--q", type=int, default=1)
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--blocks", type=int, default=4)
    p.add_argument("--points", type=int, default=20)
    p.add_argument("--threshold", type=float, default=0.95)
    p.add_argument("--embed", action="store_true")
    p.set_defaults(func=cmd_verify_star)

    p = verify.add_parser("bounds", parents=[common])
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--bound", choices=("general", "refined"), default="general")
    p.add_argument("--threshold", type=float, default=0.95)
    p.set_defaults(func=cmd_verify_bounds)

    p = verify.add_parser("inclusions", parents=[common])
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--n", type=int, default=18)
    p.add_argument("--p", type=int, default=3)
    p.add_argument("--q", type=int, default=1)
    p.add_argument("--r", type=int, default=1)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--corners", type=int, default=5)
    p.add_argument("--threshold", type=float, default=0.95)
    p.set_defaults(func=cmd_verify_inclusions)

    p = verify.add_parser("convexity", parents=[common])
    p.add_argument("--input", default=None)
    p.add_argument("--ensemble", choices=("pauli",), default=None)
    p.add_argument("--p", type=int, default=1)
    p.add_argument("--q", type=int, default=1)
    p.add_argument("--pairs", type=int, default=10)
    p.add_argument("--floor", type=float, default=0.5)
    p.add_argument("--threshold", type=float, default=0.95)
    p.add_argument("--embed", action="store_true")
    p.set_defaults(func=cmd_verify_convexity)

    p = verify.add_parser("perturbation", parents=[common])
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--n", type=int, default=16)
    p.add_argument("--p", type=int, default=1)
    p.add_argument("--q", type=int, default=1)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--rank", type=int, default=2)
    p.add_argument("--threshold", type=float, default=0.95)
    p.set_defaults(func=cmd_verify_perturbation)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as e:
        print(f"error: cannot read {e.filename}", file=sys.stderr)
        return EXIT_PARSE
    except (ParseError, SchemaError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except (DimensionError, StructuralInfeasibility, RankDeficiencyError,
            ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_STRUCTURAL


if __name__ == "__main__":
    sys.exit(main())
