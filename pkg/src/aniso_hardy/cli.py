"""Command line entry point ``aniso-hardy``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .atoms import make_atom, validate_atom
from .builtins import DILATIONS, builtin_matrix, catalog
from .config import load_config
from .dilation import QuasiNormEvaluator, comparison_constant, compute_sigma
from .exceptions import AnisoHardyError, ConfigError
from .fourier import fourier_transform
from .pipeline import default_threads, jsonable, run
from .serialization import (
    atom_to_dict,
    load_function,
    parse_ball,
    parse_frequencies,
    parse_function,
    parse_matrix,
    write_rows_csv,
    write_spectrum_csv,
)
from .validation import check_q
from .varexp import luxemburg_norm, parse_exponent

VERIFY_CHECKS = ("thm31", "thm41", "thm42", "lemma32", "lemma34")


def _dump(obj) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _matrix_arg(text: str) -> np.ndarray:
    return builtin_matrix(text) if text in DILATIONS else parse_matrix(text)


def cmd_dilation_info(args) -> int:
    qn = QuasiNormEvaluator.from_matrix(_matrix_arg(args.matrix), args.epsilon)
    d, e = qn.dilation, qn.ellipsoid
    out = {
        "b": d.b,
        "lambda_minus": d.lambda_minus,
        "lambda_plus": d.lambda_plus,
        "diagonalizable": d.diagonalizable,
        "sigma": compute_sigma(e, d).sigma,
        "comparison_constant": comparison_constant(e, d, args.samples, seed=0),
        "r": e.r,
        "M": e.M.tolist(),
        "volume_scale": e.volume_scale,
    }
    sys.stdout.write(_dump(out))
    return 0


def cmd_luxemburg(args) -> int:
    p = parse_exponent(args.exponent)
    f = parse_function(args.function, args.resolution)
    sys.stdout.write(_dump({"norm": luxemburg_norm(f, p, args.tol), "exponent": p.spec, "function": args.function}))
    return 0


def cmd_atom_gen(args) -> int:
    ball = parse_ball(args.ball)
    n = len(ball.center)
    matrix = _matrix_arg(args.matrix) if args.matrix else 2.0 * np.eye(n)
    qn = QuasiNormEvaluator.from_matrix(matrix)
    if qn.n != n:
        raise ConfigError(f"ball centre has {n} coordinates, matrix is {qn.n}x{qn.n}")
    p = parse_exponent(args.exponent)
    q = check_q(args.q, p.p_plus)
    atom = make_atom(ball, q, args.s, p, qn, seed=args.seed, resolution=args.resolution)
    rep = validate_atom(atom, p, qn)
    data = atom_to_dict(atom, qn, args.exponent, args.seed, {**rep.__dict__, "valid": rep.valid})
    Path(args.out).write_text(json.dumps(data, sort_keys=True) + "\n")
    sys.stdout.write(_dump({"out": str(args.out), "valid": rep.valid, "size_ratio": rep.size_ratio, "worst_moment": rep.worst_moment}))
    return 0 if rep.valid else 1


def cmd_ft(args) -> int:
    f, meta = load_function(args.function)
    qn = QuasiNormEvaluator.from_matrix(np.array(meta["matrix"], dtype=float))
    pts = parse_frequencies(args.freqs, qn)
    vals = np.atleast_1d(fourier_transform(f, pts))
    write_spectrum_csv(args.out, pts, vals, qn.star(pts))
    sys.stdout.write(_dump({"out": str(args.out), "rows": len(pts)}))
    return 0


def _write_report(report, rows, report_path: Path, csv_path: Path | None) -> None:
    report_path.parent.mkdir(parents=True, exist_ok=True)
    report_path.write_text(_dump(report))
    if rows is not None and csv_path is not None:
        n = len(rows[0]) - 2 if rows else 0
        write_rows_csv(csv_path, [f"xi_{i + 1}" for i in range(n)] + ["abs_F", "bound"], rows)


def cmd_verify(args) -> int:
    cfg = load_config(args.config, checks=[args.check])
    report, rows = run(cfg, args.threads)
    out = Path(args.out)
    _write_report(report, rows, out, out.with_suffix(".csv"))
    sys.stdout.write(_dump({"check": args.check, "passed": report["passed"], "out": str(out)}))
    return 0 if report["passed"] else 1


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    report, rows = run(cfg, args.threads)
    out = Path(args.out)
    _write_report(report, rows, out / "report.json", out / "spectrum.csv")
    summary = {name: r["passed"] for name, r in report["checks"].items()}
    sys.stdout.write(_dump({"passed": report["passed"], "checks": summary, "out": str(out)}))
    return 0 if report["passed"] else 1


def cmd_list_builtins(args) -> int:
    sys.stdout.write(_dump(catalog()))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="aniso-hardy", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dilation-info", help="spectral data, sigma and comparison constant of a dilation")
    p.add_argument("--matrix", required=True, help="row-major comma-separated entries or a builtin name")
    p.add_argument("--epsilon", type=float, default=0.01)
    p.add_argument("--samples", type=int, default=4000)
    p.set_defaults(func=cmd_dilation_info)

    p = sub.add_parser("luxemburg", help="Luxemburg norm of a sampled function")
    p.add_argument("--exponent", required=True)
    p.add_argument("--function", required=True)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--resolution", type=int, default=None)
    p.set_defaults(func=cmd_luxemburg)

    p = sub.add_parser("atom-gen", help="generate and validate a seeded atom")
    p.add_argument("--ball", required=True, help="x1,...,xn,k")
    p.add_argument("--q", required=True, help="number or 'inf'")
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--exponent", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--matrix", default=None, help="defaults to 2I")
    p.add_argument("--resolution", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_atom_gen)

    p = sub.add_parser("ft", help="Fourier transform of a stored function")
    p.add_argument("--function", required=True, help="atom JSON file")
    p.add_argument("--freqs", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ft)

    p = sub.add_parser("verify", help="run one check of a configuration")
    p.add_argument("check", choices=VERIFY_CHECKS)
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("run", help="run every check listed in a configuration")
    p.add_argument("--config", required=True)
    p.add_argument("--threads", type=int, default=None, help=f"default from ANISO_HARDY_THREADS or {default_threads()}")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("list-builtins", help="named dilations, exponent families and default grids")
    p.set_defaults(func=cmd_list_builtins)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return 2
    except AnisoHardyError as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
