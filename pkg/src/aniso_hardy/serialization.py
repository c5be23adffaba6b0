"""File formats: atom JSON, spectrum CSV and the small text specs used on the command line.

Function specs (compactly supported, sampled on their own box):

* ``box:A,B`` indicator of ``[A, B]``; ``box:A1,B1,A2,B2`` of a 2D box
* ``bump:R[,N]`` ``exp(-1/(1 - |x|^2/R^2))`` on the ball of radius ``R`` in ``R^N``
* ``gauss:S,L[,N]`` ``exp(-|x|^2 / (2 S^2))`` truncated to ``[-L, L]^N``

Frequency specs:

* ``shells:MMIN,MMAX,DIRS,RADIAL`` points on the level sets of ``rho_{A*}``
* ``points:x1,x2;y1,y2;...`` explicit rows
* ``line:START,STOP,COUNT`` equispaced along the first axis
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .atoms import Atom
from .dilation import DilatedBall, QuasiNormEvaluator
from .exceptions import ConfigError, PreconditionError
from .fourier import FrequencyShells
from .grid import GriddedFunction

ATOM_FORMAT = "aniso-hardy-atom"
ATOM_VERSION = 1


def _num(v: float):
    return v if math.isfinite(v) else repr(float(v))


def atom_to_dict(atom: Atom, qn: QuasiNormEvaluator, exponent: str, seed: int, validation: dict | None = None) -> dict:
    f = atom.profile
    return {
        "format": ATOM_FORMAT,
        "version": ATOM_VERSION,
        "matrix": qn.dilation.matrix.tolist(),
        "exponent": exponent,
        "ball": {"center": list(atom.ball.center), "level": atom.level},
        "q": _num(atom.q),
        "s": atom.s,
        "seed": seed,
        "size_budget": atom.size_budget,
        "lq_norm": atom.lq_norm_value,
        "chi_norm": atom.chi_norm,
        "grid": {"lo": f.lo.tolist(), "hi": f.hi.tolist(), "resolution": list(f.resolution)},
        "values": np.asarray(f.values, dtype=float).ravel().tolist(),
        "validation": validation or {},
    }


def load_function(path) -> tuple[GriddedFunction, dict]:
    """Gridded samples and metadata from an atom JSON file."""
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    if data.get("format") != ATOM_FORMAT or data.get("version") != ATOM_VERSION:
        raise ConfigError(f"{path} is not a version {ATOM_VERSION} atom file")
    g = data["grid"]
    values = np.asarray(data["values"], dtype=float).reshape(g["resolution"])
    return GriddedFunction(g["lo"], g["hi"], values), data


def parse_function(spec: str, resolution: int | None = None) -> GriddedFunction:
    kind, _, args = spec.partition(":")
    try:
        nums = [float(v) for v in args.split(",")] if args else []
    except ValueError:
        raise PreconditionError(f"bad function spec {spec!r}") from None
    kind = kind.strip().lower()
    if kind == "box" and len(nums) in (2, 4, 6):
        lo = np.array(nums[0::2])
        hi = np.array(nums[1::2])
        n = len(lo)
        res = resolution or (4096 if n == 1 else 256)
        return GriddedFunction.from_callable(lambda x: np.ones(len(x)), lo, hi, res)
    if kind == "bump" and len(nums) in (1, 2):
        R = nums[0]
        n = int(nums[1]) if len(nums) == 2 else 1

        def bump(x):
            t = np.sum(np.atleast_2d(x) ** 2, axis=1) / R**2
            out = np.zeros(len(t))
            inside = t < 1
            out[inside] = np.exp(-1.0 / (1.0 - t[inside]))
            return out

        res = resolution or (4096 if n == 1 else 256)
        return GriddedFunction.from_callable(bump, -R * np.ones(n), R * np.ones(n), res)
    if kind == "gauss" and len(nums) in (2, 3):
        S, L = nums[0], nums[1]
        n = int(nums[2]) if len(nums) == 3 else 1
        res = resolution or (4096 if n == 1 else 256)
        return GriddedFunction.from_callable(
            lambda x: np.exp(-np.sum(np.atleast_2d(x) ** 2, axis=1) / (2 * S * S)), -L * np.ones(n), L * np.ones(n), res
        )
    raise PreconditionError(f"bad function spec {spec!r}")


def parse_frequencies(spec: str, qn: QuasiNormEvaluator) -> np.ndarray:
    kind, _, args = spec.partition(":")
    kind = kind.strip().lower()
    try:
        if kind == "shells":
            m0, m1, dirs, radial = (int(v) for v in args.split(","))
            return FrequencyShells(m0, m1, dirs, radial).points(qn.star)
        if kind == "points":
            rows = [[float(v) for v in row.split(",")] for row in args.split(";") if row.strip()]
            pts = np.array(rows, dtype=float)
            if pts.ndim != 2 or pts.shape[1] != qn.n:
                raise PreconditionError(f"points need {qn.n} coordinates each")
            return pts
        if kind == "line":
            a, b, c = args.split(",")
            t = np.linspace(float(a), float(b), int(c))
            pts = np.zeros((len(t), qn.n))
            pts[:, 0] = t
            return pts
    except ValueError:
        pass
    raise PreconditionError(f"bad frequency spec {spec!r}")


def write_spectrum_csv(path, points: np.ndarray, values: np.ndarray, rho: np.ndarray) -> None:
    n = points.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"xi_{i + 1}" for i in range(n)] + ["real", "imag", "rho_Astar"])
        for x, v, r in zip(points, values, rho):
            w.writerow([repr(float(c)) for c in x] + [repr(float(v.real)), repr(float(v.imag)), repr(float(r))])


def write_rows_csv(path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(c)) for c in row])


def parse_ball(text: str) -> DilatedBall:
    """``x0,k`` with every entry but the last a centre coordinate."""
    try:
        parts = [v.strip() for v in text.split(",")]
        center = [float(v) for v in parts[:-1]]
        level = int(parts[-1])
    except (ValueError, IndexError):
        raise PreconditionError(f"bad ball {text!r}; expected x1,...,xn,k") from None
    if not center:
        raise PreconditionError("ball needs at least one centre coordinate")
    return DilatedBall(center, level)


def parse_matrix(text: str) -> np.ndarray:
    """Row-major comma-separated entries of a square matrix (``;`` row breaks optional)."""
    try:
        vals = [float(v) for v in text.replace(";", ",").split(",") if v.strip()]
    except ValueError:
        raise PreconditionError(f"bad matrix {text!r}") from None
    n = int(round(math.sqrt(len(vals))))
    if n * n != len(vals) or n == 0:
        raise PreconditionError(f"{len(vals)} entries do not form a square matrix")
    return np.array(vals).reshape(n, n)
