"""Named dilations, exponent families and default grids."""

from __future__ import annotations

import math

import numpy as np

from .exceptions import PreconditionError

_c, _s = math.cos(math.pi / 6), math.sin(math.pi / 6)

DILATIONS = {
    "dyadic-1d": [[2.0]],
    "dyadic-2d": [[2.0, 0.0], [0.0, 2.0]],
    "dyadic-3d": [[2.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 2.0]],
    "diag23": [[2.0, 0.0], [0.0, 3.0]],
    "shear": [[2.0, 1.0], [0.0, 2.0]],
    "rot30": [[2 * _c, -2 * _s], [2 * _s, 2 * _c]],
}

EXPONENT_FAMILIES = {
    "constant(p0)": "constant:P0",
    "log-smooth(p∞, c)": "log-smooth:PINF,C",
    "step(pL, pR, t)": "step:PL,PR[,T]",
}

DEFAULT_GRIDS = {
    "atom_resolution": {"1d": 512, "2d": 96, "3d": 32},
    "frequency_shells": {"m_min": -6, "m_max": 6, "directions": 32, "radial": 2},
    "thm41_radii": "2^-m, m = 1..12",
    "thm42_shell_range": [-4, 4],
}


def builtin_matrix(name: str) -> np.ndarray:
    try:
        return np.array(DILATIONS[name], dtype=float)
    except KeyError:
        raise PreconditionError(f"unknown builtin dilation {name!r}; known: {sorted(DILATIONS)}") from None


def catalog() -> dict:
    return {
        "dilations": {k: DILATIONS[k] for k in sorted(DILATIONS)},
        "exponent_families": EXPONENT_FAMILIES,
        "default_grids": DEFAULT_GRIDS,
    }
