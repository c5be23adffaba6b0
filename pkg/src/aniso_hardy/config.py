"""Run configurations: schema validation, precondition checks and hashing."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

import jsonschema
import numpy as np

from .atoms import minimal_s
from .builtins import builtin_matrix
from .dilation import DEFAULT_EPSILON, analyze_dilation
from .exceptions import AnisoHardyError, ConfigError
from .varexp import parse_exponent

SCHEMA_VERSION = 1
NEEDS_P_PLUS_LE_1 = ("lemma33", "thm31", "thm42")
NEEDS_P_MINUS_LE_1 = ("thm41",)

DEFAULT_TOLERANCES = {
    "seed": 0,
    "containment_trials": 10_000,
    "commutation_factor": 10.0,
    "commutation_j": [-1, 1],
    "lemma32_k_range": [-3, 3],
    "thm31_doubling_rtol": 0.2,
    "thm41_decline": 0.1,
    "thm41_radii": 12,
    "thm41_directions": 16,
    "thm42_shell_range": [-4, 4],
    "thm42_widen_rtol": 0.01,
}
DEFAULT_FREQUENCIES = {"m_min": -6, "m_max": 6, "directions": 32, "radial": 2}


def load_schema() -> dict:
    text = resources.files("aniso_hardy").joinpath("schemas/run.schema.json").read_text()
    return json.loads(text)


def config_hash(raw: dict) -> str:
    """sha256 of the canonical JSON form (sorted keys, no whitespace)."""
    canon = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


@dataclass
class AtomSpec:
    center: list
    level: int
    q: float
    s: int
    seed: int


@dataclass
class RunConfig:
    raw: dict
    matrix: np.ndarray
    epsilon: float
    exponent: str
    atoms: list = field(default_factory=list)
    lambdas: Optional[list] = None
    random: Optional[dict] = None
    atom_resolution: Optional[int] = None
    quantity_resolution: Optional[int] = None
    frequencies: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    tolerances: dict = field(default_factory=dict)

    @property
    def sha256(self) -> str:
        return config_hash(self.raw)


def _q(value) -> float:
    return math.inf if value == "inf" else float(value)


def parse_config(raw: dict, checks: Optional[list] = None) -> RunConfig:
    """Validate ``raw`` against the schema and every module precondition.

    ``checks`` overrides the configured list (the hash still covers ``raw``).

    Raises
    ------
    ConfigError
        Naming the first violated rule; nothing has been computed yet.
    """
    try:
        jsonschema.validate(raw, load_schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"schema violation at {where}: {exc.message}") from None
    dil = raw["dilation"]
    try:
        matrix = builtin_matrix(dil["builtin"]) if "builtin" in dil else np.array(dil["matrix"], dtype=float)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ConfigError("dilation matrix must be square")
        epsilon = float(dil.get("epsilon", DEFAULT_EPSILON))
        d = analyze_dilation(matrix, epsilon)
        p = parse_exponent(raw["exponent"])
    except ConfigError:
        raise
    except AnisoHardyError as exc:
        raise ConfigError(str(exc)) from None
    n = d.n
    s_min = minimal_s(p, d)
    q_floor = max(p.p_plus, 1.0)

    def check_atom_params(q, s, where):
        if not q > q_floor:
            raise ConfigError(f"{where}: q = {q:g} violates q > max(p_+, 1) = {q_floor:g}")
        if s < s_min:
            raise ConfigError(f"{where}: s = {s} violates s >= minimal_s = {s_min}")

    dec = raw["decomposition"]
    atoms = []
    for i, spec in enumerate(dec.get("atoms", [])):
        if len(spec["center"]) != n:
            raise ConfigError(f"decomposition/atoms/{i}: center has {len(spec['center'])} coordinates, need {n}")
        a = AtomSpec(list(spec["center"]), int(spec["level"]), _q(spec.get("q", "inf")), int(spec.get("s", s_min)), int(spec.get("seed", i)))
        check_atom_params(a.q, a.s, f"decomposition/atoms/{i}")
        atoms.append(a)
    random = None
    if "random" in dec:
        random = dict(dec["random"])
        random.setdefault("seed", 0)
        random["q"] = _q(random.get("q", "inf"))
        random.setdefault("s", s_min)
        random.setdefault("levels", [-1, 1])
        random.setdefault("spread", 1.0)
        check_atom_params(random["q"], random["s"], "decomposition/random")
        if random["levels"][0] > random["levels"][1]:
            raise ConfigError("decomposition/random/levels: empty interval")
    lambdas = dec.get("lambdas")
    if lambdas is not None:
        count = len(atoms) if atoms else random["count"]
        if len(lambdas) != count:
            raise ConfigError(f"decomposition/lambdas: {len(lambdas)} coefficients for {count} atoms")
    checks = list(raw["checks"] if checks is None else checks)
    for c in checks:
        if c in NEEDS_P_PLUS_LE_1 and p.p_plus > 1.0:
            raise ConfigError(f"check {c} needs p_+ <= 1, exponent has p_+ = {p.p_plus:g}")
        if c in NEEDS_P_MINUS_LE_1 and p.p_minus > 1.0:
            raise ConfigError(f"check {c} needs p_- <= 1, exponent has p_- = {p.p_minus:g}")
    tol = dict(DEFAULT_TOLERANCES)
    tol.update(raw.get("tolerances", {}))
    for key in ("lemma32_k_range", "thm42_shell_range"):
        if tol[key][0] > tol[key][1]:
            raise ConfigError(f"tolerances/{key}: empty interval")
    freqs = dict(DEFAULT_FREQUENCIES)
    freqs.update(raw.get("frequencies", {}))
    if freqs["m_min"] > freqs["m_max"]:
        raise ConfigError("frequencies: m_min > m_max")
    grids = raw.get("grids", {})
    return RunConfig(
        raw=raw,
        matrix=matrix,
        epsilon=epsilon,
        exponent=raw["exponent"],
        atoms=atoms,
        lambdas=lambdas,
        random=random,
        atom_resolution=grids.get("atom_resolution"),
        quantity_resolution=grids.get("quantity_resolution"),
        frequencies=freqs,
        checks=checks,
        tolerances=tol,
    )


def load_config(path, checks: Optional[list] = None) -> RunConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    return parse_config(raw, checks)
