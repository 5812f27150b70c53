"""File formats shared by the command-line drivers.

Matrix literal (all modules):  {"dim": k, "entries": [[[re, im], ...], ...]}
row-major; ragged rows are rejected.  Measures, triples, sea configs, and
integrator specs build on it.  CSV outputs begin with '#'-prefixed header
lines (command, config hash, seed, version) so every file is self-describing;
wall-clock time goes only into the run manifest, keeping result files
byte-reproducible.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .causal import DiscreteMeasure
from .errors import ConfigError
from .linop import Operator, SpacetimePointOp, as_spacetime_point
from .minimizer import MinimizeProblem, Schedule
from .sea import DiracSeaConfig, LatticeSpec
from .spectral import CutoffFunction, FiniteSpectralTriple
from .tracedyn import MatrixPhaseState, TraceLagrangianSpec, state_from_velocities

TOOL_VERSION = "0.1.0"


# -- matrix literals ----------------------------------------------------------

def matrix_to_obj(m: np.ndarray) -> dict:
    m = np.asarray(m, dtype=np.complex128)
    return {
        "dim": int(m.shape[0]),
        "entries": [[[float(z.real), float(z.imag)] for z in row] for row in m],
    }


def matrix_from_obj(obj, where: str = "matrix") -> np.ndarray:
    if not isinstance(obj, dict) or "dim" not in obj or "entries" not in obj:
        raise ConfigError(f"{where}: expected a matrix literal with dim and entries")
    dim = obj["dim"]
    rows = obj["entries"]
    if not isinstance(dim, int) or dim < 1:
        raise ConfigError(f"{where}: dim must be a positive integer")
    if not isinstance(rows, list) or len(rows) != dim:
        raise ConfigError(f"{where}: expected {dim} rows, got {len(rows)}")
    out = np.empty((dim, dim), dtype=np.complex128)
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != dim:
            raise ConfigError(f"{where}: row {i} is ragged (expected {dim} entries)")
        for j, z in enumerate(row):
            if not (isinstance(z, list) and len(z) == 2):
                raise ConfigError(f"{where}: entry ({i},{j}) must be [re, im]")
            out[i, j] = complex(z[0], z[1])
    return out


# -- discrete measures ---------------------------------------------------------

def measure_to_obj(rho: DiscreteMeasure) -> dict:
    return {
        "spin_dim": rho.spin_dim,
        "points": [matrix_to_obj(p.matrix) for p in rho.points],
        "weights": [float(w) for w in rho.weights],
    }


def measure_from_obj(obj, where: str = "measure") -> DiscreteMeasure:
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected an object")
    try:
        n = int(obj["spin_dim"])
        raw_points = obj["points"]
        weights = obj["weights"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: needs spin_dim, points, weights ({exc})") from exc
    points = []
    for i, p in enumerate(raw_points):
        mat = matrix_from_obj(p, where=f"{where}.points[{i}]")
        try:
            points.append(as_spacetime_point(Operator(mat, selfadjoint=True), n))
        except ValueError as exc:
            raise ConfigError(f"{where}.points[{i}]: {exc}") from exc
    try:
        return DiscreteMeasure(points=tuple(points), weights=np.asarray(weights, float))
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


# -- spectral triples ------------------------------------------------------------

def triple_from_obj(obj, where: str = "triple") -> FiniteSpectralTriple:
    try:
        grading = matrix_from_obj(obj["grading"], where=f"{where}.grading")
        dirac = matrix_from_obj(obj["dirac"], where=f"{where}.dirac")
    except KeyError as exc:
        raise ConfigError(f"{where}: needs grading and dirac matrices") from exc
    label = obj.get("algebra_label", "")
    try:
        return FiniteSpectralTriple(grading, dirac, algebra_label=label)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def triple_to_obj(t: FiniteSpectralTriple) -> dict:
    return {
        "n": t.n,
        "grading": matrix_to_obj(t.grading),
        "dirac": matrix_to_obj(t.dirac),
        "algebra_label": t.algebra_label,
    }


def cutoff_from_obj(obj, where: str = "cutoff") -> CutoffFunction:
    if obj is None:
        return CutoffFunction(kind="hard_step")
    try:
        return CutoffFunction(kind=obj["kind"], width=float(obj.get("width", 0.0)))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


# -- dirac sea --------------------------------------------------------------------

def sea_config_from_obj(obj, where: str = "sea") -> DiracSeaConfig:
    try:
        lat = obj["lattice"]
        spec = DiracSeaConfig(
            mass=float(obj["mass"]),
            box_length=float(obj["box_length"]),
            cutoff_K=int(obj["cutoff_K"]),
            epsilon=float(obj["epsilon"]),
            lattice=LatticeSpec(
                nt=int(lat["nt"]), nx=int(lat["nx"]),
                t0=float(lat["t0"]), t1=float(lat["t1"]),
            ),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    return spec


# -- trace dynamics ----------------------------------------------------------------

def tracedyn_from_obj(obj, where: str = "tracedyn"):
    try:
        kind = obj["kind"]
        params = obj.get("params", {})
        spec = TraceLagrangianSpec(
            kind=kind,
            alpha=float(params.get("alpha", 0.0)),
            L_scale=float(params.get("L_scale", 1.0)),
            gamma=float(params.get("gamma", 0.0)),
            k=float(params.get("k", 0.0)),
            lp=float(params.get("lp", 1.0)),
            tau_p=float(params.get("tau_p", 1.0)),
            kinetic_regulator=float(params.get("kinetic_regulator", 0.0)),
        )
        pairs = obj["initial"]["pairs"]
        if len(pairs) != 2:
            raise ConfigError(f"{where}: exactly two degrees of freedom expected")
        names, qs, vs = [], [], []
        for i, pair in enumerate(pairs):
            names.append(str(pair.get("name", f"q{i + 1}")))
            qs.append(matrix_from_obj(pair["q"], where=f"{where}.pairs[{i}].q"))
            vs.append(matrix_from_obj(pair["qdot"], where=f"{where}.pairs[{i}].qdot"))
        state = state_from_velocities(spec, qs[0], qs[1], vs[0], vs[1],
                                      names=(names[0], names[1]))
        dt = float(obj["dt"])
        steps = int(obj["steps"])
        method = obj.get("method", "rk4")
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    return spec, state, dt, steps, method


# -- minimizer ----------------------------------------------------------------------

def problem_from_obj(obj, where: str = "minimize", default_seed: int = 0):
    try:
        sched_obj = obj.get("schedule", {})
        schedule = Schedule(**sched_obj) if sched_obj else Schedule()
        problem = MinimizeProblem(
            ambient_dim=int(obj["ambient_dim"]),
            spin_dim=int(obj["spin_dim"]),
            num_points=int(obj["num_points"]),
            target_volume=float(obj["target_volume"]),
            target_trace=float(obj.get("target_trace", 0.0)),
            boundedness_cap=(None if obj.get("boundedness_cap") is None
                             else float(obj["boundedness_cap"])),
            seed=int(obj.get("seed", default_seed)),
            schedule=schedule,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    driver = obj.get("driver", "both")
    return problem, driver


# -- headers, hashing, CSV ------------------------------------------------------------

def config_hash(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def result_header(command: str, cfg_hash: str, seed: int, backend: str) -> dict:
    return {
        "command": command,
        "config_sha256": cfg_hash,
        "seed": seed,
        "version": TOOL_VERSION,
        "backend": backend,
    }


def write_csv(path: Path, header: dict, columns: list[str], rows) -> None:
    lines = [f"# {k}={v}" for k, v in header.items()]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (np.floating,)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def load_config(path: str):
    """Parse a JSON config file; malformed input raises ConfigError with
    line/column diagnostics."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"malformed JSON in {path}: line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
