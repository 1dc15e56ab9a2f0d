"""Configuration files, data and profile CSVs, run summaries and manifests.

Problem configs are YAML with sections ``pile``, ``soil``, ``tunnel`` and a
``bc`` key, plus optional ``solver`` and ``fdm`` sections.  Moduli accept
unit suffixes (``"30 GPa"``, ``"24 MPa"``, ``"2.4e7 Pa"``); bare numbers are
read as SI.  ``epsilon`` accepts a fraction or a percentage string.
"""

from __future__ import annotations

import csv
import datetime as dt
import hashlib
import importlib.resources
import os
import platform
import re
from dataclasses import asdict, dataclass, field

import numpy as np
import yaml

from .elm import RNG_ALGORITHM, ElmConfig
from .fdm import FdmConfig
from .physics import BoundaryCondition, PileProperties, PileSoilProblem, SoilProperties, TunnelGeometry
from .solver import MonitoredDataset, SolverConfig

DATA_HEADER = ("depth_m", "deflection_m")
PROFILE_HEADER = ("z_m", "w_m", "theta_rad", "M_Nm", "Q_N")

_PRESSURE_UNITS = {"pa": 1.0, "kpa": 1e3, "mpa": 1e6, "gpa": 1e9}
_LENGTH_UNITS = {"m": 1.0, "mm": 1e-3, "cm": 1e-2}
_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([A-Za-z%]*)\s*$")


class ConfigError(ValueError):
    """Malformed or out-of-range input; ``field`` names the offending entry."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


def _number(value, name: str, units: dict | None = None, percent: bool = False) -> float:
    if isinstance(value, bool):
        raise ConfigError(name, f"expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if not isinstance(value, str):
        raise ConfigError(name, f"expected a number, got {value!r}")
    m = _QUANTITY.match(value)
    if not m:
        raise ConfigError(name, f"cannot parse {value!r} as a number")
    number, unit = float(m.group(1)), m.group(2)
    if not unit:
        return number
    if percent and unit == "%":
        return number / 100.0
    scale = (units or {}).get(unit.lower())
    if scale is None:
        allowed = ", ".join(sorted(units or {})) or "none"
        raise ConfigError(name, f"unknown unit {unit!r} (allowed: {allowed})")
    return number * scale


def _section(raw: dict, name: str, required: tuple, optional: tuple = ()) -> dict:
    sec = raw.get(name)
    if not isinstance(sec, dict):
        raise ConfigError(name, "missing or not a mapping")
    unknown = set(sec) - set(required) - set(optional)
    if unknown:
        raise ConfigError(f"{name}.{sorted(unknown)[0]}", "unknown key")
    for key in required:
        if key not in sec:
            raise ConfigError(f"{name}.{key}", "missing")
    return sec


@dataclass(frozen=True)
class RunSetup:
    """Everything needed to reproduce a solve: physics and numerical settings."""

    problem: PileSoilProblem
    solver: SolverConfig = field(default_factory=SolverConfig)
    fdm: FdmConfig = field(default_factory=FdmConfig)
    data: MonitoredDataset = field(default_factory=MonitoredDataset)


def problem_from_dict(raw: dict) -> PileSoilProblem:
    if not isinstance(raw, dict):
        raise ConfigError("config", "top level must be a mapping")
    pile = _section(raw, "pile", ("E", "D", "L"))
    soil = _section(raw, "soil", ("Es", "nu_s"), ("t",))
    tunnel = _section(raw, "tunnel", ("H", "R", "x0", "epsilon"))
    p = {k: _number(pile[k], f"pile.{k}", _PRESSURE_UNITS if k == "E" else _LENGTH_UNITS) for k in pile}
    s = {"Es": _number(soil["Es"], "soil.Es", _PRESSURE_UNITS), "nu_s": _number(soil["nu_s"], "soil.nu_s")}
    if soil.get("t") is not None:
        s["t"] = _number(soil["t"], "soil.t", _LENGTH_UNITS)
    t = {k: _number(tunnel[k], f"tunnel.{k}", _LENGTH_UNITS) for k in ("H", "R", "x0")}
    t["epsilon"] = _number(tunnel["epsilon"], "tunnel.epsilon", percent=True)
    try:
        bc = BoundaryCondition.parse(raw.get("bc", "free_free"))
    except ValueError as exc:
        raise ConfigError("bc", str(exc)) from None
    parts = []
    for name, cls, kw in (("pile", PileProperties, p), ("soil", SoilProperties, s), ("tunnel", TunnelGeometry, t)):
        try:
            parts.append(cls(**kw))
        except ValueError as exc:
            raise ConfigError(name, str(exc)) from None
    return PileSoilProblem(*parts, bc=bc)


_SOLVER_KEYS = ("Mc", "Nc", "seed", "rcond", "weight_range", "bias_range", "activation", "residual_weights", "scale_equilibrium")


def solver_from_dict(raw: dict | None) -> SolverConfig:
    raw = raw or {}
    if not isinstance(raw, dict):
        raise ConfigError("solver", "not a mapping")
    unknown = set(raw) - set(_SOLVER_KEYS)
    if unknown:
        raise ConfigError(f"solver.{sorted(unknown)[0]}", "unknown key")
    elm_kw, kw = {}, {}
    for key in ("Mc", "seed"):
        if key in raw:
            elm_kw[key] = _integer(raw[key], f"solver.{key}")
    for key in ("weight_range", "bias_range"):
        if key in raw:
            elm_kw[key] = _number(raw[key], f"solver.{key}")
    if "activation" in raw:
        elm_kw["activation"] = str(raw["activation"])
    if "Nc" in raw:
        kw["Nc"] = _integer(raw["Nc"], "solver.Nc")
    if "rcond" in raw:
        kw["rcond"] = _number(raw["rcond"], "solver.rcond")
    if "residual_weights" in raw:
        w = raw["residual_weights"]
        if not isinstance(w, (list, tuple)):
            raise ConfigError("solver.residual_weights", "expected a list of five numbers")
        kw["residual_weights"] = tuple(_number(v, "solver.residual_weights") for v in w)
    if "scale_equilibrium" in raw:
        if not isinstance(raw["scale_equilibrium"], bool):
            raise ConfigError("solver.scale_equilibrium", "expected true or false")
        kw["scale_equilibrium"] = raw["scale_equilibrium"]
    try:
        return SolverConfig(elm=ElmConfig(**elm_kw), **kw)
    except ValueError as exc:
        raise ConfigError("solver", str(exc)) from None


def _integer(value, name: str) -> int:
    number = _number(value, name)
    if number != int(number):
        raise ConfigError(name, f"expected an integer, got {value!r}")
    return int(number)


def fdm_from_dict(raw: dict | None) -> FdmConfig:
    raw = raw or {}
    if not isinstance(raw, dict) or set(raw) - {"Nf"}:
        raise ConfigError("fdm", "expected a mapping with the single key Nf")
    try:
        return FdmConfig(_integer(raw["Nf"], "fdm.Nf")) if "Nf" in raw else FdmConfig()
    except ValueError as exc:
        raise ConfigError("fdm.Nf", str(exc)) from None


def setup_from_dict(raw: dict) -> RunSetup:
    """Parse a problem config; a run manifest is accepted too (its snapshot is used)."""
    if isinstance(raw, dict) and "snapshot" in raw:
        raw = raw["snapshot"]
    if not isinstance(raw, dict):
        raise ConfigError("config", "top level must be a mapping")
    allowed = {"pile", "soil", "tunnel", "bc", "solver", "fdm", "name", "notes", "data"}
    unknown = set(raw) - allowed
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown top-level key")
    return RunSetup(
        problem_from_dict(raw),
        solver_from_dict(raw.get("solver")),
        fdm_from_dict(raw.get("fdm")),
        data_from_dict(raw.get("data")),
    )


def data_from_dict(raw) -> MonitoredDataset:
    """Inline observations ``{depth_m: [...], deflection_m: [...]}``."""
    if raw is None:
        return MonitoredDataset()
    if not isinstance(raw, dict) or set(raw) != set(DATA_HEADER):
        raise ConfigError("data", f"expected a mapping with keys {', '.join(DATA_HEADER)}")
    try:
        z = [_number(v, "data.depth_m") for v in raw["depth_m"]]
        w = [_number(v, "data.deflection_m") for v in raw["deflection_m"]]
        return MonitoredDataset(np.array(z), np.array(w))
    except TypeError:
        raise ConfigError("data", "depth_m and deflection_m must be lists") from None
    except ValueError as exc:
        raise ConfigError("data", str(exc)) from None


def bundled_path(name: str) -> str:
    """Path of a bundled config, e.g. ``table1`` or ``table2.study``."""
    root = importlib.resources.files("pielm_pile") / "configs"
    for candidate in (name, f"{name}.yaml"):
        path = root / candidate
        if path.is_file():
            return str(path)
    raise FileNotFoundError(name)


def bundled_names() -> list:
    root = importlib.resources.files("pielm_pile") / "configs"
    return sorted(p.name for p in root.iterdir() if p.is_file())


def resolve_config_path(path: str) -> str:
    if os.path.exists(path):
        return path
    try:
        return bundled_path(path)
    except FileNotFoundError:
        raise ConfigError("--config", f"no such file or bundled config: {path}") from None


def read_yaml(path: str) -> dict:
    try:
        with open(resolve_config_path(path)) as fh:
            raw = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ConfigError("config", f"YAML parse error in {path}: {exc}") from None
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config", f"{path} does not contain a mapping")
    return raw


def load_setup(path: str) -> RunSetup:
    return setup_from_dict(read_yaml(path))


def problem_to_dict(problem: PileSoilProblem) -> dict:
    return {
        "pile": {"E": problem.pile.E, "D": problem.pile.D, "L": problem.pile.L},
        "soil": {"Es": problem.soil.Es, "nu_s": problem.soil.nu_s, "t": problem.soil.t},
        "tunnel": asdict(problem.tunnel),
        "bc": problem.bc.value,
    }


def solver_to_dict(cfg: SolverConfig) -> dict:
    return {
        "Mc": cfg.elm.Mc,
        "Nc": cfg.Nc,
        "seed": cfg.elm.seed,
        "rcond": cfg.rcond,
        "weight_range": cfg.elm.weight_range,
        "bias_range": cfg.elm.bias_range,
        "activation": cfg.elm.activation,
        "residual_weights": list(cfg.residual_weights),
        "scale_equilibrium": cfg.scale_equilibrium,
    }


def setup_to_dict(setup: RunSetup) -> dict:
    out = {**problem_to_dict(setup.problem), "solver": solver_to_dict(setup.solver), "fdm": {"Nf": setup.fdm.Nf}}
    if len(setup.data):
        out["data"] = {"depth_m": setup.data.z.tolist(), "deflection_m": setup.data.w.tolist()}
    return out


def load_study(path: str):
    """Study definition: ``kind``, ``values``, ``problem`` (bundled name or
    inline mapping), optional ``solver``, ``Nf`` and ``repeats``."""
    from .experiments import STUDY_KINDS, StudyConfig

    raw = read_yaml(path)
    if "snapshot" in raw:
        raw = raw["snapshot"]
    unknown = set(raw) - {"kind", "values", "problem", "solver", "Nf", "repeats", "name", "notes"}
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown study key")
    kind = raw.get("kind")
    if kind not in STUDY_KINDS:
        raise ConfigError("kind", f"unknown sweep kind {kind!r}; expected one of {', '.join(STUDY_KINDS)}")
    values = raw.get("values")
    if not isinstance(values, list) or not values:
        raise ConfigError("values", "expected a non-empty list")
    if kind == "validation":
        try:
            values = [(v["bc"], _number(v["epsilon"], "values.epsilon", percent=True)) for v in values]
        except (TypeError, KeyError):
            raise ConfigError("values", "validation entries need bc and epsilon") from None
    elif kind in ("data_locations", "data_counts"):
        values = [v if isinstance(v, str) else _series_entry(v) for v in values]
    problem_raw = raw.get("problem", "table1")
    problem = load_setup(problem_raw).problem if isinstance(problem_raw, str) else problem_from_dict(problem_raw)
    try:
        return StudyConfig(
            kind=kind,
            values=tuple(values),
            problem=problem,
            solver=solver_from_dict(raw.get("solver")),
            Nf=_integer(raw.get("Nf", 2000), "Nf"),
            repeats=_integer(raw.get("repeats", 1), "repeats"),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("values", str(exc)) from None


def _series_entry(entry):
    from .experiments import DataSeries

    if not isinstance(entry, dict) or "name" not in entry or "depths" not in entry:
        raise ConfigError("values", "custom series need name and depths")
    depths = tuple(_number(z, "values.depths", _LENGTH_UNITS) for z in entry["depths"])
    Nc = _integer(entry["Nc"], "values.Nc") if entry.get("Nc") is not None else None
    return str(entry["name"]), DataSeries(depths, Nc)


# ---------------------------------------------------------------- CSV


def read_data_csv(path: str) -> MonitoredDataset:
    """Observations with header ``depth_m,deflection_m``."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ConfigError("--data", f"cannot read {path}: {exc}") from None
    if not rows or tuple(c.strip() for c in rows[0]) != DATA_HEADER:
        got = ",".join(rows[0]) if rows else "<empty file>"
        raise ConfigError("--data", f"header must be '{','.join(DATA_HEADER)}', got '{got}'")
    z, w = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 2:
            raise ConfigError("--data", f"line {lineno}: expected 2 columns, got {len(row)}")
        try:
            z.append(float(row[0]))
            w.append(float(row[1]))
        except ValueError:
            raise ConfigError("--data", f"line {lineno}: non-numeric value") from None
    try:
        return MonitoredDataset(np.array(z), np.array(w))
    except ValueError as exc:
        raise ConfigError("--data", str(exc)) from None


def write_data_csv(path: str, data: MonitoredDataset) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(DATA_HEADER)
        for z, w in zip(data.z, data.w):
            out.writerow([_fmt(z), _fmt(w)])


def _fmt(x: float) -> str:
    # 17 significant digits always identify a double uniquely
    return f"{float(x):.16e}"


def write_profile_csv(path: str, z, w, theta, M, Q) -> None:
    cols = [np.asarray(c, dtype=float) for c in (z, w, theta, M, Q)]
    with open(path, "w", newline="") as fh:
        fh.write(",".join(PROFILE_HEADER) + "\n")
        for row in zip(*cols):
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def read_profile_csv(path: str) -> dict:
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ConfigError("profile", f"cannot read {path}: {exc}") from None
    if not rows or tuple(c.strip() for c in rows[0]) != PROFILE_HEADER:
        raise ConfigError("profile", f"{path}: header must be '{','.join(PROFILE_HEADER)}'")
    try:
        table = np.array([[float(c) for c in row] for row in rows[1:] if row], dtype=float).reshape(-1, 5)
    except ValueError:
        raise ConfigError("profile", f"{path}: malformed numeric row") from None
    return {name: table[:, j] for j, name in enumerate(PROFILE_HEADER)}


# ---------------------------------------------------------- summaries


def write_yaml(path: str, payload: dict) -> None:
    with open(path, "w") as fh:
        yaml.safe_dump(payload, fh, sort_keys=False)


def file_digest(path: str) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def build_manifest(command: str, snapshot: dict, outputs: dict, started: dt.datetime, seed=None) -> dict:
    from . import __version__

    return {
        "command": command,
        "version": __version__,
        "seed": seed,
        "rng": RNG_ALGORITHM,
        "started": started.isoformat(),
        "finished": dt.datetime.now(dt.timezone.utc).isoformat(),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "snapshot": snapshot,
        "outputs": {k: {"path": os.path.basename(v), "sha256": file_digest(v)} for k, v in outputs.items()},
    }
