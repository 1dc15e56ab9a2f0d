"""Accuracy metric and the validation / parametric studies.

Every study compares PIELM fields with the finite-difference reference on
the reference grid itself (all ``Nf + 1`` nodes), so no interpolation enters
the error.
"""

from __future__ import annotations

import csv
import functools
import logging
import os
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .fdm import FdmConfig, FdmSolution, sample_pseudo_observations, solve_fdm
from .physics import BoundaryCondition, PileProperties, PileSoilProblem, SoilProperties, TunnelGeometry
from .solver import EMPTY_DATA, MonitoredDataset, SolverConfig, solve

log = logging.getLogger(__name__)

STUDY_KINDS = ("validation", "neurons", "collocation", "repeatability", "data_locations", "data_counts")


class UndefinedReferenceError(ValueError):
    """The reference field is identically zero, so a relative error is undefined."""


def relative_l2(reference, candidate) -> float:
    """``||ref - cand|| / ||ref||`` over sampled fields.

    Raises
    ------
    UndefinedReferenceError
        If ``reference`` is identically zero.
    """
    ref = np.asarray(reference, dtype=float).ravel()
    cand = np.asarray(candidate, dtype=float).ravel()
    if ref.size == 0 or ref.shape != cand.shape:
        raise ValueError(f"fields need equal non-zero lengths ({ref.size} vs {cand.size})")
    denom = np.linalg.norm(ref)
    if denom == 0.0:
        raise UndefinedReferenceError("reference field is identically zero")
    return float(np.linalg.norm(ref - cand) / denom)


def table1_problem(bc="free_free", epsilon: float = 0.01) -> PileSoilProblem:
    """Reference scenario: 25 m pile beside a 20 m deep tunnel.

    The pile modulus is 30 GPa and the soil modulus 24 MPa; the opposite
    assignment (a 24 MPa pile in 30 GPa ground) would not be physical.
    """
    return PileSoilProblem(
        pile=PileProperties(E=30e9, D=0.5, L=25.0),
        soil=SoilProperties(Es=24e6, nu_s=0.5),
        tunnel=TunnelGeometry(H=20.0, R=3.0, x0=4.5, epsilon=epsilon),
        bc=bc,
    )


@dataclass(frozen=True)
class DataSeries:
    """Monitored depths of one data study; ``Nc`` overrides the study grid."""

    depths: tuple = ()
    Nc: int | None = None


SERIES = {
    "S1": DataSeries((0.0, 1.0, 2.0, 3.0, 4.0)),
    "S2": DataSeries((5.0, 6.5, 8.0, 9.5, 11.0)),
    "S3": DataSeries((11.0, 12.5, 14.0, 15.5, 17.0)),
    "S4": DataSeries((17.0, 18.5, 20.0, 21.5, 23.0)),
    "S5": DataSeries((0.0, 17.0, 20.0, 23.0, 25.0)),
    "S6": DataSeries((0.0, 6.25, 12.5, 18.75, 25.0)),
    # control: no data, the five data rows traded for collocation rows
    "S7": DataSeries((), Nc=25),
    "S8": DataSeries(()),
    "S9": DataSeries((17.0, 23.0)),
    "S10": DataSeries((17.0, 20.0, 23.0)),
    "S11": DataSeries((17.0, 18.5, 21.5, 23.0)),
    "S12": DataSeries((17.0, 18.5, 20.0, 21.5, 23.0)),
    "S13": DataSeries((17.0, 17.5, 18.0, 18.5, 19.0, 20.0, 21.0, 21.5, 22.0, 23.0)),
}


@dataclass(frozen=True)
class StudyConfig:
    """One sweep.

    ``values`` depends on ``kind``:

    * ``validation``: ``(bc, epsilon)`` pairs;
    * ``neurons`` / ``collocation``: Mc / Nc values, the other taken from
      ``solver``;
    * ``repeatability``: seeds;
    * ``data_locations`` / ``data_counts``: series names from :data:`SERIES`
      or ``(name, DataSeries)`` pairs.

    ``repeats > 1`` reruns each point with seeds ``seed, seed + 1, ...``.
    """

    kind: str
    values: tuple
    problem: PileSoilProblem = field(default_factory=table1_problem)
    solver: SolverConfig = field(default_factory=SolverConfig)
    Nf: int = 2000
    repeats: int = 1

    def __post_init__(self):
        if self.kind not in STUDY_KINDS:
            raise ValueError(f"unknown sweep kind {self.kind!r}; expected one of {', '.join(STUDY_KINDS)}")
        values = tuple(self.values)
        if not values:
            raise ValueError("sweep values must be non-empty")
        if self.kind in ("data_locations", "data_counts"):
            values = tuple(_resolve_series(v) for v in values)
            for name, series in values:
                MonitoredDataset(series.depths, np.zeros(len(series.depths))).check_within(self.problem.L)
        elif self.kind == "validation":
            values = tuple((BoundaryCondition.parse(bc), float(eps)) for bc, eps in values)
        else:
            values = tuple(int(v) for v in values)
        object.__setattr__(self, "values", values)
        FdmConfig(self.Nf)
        if int(self.repeats) != self.repeats or self.repeats < 1:
            raise ValueError(f"repeats must be a positive integer, got {self.repeats}")


def _resolve_series(value):
    if isinstance(value, str):
        if value not in SERIES:
            raise ValueError(f"unknown data series {value!r}; known: {', '.join(SERIES)}")
        return value, SERIES[value]
    name, series = value
    if not isinstance(series, DataSeries):
        series = DataSeries(tuple(float(z) for z in series))
    return str(name), series


@dataclass(frozen=True)
class RunRecord:
    label: str
    settings: dict
    l2_w: float
    l2_M: float
    l2_Q: float
    training_time: float
    residual_norm: float
    seed: int
    rank: int = -1


@dataclass(frozen=True, eq=False)
class ErrorProfile:
    """Absolute errors on the reference grid for one data-study run."""

    label: str
    z: np.ndarray
    err_w: np.ndarray
    err_M: np.ndarray
    monitored_depths: np.ndarray
    monitored_err_w: np.ndarray

    def unmonitored_max_w(self) -> float:
        mask = np.ones(self.z.size, bool)
        for zm in self.monitored_depths:
            mask &= ~np.isclose(self.z, zm, rtol=0.0, atol=1e-9)
        return float(np.max(self.err_w[mask]))


@dataclass
class StudyReport:
    kind: str
    records: list = field(default_factory=list)
    profiles: list = field(default_factory=list)

    def record(self, label: str) -> RunRecord:
        for rec in self.records:
            if rec.label == label:
                return rec
        raise KeyError(label)

    def l2_w(self) -> np.ndarray:
        return np.array([r.l2_w for r in self.records])

    def write_csv(self, path) -> None:
        setting_keys = sorted({k for r in self.records for k in r.settings})
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh, lineterminator="\n")
            out.writerow(["label", *setting_keys, "seed", "l2_w", "l2_M", "l2_Q", "training_s", "residual_norm", "rank"])
            for r in self.records:
                out.writerow(
                    [r.label, *(r.settings.get(k, "") for k in setting_keys), r.seed]
                    + [f"{v:.17g}" for v in (r.l2_w, r.l2_M, r.l2_Q, r.training_time, r.residual_norm)]
                    + [r.rank]
                )

    def write_profiles(self, directory) -> list:
        os.makedirs(directory, exist_ok=True)
        paths = []
        for p in self.profiles:
            path = os.path.join(directory, f"errors_{p.label}.csv")
            monitored = np.zeros(p.z.size, dtype=int)
            for zm in p.monitored_depths:
                monitored[np.isclose(p.z, zm, rtol=0.0, atol=1e-9)] = 1
            with open(path, "w", newline="") as fh:
                out = csv.writer(fh, lineterminator="\n")
                out.writerow(["z_m", "abs_err_w_m", "abs_err_M_Nm", "monitored"])
                for row in zip(p.z, p.err_w, p.err_M, monitored):
                    out.writerow([f"{row[0]:.17g}", f"{row[1]:.17g}", f"{row[2]:.17g}", int(row[3])])
            paths.append(path)
        return paths


@functools.lru_cache(maxsize=32)
def reference_solution(problem: PileSoilProblem, Nf: int = 2000) -> FdmSolution:
    """Cached finite-difference benchmark for ``problem``."""
    return solve_fdm(problem, FdmConfig(Nf))


def _run_one(problem, solver_cfg, Nf, label, settings, data=EMPTY_DATA):
    ref = reference_solution(problem, Nf)
    sol = solve(problem, solver_cfg, data)
    prof = sol(ref.z)
    rec = RunRecord(
        label=label,
        settings=settings,
        l2_w=relative_l2(ref.w, prof.w),
        l2_M=relative_l2(ref.M, prof.M),
        l2_Q=relative_l2(ref.Q, prof.Q),
        training_time=sol.training_time,
        residual_norm=sol.residual_norm,
        seed=solver_cfg.elm.seed,
        rank=sol.rank,
    )
    log.info("%s: L2 w=%.3e M=%.3e Q=%.3e (%.3f s)", label, rec.l2_w, rec.l2_M, rec.l2_Q, rec.training_time)
    return rec, sol, prof, ref


def _with(solver_cfg: SolverConfig, Mc=None, Nc=None, seed=None) -> SolverConfig:
    elm = solver_cfg.elm
    if Mc is not None:
        elm = replace(elm, Mc=int(Mc))
    if seed is not None:
        elm = replace(elm, seed=int(seed))
    return replace(solver_cfg, elm=elm, Nc=int(Nc) if Nc is not None else solver_cfg.Nc)


def _seeds(config: StudyConfig):
    base = config.solver.elm.seed
    return [base + r for r in range(config.repeats)]


def _suffix(config, r):
    return f"_r{r}" if config.repeats > 1 else ""


def run_validation(
    problem: PileSoilProblem | None = None,
    solver: SolverConfig | None = None,
    Nf: int = 2000,
    cases: Sequence | None = None,
) -> StudyReport:
    """Every boundary case at 1, 2 and 3 % volume loss (or the given cases)."""
    if cases is None:
        cases = [(bc, eps) for bc in BoundaryCondition for eps in (0.01, 0.02, 0.03)]
    config = StudyConfig(
        kind="validation",
        values=tuple(cases),
        problem=problem or table1_problem(),
        solver=solver or SolverConfig(),
        Nf=Nf,
    )
    return run_study(config)


def _validation(config: StudyConfig) -> StudyReport:
    report = StudyReport(config.kind)
    for bc, eps in config.values:
        problem = config.problem.with_bc(bc).with_tunnel(epsilon=eps)
        for r, seed in enumerate(_seeds(config)):
            label = f"{bc.value}_eps{eps:g}{_suffix(config, r)}"
            settings = {"bc": bc.value, "epsilon": eps, "Mc": config.solver.elm.Mc, "Nc": config.solver.Nc}
            rec, *_ = _run_one(problem, _with(config.solver, seed=seed), config.Nf, label, settings)
            report.records.append(rec)
    return report


def run_architecture_sweep(config: StudyConfig) -> StudyReport:
    """Mc sweep (``kind='neurons'``) or Nc sweep (``kind='collocation'``)."""
    if config.kind not in ("neurons", "collocation"):
        raise ValueError(f"architecture sweep needs kind neurons or collocation, got {config.kind!r}")
    report = StudyReport(config.kind)
    for value in config.values:
        for r, seed in enumerate(_seeds(config)):
            if config.kind == "neurons":
                cfg = _with(config.solver, Mc=value, seed=seed)
                label = f"Mc{value}"
            else:
                cfg = _with(config.solver, Nc=value, seed=seed)
                label = f"Nc{value}"
            settings = {"Mc": cfg.elm.Mc, "Nc": cfg.Nc}
            rec, *_ = _run_one(config.problem, cfg, config.Nf, label + _suffix(config, r), settings)
            report.records.append(rec)
    return report


def run_data_study(config: StudyConfig) -> StudyReport:
    """Pseudo-observations from the reference at each series' depths."""
    if config.kind not in ("data_locations", "data_counts"):
        raise ValueError(f"data study needs kind data_locations or data_counts, got {config.kind!r}")
    report = StudyReport(config.kind)
    ref = reference_solution(config.problem, config.Nf)
    for name, series in config.values:
        data = sample_pseudo_observations(ref, series.depths) if series.depths else EMPTY_DATA
        for r, seed in enumerate(_seeds(config)):
            cfg = _with(config.solver, Nc=series.Nc, seed=seed)
            label = name + _suffix(config, r)
            settings = {
                "Mc": cfg.elm.Mc,
                "Nc": cfg.Nc,
                "N_data": len(data),
                "depths_m": " ".join(f"{z:g}" for z in series.depths),
            }
            rec, sol, prof, _ = _run_one(config.problem, cfg, config.Nf, label, settings, data)
            report.records.append(rec)
            monitored_err = np.abs(sol(data.z).w - data.w) if len(data) else np.empty(0)
            report.profiles.append(
                ErrorProfile(
                    label=label,
                    z=ref.z,
                    err_w=np.abs(prof.w - ref.w),
                    err_M=np.abs(prof.M - ref.M),
                    monitored_depths=np.array(data.z),
                    monitored_err_w=monitored_err,
                )
            )
    return report


def run_repeatability(config: StudyConfig, repeats: int = 5) -> StudyReport:
    """One run per seed in ``config.values``; falls back to ``repeats``
    consecutive seeds when the values are not seeds."""
    seeds = list(config.values) if config.kind == "repeatability" else [config.solver.elm.seed + r for r in range(repeats)]
    if len(set(seeds)) != len(seeds):
        log.warning("repeatability study has duplicate seeds: %s", seeds)
    report = StudyReport("repeatability")
    for seed in seeds:
        cfg = _with(config.solver, seed=seed)
        settings = {"Mc": cfg.elm.Mc, "Nc": cfg.Nc}
        rec, *_ = _run_one(config.problem, cfg, config.Nf, f"seed{seed}", settings)
        report.records.append(rec)
    return report


def run_study(config: StudyConfig) -> StudyReport:
    if config.kind == "validation":
        return _validation(config)
    if config.kind in ("neurons", "collocation"):
        return run_architecture_sweep(config)
    if config.kind == "repeatability":
        return run_repeatability(config)
    return run_data_study(config)
