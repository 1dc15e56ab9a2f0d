import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from pielm_pile.elm import ElmConfig
from pielm_pile.experiments import (
    SERIES,
    DataSeries,
    StudyConfig,
    UndefinedReferenceError,
    reference_solution,
    relative_l2,
    run_architecture_sweep,
    run_data_study,
    run_repeatability,
    run_study,
    run_validation,
)
from pielm_pile.solver import SolverConfig

SMALL = SolverConfig(Nc=40, elm=ElmConfig(Mc=20, seed=0))


def test_relative_l2_hand_values():
    assert relative_l2([3.0, 4.0], [0.0, 0.0]) == 1.0
    assert relative_l2([1.0, -2.0, 5.0], [1.0, -2.0, 5.0]) == 0.0
    ref = np.array([0.3, -1.2, 2.5])
    assert relative_l2(ref, 2 * ref) == pytest.approx(1.0, rel=1e-15)
    # sqrt(1^2 + 2^2) / sqrt(2^2 + 4^2) = 0.5
    assert relative_l2([2.0, 4.0], [1.0, 2.0]) == pytest.approx(0.5, rel=1e-15)


def test_relative_l2_errors():
    with pytest.raises(UndefinedReferenceError):
        relative_l2([0.0, 0.0], [1.0, 0.0])
    with pytest.raises(ValueError):
        relative_l2([1.0, 2.0], [1.0])
    with pytest.raises(ValueError):
        relative_l2([], [])


@settings(max_examples=50, deadline=None)
@given(
    ref=hnp.arrays(float, 12, elements=st.floats(-1e3, 1e3)).filter(lambda a: np.linalg.norm(a) > 1e-3),
    delta=hnp.arrays(float, 12, elements=st.floats(-1e3, 1e3)),
)
def test_relative_l2_scales_with_error(ref, delta):
    one = relative_l2(ref, ref + delta)
    two = relative_l2(ref, ref + 2 * delta)
    assert two == pytest.approx(2 * one, rel=1e-9, abs=1e-300)


def test_series_definitions():
    assert SERIES["S5"].depths == (0.0, 17.0, 20.0, 23.0, 25.0)
    assert SERIES["S7"].Nc == 25 and SERIES["S7"].depths == ()
    assert [len(SERIES[f"S{i}"].depths) for i in range(8, 14)] == [0, 2, 3, 4, 5, 10]


def test_study_config_validation(problem):
    with pytest.raises(ValueError, match="unknown sweep kind"):
        StudyConfig("bogus", (1,))
    with pytest.raises(ValueError, match="non-empty"):
        StudyConfig("neurons", ())
    with pytest.raises(ValueError):
        StudyConfig("data_locations", (("far", DataSeries((30.0,))),))
    with pytest.raises(ValueError, match="unknown data series"):
        StudyConfig("data_counts", ("S99",))
    cfg = StudyConfig("data_counts", ("S9", ("mine", [1.0, 2.0])))
    assert cfg.values[1][1].depths == (1.0, 2.0)


def test_validation_report(problem):
    report = run_validation(solver=SMALL, Nf=400, cases=[("free_free", 0.01), ("fixed_fixed", 0.02)])
    assert [r.label for r in report.records] == ["free_free_eps0.01", "fixed_fixed_eps0.02"]
    for r in report.records:
        assert np.isfinite([r.l2_w, r.l2_M, r.l2_Q]).all() and r.training_time > 0


def test_architecture_sweep_records(problem):
    cfg = StudyConfig("neurons", (10, 20), solver=SMALL, Nf=400, repeats=2)
    report = run_architecture_sweep(cfg)
    assert [r.label for r in report.records] == ["Mc10_r0", "Mc10_r1", "Mc20_r0", "Mc20_r1"]
    assert [r.seed for r in report.records] == [0, 1, 0, 1]
    assert report.records[0].settings == {"Mc": 10, "Nc": 40}
    with pytest.raises(ValueError):
        run_architecture_sweep(StudyConfig("repeatability", (0,)))


def test_repeatability_identical_seeds_identical_records():
    cfg = StudyConfig("repeatability", (3, 3), solver=SMALL, Nf=400)
    a, b = run_repeatability(cfg).records
    assert (a.l2_w, a.l2_M, a.l2_Q, a.residual_norm) == (b.l2_w, b.l2_M, b.l2_Q, b.residual_norm)


def test_data_study_profiles(tmp_path):
    cfg = StudyConfig("data_locations", ("S5", "S7"), solver=SolverConfig(Nc=20, elm=ElmConfig(Mc=20)), Nf=400)
    report = run_data_study(cfg)
    s5, s7 = report.records
    assert s5.settings["N_data"] == 5 and s7.settings["Nc"] == 25
    prof = report.profiles[0]
    assert prof.z.size == 401 and prof.monitored_err_w.size == 5
    assert np.max(prof.monitored_err_w) <= prof.unmonitored_max_w()
    paths = report.write_profiles(tmp_path)
    with open(paths[0]) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["z_m", "abs_err_w_m", "abs_err_M_Nm", "monitored"]
    assert sum(int(r[3]) for r in rows[1:]) == 5


def test_report_csv(tmp_path):
    report = run_study(StudyConfig("collocation", (30,), solver=SMALL, Nf=400))
    path = tmp_path / "r.csv"
    report.write_csv(path)
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    assert rows[0]["label"] == "Nc30" and float(rows[0]["l2_w"]) == report.records[0].l2_w


def test_reference_solution_is_cached(problem):
    assert reference_solution(problem, 300) is reference_solution(problem, 300)
