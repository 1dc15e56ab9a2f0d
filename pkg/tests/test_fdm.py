import numpy as np
import pytest
import scipy.sparse.linalg
import sympy as sp

from pielm_pile.experiments import table1_problem
from pielm_pile.fdm import FdmConfig, FdmError, assemble_fdm, sample_pseudo_observations, solve_fdm
from pielm_pile.physics import DomainError, shear_layer_modulus, subgrade_modulus

GRIDS = (250, 500, 1000, 2000)


def manufactured(problem):
    """Exact solution meeting the problem's end conditions, and its load."""
    L = problem.L
    z = sp.symbols("z")
    bc = problem.bc.value
    if bc == "fixed_fixed":
        w = (z * (L - z)) ** 2 / (L**4 / 16)
    elif bc == "free_free":
        w = 1 + (z * (L - z) / (L**2 / 4)) ** 4
    else:
        # free top (w'' = w''' = 0), fixed tip (w = w' = 0)
        a = sp.symbols("a0:7")
        w = sum(a[i] * z**i for i in range(7))
        conds = [
            w.diff(z, 2).subs(z, 0),
            w.diff(z, 3).subs(z, 0),
            w.subs(z, L),
            w.diff(z).subs(z, L),
            a[0] - 1,
            a[1] + sp.Rational(1, 10),
            a[6] - sp.Float(L) ** -6,
        ]
        w = w.subs(sp.solve(conds, a))
    fw, f2, f4 = (sp.lambdify(z, w.diff(z, n), "numpy") for n in (0, 2, 4))
    EI, D, G = problem.EI, problem.D, shear_layer_modulus(problem)

    def exact(x):
        return fw(x) + 0 * x

    def load(x):
        return (EI * f4(x) - G * D * f2(x)) / D + subgrade_modulus(problem, x) * exact(x)

    return exact, load


def convergence_order(problem):
    exact, load = manufactured(problem)
    errors = []
    for Nf in GRIDS:
        sol = solve_fdm(problem, FdmConfig(Nf), load=load)
        ref = exact(sol.z)
        errors.append(np.max(np.abs(sol.w - ref)) / np.max(np.abs(ref)))
    slope = -np.polyfit(np.log(GRIDS), np.log(errors), 1)[0]
    return slope, errors


def test_manufactured_solution_is_second_order(any_bc_problem):
    slope, errors = convergence_order(any_bc_problem)
    assert 1.8 <= slope <= 2.2, errors
    assert errors[0] < 1e-4


def test_banded_solve_matches_sparse_direct(any_bc_problem):
    cfg = FdmConfig(400)
    K, f = assemble_fdm(any_bc_problem, cfg)
    # fixed ends are identity rows; solve for the remaining nodes only
    keep = np.array([K[i, i] != 1.0 or K[i].nnz > 1 for i in range(K.shape[0])])
    dense = np.zeros(K.shape[0])
    dense[keep] = scipy.sparse.linalg.spsolve(K[keep][:, keep].tocsc(), f[keep])
    banded = solve_fdm(any_bc_problem, cfg).w
    np.testing.assert_allclose(banded, dense, rtol=1e-7, atol=1e-9 * np.max(np.abs(dense)))


def test_matrix_is_pentadiagonal(any_bc_problem):
    K, _ = assemble_fdm(any_bc_problem, FdmConfig(50))
    rows, cols = K.nonzero()
    assert np.max(np.abs(rows - cols)) == 2


def test_fixed_ends_are_exact():
    sol = solve_fdm(table1_problem("fixed_fixed"), FdmConfig(2000))
    assert sol.w[0] == 0.0 and sol.w[-1] == 0.0
    assert sol.theta[0] == 0.0 and sol.theta[-1] == 0.0
    tip = solve_fdm(table1_problem("free_top_fixed_tip"), FdmConfig(500))
    assert tip.w[-1] == 0.0 and tip.theta[-1] == 0.0 and tip.w[0] != 0.0


def test_free_ends_carry_no_moment_or_shear():
    sol = solve_fdm(table1_problem("free_free"), FdmConfig(1000))
    for field in (sol.M, sol.Q):
        scale = np.max(np.abs(field))
        assert abs(field[0]) <= 1e-8 * scale and abs(field[-1]) <= 1e-8 * scale


def test_reference_solution_shape(problem):
    sol = solve_fdm(problem, FdmConfig(2000))
    assert sol.z.size == 2001 and sol.l == pytest.approx(25 / 2000)
    # pile moves towards the tunnel (negative x), most strongly near the axis depth
    assert np.all(sol.w < 0)
    assert 15.0 < sol.z[np.argmin(sol.w)] < 25.0


def test_linear_in_volume_loss(problem):
    a = solve_fdm(problem, FdmConfig(300))
    b = solve_fdm(problem.with_tunnel(epsilon=0.03), FdmConfig(300))
    np.testing.assert_allclose(b.w, 3 * a.w, rtol=1e-9)


def test_zero_load_zero_solution(problem):
    sol = solve_fdm(problem.with_tunnel(epsilon=0.0), FdmConfig(100))
    assert np.all(sol.w == 0.0) and np.all(sol.M == 0.0)


def test_grid_size_validation():
    with pytest.raises(ValueError):
        FdmConfig(7)
    FdmConfig(8)


def test_non_finite_load_raises(problem):
    with pytest.raises(FdmError):
        solve_fdm(problem, FdmConfig(20), load=lambda z: np.full_like(z, np.nan))


def test_pseudo_observations(problem):
    sol = solve_fdm(problem, FdmConfig(200))
    data = sample_pseudo_observations(sol, [0.0, sol.z[37], 25.0])
    np.testing.assert_array_equal(data.w, [sol.w[0], sol.w[37], sol.w[-1]])
    with pytest.raises(DomainError):
        sample_pseudo_observations(sol, [25.5])
