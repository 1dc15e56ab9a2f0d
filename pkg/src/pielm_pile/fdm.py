"""Finite-difference benchmark for the pile deflection equation.

Nodes ``j = 0..Nf`` sit at ``z_j = j l`` with ``l = L / Nf``.  Two virtual nodes
on each side (``j = -2, -1`` above the top and ``Nf+1, Nf+2`` below the tip)
carry the boundary conditions and are eliminated before the solve, which
leaves a pentadiagonal system over the real nodes.

* free end: ``w'' = 0`` and ``w''' = 0`` via central differences, i.e.
  ``w_-1 = 2 w_0 - w_1`` and ``w_-2 = w_2 - 4 w_1 + 4 w_0``;
* fixed end: the end row becomes ``w_0 = 0`` (the node is dropped from the
  solve) and ``w' = 0`` gives ``w_-1 = w_1``.  The outer virtual node is recovered afterwards from the
  equation at the end node so that shear forces stay second-order accurate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg
import scipy.sparse

from .physics import BoundaryCondition, DomainError, PileSoilProblem, external_load, shear_layer_modulus, subgrade_modulus
from .solver import MonitoredDataset

FREE, FIXED = "free", "fixed"

_ENDS = {
    BoundaryCondition.FREE_FREE: (FREE, FREE),
    BoundaryCondition.FIXED_FIXED: (FIXED, FIXED),
    BoundaryCondition.FREE_TOP_FIXED_TIP: (FREE, FIXED),
}


class FdmError(RuntimeError):
    """Assembly or solve of the finite-difference system failed."""


@dataclass(frozen=True)
class FdmConfig:
    Nf: int = 2000

    def __post_init__(self):
        if int(self.Nf) != self.Nf or self.Nf < 8:
            raise ValueError(f"Nf must be an integer >= 8, got {self.Nf}")


@dataclass(frozen=True, eq=False)
class FdmSolution:
    z: np.ndarray
    w: np.ndarray
    theta: np.ndarray
    M: np.ndarray
    Q: np.ndarray
    l: float
    # (w_-2, w_-1) and (w_Nf+1, w_Nf+2)
    virtual_top: tuple = (np.nan, np.nan)
    virtual_tip: tuple = (np.nan, np.nan)


def _stencil(problem: PileSoilProblem, Nf: int):
    """Interior coefficients of rows j, keyed by node offset -2..2."""
    L, D, EI = problem.L, problem.D, problem.EI
    l = L / Nf
    z = np.linspace(0.0, L, Nf + 1)
    a = EI / D / l**4
    g = shear_layer_modulus(problem) / l**2
    k = subgrade_modulus(problem, z)
    return z, l, a, g, k


def assemble_fdm(
    problem: PileSoilProblem,
    config: FdmConfig = FdmConfig(),
    load: Callable | None = None,
):
    """Stiffness matrix ``K`` (sparse, bandwidth 2) and load vector ``f``.

    ``load(z)`` overrides the tunnelling load, which is how manufactured
    solutions are driven through the same assembly.
    """
    Nf = config.Nf
    n = Nf + 1
    z, l, a, g, k = _stencil(problem, Nf)
    top, tip = _ENDS[problem.bc]
    f = np.asarray(load(z) if load is not None else external_load(problem, z), dtype=float).copy()

    rows, cols, vals = [], [], []

    def put(i, j, v):
        rows.append(i)
        cols.append(j)
        vals.append(v)

    # virtual node -> combination of real nodes, per end type
    if top == FREE:
        top_map = {-1: {0: 2.0, 1: -1.0}, -2: {2: 1.0, 1: -4.0, 0: 4.0}}
    else:
        top_map = {-1: {1: 1.0}}
    last = Nf
    if tip == FREE:
        tip_map = {last + 1: {last: 2.0, last - 1: -1.0}, last + 2: {last - 2: 1.0, last - 1: -4.0, last: 4.0}}
    else:
        tip_map = {last + 1: {last - 1: 1.0}}
    virtual = {**top_map, **tip_map}

    coef = {-2: a, -1: -4 * a - g, 0: 6 * a + 2 * g, 1: -4 * a - g, 2: a}
    for j in range(n):
        if (j == 0 and top == FIXED) or (j == last and tip == FIXED):
            put(j, j, 1.0)
            f[j] = 0.0
            continue
        for off, v in coef.items():
            m = j + off
            if off == 0:
                v = v + k[j]
            if 0 <= m <= last:
                put(j, m, v)
            elif m in virtual:
                for real, weight in virtual[m].items():
                    put(j, real, v * weight)
            else:
                raise FdmError(f"row {j} references unresolved virtual node {m}")

    K = scipy.sparse.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    K.sum_duplicates()
    return K, f


def _to_banded(K, lower: int = 2, upper: int = 2) -> np.ndarray:
    K = K.tocoo()
    if K.nnz and (np.max(K.row - K.col) > lower or np.max(K.col - K.row) > upper):
        raise FdmError("stiffness matrix exceeds the expected bandwidth")
    ab = np.zeros((lower + upper + 1, K.shape[1]))
    np.add.at(ab, (upper + K.row - K.col, K.col), K.data)
    return ab


def _recover_virtual(end: str, w_end, w_1, w_2, f_end, k_end, a, g):
    """Virtual node values (inner, outer) beyond one pile end.

    ``w_1``, ``w_2`` are the first and second real neighbours inward.
    """
    if end == FREE:
        inner = 2 * w_end - w_1
        outer = w_2 - 4 * w_1 + 4 * w_end
        return inner, outer
    inner = w_1
    # governing equation at the end node, solved for the outer virtual node
    outer = (f_end - k_end * w_end + g * (w_1 - 2 * w_end + inner)) / a - (
        w_2 - 4 * w_1 + 6 * w_end - 4 * inner
    )
    return inner, outer


def solve_fdm(
    problem: PileSoilProblem,
    config: FdmConfig = FdmConfig(),
    load: Callable | None = None,
) -> FdmSolution:
    """Solve ``K w = f`` with a banded LU and derive rotation, moment, shear."""
    K, f = assemble_fdm(problem, config, load)
    # Fixed ends carry identity rows.  They are removed before the solve:
    # pivoting against rows of order EI/l^4 would otherwise leave w = O(eps)
    # instead of exactly zero there.
    top, tip = _ENDS[problem.bc]
    free = np.ones(K.shape[0], bool)
    free[0] = top != FIXED
    free[-1] = tip != FIXED
    w = np.zeros(K.shape[0])
    try:
        w[free] = scipy.linalg.solve_banded((2, 2), _to_banded(K[free][:, free]), f[free], check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise FdmError(f"banded solve failed for Nf={config.Nf}, bc={problem.bc.value}: {exc}") from exc
    if not np.all(np.isfinite(w)):
        raise FdmError(f"non-finite deflections for Nf={config.Nf}, bc={problem.bc.value}")

    z, l, a, g, k = _stencil(problem, config.Nf)
    f_raw = np.asarray(load(z) if load is not None else external_load(problem, z), dtype=float)
    t_in, t_out = _recover_virtual(top, w[0], w[1], w[2], f_raw[0], k[0], a, g)
    b_in, b_out = _recover_virtual(tip, w[-1], w[-2], w[-3], f_raw[-1], k[-1], a, g)
    ext = np.concatenate([[t_out, t_in], w, [b_in, b_out]])

    EI = problem.EI
    c = slice(2, -2)
    up1, dn1 = ext[3:-1], ext[1:-3]
    up2, dn2 = ext[4:], ext[:-4]
    theta = (up1 - dn1) / (2 * l)
    M = EI / l**2 * (up1 - 2 * ext[c] + dn1)
    Q = EI / (2 * l**3) * (up2 - 2 * up1 + 2 * dn1 - dn2)
    return FdmSolution(z=z, w=w, theta=theta, M=M, Q=Q, l=l, virtual_top=(t_out, t_in), virtual_tip=(b_in, b_out))


def sample_pseudo_observations(solution: FdmSolution, depths) -> MonitoredDataset:
    """Deflections linearly interpolated from the nodal solution."""
    depths = np.atleast_1d(np.asarray(depths, dtype=float))
    L = solution.z[-1]
    if np.any(~np.isfinite(depths)) or np.any(depths < 0.0) or np.any(depths > L):
        raise DomainError(f"observation depths must lie in [0, {L}] m")
    return MonitoredDataset(depths, np.interp(depths, solution.z, solution.w))
