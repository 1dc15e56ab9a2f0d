"""Physics-informed ELM solver for the pile deflection equation.

The fourth-order equation is split into four first-order equations in
``w``, ``theta``, ``Mbar = M/EI`` and ``Qbar = Q/EI``.  Each unknown field is a
separate linear combination of the same hidden features, modified so that the
boundary conditions hold for every choice of output weights.  Collocation
residuals and optional deflection observations then form a linear system
``A beta = c`` which is solved once in the least-squares sense.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .elm import RNG_ALGORITHM, ElmBasis, ElmConfig, feature_derivatives, features, init_basis
from .physics import (
    BoundaryCondition,
    DomainError,
    PileSoilProblem,
    external_load,
    shear_layer_modulus,
    subgrade_modulus,
)

log = logging.getLogger(__name__)

FIELDS = ("w", "theta", "Mbar", "Qbar")
BLOCKS = ("L1", "L2", "L3", "L4", "data")
DEFAULT_RESIDUAL_WEIGHTS = (1.0, 0.1, 0.01, 0.001, 1.0)


class TrainingError(RuntimeError):
    """The least-squares solve failed."""


# Each constrained field reads  h(z) + a(z) h(0) + c(z) h(1)  with the pair
# (a, c) chosen per field and boundary case.
_IDENTITY = "identity"
_BOTH_ENDS = "both_ends"  # a = z - 1, c = -z: zero at z = 0 and z = 1
_AT_TIP = "at_tip"  # c = -1: zero at z = 1
_AT_TOP = "at_top"  # a = -1: zero at z = 0

_CONSTRUCTIONS = {
    BoundaryCondition.FREE_FREE: (_IDENTITY, _IDENTITY, _BOTH_ENDS, _BOTH_ENDS),
    BoundaryCondition.FIXED_FIXED: (_BOTH_ENDS, _BOTH_ENDS, _IDENTITY, _IDENTITY),
    BoundaryCondition.FREE_TOP_FIXED_TIP: (_AT_TIP, _AT_TIP, _AT_TOP, _AT_TOP),
}


def _construction(output_index: int, bc) -> str:
    if output_index not in (1, 2, 3, 4):
        raise ValueError(f"output_index must be 1..4, got {output_index}")
    return _CONSTRUCTIONS[BoundaryCondition.parse(bc)][output_index - 1]


def _end_coefficients(kind: str, zt):
    zt = np.asarray(zt, dtype=float)
    zero = np.zeros_like(zt)
    if kind == _IDENTITY:
        return zero, zero
    if kind == _BOTH_ENDS:
        return zt - 1.0, -zt
    if kind == _AT_TIP:
        return zero, zero - 1.0
    return zero - 1.0, zero


def _end_coefficient_slopes(kind: str):
    return {
        _IDENTITY: (0.0, 0.0),
        _BOTH_ENDS: (1.0, -1.0),
        _AT_TIP: (0.0, 0.0),
        _AT_TOP: (0.0, 0.0),
    }[kind]


def constrained_value(output_index: int, bc, h, h0, h1, zt) -> np.ndarray:
    """Coefficient rows of a hard-constrained field over its output weights.

    Parameters
    ----------
    output_index : int
        1 for ``w``, 2 for ``theta``, 3 for ``Mbar``, 4 for ``Qbar``.
    bc : BoundaryCondition
    h : array_like, shape (n, Mc) or (Mc,)
        Raw feature rows at ``zt``.
    h0, h1 : array_like, shape (Mc,)
        Feature rows at the pile top (0) and tip (1).
    zt : array_like, shape (n,) or scalar
        Normalized depths matching the rows of ``h``.
    """
    kind = _construction(output_index, bc)
    h = np.asarray(h, dtype=float)
    a, c = _end_coefficients(kind, zt)
    if h.ndim == 1:
        return h + float(a) * np.asarray(h0) + float(c) * np.asarray(h1)
    return h + np.outer(a, h0) + np.outer(c, h1)


def constrained_derivative(output_index: int, bc, dh, h0, h1, zt=None) -> np.ndarray:
    """d/dz~ of :func:`constrained_value`; ``dh`` holds raw feature derivatives.

    The end corrections are at most linear in z~, so ``zt`` only fixes the
    row count.
    """
    kind = _construction(output_index, bc)
    da, dc = _end_coefficient_slopes(kind)
    dh = np.asarray(dh, dtype=float)
    if da == 0.0 and dc == 0.0:
        return dh.copy()
    return dh + da * np.asarray(h0) + dc * np.asarray(h1)


@dataclass(frozen=True)
class MonitoredDataset:
    """Observed deflections ``w`` (m) at depths ``z`` (m)."""

    z: np.ndarray = field(default_factory=lambda: np.empty(0))
    w: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self):
        z = np.array(self.z, dtype=float).ravel()
        w = np.array(self.w, dtype=float).ravel()
        if z.shape != w.shape:
            raise ValueError(f"depth and deflection counts differ ({z.size} vs {w.size})")
        if not (np.all(np.isfinite(z)) and np.all(np.isfinite(w))):
            raise ValueError("monitored data must be finite")
        z.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "w", w)

    def __len__(self) -> int:
        return self.z.size

    def check_within(self, L: float) -> None:
        if np.any(self.z < 0.0) or np.any(self.z > L):
            raise DomainError(f"monitored depths must lie in [0, {L}] m")


EMPTY_DATA = MonitoredDataset()


@dataclass(frozen=True)
class SolverConfig:
    """Settings of one solve.

    ``residual_weights`` multiply the rows of the blocks L1..L4 and data.
    With ``scale_equilibrium`` the equilibrium block L4 is divided by
    ``EI/L`` before weighting, which puts all four physics blocks on the scale
    of ``d(.)/dz`` of the normalized fields.  Without it, L4 is in N/m and
    swamps the kinematic blocks by roughly eight orders of magnitude.

    The default weights decay by a factor of ten per block, so the
    kinematic relations that feed ``w`` are enforced more tightly than the
    higher-order ones.  Unit weights leave ``w`` about an order of magnitude
    less accurate at Mc=500 and make small networks insensitive to data.
    """

    Nc: int = 1000
    elm: ElmConfig = field(default_factory=ElmConfig)
    residual_weights: tuple = DEFAULT_RESIDUAL_WEIGHTS
    rcond: float = 1e-12
    scale_equilibrium: bool = True

    def __post_init__(self):
        if int(self.Nc) != self.Nc or self.Nc < 5:
            raise ValueError(f"Nc must be an integer >= 5, got {self.Nc}")
        weights = tuple(float(v) for v in self.residual_weights)
        if len(weights) != 5 or any(not (v >= 0) for v in weights):
            raise ValueError(f"residual_weights needs five non-negative values, got {self.residual_weights}")
        object.__setattr__(self, "residual_weights", weights)
        if not 0.0 < self.rcond < 1.0:
            raise ValueError(f"rcond must lie in (0, 1), got {self.rcond}")


@dataclass(frozen=True, eq=False)
class LossSystem:
    """Affine loss ``L(beta) = A beta - c``; ``row_labels`` names each row's block."""

    A: np.ndarray
    c: np.ndarray
    row_labels: np.ndarray
    Mc: int

    def __post_init__(self):
        if self.A.shape != (self.c.size, 4 * self.Mc):
            raise ValueError(f"A has shape {self.A.shape}, expected ({self.c.size}, {4 * self.Mc})")
        for arr in (self.A, self.c, self.row_labels):
            arr.flags.writeable = False

    def loss(self, beta) -> np.ndarray:
        return self.A @ np.asarray(beta, dtype=float) - self.c


@dataclass(frozen=True)
class TrainResult:
    beta: np.ndarray
    residual_norm: float
    rank: int


@dataclass(frozen=True)
class ResponseProfile:
    z: np.ndarray
    w: np.ndarray
    theta: np.ndarray
    M: np.ndarray
    Q: np.ndarray


@dataclass(frozen=True, eq=False)
class TrainedSolution:
    problem: PileSoilProblem
    basis: ElmBasis
    beta: np.ndarray
    config: SolverConfig
    residual_norm: float = float("nan")
    rank: int = -1
    training_time: float = float("nan")
    n_data: int = 0

    def __post_init__(self):
        beta = np.array(self.beta, dtype=float).ravel()
        if beta.size != 4 * self.basis.Mc:
            raise ValueError(f"beta has {beta.size} entries, expected {4 * self.basis.Mc}")
        if not np.all(np.isfinite(beta)):
            raise TrainingError("output weights are not finite")
        beta.flags.writeable = False
        object.__setattr__(self, "beta", beta)

    def beta_block(self, output_index: int) -> np.ndarray:
        Mc = self.basis.Mc
        return self.beta[(output_index - 1) * Mc : output_index * Mc]

    def metadata(self) -> dict:
        elm = self.config.elm
        return {
            "seed": elm.seed,
            "rng": RNG_ALGORITHM,
            "Mc": self.basis.Mc,
            "Nc": self.config.Nc,
            "N_data": self.n_data,
            "activation": elm.activation,
            "weight_range": elm.weight_range,
            "bias_range": elm.bias_range,
            "rcond": self.config.rcond,
            "residual_weights": list(self.config.residual_weights),
            "scale_equilibrium": self.config.scale_equilibrium,
            "residual_norm": self.residual_norm,
            "rank": self.rank,
            "training_time_s": self.training_time,
        }

    def __call__(self, z) -> ResponseProfile:
        return evaluate(self, z)


def collocation_points(Nc: int) -> np.ndarray:
    """Evenly spaced normalized depths including both pile ends."""
    return np.linspace(0.0, 1.0, int(Nc))


def assemble_system(
    problem: PileSoilProblem,
    basis: ElmBasis,
    config: SolverConfig,
    data: MonitoredDataset = EMPTY_DATA,
) -> LossSystem:
    """Stack the collocation residuals and data misfits into ``(A, c)``.

    Rows come in blocks of ``Nc``: L1 ``w'/L - theta``, L2 ``theta'/L - Mbar``,
    L3 ``Mbar'/L - Qbar``, L4 ``EI/L Qbar' - G D Mbar + k D w - D f``, followed
    by one row ``w(z_j) - w_j`` per observation.  Columns are the four weight
    blocks ``(beta1, beta2, beta3, beta4)``.
    """
    if basis.Mc != config.elm.Mc:
        raise ValueError(f"basis has Mc={basis.Mc} but config.elm.Mc={config.elm.Mc}")
    data.check_within(problem.L)
    bc = problem.bc
    L, D, EI = problem.L, problem.D, problem.EI
    G = shear_layer_modulus(problem)
    Mc, Nc = basis.Mc, config.Nc

    zt = collocation_points(Nc)
    H = features(basis, zt)
    dH = feature_derivatives(basis, zt)
    h0, h1 = features(basis, [0.0, 1.0])

    rows = [constrained_value(i, bc, H, h0, h1, zt) for i in (1, 2, 3, 4)]
    drows = [constrained_derivative(i, bc, dH, h0, h1, zt) for i in (1, 2, 3, 4)]
    w_row, th_row, m_row, q_row = rows
    dw_row, dth_row, dm_row, dq_row = drows

    z = L * zt
    scale4 = L / EI if config.scale_equilibrium else 1.0
    kD = (subgrade_modulus(problem, z) * D)[:, None]

    n_rows = 4 * Nc + len(data)
    A = np.zeros((n_rows, 4 * Mc))
    c = np.zeros(n_rows)
    cols = [slice(j * Mc, (j + 1) * Mc) for j in range(4)]
    blk = [slice(j * Nc, (j + 1) * Nc) for j in range(4)]
    wts = config.residual_weights

    A[blk[0], cols[0]] = wts[0] * dw_row / L
    A[blk[0], cols[1]] = -wts[0] * th_row
    A[blk[1], cols[1]] = wts[1] * dth_row / L
    A[blk[1], cols[2]] = -wts[1] * m_row
    A[blk[2], cols[2]] = wts[2] * dm_row / L
    A[blk[2], cols[3]] = -wts[2] * q_row
    A[blk[3], cols[0]] = wts[3] * scale4 * kD * w_row
    A[blk[3], cols[2]] = -wts[3] * scale4 * G * D * m_row
    A[blk[3], cols[3]] = wts[3] * scale4 * (EI / L) * dq_row
    c[blk[3]] = wts[3] * scale4 * D * external_load(problem, z)

    if len(data):
        ztd = data.z / L
        wd_row = constrained_value(1, bc, features(basis, ztd), h0, h1, ztd)
        A[4 * Nc :, cols[0]] = wts[4] * wd_row
        c[4 * Nc :] = wts[4] * data.w

    labels = np.array([name for name in BLOCKS[:4] for _ in range(Nc)] + ["data"] * len(data))
    return LossSystem(A, c, labels, Mc)


def _column_compression(A: np.ndarray, Mc: int):
    """Orthonormal ``V`` (4 blocks) with ``A = (A V) V^T`` to working precision.

    Every column block of ``A`` is a row-scaled combination of the same
    feature matrices, so one SVD of the stacked nonzero rows of all blocks
    yields a shared right basis of small numerical rank.
    """
    stacked = np.vstack([A[:, j * Mc : (j + 1) * Mc] for j in range(4)])
    stacked = stacked[np.any(stacked != 0.0, axis=1)]
    if stacked.shape[0] == 0:
        return np.zeros((Mc, 0))
    # Gram-free: QR first keeps the SVD at (Mc x Mc) for tall stacks
    if stacked.shape[0] > 2 * Mc:
        stacked = scipy.linalg.qr(stacked, mode="r", check_finite=False)[0][:Mc]
    _, s, vt = scipy.linalg.svd(stacked, full_matrices=False, check_finite=False)
    keep = s > s[0] * np.finfo(float).eps * max(stacked.shape)
    return vt[keep].T


def train(system: LossSystem, config: SolverConfig) -> TrainResult:
    """Minimal-norm least-squares output weights, ``beta = pinv(A) c``.

    Singular values below ``rcond * sigma_max`` are discarded.  The
    pseudoinverse is formed from the SVD of ``A`` restricted to its numerical
    row space (``A V`` with orthonormal ``V``), which has the same nonzero
    singular values as ``A`` and satisfies ``pinv(A) = V pinv(A V)``.
    """
    A, c, Mc = system.A, system.c, system.Mc
    if A.shape[0] < 1:
        raise TrainingError("loss system has no rows")
    try:
        V = _column_compression(A, Mc)
        Vblk = scipy.linalg.block_diag(V, V, V, V)
        C = A @ Vblk
        if C.shape[1] == 0:
            beta = np.zeros(4 * Mc)
            return TrainResult(beta, float(np.linalg.norm(c)), 0)
        U, s, vt = scipy.linalg.svd(C, full_matrices=False, check_finite=False)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise TrainingError(
            f"SVD failed for A of shape {A.shape} (finite: {bool(np.all(np.isfinite(A)))}, "
            f"max |A| = {np.nanmax(np.abs(A)):.3e}): {exc}"
        ) from exc
    keep = s > config.rcond * s[0] if s.size and s[0] > 0 else np.zeros(s.size, bool)
    gamma = vt[keep].T @ ((U[:, keep].T @ c) / s[keep])
    beta = Vblk @ gamma
    resid = float(np.linalg.norm(A @ beta - c))
    log.debug("trained: rows=%d cols=%d rank=%d residual=%.3e", *A.shape, int(keep.sum()), resid)
    return TrainResult(beta, resid, int(keep.sum()))


def evaluate(solution: TrainedSolution, z) -> ResponseProfile:
    """Deflection, rotation, bending moment and shear force at depths ``z`` (m)."""
    problem = solution.problem
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if np.any(~np.isfinite(z)) or np.any(z < 0.0) or np.any(z > problem.L):
        raise DomainError(f"depth must lie in [0, {problem.L}] m")
    zt = np.clip(z / problem.L, 0.0, 1.0)
    H = features(solution.basis, zt)
    h0, h1 = features(solution.basis, [0.0, 1.0])
    out = [
        constrained_value(i, problem.bc, H, h0, h1, zt) @ solution.beta_block(i) for i in (1, 2, 3, 4)
    ]
    EI = problem.EI
    return ResponseProfile(z=z, w=out[0], theta=out[1], M=EI * out[2], Q=EI * out[3])


def solve(
    problem: PileSoilProblem,
    config: SolverConfig | None = None,
    data: MonitoredDataset | None = None,
    basis: ElmBasis | None = None,
) -> TrainedSolution:
    """Build the basis, assemble the loss system and train it.

    ``training_time`` covers assembly plus the least-squares solve.
    """
    config = config or SolverConfig()
    data = data if data is not None else EMPTY_DATA
    basis = basis or init_basis(config.elm)
    start = time.perf_counter()
    system = assemble_system(problem, basis, config, data)
    result = train(system, config)
    elapsed = time.perf_counter() - start
    return TrainedSolution(
        problem=problem,
        basis=basis,
        beta=result.beta,
        config=config,
        residual_norm=result.residual_norm,
        rank=result.rank,
        training_time=elapsed,
        n_data=len(data),
    )
