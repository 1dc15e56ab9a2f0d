"""Physical scenario for a single pile next to an advancing tunnel.

The pile is an Euler-Bernoulli beam resting on a Pasternak foundation and is
loaded by the free-field lateral soil movement produced by tunnel volume loss
(Loganathan closed form).  Everything here is SI: Pa, m, N.

Unit convention: ``k(z)`` is a pressure per unit deflection (N/m^3) so that
``k * D * w`` and ``D * f`` are forces per unit pile length.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

# eta(z) in the subgrade modulus, first branch
ETA_SHALLOW = 2.18
# shear-layer thickness as a multiple of pile diameter when not given
DEFAULT_SHEAR_LAYER_FACTOR = 11.0


class DomainError(ValueError):
    """A depth or coordinate fell outside the admissible interval."""


class BoundaryCondition(str, enum.Enum):
    FREE_FREE = "free_free"
    FIXED_FIXED = "fixed_fixed"
    FREE_TOP_FIXED_TIP = "free_top_fixed_tip"

    @classmethod
    def parse(cls, value: "str | BoundaryCondition") -> "BoundaryCondition":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            choices = ", ".join(bc.value for bc in cls)
            raise ValueError(f"bc must be one of {choices}, got {value!r}") from None


@dataclass(frozen=True)
class PileProperties:
    """Elastic pile of circular cross-section.

    Parameters
    ----------
    E : float
        Young's modulus of the pile (Pa).
    D : float
        Diameter (m).
    L : float
        Embedded length (m).
    """

    E: float
    D: float
    L: float

    def __post_init__(self):
        if not (self.E > 0 and self.D > 0 and self.L > 0):
            raise ValueError(f"pile E, D, L must be positive (E={self.E}, D={self.D}, L={self.L})")
        if not self.L > self.D:
            raise ValueError(f"pile length L={self.L} must exceed diameter D={self.D}")

    @property
    def I(self) -> float:  # noqa: E743
        return math.pi * self.D**4 / 64.0

    @property
    def EI(self) -> float:
        return self.E * self.I


@dataclass(frozen=True)
class SoilProperties:
    """Homogeneous soil. ``t`` defaults to 11 D once attached to a pile."""

    Es: float
    nu_s: float
    t: float | None = None

    def __post_init__(self):
        if not self.Es > 0:
            raise ValueError(f"soil Es must be positive, got {self.Es}")
        if not 0.0 <= self.nu_s <= 0.5:
            raise ValueError(f"soil nu_s must lie in [0, 0.5], got {self.nu_s}")
        if self.t is not None and not self.t > 0:
            raise ValueError(f"shear-layer thickness t must be positive, got {self.t}")


@dataclass(frozen=True)
class TunnelGeometry:
    """Tunnel axis depth ``H``, radius ``R``, horizontal offset ``x0`` and
    volume loss ``epsilon`` (fraction, 0.01 == 1 %)."""

    H: float
    R: float
    x0: float
    epsilon: float

    def __post_init__(self):
        if not (self.R > 0 and self.H > self.R):
            raise ValueError(f"tunnel needs H > R > 0 (H={self.H}, R={self.R})")
        if not self.epsilon >= 0:
            raise ValueError(f"volume loss epsilon must be >= 0, got {self.epsilon}")
        if not math.isfinite(self.x0):
            raise ValueError(f"x0 must be finite, got {self.x0}")


@dataclass(frozen=True)
class PileSoilProblem:
    pile: PileProperties
    soil: SoilProperties
    tunnel: TunnelGeometry
    bc: BoundaryCondition = BoundaryCondition.FREE_FREE
    shear_layer_thickness: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "bc", BoundaryCondition.parse(self.bc))
        t = self.soil.t
        if t is None:
            t = DEFAULT_SHEAR_LAYER_FACTOR * self.pile.D
        object.__setattr__(self, "shear_layer_thickness", float(t))

    @property
    def L(self) -> float:
        return self.pile.L

    @property
    def D(self) -> float:
        return self.pile.D

    @property
    def EI(self) -> float:
        return self.pile.EI

    def with_bc(self, bc) -> "PileSoilProblem":
        return replace(self, bc=BoundaryCondition.parse(bc))

    def with_tunnel(self, **changes) -> "PileSoilProblem":
        return replace(self, tunnel=replace(self.tunnel, **changes))


def _check_depth(problem: PileSoilProblem, z, tol: float = 1e-12) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    slack = tol * problem.L
    if np.any(~np.isfinite(z)) or np.any(z < -slack) or np.any(z > problem.L + slack):
        raise DomainError(f"depth must lie in [0, {problem.L}] m")
    return np.clip(z, 0.0, problem.L)


def eta(problem: PileSoilProblem, z) -> np.ndarray:
    """Depth factor of the subgrade modulus (2.18 down to z = D/2, then
    decaying towards 1)."""
    ratio = np.asarray(z, dtype=float) / problem.D
    deep = 1.0 + 1.0 / (1.7 * np.where(ratio > 0.5, ratio, 1.0))
    return np.where(ratio <= 0.5, ETA_SHALLOW, deep)


def subgrade_modulus(problem: PileSoilProblem, z):
    """Depth-dependent Winkler modulus k(z) in N/m^3.

    Raises
    ------
    DomainError
        If any depth lies outside ``[0, L]``.
    """
    z = _check_depth(problem, z)
    soil, pile = problem.soil, problem.pile
    base = 3.08 * soil.Es / (1.0 - soil.nu_s**2) * (soil.Es * pile.D**4 / pile.EI) ** 0.125
    k = base / eta(problem, z)
    return float(k) if k.ndim == 0 else k


def shear_layer_modulus(problem: PileSoilProblem) -> float:
    """Pasternak shear-layer modulus G = Es t / (6 (1 + nu_s))."""
    soil = problem.soil
    return soil.Es * problem.shear_layer_thickness / (6.0 * (1.0 + soil.nu_s))


def soil_displacement(problem: PileSoilProblem, z):
    """Free-field lateral soil movement u(z) at the pile axis (m).

    Defined for every depth; the horizontal coordinate is the pile offset
    ``x0``.  Negative values point towards the tunnel for ``x0 > 0``.
    """
    z = np.asarray(z, dtype=float)
    tun, nu = problem.tunnel, problem.soil.nu_s
    x, H, R = tun.x0, tun.H, tun.R
    if x == 0.0:
        # u is proportional to x; skip the 0/0 on the tunnel axis at z = H
        u = np.zeros_like(z)
        return float(u) if u.ndim == 0 else u
    x2 = x * x
    bracket = 1.0 / (x2 + (H - z) ** 2) + (3.0 - 4.0 * nu) / (x2 + (H + z) ** 2)
    decay = np.exp(-(1.38 * x2 / (H + R) ** 2 + 0.69 * z**2 / H**2))
    u = -tun.epsilon * R**2 * x * bracket * decay
    return float(u) if u.ndim == 0 else u


def soil_displacement_curvature(problem: PileSoilProblem, z):
    """Second depth derivative of :func:`soil_displacement` (1/m).

    Fourth-order central differences with step ``1e-4 H`` and ``5e-5 H``,
    combined by one Richardson level (error O(h^6)).  The stencil may reach
    slightly above the ground surface; u is analytic there.
    """
    z = _check_depth(problem, z)
    h = 1e-4 * problem.tunnel.H

    def d2(step):
        u = lambda s: soil_displacement(problem, s)  # noqa: E731
        return (
            -u(z + 2 * step) + 16 * u(z + step) - 30 * u(z) + 16 * u(z - step) - u(z - 2 * step)
        ) / (12.0 * step * step)

    coarse, fine = d2(h), d2(h / 2)
    out = fine + (fine - coarse) / 15.0
    return float(out) if np.ndim(out) == 0 else out


def external_load(problem: PileSoilProblem, z):
    """Tunnelling load f(z) = k(z) u(z) - G u''(z), in N/m^2."""
    z = _check_depth(problem, z)
    G = shear_layer_modulus(problem)
    return subgrade_modulus(problem, z) * soil_displacement(problem, z) - G * soil_displacement_curvature(
        problem, z
    )
