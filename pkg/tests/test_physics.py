import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pielm_pile.physics import (
    BoundaryCondition,
    DomainError,
    PileProperties,
    PileSoilProblem,
    SoilProperties,
    TunnelGeometry,
    eta,
    external_load,
    shear_layer_modulus,
    soil_displacement,
    soil_displacement_curvature,
    subgrade_modulus,
)

# Independent 40-digit evaluations (mpmath, written separately from the
# package; u'' by mpmath's numerical differentiation at high precision).
K_AT_10 = 57230373.277750811
K_AT_025 = 27024596.124140291
K_DEEP_LIMIT = 58913619.550625835
G_TABLE1 = 14666666.666666667
EI_TABLE1 = 92038847.273138474
U_AT_20 = -0.0096342725832691642
UPP_AT_20 = 0.00092591366388527193
UPP_AT_10 = -7.010696260353119e-5
F_AT_20 = -572943.99654867442


def test_second_moment_and_bending_stiffness(problem):
    assert problem.pile.I == pytest.approx(math.pi * 0.5**4 / 64, rel=1e-15)
    assert problem.EI == pytest.approx(EI_TABLE1, rel=1e-14)


def test_subgrade_modulus_matches_hand_evaluation(problem):
    assert subgrade_modulus(problem, 10.0) == pytest.approx(K_AT_10, rel=1e-13)
    assert subgrade_modulus(problem, 0.25) == pytest.approx(K_AT_025, rel=1e-13)


def test_eta_branches(problem):
    assert eta(problem, 0.25) == 2.18  # z/D = 0.5 takes the first branch
    assert eta(problem, 0.0) == 2.18
    assert eta(problem, 25.0) == pytest.approx(1 + 1 / (1.7 * 50))


def test_subgrade_modulus_deep_limit():
    pb = PileSoilProblem(
        PileProperties(30e9, 0.5, 1e7), SoilProperties(24e6, 0.5), TunnelGeometry(20, 3, 4.5, 0.01)
    )
    assert subgrade_modulus(pb, 1e7) == pytest.approx(K_DEEP_LIMIT, rel=1e-6)


def test_eta_nearly_continuous_at_branch(problem):
    d = 1e-9
    k_lo, k_hi = subgrade_modulus(problem, 0.25 - d), subgrade_modulus(problem, 0.25 + d)
    assert abs(k_lo - k_hi) / subgrade_modulus(problem, 0.25) <= 0.005


def test_subgrade_modulus_domain(problem):
    with pytest.raises(DomainError):
        subgrade_modulus(problem, -0.1)
    with pytest.raises(DomainError):
        subgrade_modulus(problem, 25.1)
    with pytest.raises(DomainError):
        external_load(problem, np.array([1.0, np.nan]))


def test_shear_layer_modulus(problem):
    assert shear_layer_modulus(problem) == pytest.approx(G_TABLE1, rel=1e-14)
    assert problem.shear_layer_thickness == pytest.approx(5.5)
    pb = PileSoilProblem(problem.pile, SoilProperties(24e6, 0.0, t=3.0), problem.tunnel)
    assert shear_layer_modulus(pb) == pytest.approx(24e6 * 3.0 / 6)


def test_soil_displacement_oracle(problem):
    assert soil_displacement(problem, 20.0) == pytest.approx(U_AT_20, rel=1e-13)


def test_curvature_matches_high_precision_oracle(problem):
    assert soil_displacement_curvature(problem, 20.0) == pytest.approx(UPP_AT_20, rel=1e-6)
    assert soil_displacement_curvature(problem, 10.0) == pytest.approx(UPP_AT_10, rel=1e-6)


def test_curvature_matches_richardson_oracle_at_random_depths(problem, rng):
    z = rng.uniform(0, problem.L, 50)

    def d2(step):
        u = lambda s: soil_displacement(problem, s)  # noqa: E731
        return (u(z + step) - 2 * u(z) + u(z - step)) / step**2

    h = 1e-3
    oracle = (4 * d2(h / 2) - d2(h)) / 3
    got = soil_displacement_curvature(problem, z)
    scale = np.max(np.abs(oracle))
    assert np.max(np.abs(got - oracle)) / scale <= 1e-6


def test_external_load_composition(problem):
    assert external_load(problem, 20.0) == pytest.approx(F_AT_20, rel=1e-6)


@pytest.mark.parametrize("changes", [{"x0": 0.0}, {"epsilon": 0.0}])
def test_zero_soil_movement(problem, changes):
    pb = problem.with_tunnel(**changes)
    z = np.linspace(0, pb.L, 41)
    assert np.all(soil_displacement(pb, z) == 0.0)
    assert np.all(soil_displacement_curvature(pb, z) == 0.0)
    assert np.all(external_load(pb, z) == 0.0)


@settings(max_examples=50, deadline=None)
@given(z=st.floats(0.0, 60.0), x0=st.floats(0.1, 30.0))
def test_displacement_odd_in_offset(z, x0):
    base = PileSoilProblem(PileProperties(30e9, 0.5, 25), SoilProperties(24e6, 0.3), TunnelGeometry(20, 3, x0, 0.02))
    mirrored = base.with_tunnel(x0=-x0)
    assert soil_displacement(mirrored, z) == -soil_displacement(base, z)


def test_load_linear_in_volume_loss(problem):
    z = np.linspace(0, problem.L, 101)
    f1 = external_load(problem, z)
    f2 = external_load(problem.with_tunnel(epsilon=0.02), z)
    np.testing.assert_allclose(f2, 2 * f1, rtol=1e-12, atol=0)


def test_scalar_and_array_returns(problem):
    assert isinstance(subgrade_modulus(problem, 3.0), float)
    assert isinstance(external_load(problem, 3.0), float)
    assert subgrade_modulus(problem, [1.0, 2.0]).shape == (2,)


@pytest.mark.parametrize(
    "build",
    [
        lambda: PileProperties(-1, 0.5, 25),
        lambda: PileProperties(30e9, 0.5, 0.4),
        lambda: SoilProperties(0, 0.3),
        lambda: SoilProperties(1e6, 0.6),
        lambda: SoilProperties(1e6, 0.3, t=0.0),
        lambda: TunnelGeometry(3, 3, 4.5, 0.01),
        lambda: TunnelGeometry(20, 3, 4.5, -0.01),
    ],
)
def test_invariants_rejected(build):
    with pytest.raises(ValueError):
        build()


def test_boundary_condition_parse():
    assert BoundaryCondition.parse("Fixed_Fixed") is BoundaryCondition.FIXED_FIXED
    with pytest.raises(ValueError, match="bc must be one of"):
        BoundaryCondition.parse("hinged")
