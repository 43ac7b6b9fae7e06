import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stationary_discs.algebra import DiscMap
from stationary_discs.cotangent import (LiftedDisc, boundary_nodes, complex_action,
                                        conormal_residual, holo_residual, interior_nodes,
                                        lift_structure, model_lift_blocks, twisted_normal)
from stationary_discs.rhmodel import BasePoint, ModelProblem, explicit_disc, model_pde_residual
from stationary_discs.structures import (AcsModel, OsculatingPair,
                                         random_pair)


def random_antisymmetric(rng, m):
    X = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
    return 0.5 * (X - X.T)


def random_points(rng, count, n, radius=0.5):
    return radius * (rng.normal(size=(count, n)) + 1j * rng.normal(size=(count, n)))


def random_lifted_disc(rng, n, N, scale=0.05):
    shape = (n, N + 1, N + 1)
    f = scale * (rng.normal(size=shape) + 1j * rng.normal(size=shape)) / (1 + np.arange(N + 1))[:, None] ** 2
    g = scale * (rng.normal(size=shape) + 1j * rng.normal(size=shape)) / (1 + np.arange(N + 1))[:, None] ** 2
    return LiftedDisc(DiscMap(f), DiscMap(g))


# ---------------------------------------------------------------------------
# the lift


def test_lift_of_standard_structure_is_standard(rng):
    n = 3
    S = lift_structure(AcsModel.standard(n))
    z, p = random_points(rng, 4, n), random_points(rng, 4, n)
    PP, QQ = S.blocks(z, p)
    assert np.array_equal(PP, np.broadcast_to(1j * np.eye(2 * n), PP.shape))
    assert not QQ.any()


@pytest.mark.parametrize("n", [2, 3, 4])
def test_lift_of_model_matches_closed_form(rng, n):
    A = random_antisymmetric(rng, n - 1)
    S = lift_structure(OsculatingPair(n, A).acs())
    z, p = random_points(rng, 6, n), random_points(rng, 6, n)
    PP, QQ = S.blocks(z, p)
    PM, QM = model_lift_blocks(A, z, p)
    assert np.abs(PP - PM).max() <= 1e-14 and np.abs(QQ - QM).max() <= 1e-14
    # no coupling from the base directions into the fiber
    assert np.abs(PP[:, n:, :n]).max() <= 1e-14 and np.abs(QQ[:, n:, :n]).max() <= 1e-14


def test_generic_lift_has_coupling_and_squares_to_minus_one(rng):
    n = 3
    J, _ = random_pair(rng, n, scale=0.3)
    S = lift_structure(J)
    z, p = random_points(rng, 5, n), random_points(rng, 5, n, 1.0)
    PP, QQ = S.blocks(z, p)
    assert np.abs(PP[:, n:, :n]).max() > 1e-3
    assert S.validate(z, p) <= 1e-10


def test_jet_assembly_matches_frame_conversion(rng):
    n = 3
    J, _ = random_pair(rng, n, scale=0.3)
    S = lift_structure(J)
    z, p = random_points(rng, 5, n), random_points(rng, 5, n)
    Jr, dJ = J.real_jet(z)
    a, b = S.blocks(z, p), S.blocks_from_jet(Jr, dJ, p)
    assert np.allclose(a[0], b[0], atol=1e-14) and np.allclose(a[1], b[1], atol=1e-14)


def test_projection_is_holomorphic(rng):
    # the base block of the lift is J itself, so d pi o JJ = J o d pi
    n = 2
    J, _ = random_pair(rng, n, scale=0.3)
    z, p = random_points(rng, 3, n), random_points(rng, 3, n)
    R = lift_structure(J).real_matrix(z, p)
    assert np.array_equal(R[:, :2 * n, :2 * n], J.real_matrix(z))
    assert not R[:, :2 * n, 2 * n:].any()


# ---------------------------------------------------------------------------
# complex action


def test_complex_action_basics(rng):
    n = 2
    J, _ = random_pair(rng, n, scale=0.3)
    w = rng.normal(size=n) + 1j * rng.normal(size=n)
    at = random_points(rng, 1, n)[0]
    assert np.allclose(complex_action(1.0, w, J, at), w)
    Jst = AcsModel.standard(n)
    assert np.allclose(complex_action(1j, w, Jst), 1j * w)
    assert np.allclose(complex_action(1j, w, Jst, kind="cotangent"), 1j * w)
    # i . (i . w) = -w for any J
    for kind in ("tangent", "cotangent"):
        once = complex_action(1j, w, J, at, kind)
        assert np.allclose(complex_action(1j, once, J, at, kind), -w, atol=1e-13)


def test_twisted_normal_on_explicit_disc(rng):
    n = 3
    P = ModelProblem(n, random_antisymmetric(rng, n - 1), N=6)
    b = BasePoint(0.6 + 0.2j, 1.7)
    fd = explicit_disc(P, b)
    zeta = boundary_nodes(16)[:64]
    w = twisted_normal(P.hypersurface(), P.acs(), fd.f(zeta), zeta)
    assert np.abs(fd.g(zeta) - b.lam * w).max() <= 1e-12


# ---------------------------------------------------------------------------
# holomorphicity residual


def test_holomorphic_disc_standard_structure():
    d = DiscMap.from_terms({(1, 0): [1.0, 0.5j], (3, 0): [0.2, -0.1]}, dim=2)
    assert np.abs(holo_residual(AcsModel.standard(2), d)).max() == 0.0


def test_standard_lift_residual_is_classical_dbar(rng):
    n = 2
    fd = random_lifted_disc(rng, n, 4)
    nodes = interior_nodes(4)
    E = holo_residual(lift_structure(AcsModel.standard(n)), fd, nodes)
    expected = 2j * fd.stacked.d_zetabar()(nodes)
    assert np.allclose(E, expected, atol=1e-13)


@pytest.mark.parametrize("n", [2, 3])
def test_explicit_disc_is_lift_holomorphic(rng, n):
    P = ModelProblem(n, random_antisymmetric(rng, n - 1), N=6)
    fd = explicit_disc(P, BasePoint(0.8 - 0.3j, -1.2))
    assert np.abs(holo_residual(lift_structure(P.acs()), fd)).max() <= 1e-12


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_lifted_residual_factors_through_model_residual(seed):
    """For the model structure the two residuals differ by an invertible map.

    ``E_a = 2i F_a``, ``E_n = 2i F_n + A_ab conj(f^b) conj(F_a)``,
    ``E_{g_a} = 2i G_a + conj(A_ab) f^b conj(G_n)``, ``E_{g_n} = 2i G_n``.
    """
    rng = np.random.default_rng(seed)
    n = 3
    m = n - 1
    A = random_antisymmetric(rng, m)
    P = ModelProblem(n, A, N=4)
    fd = random_lifted_disc(rng, n, 4)
    nodes = interior_nodes(4)
    E = holo_residual(lift_structure(P.acs()), fd, nodes)
    R = np.stack([r(nodes)[:, 0] for r in model_pde_residual(P, fd)], axis=1)
    f = fd.f(nodes)
    expect = 2j * R
    expect[:, n - 1] += np.einsum("ab,kb,ka->k", A, np.conj(f[:, :m]), np.conj(R[:, :m]))
    expect[:, n:n + m] += np.einsum("ab,kb,k->ka", np.conj(A), f[:, :m], np.conj(R[:, 2 * n - 1]))
    assert np.allclose(E, expect, atol=1e-12)


def test_chart_guard(rng):
    d = DiscMap.from_terms({(1, 0): [5.0, 0.0]}, dim=2)
    with pytest.raises(ValueError, match="chart"):
        holo_residual(AcsModel.standard(2), d)


# ---------------------------------------------------------------------------
# conormal residual


def test_conormal_residual_of_explicit_disc(rng):
    n = 3
    P = ModelProblem(n, random_antisymmetric(rng, n - 1), N=6)
    b = BasePoint(0.5 + 0.5j, 0.9)
    fd = explicit_disc(P, b)
    zeta = np.exp(2j * np.pi * np.arange(64) / 64)
    cr = conormal_residual(P.hypersurface(), P.acs(), fd, zeta)
    assert np.abs(cr.r0).max() <= 1e-12 and np.abs(cr.r).max() <= 1e-12
    assert np.allclose(cr.lam, b.lam, atol=1e-12)
    # the multiplier equals conj(zeta) g_n, which is real on the circle
    assert np.abs((np.conj(zeta) * fd.g(zeta)[:, -1]).imag).max() <= 1e-12


def test_conormal_residual_detects_defects(rng):
    n = 2
    P = ModelProblem(n, np.zeros((1, 1)), N=6)
    fd = explicit_disc(P, BasePoint(1.0, 1.0))
    zeta = boundary_nodes(6)
    shifted = LiftedDisc(fd.f + DiscMap.from_terms({(0, 0): [0.0, 1e-3]}, dim=2, N=6), fd.g)
    cr = conormal_residual(P.hypersurface(), P.acs(), shifted, zeta)
    assert np.allclose(np.abs(cr.r0), 2e-3)
    scaled = LiftedDisc(fd.f, fd.g * -2.5)
    base = conormal_residual(P.hypersurface(), P.acs(), fd, zeta)
    cr2 = conormal_residual(P.hypersurface(), P.acs(), scaled, zeta)
    assert np.allclose(cr2.r, -2.5 * base.r) and np.allclose(cr2.r0, base.r0)
    with pytest.raises(ValueError, match="zero section"):
        conormal_residual(P.hypersurface(), P.acs(), LiftedDisc(fd.f, fd.g * 0.0), zeta)
    with pytest.raises(ValueError):
        conormal_residual(P.hypersurface(), P.acs(), fd, [0.5])


def test_unitary_naturality(rng):
    """Rotating the tangential variables by U maps model solutions to model solutions."""
    n = 3
    m = n - 1
    A = random_antisymmetric(rng, m)
    U, _ = np.linalg.qr(rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m)))
    Aw = U.conj().T @ A @ U.conj()
    fd = explicit_disc(ModelProblem(n, Aw, 6), BasePoint(0.7, 1.3))
    f, g = fd.f.coeffs.copy(), fd.g.coeffs.copy()
    f[:m] = np.einsum("ab,bpq->apq", U, f[:m])
    g[:m] = np.einsum("ab,bpq->apq", U.conj(), g[:m])
    moved = LiftedDisc(DiscMap(f), DiscMap(g))
    P = ModelProblem(n, A, 6)
    assert np.abs(holo_residual(lift_structure(P.acs()), moved)).max() <= 1e-12
    cr = conormal_residual(P.hypersurface(), P.acs(), moved, boundary_nodes(6))
    assert np.abs(cr.r0).max() <= 1e-12 and np.abs(cr.r).max() <= 1e-12
