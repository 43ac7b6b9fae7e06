import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stationary_discs.cotangent import LiftedDisc
from stationary_discs.rhmodel import (BasePoint, BoundaryData, FreeParams, ModelProblem,
                                      dense_solve, evaluation_map, explicit_disc, kernel_basis,
                                      kernel_rank_report, linearized_boundary, linearized_interior,
                                      model_boundary_residual, model_pde_residual,
                                      solve_linearized)


def random_antisymmetric(rng, m):
    X = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
    return 0.5 * (X - X.T)


def random_base(rng):
    a = complex(rng.uniform(0.3, 1.5) * np.exp(2j * np.pi * rng.uniform()))
    lam = float(rng.choice([-1, 1]) * rng.uniform(0.3, 2.0))
    return BasePoint(a, lam)


def interior_size(P, b, hd):
    Hs, Ks = linearized_interior(P, b, hd)
    return max(Hs.norm(), Ks.norm())


# ---------------------------------------------------------------------------
# problem data


def test_problem_validation():
    with pytest.raises(ValueError, match="antisymmetric"):
        ModelProblem(3, np.eye(2))
    with pytest.raises(ValueError):
        BasePoint(0.0, 1.0)
    with pytest.raises(ValueError):
        BasePoint(1.0, 0.0)


def test_boundary_data_rejects_complex_real_slots(rng):
    bad = rng.normal(size=5) + 1j * rng.normal(size=5)
    with pytest.raises(ValueError, match="real function"):
        BoundaryData(bad, np.zeros((1, 5)), np.zeros(5))
    with pytest.raises(ValueError, match="odd"):
        BoundaryData(np.zeros(4), np.zeros((1, 4)), np.zeros(4))


def test_free_params_roundtrip(rng):
    x = rng.normal(size=12)
    assert np.array_equal(FreeParams.from_vector(x, 3).to_vector(), x)
    with pytest.raises(ValueError):
        FreeParams.from_vector(x, 2)


# ---------------------------------------------------------------------------
# explicit solutions


def test_explicit_disc_worked_example():
    P = ModelProblem(2, np.zeros((1, 1)), N=4)
    fd = explicit_disc(P, BasePoint(1.0, 1.0))
    zeta = np.exp(1j * np.linspace(0, 6, 7)) * np.linspace(0, 1, 7)
    assert np.allclose(fd.f(zeta), np.stack([zeta, np.full_like(zeta, 0.5)], axis=1))
    assert np.allclose(fd.g(zeta), np.stack([-np.ones_like(zeta), zeta], axis=1))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 31), st.integers(2, 5))
def test_explicit_discs_solve_the_model(seed, n):
    rng = np.random.default_rng(seed)
    P = ModelProblem(n, random_antisymmetric(rng, n - 1), N=4)
    fd = explicit_disc(P, random_base(rng))
    assert max(r.norm() for r in model_pde_residual(P, fd)) <= 1e-13
    assert model_boundary_residual(P, fd).max_abs() <= 1e-13


def test_explicit_disc_requires_room():
    with pytest.raises(ValueError):
        explicit_disc(ModelProblem(2, np.zeros((1, 1))), BasePoint(1.0, 1.0), N=1)


def test_evaluation_map_of_explicit_disc(rng):
    n = 3
    P = ModelProblem(n, random_antisymmetric(rng, n - 1), N=6)
    b = BasePoint(0.4 - 0.9j, -1.3)
    ev = evaluation_map(explicit_disc(P, b), b.a, P.acs())
    expected_point = np.zeros(n, dtype=complex)
    expected_point[-1] = abs(b.a) ** 2 / 2
    assert np.allclose(ev.point, expected_point)
    assert np.allclose(ev.ratio, np.eye(n)[0], atol=1e-14)
    assert ev.scale == pytest.approx(b.lam)
    assert ev.to_vector().shape == (4 * n,)


# ---------------------------------------------------------------------------
# linearization


@pytest.mark.parametrize("n", [2, 3])
def test_linearization_matches_difference_quotient(rng, n):
    P = ModelProblem(n, random_antisymmetric(rng, n - 1), N=5)
    b = random_base(rng)
    base = explicit_disc(P, b)
    hd = LiftedDisc.from_vector(rng.normal(size=4 * n * 36), n, 5)
    eps = 1e-6
    plus, minus = base + hd * eps, base - hd * eps
    Hs, Ks = linearized_interior(P, b, hd)
    pde = [(p - q) * (0.5 / eps) for p, q in zip(model_pde_residual(P, plus), model_pde_residual(P, minus))]
    lin = [Hs.coeffs[i:i + 1] for i in range(n)] + [Ks.coeffs[i:i + 1] for i in range(n)]
    for d, l in zip(pde, lin):
        N = max(d.N, l.shape[1] - 1)
        assert np.abs(d.pad(N).coeffs - np.pad(l, ((0, 0), (0, N + 1 - l.shape[1]), (0, N + 1 - l.shape[2])))).max() <= 1e-8
    bd = (model_boundary_residual(P, plus) - model_boundary_residual(P, minus))
    diff = BoundaryData(bd.phi0 / (2 * eps), bd.phia / (2 * eps), bd.phin / (2 * eps))
    assert (diff - linearized_boundary(P, b, hd)).max_abs() <= 1e-8


# ---------------------------------------------------------------------------
# recursion


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2 ** 31), st.integers(2, 4))
def test_recursion_solves_linearized_problem(seed, n):
    rng = np.random.default_rng(seed)
    N = 7
    P = ModelProblem(n, random_antisymmetric(rng, n - 1), N=N)
    b = random_base(rng)
    phi = BoundaryData.random(rng, n, N - 2)
    free = FreeParams.from_vector(rng.normal(size=4 * n), n)
    hd = solve_linearized(P, b, phi, free)
    assert interior_size(P, b, hd) <= 1e-12
    assert (linearized_boundary(P, b, hd) - phi).max_abs() <= 1e-11


def test_recursion_is_linear(rng):
    n, N = 3, 7
    P = ModelProblem(n, random_antisymmetric(rng, n - 1), N=N)
    b = random_base(rng)
    p1, p2 = BoundaryData.random(rng, n, N - 2), BoundaryData.random(rng, n, N - 2)
    both = BoundaryData(p1.phi0 + 2 * p2.phi0, p1.phia + 2 * p2.phia, p1.phin + 2 * p2.phin)
    lhs = solve_linearized(P, b, both)
    rhs = solve_linearized(P, b, p1) + solve_linearized(P, b, p2) * 2.0
    assert np.abs(lhs.to_vector() - rhs.to_vector()).max() <= 1e-12


def test_recursion_rejects_data_beyond_cap(rng):
    P = ModelProblem(2, np.zeros((1, 1)), N=5)
    with pytest.raises(ValueError, match="dropped modes"):
        solve_linearized(P, BasePoint(1.0, 1.0), BoundaryData.random(rng, 2, 4))


def test_recursion_matches_dense_least_squares(rng):
    n, N = 2, 5
    P = ModelProblem(n, np.zeros((1, 1)), N=N)
    b = BasePoint(0.8 + 0.3j, 1.4)
    phi = BoundaryData.random(rng, n, N - 2, scale=0.5)
    free = FreeParams.from_vector(rng.normal(size=4 * n), n)
    rec = solve_linearized(P, b, phi, free)
    dense = dense_solve(P, b, phi, free)
    assert np.abs(rec.pad(N).to_vector() - dense.to_vector()).max() <= 1e-10


# ---------------------------------------------------------------------------
# kernel


@pytest.mark.parametrize("n", [2, 3])
def test_kernel_basis_elements_are_in_the_kernel(rng, n):
    P = ModelProblem(n, random_antisymmetric(rng, n - 1), N=6)
    b = random_base(rng)
    basis = kernel_basis(P, b)
    assert len(basis) == 4 * n
    for hd in basis:
        assert interior_size(P, b, hd) <= 1e-12
        assert linearized_boundary(P, b, hd).max_abs() <= 1e-12


def test_kernel_is_parametrized_by_the_evaluation_map(rng):
    """The evaluation derivative restricted to the kernel is invertible."""
    n = 3
    P = ModelProblem(n, random_antisymmetric(rng, n - 1), N=6)
    b = random_base(rng)
    base = evaluation_map(explicit_disc(P, b), b.a, P.acs()).to_vector()
    eps = 1e-7
    cols = []
    for hd in kernel_basis(P, b):
        moved = explicit_disc(P, b) + hd * eps
        cols.append((evaluation_map(moved, b.a, P.acs()).to_vector() - base) / eps)
    s = np.linalg.svd(np.stack(cols, axis=1), compute_uv=False)
    assert s[-1] > 1e-3 * s[0]


def test_kernel_rank_report_small():
    P = ModelProblem(2, np.zeros((1, 1)), N=5)
    rep = kernel_rank_report(P, BasePoint(1.0, 1.0))
    assert rep["basis_rank"] == 8 and rep["rank"] == 8
    assert rep["rank_gap"] > 1e8
