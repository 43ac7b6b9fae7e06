"""Almost complex structures and graded hypersurfaces near a boundary point.

Conventions
-----------
Real coordinates are ordered ``(x^1..x^n, y^1..y^n)`` with ``z^k = x^k + i y^k``.
An almost complex structure close to ``J_st`` is written in the complex frame
``(dz, dzbar)`` as the block matrix ``[[P, Q], [conj(Q), conj(P)]]``; ``J^2 = -Id``
is equivalent to ``P^2 + Q conj(Q) = -I`` and ``P Q + Q conj(P) = 0``.

``AcsModel`` stores the polynomial block ``Q`` (linear tensors plus higher
order corrections) and completes it to an exact structure by
``P = i sqrt(I + Q conj(Q))`` (principal square root).  Every structure with
``P`` close to ``iI`` is of that form, so nothing is lost, and the linear part
of ``J - J_st`` is exactly the ``Q``-block built from ``L_mixed`` and ``L_anti``.

Index conventions (0-based):
``L_mixed[i, j, k]`` is the coefficient of ``z^k`` in ``Q[i, j]`` and
``L_anti[i, j, k]`` that of ``zbar^k``.  The last variable ``z^{n}`` is the
normal one, the first ``n - 1`` are tangential.

A hypersurface is ``{rho = 0}`` with
``rho = 2 Re z^n - Re(K_ab z^a z^b) - H_ab z^a zbar^b + remainder``;
the domain side is ``rho > 0`` (``d rho`` is negative on outward vectors).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg
from scipy.stats import qmc

from .algebra import PolyMap, variables

WEIGHTS_CACHE: dict[int, np.ndarray] = {}


def weights(n: int) -> np.ndarray:
    """Anisotropic weights: 1 for tangential variables, 2 for the normal one."""
    if n not in WEIGHTS_CACHE:
        w = np.ones(n, dtype=int)
        w[-1] = 2
        WEIGHTS_CACHE[n] = w
    return WEIGHTS_CACHE[n]


# ---------------------------------------------------------------------------
# batched matrix helpers


def sqrtm_near_identity(M: np.ndarray, tol: float = 1e-15, max_iter: int = 60) -> np.ndarray:
    """Principal square root of a stack of matrices close to the identity.

    Denman--Beavers iteration; converges quadratically for spectra away from
    the negative real axis.
    """
    M = np.asarray(M, dtype=complex)
    eye = np.broadcast_to(np.eye(M.shape[-1]), M.shape)
    Y, Z = M.copy(), eye.astype(complex)
    for _ in range(max_iter):
        Yi, Zi = np.linalg.inv(Y), np.linalg.inv(Z)
        Y_new, Z = 0.5 * (Y + Zi), 0.5 * (Z + Yi)
        delta = np.abs(Y_new - Y).max() if Y.size else 0.0
        Y = Y_new
        if delta <= tol:
            break
    return Y


def solve_sylvester_sym(S: np.ndarray, R: np.ndarray) -> np.ndarray:
    """Solve ``S X + X S = R`` for a stack of square matrices."""
    m = S.shape[-1]
    eye = np.eye(m)
    # row-major vec: vec(S X) = (S kron I) vec(X), vec(X S) = (I kron S^T) vec(X)
    K = np.einsum("...ij,ab->...iajb", S, eye) + np.einsum("ij,...ba->...iajb", eye, S)
    K = K.reshape(S.shape[:-2] + (m * m, m * m))
    x = np.linalg.solve(K, R.reshape(R.shape[:-2] + (m * m, 1)))
    return x.reshape(R.shape)


def complex_to_real(P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """Real ``2n x 2n`` matrix of ``[[P, Q], [conj Q, conj P]]`` in (x, y) order."""
    A, B = P + Q, P - Q
    top = np.concatenate([A.real, -B.imag], axis=-1)
    bot = np.concatenate([A.imag, B.real], axis=-1)
    return np.concatenate([top, bot], axis=-2)


def real_to_complex(R: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of ``complex_to_real`` for matrices commuting with conjugation."""
    n = R.shape[-1] // 2
    a, b, c, d = R[..., :n, :n], R[..., :n, n:], R[..., n:, :n], R[..., n:, n:]
    A = a + 1j * c
    B = d - 1j * b
    return 0.5 * (A + B), 0.5 * (A - B)


def as_points(z, n: int) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    if z.shape[-1] != n:
        raise ValueError(f"points must have {n} complex coordinates")
    return z


def real_point(z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    return np.concatenate([z.real, z.imag], axis=-1)


def complex_point(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    n = x.shape[-1] // 2
    return x[..., :n] + 1j * x[..., n:]


# ---------------------------------------------------------------------------
# almost complex structures


@dataclass(frozen=True, eq=False)
class AcsModel:
    """Almost complex structure ``J_st + L_z + higher`` on a chart of C^n.

    ``higher`` is an ``(n, n)``-valued polynomial of degree >= 2 added to the
    ``Q``-block.  ``p_block``, when given, replaces the completion and sets
    ``P = iI + p_block`` verbatim; it exists to model inputs that violate the
    block structure, and such a ``J`` is in general not an almost complex
    structure.
    """

    n: int
    L_mixed: np.ndarray
    L_anti: np.ndarray
    higher: PolyMap | None = None
    p_block: PolyMap | None = None

    def __post_init__(self):
        n = self.n
        for name in ("L_mixed", "L_anti"):
            arr = np.asarray(getattr(self, name), dtype=complex)
            if arr.shape != (n, n, n):
                raise ValueError(f"{name} must have shape {(n, n, n)}")
            object.__setattr__(self, name, arr)
        for name in ("higher", "p_block"):
            poly = getattr(self, name)
            if poly is None:
                continue
            if poly.nvars != n or poly.value_shape != (n, n):
                raise ValueError(f"{name} must be an (n, n)-valued polynomial in n variables")
        if self.higher is not None and any(sum(p) + sum(q) < 2 for p, q in self.higher.terms):
            raise ValueError("higher-order part must have degree >= 2")
        if self.p_block is not None and any(sum(p) + sum(q) < 1 for p, q in self.p_block.terms):
            raise ValueError("p_block must vanish at the origin")

    # -- constructors -------------------------------------------------------
    @classmethod
    def standard(cls, n: int) -> "AcsModel":
        z = np.zeros((n, n, n), dtype=complex)
        return cls(n, z, z.copy())

    @classmethod
    def from_q(cls, q: PolyMap, p_block: PolyMap | None = None) -> "AcsModel":
        """Build from a full ``Q``-block polynomial (vanishing at the origin)."""
        n = q.nvars
        Lm = np.zeros((n, n, n), dtype=complex)
        La = np.zeros((n, n, n), dtype=complex)
        rest = {}
        for (p, qq), c in q.terms.items():
            d = sum(p) + sum(qq)
            if d == 0:
                raise ValueError("Q-block must vanish at the origin")
            if d == 1:
                if sum(p):
                    Lm[:, :, p.index(1)] += c
                else:
                    La[:, :, qq.index(1)] += c
            else:
                rest[(p, qq)] = c
        higher = PolyMap(n, rest, (n, n)) if rest else None
        return cls(n, Lm, La, higher, p_block)

    # -- polynomial data ----------------------------------------------------
    @cached_property
    def q_linear(self) -> PolyMap:
        n = self.n
        zero = (0,) * n
        terms = {}
        for k in range(n):
            e = tuple(int(i == k) for i in range(n))
            terms[(e, zero)] = self.L_mixed[:, :, k]
            terms[(zero, e)] = self.L_anti[:, :, k]
        return PolyMap(n, terms, (n, n))

    @cached_property
    def q_poly(self) -> PolyMap:
        """The full ``Q``-block as an ``(n, n)``-valued polynomial."""
        return self.q_linear if self.higher is None else self.q_linear + self.higher

    @cached_property
    def _q_real_derivs(self) -> list[PolyMap]:
        return [self.q_poly.real_derivative(k) for k in range(2 * self.n)]

    @cached_property
    def _p_real_derivs(self) -> list[PolyMap] | None:
        if self.p_block is None:
            return None
        return [self.p_block.real_derivative(k) for k in range(2 * self.n)]

    @property
    def is_linear(self) -> bool:
        return (self.higher is None or self.higher.is_zero()) and self.p_block is None

    # -- evaluation ---------------------------------------------------------
    def _complete(self, Q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """``(S, X)`` with ``X = Q conj(Q)`` and ``S = sqrt(I + X)``."""
        X = Q @ np.conj(Q)
        eye = np.eye(self.n)
        if not np.any(X):
            return np.broadcast_to(eye, X.shape).astype(complex), X
        return sqrtm_near_identity(eye + X), X

    def blocks(self, z) -> tuple[np.ndarray, np.ndarray]:
        """Complex-frame blocks ``(P, Q)`` at points ``z`` of shape (..., n)."""
        z = as_points(z, self.n)
        Q = self.q_poly(z)
        if self.p_block is not None:
            return 1j * np.eye(self.n) + self.p_block(z), Q
        S, _ = self._complete(Q)
        return 1j * S, Q

    def block_derivatives(self, z) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """``(P, Q, dP, dQ)`` with ``dP[..., k, :, :]`` the derivative along real axis ``k``."""
        z = as_points(z, self.n)
        Q = self.q_poly(z)
        dQ = np.stack([d(z) for d in self._q_real_derivs], axis=-3)
        if self.p_block is not None:
            P = 1j * np.eye(self.n) + self.p_block(z)
            dP = np.stack([d(z) for d in self._p_real_derivs], axis=-3)
            return P, Q, dP, dQ
        S, X = self._complete(Q)
        Qc = np.conj(Q)[..., None, :, :]
        dX = dQ @ Qc + Q[..., None, :, :] @ np.conj(dQ)
        if not np.any(dX):
            dS = np.zeros_like(dX)
        else:
            dS = solve_sylvester_sym(np.broadcast_to(S[..., None, :, :], dX.shape), dX)
        return 1j * S, Q, 1j * dS, dQ

    def real_matrix(self, z) -> np.ndarray:
        """``J`` as a real ``2n x 2n`` matrix at points ``z``."""
        P, Q = self.blocks(z)
        return complex_to_real(P, Q)

    def real_jet(self, z) -> tuple[np.ndarray, np.ndarray]:
        """``(J, dJ)`` with ``dJ[..., a, i, k] = d J^a_i / d x^k`` (real coordinates)."""
        P, Q, dP, dQ = self.block_derivatives(z)
        J = complex_to_real(P, Q)
        dJ = complex_to_real(dP, dQ)  # (..., k, a, i)
        return J, np.moveaxis(dJ, -3, -1)

    def __call__(self, z) -> np.ndarray:
        return self.real_matrix(z)

    def apply(self, z, w) -> np.ndarray:
        """``J`` applied to the complex tangent vector ``w`` (its (1,0) part) at ``z``."""
        P, Q = self.blocks(z)
        w = np.asarray(w, dtype=complex)
        return np.einsum("...ij,...j->...i", P, w) + np.einsum("...ij,...j->...i", Q, np.conj(w))

    def linear_part(self) -> "AcsModel":
        return AcsModel(self.n, self.L_mixed, self.L_anti)


def structure_coefficients(J: AcsModel) -> dict:
    """All stored ``Q``-block coefficients keyed by monomial."""
    return dict(J.q_poly.terms)


@dataclass
class AcsReport:
    max_residual: float
    worst_point: np.ndarray
    tol: float

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tol


def default_samples(n: int, count: int = 100, radius: float = 0.5) -> np.ndarray:
    """Deterministic quasi-random points in the polydisc of the given radius."""
    u = qmc.Halton(d=2 * n, scramble=False).random(count + 1)[1:]
    r = radius * np.sqrt(u[:, :n])
    theta = 2 * np.pi * u[:, n:]
    return r * np.exp(1j * theta)


def validate_acs(J: AcsModel, samples=None, tol: float = 1e-10) -> AcsReport:
    """Largest operator norm of ``J(z)^2 + Id`` over the sample points."""
    pts = default_samples(J.n) if samples is None else as_points(samples, J.n).reshape(-1, J.n)
    R = J.real_matrix(pts)
    res = np.linalg.norm(R @ R + np.eye(2 * J.n), ord=2, axis=(-2, -1))
    k = int(np.argmax(res))
    return AcsReport(float(res[k]), pts[k], tol)


# ---------------------------------------------------------------------------
# hypersurfaces


@dataclass(frozen=True, eq=False)
class HypersurfaceModel:
    """Graded defining function near the origin.

    ``remainder`` is a real-valued polynomial of weighted order >= 3 (tangential
    variables weigh 1, the normal one 2), so that terms such as
    ``Re(z^n zbar^a)`` are admissible.
    """

    n: int
    K: np.ndarray
    H: np.ndarray
    remainder: PolyMap | None = None

    def __post_init__(self):
        m = self.n - 1
        K = np.asarray(self.K, dtype=complex).reshape(m, m)
        H = np.asarray(self.H, dtype=complex).reshape(m, m)
        if not np.allclose(K, K.T, rtol=0, atol=1e-14):
            raise ValueError("K must be symmetric")
        if not np.allclose(H, H.conj().T, rtol=0, atol=1e-14):
            raise ValueError("H must be Hermitian")
        # store exactly symmetric tensors so that rho is exactly real
        object.__setattr__(self, "K", 0.5 * (K + K.T))
        object.__setattr__(self, "H", 0.5 * (H + H.conj().T))
        r = self.remainder
        if r is not None:
            if r.nvars != self.n or r.value_shape != ():
                raise ValueError("remainder must be a scalar polynomial in n variables")
            if not r.is_real():
                raise ValueError("remainder must be real-valued")
            order = r.weighted_order(weights(self.n))
            if order is not None and order < 3:
                raise ValueError("remainder must have weighted order >= 3")

    @classmethod
    def siegel(cls, n: int) -> "HypersurfaceModel":
        m = n - 1
        return cls(n, np.zeros((m, m)), np.eye(m))

    @cached_property
    def quadratic_part(self) -> PolyMap:
        n = self.n
        z = variables(n)
        rho = z[-1] + z[-1].conj()
        for a in range(n - 1):
            for b in range(n - 1):
                if self.K[a, b] != 0:
                    kz = z[a] * z[b] * self.K[a, b]
                    rho = rho - (kz + kz.conj()) * 0.5
                if self.H[a, b] != 0:
                    rho = rho - z[a] * z[b].conj() * self.H[a, b]
        return rho

    @cached_property
    def rho(self) -> PolyMap:
        rho = self.quadratic_part
        return rho if self.remainder is None else rho + self.remainder

    @cached_property
    def _grad_polys(self) -> list[PolyMap]:
        return [self.rho.real_derivative(k) for k in range(2 * self.n)]

    @cached_property
    def _hess_polys(self) -> list[list[PolyMap]]:
        return [[g.real_derivative(k) for k in range(2 * self.n)] for g in self._grad_polys]

    @cached_property
    def _dz_polys(self) -> list[PolyMap]:
        return [self.rho.wirtinger(k) for k in range(self.n)]

    def __call__(self, z) -> np.ndarray:
        return self.rho(as_points(z, self.n)).real

    def gradient(self, z) -> np.ndarray:
        """Real gradient in (x, y) order, shape (..., 2n)."""
        z = as_points(z, self.n)
        return np.stack([g(z).real for g in self._grad_polys], axis=-1)

    def hessian(self, z) -> np.ndarray:
        z = as_points(z, self.n)
        return np.stack([np.stack([h(z).real for h in row], axis=-1)
                         for row in self._hess_polys], axis=-2)

    def dz(self, z) -> np.ndarray:
        """Complex differential coefficients ``d rho / d z^k``, shape (..., n)."""
        z = as_points(z, self.n)
        return np.stack([d(z) for d in self._dz_polys], axis=-1)


# ---------------------------------------------------------------------------
# osculating pairs


@dataclass(frozen=True, eq=False)
class OsculatingPair:
    n: int
    A: np.ndarray

    def __post_init__(self):
        m = self.n - 1
        A = np.asarray(self.A, dtype=complex).reshape(m, m)
        if np.abs(A + A.T).max(initial=0.0) > 1e-14:
            raise ValueError("A must be antisymmetric")
        object.__setattr__(self, "A", A)

    def acs(self) -> AcsModel:
        n = self.n
        La = np.zeros((n, n, n), dtype=complex)
        La[n - 1, :n - 1, :n - 1] = self.A
        return AcsModel(n, np.zeros((n, n, n), dtype=complex), La)

    def hypersurface(self) -> HypersurfaceModel:
        return HypersurfaceModel.siegel(self.n)


# ---------------------------------------------------------------------------
# holomorphic tangent space and Levi form


def holo_tangent(J: AcsModel, rho: HypersurfaceModel, x, tol: float = 1e-10) -> np.ndarray:
    """Real basis (rows) of ``ker d rho  cap  ker (d rho o J)`` at ``x``."""
    x = as_points(x, J.n)
    g = rho.gradient(x)
    if abs(rho(x)) > tol * max(1.0, np.linalg.norm(g)):
        raise ValueError("point is not on the hypersurface")
    if np.linalg.norm(g) <= 1e-12:
        raise ValueError("degenerate: d rho vanishes at the point")
    R = J.real_matrix(x)
    return scipy.linalg.null_space(np.vstack([g, g @ R])).T


def _real_vector(v, n: int) -> np.ndarray:
    v = np.asarray(v)
    if not np.iscomplexobj(v) and v.shape[-1] == 2 * n:
        return v.astype(float)
    v = v.astype(complex)
    if v.shape[-1] == n - 1:
        v = np.concatenate([v, np.zeros(v.shape[:-1] + (1,), dtype=complex)], axis=-1)
    if v.shape[-1] != n:
        raise ValueError("tangent vector has the wrong length")
    return real_point(v)


def levi_numeric(J: AcsModel, rho: HypersurfaceModel, x, v, tol: float = 1e-9) -> float:
    """``-d theta(v, J v)`` with ``theta = d rho o J``, from exact derivatives.

    ``v`` is a complex vector (length ``n - 1`` or ``n``) or a real 2n-vector.
    """
    n = J.n
    x = as_points(x, n)
    vr = _real_vector(v, n)
    g = rho.gradient(x)
    R, dR = J.real_jet(x)
    Jv = R @ vr
    scale = np.linalg.norm(g) * max(np.linalg.norm(vr), 1e-300)
    if abs(g @ vr) > tol * scale or abs(g @ Jv) > tol * scale:
        raise ValueError("v is not in the J-invariant tangent space")
    Hs = rho.hessian(x)
    # D[k, i] = d_k theta_i
    D = np.einsum("ka,ai->ki", Hs, R) + np.einsum("a,aik->ki", g, dR)
    dtheta = D - D.T
    return float(-(vr @ dtheta @ Jv))


def levi_correction(J: AcsModel, v) -> float:
    """Contribution of the linear part of ``J`` to the Levi form at the origin."""
    n = J.n
    v = np.asarray(v, dtype=complex)
    if v.shape[-1] == n:
        v = v[..., :n - 1]
    M = J.L_mixed[n - 1, :n - 1, :n - 1]
    val = 2j * np.einsum("a,ab,b->", np.conj(v), M - M.conj().T, v)
    return float(val.real)


def levi_matrix(J: AcsModel, rho: HypersurfaceModel) -> np.ndarray:
    """Hermitian matrix of the Levi form at the origin on tangential vectors.

    Recovered by polarization from ``levi_numeric``: ``L(v) = v^* M v``.
    """
    m = J.n - 1
    M = np.zeros((m, m), dtype=complex)
    e = np.eye(m)
    for a in range(m):
        M[a, a] = levi_numeric(J, rho, np.zeros(J.n), e[a])
    for a in range(m):
        for b in range(a + 1, m):
            re = (levi_numeric(J, rho, np.zeros(J.n), e[a] + e[b]) - M[a, a] - M[b, b]) / 2
            im = (levi_numeric(J, rho, np.zeros(J.n), e[a] + 1j * e[b]) - M[a, a] - M[b, b]) / 2
            M[a, b] = re - 1j * im
            M[b, a] = np.conj(M[a, b])
    return M


# ---------------------------------------------------------------------------
# standard form


@dataclass
class StandardFormReport:
    ok: bool
    violations: list[str] = field(default_factory=list)

    def __bool__(self):
        return self.ok


def is_standard_form(J: AcsModel, rho: HypersurfaceModel, tol: float = 1e-12) -> StandardFormReport:
    n = J.n
    m = n - 1
    out = []
    mixed = J.L_mixed[n - 1, :m, :m]
    anti = J.L_anti[n - 1, :m, :m]
    if np.abs(mixed).max(initial=0.0) > tol:
        out.append("normal row of L_mixed must vanish on tangential indices")
    if np.abs(anti + anti.T).max(initial=0.0) > tol:
        out.append("normal row of L_anti must be antisymmetric on tangential indices")
    if np.abs(rho.K).max(initial=0.0) > tol:
        out.append("K must vanish")
    if np.abs(rho.H - np.eye(m)).max(initial=0.0) > tol:
        out.append("H must be the identity")
    if J.p_block is not None:
        out.append("J has a raw (1,0)-block override")
    return StandardFormReport(not out, out)


def osculating_pair(J: AcsModel, rho: HypersurfaceModel, tol: float = 1e-12) -> OsculatingPair:
    rep = is_standard_form(J, rho, tol)
    if not rep:
        raise ValueError("pair is not in standard form: " + "; ".join(rep.violations))
    n = J.n
    A = J.L_anti[n - 1, :n - 1, :n - 1]
    return OsculatingPair(n, 0.5 * (A - A.T))


# ---------------------------------------------------------------------------
# polynomial coordinate changes


Q_DEGREE = 4
RHO_DEGREE = 5


def _jacobian_blocks(chart: list[PolyMap]) -> PolyMap:
    """``2n x 2n`` complex Jacobian ``[[Phi_w, Phi_wbar], [conj Phi_wbar, conj Phi_w]]``."""
    n = len(chart)
    entries = [[None] * (2 * n) for _ in range(2 * n)]
    for i in range(n):
        ci = chart[i].conj()
        for j in range(n):
            entries[i][j] = chart[i].wirtinger(j)
            entries[i][n + j] = chart[i].wirtinger(j, conjugated=True)
            entries[n + i][j] = ci.wirtinger(j)
            entries[n + i][n + j] = ci.wirtinger(j, conjugated=True)
    rows = [PolyMap.stack(row) for row in entries]
    return PolyMap.stack(rows)


def _matrix_inverse_series(M: PolyMap, max_degree: int) -> PolyMap:
    """Inverse of a matrix polynomial with invertible constant term, truncated."""
    size = M.value_shape[0]
    zero = (0,) * M.nvars
    M0inv = np.linalg.inv(M.coeff(zero, zero))
    E = -(PolyMap.constant(M.nvars, M0inv) @ (M - PolyMap.constant(M.nvars, M.coeff(zero, zero))))
    total = PolyMap.constant(M.nvars, np.eye(size))
    term = total
    for _ in range(max_degree):
        term = term.matmul(E, max_degree)
        if term.is_zero():
            break
        total = total + term
    return total.matmul(PolyMap.constant(M.nvars, M0inv), max_degree)


def _p_series(Q: PolyMap, max_degree: int) -> PolyMap:
    """``i sqrt(I + Q conj(Q))`` as a truncated series (``Q`` vanishes at 0)."""
    n = Q.value_shape[0]
    X = Q.matmul(Q.conj(), max_degree)
    S = PolyMap.constant(Q.nvars, np.eye(n)) + X * 0.5
    X2 = X.matmul(X, max_degree)
    S = S - X2 * 0.125
    X3 = X2.matmul(X, max_degree)
    if not X3.is_zero():
        S = S + X3 * (1 / 16)
    return S * 1j


def pullback(J: AcsModel, rho: HypersurfaceModel, chart: list[PolyMap],
             q_degree: int = Q_DEGREE, rho_degree: int = RHO_DEGREE):
    """Pull ``(J, rho)`` back through ``z = chart(w)``; returns ``(J', rho')``.

    ``chart`` must fix the origin with ``d chart(0)`` complex linear, preserve
    the normal axis to first order, and leave the linear part of ``rho`` equal
    to ``2 Re w^n``.
    """
    n = J.n
    Qc = J.q_poly.compose(chart, q_degree)
    if J.p_block is not None:
        raise ValueError("cannot transport a structure with a raw (1,0)-block override")
    Pc = _p_series(Qc, q_degree)
    C = PolyMap.stack([
        PolyMap.stack([Pc[i, j] for j in range(n)] + [Qc[i, j] for j in range(n)])
        for i in range(n)
    ] + [
        PolyMap.stack([Qc.conj()[i, j] for j in range(n)] + [Pc.conj()[i, j] for j in range(n)])
        for i in range(n)
    ])
    M = _jacobian_blocks(chart)
    Minv = _matrix_inverse_series(M, q_degree)
    Cp = Minv.matmul(C.matmul(M, q_degree), q_degree)
    new_q = PolyMap(n, {k: c[:n, n:] for k, c in Cp.terms.items()}, (n, n)).truncate(q_degree)
    J2 = AcsModel.from_q(new_q)
    rho2 = hypersurface_from_poly(rho.rho.compose(chart, rho_degree).truncate(rho_degree), n)
    return J2, rho2


def hypersurface_from_poly(poly: PolyMap, n: int, tol: float = 1e-12) -> HypersurfaceModel:
    """Read ``(K, H, remainder)`` off a real polynomial with linear part ``2 Re z^n``."""
    m = n - 1
    zero = (0,) * n
    e = [tuple(int(i == k) for i in range(n)) for k in range(n)]
    lin = {k: poly.coeff(*k) for k in [(e[j], zero) for j in range(n)] + [(zero, e[j]) for j in range(n)]}
    expected = {key: (1.0 if key in ((e[n - 1], zero), (zero, e[n - 1])) else 0.0) for key in lin}
    if abs(poly.coeff(zero, zero)) > tol or any(abs(lin[k] - expected[k]) > tol for k in lin):
        raise ValueError("defining function is not pre-aligned: linear part must be 2 Re z^n")
    K = np.zeros((m, m), dtype=complex)
    H = np.zeros((m, m), dtype=complex)
    for a in range(m):
        for b in range(m):
            H[a, b] = -poly.coeff(e[a], e[b])
            if a <= b:
                key = tuple(x + y for x, y in zip(e[a], e[b]))
                c = poly.coeff(key, zero)
                K[a, b] = K[b, a] = -2 * c if a == b else -c
    H = 0.5 * (H + H.conj().T)

    def is_rest(p, q):
        d = sum(p) + sum(q)
        if d <= 1:
            return False
        if d == 2 and p[-1] == 0 and q[-1] == 0:
            return False
        return True

    rest = poly.select(is_rest)
    rest = rest.real_part() if not rest.is_zero() else None
    return HypersurfaceModel(n, K, H, rest)


def compose_charts(outer: list[PolyMap], inner: list[PolyMap]) -> list[PolyMap]:
    return [c.compose(inner) for c in outer]


def identity_chart(n: int) -> list[PolyMap]:
    return variables(n)


def normalize_to_standard_form(J: AcsModel, rho: HypersurfaceModel):
    """Coordinates in which ``(J, rho)`` are in standard form.

    Three polynomial changes ``z = chart(w)`` are applied in turn: a quadratic
    shear of ``z^n`` removing ``L^n_{a b}`` and the symmetric part of
    ``L^n_{a bbar}``, a linear change of the tangential variables making
    ``H`` the identity, and a holomorphic quadratic shear removing ``K``.
    Returns ``(J', rho', chart)``.
    """
    n = J.n
    m = n - 1
    if J.p_block is not None:
        raise ValueError("structure has a raw (1,0)-block override")
    w = variables(n)
    chart = identity_chart(n)

    # step 1: z^n = w^n + (i/2) Lm_{a b} wbar^a w^b + (i/4) La_{a b} wbar^a wbar^b
    Lm = J.L_mixed[n - 1, :m, :m]
    La = J.L_anti[n - 1, :m, :m]
    if np.any(Lm) or np.any(La + La.T):
        shear = w[n - 1]
        for a in range(m):
            for b in range(m):
                if Lm[a, b] != 0:
                    shear = shear + w[a].conj() * w[b] * (0.5j * Lm[a, b])
                if La[a, b] != 0:
                    shear = shear + w[a].conj() * w[b].conj() * (0.25j * La[a, b])
        step = w[:n - 1] + [shear]
        J, rho = pullback(J, rho, step)
        chart = compose_charts(chart, step)

    # step 2: z^a = U^a_b w^b with U^T H conj(U) = I
    H = rho.H
    evals = np.linalg.eigvalsh(H)
    if evals.min() <= 0:
        raise ValueError("not strongly pseudoconvex: H is not positive definite")
    if not np.array_equal(H, np.eye(m)):
        Lc = np.linalg.cholesky(H)
        U = np.linalg.inv(Lc).T
        step = [sum((w[b] * U[a, b] for b in range(m)), PolyMap.zero(n)) for a in range(m)]
        step = step + [w[n - 1]]
        J, rho = pullback(J, rho, step)
        chart = compose_charts(chart, step)

    # step 3: z^n = w^n + (1/2) K_{a b} w^a w^b
    K = rho.K
    if np.any(K):
        shear = w[n - 1]
        for a in range(m):
            for b in range(m):
                if K[a, b] != 0:
                    shear = shear + w[a] * w[b] * (0.5 * K[a, b])
        step = w[:n - 1] + [shear]
        J, rho = pullback(J, rho, step)
        chart = compose_charts(chart, step)

    J, rho = _clean_standard(J, rho)
    return J, rho, chart


def _clean_standard(J: AcsModel, rho: HypersurfaceModel, tol: float = 1e-12):
    """Replace rounding-level residues of the normalized slots by exact values."""
    n, m = J.n, J.n - 1
    Lm = J.L_mixed.copy()
    La = J.L_anti.copy()
    if np.abs(Lm[n - 1, :m, :m]).max(initial=0.0) <= tol:
        Lm[n - 1, :m, :m] = 0
    A = La[n - 1, :m, :m]
    if np.abs(A + A.T).max(initial=0.0) <= tol:
        La[n - 1, :m, :m] = 0.5 * (A - A.T)
    K = rho.K if np.abs(rho.K).max(initial=0.0) > tol else np.zeros_like(rho.K)
    H = rho.H if np.abs(rho.H - np.eye(m)).max(initial=0.0) > tol else np.eye(m)
    return (AcsModel(n, Lm, La, J.higher, J.p_block),
            HypersurfaceModel(n, K, H, rho.remainder))


# ---------------------------------------------------------------------------
# anisotropic dilations


def _weight_of(p, q, w) -> int:
    return int(np.dot(w, np.add(p, q)))


def dilate(J: AcsModel, rho: HypersurfaceModel, t: float):
    """Pair transported by ``phi_t(z) = (z'/t, z^n/t^2)``, with ``rho^t = t^-2 rho o phi_t^-1``.

    A monomial of weight ``k`` in entry ``Q[i, j]`` is multiplied by
    ``t^(k - w_i + w_j)``; a monomial of weight ``k`` in ``rho`` by ``t^(k - 2)``.
    """
    if t == 0:
        raise ValueError("t = 0: use osculating_pair instead")
    n = J.n
    w = weights(n)
    rel = w[None, :] - w[:, None]  # w_j - w_i

    def scale_q(p, q, c):
        return c * float(t) ** (_weight_of(p, q, w) + rel)

    q_new = J.q_poly.map_coeffs(scale_q)
    p_new = J.p_block.map_coeffs(scale_q) if J.p_block is not None else None
    Jt = AcsModel.from_q(q_new, p_new)

    def scale_r(p, q, c):
        return c * float(t) ** (_weight_of(p, q, w) - 2)

    rem = rho.remainder.map_coeffs(scale_r) if rho.remainder is not None else None
    return Jt, HypersurfaceModel(n, rho.K, rho.H, rem)


def pair_distance(J1: AcsModel, rho1: HypersurfaceModel, J2: AcsModel, rho2: HypersurfaceModel) -> float:
    """Largest coefficient difference between two pairs (structure and defining function)."""
    dq = (J1.q_poly - J2.q_poly).max_abs_coeff()
    dr = (rho1.rho - rho2.rho).max_abs_coeff()
    return max(dq, dr)


# ---------------------------------------------------------------------------
# random test pairs


def _random_complex(rng: np.random.Generator, *shape) -> np.ndarray:
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


def random_pair(rng: np.random.Generator, n: int, scale: float = 0.05, standard: bool = True,
                higher: bool = True) -> tuple[AcsModel, HypersurfaceModel]:
    """Random graded pair with coefficients of size ``scale``.

    With ``standard`` the normalized slots are fixed (``K = 0``, ``H = I``,
    no ``L^n_{a b}``, antisymmetric ``L^n_{a bbar}``); otherwise ``K`` is random
    and ``H`` is a random positive definite Gram matrix close to ``I``; the
    tangential block of the normal row of ``L_mixed`` is halved until the pair
    is strongly pseudoconvex.  ``higher`` adds quadratic
    structure terms and weight three remainder terms.
    """
    m = n - 1
    Lm = scale * _random_complex(rng, n, n, n)
    La = scale * _random_complex(rng, n, n, n)
    if standard:
        Lm[n - 1, :m, :m] = 0
        A = La[n - 1, :m, :m]
        La[n - 1, :m, :m] = 0.5 * (A - A.T)
        K = np.zeros((m, m))
        H = np.eye(m)
    else:
        K = scale * _random_complex(rng, m, m)
        K = K + K.T
        G = np.eye(m) + scale * _random_complex(rng, m, m)
        H = G @ G.conj().T
    hi = None
    rem = None
    if higher:
        e = np.eye(n, dtype=int)
        zero = (0,) * n
        first, last = tuple(e[0]), tuple(e[n - 1])
        keys = [(first, first), (last, first), (tuple(2 * e[0]), zero)]
        hi = PolyMap(n, {k: scale * _random_complex(rng, n, n) for k in keys}, (n, n))
        rem = PolyMap(n, {(tuple(2 * e[0]), first): scale * _random_complex(rng)[()],
                          (last, first): scale * _random_complex(rng)[()]})
        rem = rem.real_part()
    J, rho = AcsModel(n, Lm, La, hi), HypersurfaceModel(n, K, H, rem)
    while np.linalg.eigvalsh(levi_matrix(J, rho)).max() >= 0:
        Lm[n - 1, :m, :m] *= 0.5
        J = AcsModel(n, Lm, La, hi)
    return J, rho
