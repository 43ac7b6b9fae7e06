"""Canonical lift of a structure to the cotangent bundle, and disc residuals.

Fiber coordinates: a covector ``u_j dx^j + v_j dy^j`` is written
``P_j dz^j + conj(P_j) dzbar^j`` with ``P_j = (u_j - i v_j) / 2``.
The lifted structure is reported in the complex frame ordered
``(z, P, zbar, Pbar)`` as blocks ``[[PP, QQ], [conj QQ, conj PP]]`` of size
``2n x 2n``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .algebra import DiscMap
from .structures import AcsModel, HypersurfaceModel, complex_to_real, real_to_complex

CHART_RADIUS = 2.0


# ---------------------------------------------------------------------------
# collocation nodes


def interior_nodes(N: int, radii: int = 8) -> np.ndarray:
    """Tensor grid of Gauss--Legendre radii in (0, 1) times ``2N + 1`` angles."""
    x, _ = np.polynomial.legendre.leggauss(radii)
    r = 0.5 * (x + 1)
    theta = 2 * np.pi * np.arange(2 * N + 1) / (2 * N + 1)
    return (r[:, None] * np.exp(1j * theta)[None, :]).ravel()


def boundary_nodes(N: int) -> np.ndarray:
    return np.exp(2j * np.pi * np.arange(4 * N + 1) / (4 * N + 1))


# ---------------------------------------------------------------------------
# lifted discs


@dataclass(frozen=True, eq=False)
class LiftedDisc:
    """A disc ``f`` together with the fiber coordinates ``g`` of its lift."""

    f: DiscMap
    g: DiscMap

    def __post_init__(self):
        if self.f.dim != self.g.dim:
            raise ValueError("f and g must have the same dimension")
        N = max(self.f.N, self.g.N)
        object.__setattr__(self, "f", self.f.pad(N))
        object.__setattr__(self, "g", self.g.pad(N))

    @property
    def n(self) -> int:
        return self.f.dim

    @property
    def N(self) -> int:
        return self.f.N

    @cached_property
    def stacked(self) -> DiscMap:
        return DiscMap(np.concatenate([self.f.coeffs, self.g.coeffs]))

    def pad(self, N: int) -> "LiftedDisc":
        return LiftedDisc(self.f.pad(N), self.g.pad(N))

    def __add__(self, other: "LiftedDisc") -> "LiftedDisc":
        return LiftedDisc(self.f + other.f, self.g + other.g)

    def __sub__(self, other: "LiftedDisc") -> "LiftedDisc":
        return LiftedDisc(self.f - other.f, self.g - other.g)

    def __mul__(self, s) -> "LiftedDisc":
        return LiftedDisc(self.f * s, self.g * s)

    __rmul__ = __mul__

    def to_vector(self) -> np.ndarray:
        """Real vector of all coefficients: real parts then imaginary parts."""
        c = self.stacked.coeffs.ravel()
        return np.concatenate([c.real, c.imag])

    @classmethod
    def from_vector(cls, x: np.ndarray, n: int, N: int) -> "LiftedDisc":
        size = 2 * n * (N + 1) ** 2
        c = (x[:size] + 1j * x[size:]).reshape(2 * n, N + 1, N + 1)
        return cls(DiscMap(c[:n]), DiscMap(c[n:]))

    def distance(self, other: "LiftedDisc") -> float:
        N = max(self.N, other.N)
        return (self.pad(N) - other.pad(N)).stacked.norm()


# ---------------------------------------------------------------------------
# the canonical lift


def _frame(n: int) -> tuple[np.ndarray, np.ndarray]:
    """``(T, T^-1)`` from real ``(x, y, u, v)`` to complex ``(z, P, zbar, Pbar)``."""
    eye = np.eye(n)
    T = np.zeros((2 * n, 4 * n), dtype=complex)
    T[:n, :n], T[:n, n:2 * n] = eye, 1j * eye
    T[n:, 2 * n:3 * n], T[n:, 3 * n:] = 0.5 * eye, -0.5j * eye
    That = np.vstack([T, T.conj()])
    return That, np.linalg.inv(That)


@dataclass(frozen=True, eq=False)
class LiftedStructure:
    """The canonical lift of ``base`` to ``T^* C^n``, evaluated on demand.

    The lift is affine in the fiber; its coefficients involve ``J`` and its
    first derivatives, which are obtained exactly from the polynomial data of
    ``base``.
    """

    base: AcsModel

    @property
    def n(self) -> int:
        return self.base.n

    def fiber_term(self, J: np.ndarray, dJ: np.ndarray, p: np.ndarray) -> np.ndarray:
        """Lower-left real block ``B[j, i]`` coupling ``dx^i`` to ``d/dp_j``.

        ``dJ[..., a, i, k] = d J^a_i / dx^k``; ``p`` holds real fiber
        coordinates ``(u, v)``.
        """
        # J^a_l (J^l_{i,m} J^m_j - J^l_{j,m} J^m_i)
        X = np.einsum("...al,...lim,...mj->...aij", J, dJ, J)
        T = -dJ + np.swapaxes(dJ, -1, -2) + X - np.swapaxes(X, -1, -2)
        # T[a, i, j]: contribution to B[j, i]
        return 0.5 * np.einsum("...a,...aij->...ji", p, T)

    def real_matrix(self, z, P) -> np.ndarray:
        """Real ``4n x 4n`` matrix in ``(x, y, u, v)`` at base ``z`` and fiber ``P``."""
        z = np.asarray(z, dtype=complex)
        P = np.asarray(P, dtype=complex)
        J, dJ = self.base.real_jet(z)
        p = np.concatenate([2 * P.real, -2 * P.imag], axis=-1)
        B = self.fiber_term(J, dJ, p)
        zero = np.zeros_like(J)
        top = np.concatenate([J, zero], axis=-1)
        bot = np.concatenate([B, np.swapaxes(J, -1, -2)], axis=-1)
        return np.concatenate([top, bot], axis=-2)

    def blocks(self, z, P) -> tuple[np.ndarray, np.ndarray]:
        """Complex-frame blocks ``(PP, QQ)`` of size ``2n x 2n``."""
        That, Tinv = _frame(self.n)
        C = That @ self.real_matrix(z, P) @ Tinv
        m = 2 * self.n
        return C[..., :m, :m], C[..., :m, m:]

    def blocks_from_jet(self, J, dJ, P, Pb=None, Qb=None) -> tuple[np.ndarray, np.ndarray]:
        """Complex-frame blocks from a precomputed real jet of the base structure.

        Assembled blockwise: the base blocks, the dual action on the fiber
        and the fiber term converted to the complex frame.
        """
        n = self.n
        if Pb is None or Qb is None:
            Pb, Qb = real_to_complex(J)
        p = np.concatenate([2 * P.real, -2 * P.imag], axis=-1)
        B = self.fiber_term(J, dJ, p)
        # B maps (dx, dy) to (du, dv); convert to (dz, dzbar) -> (dP, dPbar)
        # dP = (du - i dv)/2 and dx = (dz + dzbar)/2, dy = (dz - dzbar)/(2i)
        Bxx, Bxy, Byx, Byy = B[..., :n, :n], B[..., :n, n:], B[..., n:, :n], B[..., n:, n:]
        top = 0.5 * (Bxx - 1j * Byx)
        bot = 0.5 * (Bxy - 1j * Byy)
        Bz = 0.5 * (top - 1j * bot)
        Bzb = 0.5 * (top + 1j * bot)
        shape = Pb.shape[:-2]
        PP = np.zeros(shape + (2 * n, 2 * n), dtype=complex)
        QQ = np.zeros_like(PP)
        PP[..., :n, :n] = Pb
        QQ[..., :n, :n] = Qb
        PP[..., n:, :n] = Bz
        QQ[..., n:, :n] = Bzb
        PP[..., n:, n:] = np.swapaxes(Pb, -1, -2)
        QQ[..., n:, n:] = np.swapaxes(np.conj(Qb), -1, -2)
        return PP, QQ

    def validate(self, z, P) -> float:
        """Largest ``|JJ^2 + Id|`` entry over the given sample points."""
        R = self.real_matrix(z, P)
        return float(np.abs(R @ R + np.eye(4 * self.n)).max())


def lift_structure(J: AcsModel) -> LiftedStructure:
    return LiftedStructure(J)


def model_lift_blocks(A: np.ndarray, z, P=None) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form lift of the osculating model structure.

    Base: ``Q[n, a] = A_{a b} zbar^b``.  Fiber: ``dP_a`` picks up
    ``conj(A_{a b}) z^b dPbar_n``; the coupling between base and fiber vanishes.
    """
    A = np.asarray(A, dtype=complex)
    z = np.asarray(z, dtype=complex)
    n = A.shape[0] + 1
    m = n - 1
    shape = z.shape[:-1]
    PP = np.broadcast_to(1j * np.eye(2 * n), shape + (2 * n, 2 * n)).copy()
    QQ = np.zeros(shape + (2 * n, 2 * n), dtype=complex)
    QQ[..., n - 1, :m] = np.einsum("ab,...b->...a", A, np.conj(z[..., :m]))
    QQ[..., n:n + m, 2 * n - 1] = np.einsum("ab,...b->...a", np.conj(A), z[..., :m])
    return PP, QQ


# ---------------------------------------------------------------------------
# C-action


def complex_action(zeta: complex, w, J: AcsModel, at=None, kind: str = "tangent") -> np.ndarray:
    """``Re(zeta) w + Im(zeta) J(w)`` for a tangent vector or covector.

    Tangent vectors are given by their ``dz`` components; covectors by their
    ``dz`` coefficients (the real covector is ``w dz + conj(w) dzbar``), on
    which ``J`` acts by ``alpha -> alpha o J``.
    """
    w = np.asarray(w, dtype=complex)
    at = np.zeros(J.n) if at is None else at
    P, Q = J.blocks(at)
    if kind == "tangent":
        Jw = np.einsum("...ij,...j->...i", P, w) + np.einsum("...ij,...j->...i", Q, np.conj(w))
    elif kind == "cotangent":
        Jw = np.einsum("...ji,...j->...i", P, w) + np.einsum("...ji,...j->...i", np.conj(Q), np.conj(w))
    else:
        raise ValueError("kind must be 'tangent' or 'cotangent'")
    zeta = np.asarray(zeta)
    return zeta.real[..., None] * w + zeta.imag[..., None] * Jw


# ---------------------------------------------------------------------------
# holomorphicity


def check_chart(values: np.ndarray, nodes: np.ndarray, radius: float = CHART_RADIUS) -> None:
    size = np.abs(values).max(axis=-1)
    k = int(np.argmax(size))
    if size[k] > radius:
        raise ValueError(f"disc leaves the chart at zeta = {nodes[k]:.6g} (|f| = {size[k]:.3g})")


def cr_operator(PP, QQ, F, Fz, Fzb) -> np.ndarray:
    """``(1,0)`` part of ``(J + J_st) dF(d/dzetabar) + (J - J_st) dF(d/dzeta)``."""
    mv = lambda M, v: np.einsum("...ij,...j->...i", M, v)
    return (mv(PP, Fzb) + 1j * Fzb + mv(PP, Fz) - 1j * Fz + mv(QQ, np.conj(Fz + Fzb)))


def holo_residual(S, d, nodes=None, radius: float = CHART_RADIUS) -> np.ndarray:
    """Residual of the holomorphicity equation at collocation nodes.

    ``S`` is an ``AcsModel`` (with ``d`` a ``DiscMap``) or a ``LiftedStructure``
    (with ``d`` a ``LiftedDisc``).  Returns complex values of shape
    ``(len(nodes), dim)``.
    """
    if isinstance(S, LiftedStructure):
        if not isinstance(d, LiftedDisc):
            raise TypeError("a lifted structure needs a LiftedDisc")
        nodes = interior_nodes(d.N) if nodes is None else np.asarray(nodes)
        F = d.stacked
        vals, dz, dzb = F(nodes), F.d_zeta()(nodes), F.d_zetabar()(nodes)
        check_chart(vals[:, :S.n], nodes, radius)
        J, dJ = S.base.real_jet(vals[:, :S.n])
        PP, QQ = S.blocks_from_jet(J, dJ, vals[:, S.n:])
        return cr_operator(PP, QQ, vals, dz, dzb)
    if isinstance(d, LiftedDisc):
        d = d.f
    nodes = interior_nodes(d.N) if nodes is None else np.asarray(nodes)
    vals, dz, dzb = d(nodes), d.d_zeta()(nodes), d.d_zetabar()(nodes)
    check_chart(vals, nodes, radius)
    P, Q = S.blocks(vals)
    return cr_operator(P, Q, vals, dz, dzb)


# ---------------------------------------------------------------------------
# conormal condition


@dataclass
class ConormalResidual:
    r0: np.ndarray
    r: np.ndarray
    lam: np.ndarray


def twisted_normal(rho: HypersurfaceModel, J: AcsModel, z, zeta) -> np.ndarray:
    """``dz`` coefficients of the covector ``zeta . d rho`` at ``z``."""
    c = rho.dz(z)
    return complex_action(zeta, c, J, at=z, kind="cotangent")


def conormal_residual(rho: HypersurfaceModel, J: AcsModel, fd: LiftedDisc, zeta,
                      tol_section: float = 1e-8, check_section: bool = True) -> ConormalResidual:
    """Boundary residuals of the stationarity condition at boundary points ``zeta``.

    ``r0 = rho(f)``; ``r`` has real components ``(Re r_a, Im r_a, r_n)`` where
    the multiplier is eliminated through the normal component:
    ``lam = Re(g_n / w_n)``, ``r_a = g_a - lam w_a`` and ``r_n = Im(g_n / w_n)``
    with ``w`` the covector ``zeta . d rho``.
    """
    zeta = np.atleast_1d(np.asarray(zeta, dtype=complex))
    if np.abs(np.abs(zeta) - 1).max() > 1e-12:
        raise ValueError("conormal residual needs boundary points |zeta| = 1")
    z = fd.f(zeta)
    g = fd.g(zeta)
    w = twisted_normal(rho, J, z, zeta)
    ratio = g[:, -1] / w[:, -1]
    lam = ratio.real
    ra = g[:, :-1] - lam[:, None] * w[:, :-1]
    r = np.concatenate([ra.real, ra.imag, ratio.imag[:, None]], axis=1)
    if check_section:
        gmax = np.abs(g).max()
        if np.abs(lam).min() <= tol_section * gmax or gmax == 0:
            raise ValueError("degenerate: hits zero section")
    return ConormalResidual(rho(z), r, lam)
