"""The osculating model problem, its explicit solutions and its linearization.

Notation: ``A`` is the antisymmetric ``(n-1) x (n-1)`` matrix of the model
structure, ``B_a = A[0, a]``, ``c_a = conj(A[a, 0])`` and ``C = conj(A)``.
A lifted disc is ``(f, g)`` where ``g`` holds the fiber coordinates; a
perturbation of it is written ``(h, k)``.

The boundary operator has three slots: ``M0`` (real valued), ``Ma`` (complex,
one per tangential index) and ``Mn`` (imaginary valued, stored divided by
``i``).  Laurent tables have their last axis indexed by ``m + M``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .algebra import DiscMap, antiderivative_I, boundary_fourier, laurent_resize
from .cotangent import LiftedDisc
from .structures import AcsModel, HypersurfaceModel, OsculatingPair


@dataclass(frozen=True, eq=False)
class ModelProblem:
    n: int
    A: np.ndarray
    N: int = 12

    def __post_init__(self):
        m = self.n - 1
        A = np.asarray(self.A, dtype=complex).reshape(m, m)
        if np.abs(A + A.T).max(initial=0.0) > 1e-14:
            raise ValueError("A must be antisymmetric")
        if self.n < 2:
            raise ValueError("n must be at least 2")
        object.__setattr__(self, "A", A)

    @property
    def B(self) -> np.ndarray:
        return self.A[0, :]

    @property
    def c(self) -> np.ndarray:
        return np.conj(self.A[:, 0])

    @property
    def C(self) -> np.ndarray:
        return np.conj(self.A)

    def pair(self) -> OsculatingPair:
        return OsculatingPair(self.n, self.A)

    def acs(self) -> AcsModel:
        return self.pair().acs()

    def hypersurface(self) -> HypersurfaceModel:
        return HypersurfaceModel.siegel(self.n)


@dataclass(frozen=True)
class BasePoint:
    a: complex
    lam: float

    def __post_init__(self):
        if self.a == 0:
            raise ValueError("a must be nonzero")
        if self.lam == 0:
            raise ValueError("lambda must be nonzero")
        object.__setattr__(self, "a", complex(self.a))
        object.__setattr__(self, "lam", float(self.lam))


@dataclass(frozen=True, eq=False)
class BoundaryData:
    """Laurent tables of the three boundary slots (``phin`` stored divided by ``i``)."""

    phi0: np.ndarray
    phia: np.ndarray
    phin: np.ndarray

    def __post_init__(self):
        phi0 = np.asarray(self.phi0, dtype=complex)
        phin = np.asarray(self.phin, dtype=complex)
        phia = np.atleast_2d(np.asarray(self.phia, dtype=complex))
        if phi0.ndim != 1 or phi0.shape != phin.shape or phia.shape[1] != phi0.shape[0]:
            raise ValueError("inconsistent Laurent table shapes")
        if phi0.shape[0] % 2 != 1:
            raise ValueError("Laurent tables need odd length")
        for name, t in (("phi0", phi0), ("phin", phin)):
            scale = max(1.0, np.abs(t).max(initial=0.0))
            if np.abs(t - np.conj(t[::-1])).max(initial=0.0) > 1e-12 * scale:
                raise ValueError(f"{name} must be the table of a real function")
        object.__setattr__(self, "phi0", phi0)
        object.__setattr__(self, "phin", phin)
        object.__setattr__(self, "phia", phia)

    @property
    def M(self) -> int:
        return (self.phi0.shape[0] - 1) // 2

    @property
    def n(self) -> int:
        return self.phia.shape[0] + 1

    @classmethod
    def zeros(cls, n: int, M: int) -> "BoundaryData":
        z = np.zeros(2 * M + 1, dtype=complex)
        return cls(z, np.zeros((n - 1, 2 * M + 1), dtype=complex), z.copy())

    @classmethod
    def random(cls, rng: np.random.Generator, n: int, M: int, scale: float = 1.0) -> "BoundaryData":
        def real_table():
            t = rng.normal(size=2 * M + 1) + 1j * rng.normal(size=2 * M + 1)
            t = 0.5 * (t + np.conj(t[::-1]))
            return scale * t

        pa = scale * (rng.normal(size=(n - 1, 2 * M + 1)) + 1j * rng.normal(size=(n - 1, 2 * M + 1)))
        return cls(real_table(), pa, real_table())

    def resized(self, M: int) -> "BoundaryData":
        return BoundaryData(laurent_resize(self.phi0, M)[0], laurent_resize(self.phia, M),
                            laurent_resize(self.phin, M)[0])

    def coefficient(self, table: np.ndarray, m: int):
        M = self.M
        if abs(m) > M:
            return np.zeros(table.shape[:-1], dtype=complex) if table.ndim > 1 else 0.0
        return table[..., m + M]

    def __sub__(self, other: "BoundaryData") -> "BoundaryData":
        M = max(self.M, other.M)
        a, b = self.resized(M), other.resized(M)
        return BoundaryData(a.phi0 - b.phi0, a.phia - b.phia, a.phin - b.phin)

    def max_abs(self) -> float:
        return float(max(np.abs(self.phi0).max(), np.abs(self.phia).max(initial=0.0),
                         np.abs(self.phin).max()))

    def truncated_modes(self, M: int) -> list[tuple[str, int]]:
        """Nonzero modes beyond ``|m| <= M``, as ``(slot, m)`` pairs."""
        out = []
        for name, t in (("phi0", self.phi0[None]), ("phia", self.phia), ("phin", self.phin[None])):
            for m in range(-self.M, self.M + 1):
                if abs(m) > M and np.any(t[:, m + self.M] != 0):
                    out.append((name, m))
        return out


@dataclass(frozen=True)
class FreeParams:
    """Kernel coordinates: ``h^i(0)`` for all ``i``, ``dh^i/dzeta(0)`` for ``i >= 2``,
    ``Im(conj(a) dh^1/dzeta(0))`` and ``Re(dk_n/dzeta(0))``."""

    h0: np.ndarray
    h1: np.ndarray
    im_ah1: float = 0.0
    re_kn1: float = 0.0

    @classmethod
    def zeros(cls, n: int) -> "FreeParams":
        return cls(np.zeros(n, dtype=complex), np.zeros(n - 1, dtype=complex))

    @classmethod
    def from_vector(cls, x, n: int) -> "FreeParams":
        x = np.asarray(x, dtype=float)
        if x.shape != (4 * n,):
            raise ValueError(f"need {4 * n} real parameters")
        h0 = x[:n] + 1j * x[n:2 * n]
        h1 = x[2 * n:3 * n - 1] + 1j * x[3 * n - 1:4 * n - 2]
        return cls(h0, h1, float(x[4 * n - 2]), float(x[4 * n - 1]))

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.h0.real, self.h0.imag, self.h1.real, self.h1.imag,
                               [self.im_ah1, self.re_kn1]])


# ---------------------------------------------------------------------------
# nonlinear model residuals


def _component(d: DiscMap, i: int) -> DiscMap:
    return DiscMap(d.coeffs[i:i + 1])


def model_pde_residual(P: ModelProblem, fd: LiftedDisc) -> list[DiscMap]:
    """Interior residuals ``(F^1..F^n, G_1..G_n)`` of the model holomorphicity system."""
    n, m = P.n, P.n - 1
    f, g = fd.f, fd.g
    fc = [_component(f, i) for i in range(n)]
    gc = [_component(g, i) for i in range(n)]
    out = [fc[a].d_zetabar() for a in range(m)]
    Fn = fc[n - 1].d_zetabar()
    for a in range(m):
        dfa = fc[a].d_zeta().conj()
        for b in range(m):
            if P.A[a, b] != 0:
                Fn = Fn - fc[b].conj().mul(dfa) * (0.5j * P.A[a, b])
    out.append(Fn)
    dgn = gc[n - 1].d_zeta().conj()
    for a in range(m):
        Ga = gc[a].d_zetabar()
        for b in range(m):
            if P.C[a, b] != 0:
                Ga = Ga - fc[b].mul(dgn) * (0.5j * P.C[a, b])
        out.append(Ga)
    out.append(gc[n - 1].d_zetabar())
    return out


def model_boundary_residual(P: ModelProblem, fd: LiftedDisc) -> BoundaryData:
    """Laurent tables of the model boundary conditions.

    ``R0 = 2 Re f^n - |f'|^2``,
    ``Ra = g_a + (conj f^a + (i/2) C_ab f^b) g_n - (i/2) C_ab f^b conj(g_n)``,
    ``Rn = (zetabar g_n - zeta conj(g_n)) / i``.
    """
    n, m = P.n, P.n - 1
    f, g = fd.f, fd.g
    fc = [_component(f, i) for i in range(n)]
    gc = [_component(g, i) for i in range(n)]
    R0 = fc[n - 1] + fc[n - 1].conj()
    for a in range(m):
        R0 = R0 - fc[a].mul(fc[a].conj())
    gn, gnb = gc[n - 1], gc[n - 1].conj()
    Ra = []
    for a in range(m):
        Cf = DiscMap.zeros(1, f.N)
        for b in range(m):
            if P.C[a, b] != 0:
                Cf = Cf + fc[b] * P.C[a, b]
        r = gc[a] + (fc[a].conj() + Cf * 0.5j).mul(gn) - Cf.mul(gnb) * 0.5j
        Ra.append(r)
    Rn = (gn.times_zetabar() - gnb.times_zeta()) * (-1j)
    return _boundary_tables(R0, Ra, Rn, n)


def _boundary_tables(R0: DiscMap, Ra: list[DiscMap], Rn: DiscMap, n: int) -> BoundaryData:
    parts = [R0] + Ra + [Rn]
    M = max(p.N for p in parts)
    t0 = boundary_fourier(R0.pad(M))[0]
    tn = boundary_fourier(Rn.pad(M))[0]
    ta = (np.stack([boundary_fourier(r.pad(M))[0] for r in Ra]) if Ra
          else np.zeros((0, 2 * M + 1), dtype=complex))
    # symmetrize the real slots to remove rounding asymmetry
    t0 = 0.5 * (t0 + np.conj(t0[::-1]))
    tn = 0.5 * (tn + np.conj(tn[::-1]))
    return BoundaryData(t0, ta.reshape(n - 1, 2 * M + 1), tn)


def explicit_disc(P: ModelProblem, b: BasePoint, N: int | None = None) -> LiftedDisc:
    """The explicit stationary disc of the model problem and its lift.

    ``f = (a zeta, 0, ..., 0, |a|^2/2)`` and
    ``g = (-lam conj(a), (i lam/2) c_a a (|zeta|^2 - zeta^2), ..., lam zeta)``.
    """
    n = P.n
    N = P.N if N is None else N
    if N < 2:
        raise ValueError("degree cap must be at least 2")
    a, lam = b.a, b.lam
    f = DiscMap.zeros(n, N)
    g = DiscMap.zeros(n, N)
    f.coeffs[0, 1, 0] = a
    f.coeffs[n - 1, 0, 0] = abs(a) ** 2 / 2
    g.coeffs[0, 0, 0] = -lam * np.conj(a)
    for al in range(1, n - 1):
        coef = 0.5j * lam * P.c[al] * a
        g.coeffs[al, 1, 1] = coef
        g.coeffs[al, 2, 0] = -coef
    g.coeffs[n - 1, 1, 0] = lam
    return LiftedDisc(f, g)


# ---------------------------------------------------------------------------
# linearization at an explicit disc


def linearized_interior(P: ModelProblem, b: BasePoint, hd: LiftedDisc) -> tuple[DiscMap, DiscMap]:
    """Derivative of the interior residuals at the explicit disc, applied to ``(h, k)``."""
    n, m = P.n, P.n - 1
    a, lam = b.a, b.lam
    ab = np.conj(a)
    h = [_component(hd.f, i) for i in range(n)]
    k = [_component(hd.g, i) for i in range(n)]
    Hs = [h[al].d_zetabar() for al in range(m)]
    Hn = h[n - 1].d_zetabar()
    for al in range(1, m):
        Bal = P.B[al]
        if Bal == 0:
            continue
        Hn = Hn - h[al].conj() * (0.5j * ab * Bal) + h[al].d_zeta().conj().times_zetabar() * (0.5j * ab * Bal)
    Hs.append(Hn)
    dkn = k[n - 1].d_zeta().conj().times_zeta()
    Ks = []
    for al in range(m):
        Ka = k[al].d_zetabar()
        for be in range(m):
            if P.C[al, be] != 0:
                Ka = Ka - h[be] * (0.5j * lam * P.C[al, be])
        if P.c[al] != 0:
            Ka = Ka - dkn * (0.5j * a * P.c[al])
        Ks.append(Ka)
    Ks.append(k[n - 1].d_zetabar())
    return DiscMap.stack(Hs), DiscMap.stack(Ks)


def linearized_boundary(P: ModelProblem, b: BasePoint, hd: LiftedDisc) -> BoundaryData:
    """Derivative of the model boundary conditions at the explicit disc."""
    n, m = P.n, P.n - 1
    a, lam = b.a, b.lam
    ab = np.conj(a)
    h = [_component(hd.f, i) for i in range(n)]
    k = [_component(hd.g, i) for i in range(n)]
    M0 = h[n - 1] + h[n - 1].conj() - h[0].times_zetabar() * ab - h[0].conj().times_zeta() * a
    kn, knb = k[n - 1], k[n - 1].conj()
    Ma = []
    for al in range(m):
        r = k[al] + h[al].conj().times_zeta() * lam
        Ch = DiscMap.zeros(1, hd.N)
        for be in range(m):
            if P.C[al, be] != 0:
                Ch = Ch + h[be] * P.C[al, be]
        r = r + Ch.times_zeta() * (0.5j * lam) - Ch.times_zetabar() * (0.5j * lam)
        if al == 0:
            r = r + kn.times_zetabar() * ab
        if P.c[al] != 0:
            r = r + kn.times_zeta() * (0.5j * a * P.c[al]) - knb.times_zeta() * (0.5j * a * P.c[al])
        Ma.append(r)
    Mn = (kn.times_zetabar() - knb.times_zeta()) * (-1j)
    return _boundary_tables(M0, Ma, Mn, n)


# ---------------------------------------------------------------------------
# recursion


def solve_linearized(P: ModelProblem, b: BasePoint, phi: BoundaryData,
                     free: FreeParams | None = None, N: int | None = None) -> LiftedDisc:
    """Solve the linearized problem with boundary data ``phi`` by coefficient recursion.

    Interior equations hold exactly; the boundary tables equal ``phi`` as long
    as ``phi`` has no modes beyond ``|m| <= N - 2``.
    """
    n, m = P.n, P.n - 1
    N = P.N if N is None else N
    M = N - 2
    free = FreeParams.zeros(n) if free is None else free
    dropped = phi.truncated_modes(M)
    if dropped:
        raise ValueError(f"boundary data exceeds degree {M}; dropped modes: {dropped}")
    phi = phi.resized(max(M, 0))
    a, lam = b.a, b.lam
    ab = np.conj(a)
    B, c, C = P.B, P.c, P.C
    size = N + 2

    def p0(j):
        return phi.coefficient(phi.phi0, j)

    def pa(al, j):
        return phi.coefficient(phi.phia[al], j)

    def pn(j):
        return phi.coefficient(phi.phin, j)

    hol = np.zeros((m, size), dtype=complex)   # h^a, a < n
    hn = np.zeros(size, dtype=complex)          # holomorphic part of h^n
    kn = np.zeros(size, dtype=complex)
    kt = np.zeros((m, size), dtype=complex)     # holomorphic part of k_a

    hol[:, 0] = free.h0[:m]
    hn[0] = free.h0[m]
    hol[1:, 1] = free.h1[:m - 1]
    hn[1] = free.h1[m - 1]
    # real part of conj(a) h^1_1 from the constant mode of the first slot
    hol[0, 1] = ((2 * hn[0].real - p0(0).real) / 2 + 1j * free.im_ah1) / ab
    hol[0, 2] = (hn[1] - a * np.conj(hol[0, 0]) - 0.5j * a * np.dot(np.conj(B), hol[:, 0]) - p0(1)) / ab
    kn[0] = (pa(0, -1) - lam * np.conj(hol[0, 2])) / ab
    kn[1] = free.re_kn1 + 0.5j * pn(0).real
    kn[2] = np.conj(kn[0]) + 1j * pn(1)
    for j in range(3, size):
        kn[j] = 1j * pn(j - 1)
    for al in range(1, m):
        hol[al, 2] = np.conj(pa(al, -1)) / lam
    for j in range(3, size):
        for al in range(m):
            hol[al, j] = np.conj(pa(al, 1 - j)) / lam
    for j in range(2, size - 1):
        hn[j] = (ab * hol[0, j + 1] + 1j * a * np.dot(np.conj(B), hol[:, j - 1]) * (1 / j - 0.5) + p0(j))
    hn[size - 1] = 1j * a * np.dot(np.conj(B), hol[:, size - 2]) * (1 / (size - 1) - 0.5)
    for al in range(m):
        d = 1.0 if al == 0 else 0.0
        kt[al, 0] = pa(al, 0) - lam * np.conj(hol[al, 1]) - d * ab * kn[1]
        kt[al, 1] = (pa(al, 1) - lam * np.conj(hol[al, 0]) - 0.5j * lam * np.dot(C[al], hol[:, 0])
                     - d * ab * kn[2] - 0.5j * a * c[al] * kn[0])
        for j in range(2, size):
            nxt = kn[j + 1] if j + 1 < size else 0.0
            kt[al, j] = (pa(al, j) - 0.5j * lam * np.dot(C[al], hol[:, j - 1])
                         - d * ab * nxt - 0.5j * a * c[al] * kn[j - 1])
    return _assemble(P, b, hol, hn, kn, kt, N)


def _assemble(P, b, hol, hn, kn, kt, N) -> LiftedDisc:
    """Build ``(h, k)`` from the holomorphic data through the kernel formulas."""
    n, m = P.n, P.n - 1
    a, lam = b.a, b.lam
    ab = np.conj(a)
    cap = hol.shape[1] + 1

    def holo(vec):
        d = DiscMap.zeros(1, cap)
        d.coeffs[0, :len(vec), 0] = vec
        return d

    hs = [holo(hol[al]) for al in range(m)]
    h_n = holo(hn)
    for al in range(1, m):
        if P.B[al] == 0:
            continue
        h_n = (h_n - hs[al].conj().times_zetabar() * (0.5j * ab * P.B[al])
               + antiderivative_I(hs[al]).conj() * (1j * ab * P.B[al]))
    k_n = holo(kn)
    ks = []
    for al in range(m):
        ka = holo(kt[al])
        if P.c[al] != 0:
            ka = ka + k_n.conj().times_zeta() * (0.5j * a * P.c[al])
        for be in range(m):
            if P.C[al, be] != 0:
                ka = ka + hs[be].times_zetabar() * (0.5j * lam * P.C[al, be])
        ks.append(ka)
    h = DiscMap.stack(hs + [h_n])
    k = DiscMap.stack(ks + [k_n])
    try:
        return LiftedDisc(h.trim().pad(N), k.trim().pad(N))
    except ValueError as exc:
        raise ValueError(f"solution exceeds the degree cap {N}") from exc


def kernel_basis(P: ModelProblem, b: BasePoint, N: int | None = None) -> list[LiftedDisc]:
    """One kernel element per real free parameter (``4n`` in total)."""
    N = P.N if N is None else N
    if N < 4:
        raise ValueError("kernel basis needs N >= 4")
    n = P.n
    zero = BoundaryData.zeros(n, N - 2)
    out = []
    for e in np.eye(4 * n):
        out.append(solve_linearized(P, b, zero, FreeParams.from_vector(e, n), N))
    return out


# ---------------------------------------------------------------------------
# dense oracle


def _unit_disc(idx: int, n: int, N: int) -> LiftedDisc:
    x = np.zeros(4 * n * (N + 1) ** 2)
    x[idx] = 1.0
    return LiftedDisc.from_vector(x, n, N)


def operator_row_vector(P: ModelProblem, b: BasePoint, hd: LiftedDisc, N: int) -> np.ndarray:
    """Real vector of interior coefficients and boundary tables of the linearization."""
    Hs, Ks = linearized_interior(P, b, hd)
    inner = DiscMap(np.concatenate([Hs.pad(N + 1).coeffs, Ks.pad(N + 1).coeffs])).coeffs.ravel()
    bd = linearized_boundary(P, b, hd).resized(N + 1)
    bound = np.concatenate([bd.phi0, bd.phia.ravel(), bd.phin])
    v = np.concatenate([inner, bound])
    return np.concatenate([v.real, v.imag])


@lru_cache(maxsize=16)
def _dense_cached(n, A_bytes, N, a, lam):
    A = np.frombuffer(A_bytes, dtype=complex).reshape(n - 1, n - 1)
    P = ModelProblem(n, A, N)
    b = BasePoint(a, lam)
    cols = [operator_row_vector(P, b, _unit_disc(i, n, N), N) for i in range(4 * n * (N + 1) ** 2)]
    return np.stack(cols, axis=1)


def dense_operator(P: ModelProblem, b: BasePoint, N: int | None = None) -> np.ndarray:
    """Real matrix of the full linearization on all coefficients with cap ``N``."""
    N = P.N if N is None else N
    return _dense_cached(P.n, P.A.tobytes(), N, b.a, b.lam)


def boundary_target_vector(phi: BoundaryData, n: int, N: int) -> np.ndarray:
    inner = np.zeros(2 * n * (N + 2) ** 2, dtype=complex)
    bd = phi.resized(N + 1)
    v = np.concatenate([inner, bd.phi0, bd.phia.ravel(), bd.phin])
    return np.concatenate([v.real, v.imag])


def free_parameter_rows(P: ModelProblem, b: BasePoint, N: int) -> np.ndarray:
    """Linear functionals reading the free parameters off a coefficient vector."""
    n = P.n
    ab = np.conj(b.a)
    size = 2 * n * (N + 1) ** 2

    def idx(comp, p, q):
        return comp * (N + 1) ** 2 + p * (N + 1) + q

    rows = []

    def cplx(comp, p, q, factor=1.0):
        """Rows giving real and imaginary parts of ``factor * coeff``."""
        re = np.zeros(2 * size)
        im = np.zeros(2 * size)
        i = idx(comp, p, q)
        fr, fi = complex(factor).real, complex(factor).imag
        re[i], re[size + i] = fr, -fi
        im[i], im[size + i] = fi, fr
        return re, im

    h0 = [cplx(i, 0, 0) for i in range(n)]
    h1 = [cplx(i, 1, 0) for i in range(1, n)]
    rows += [r for r, _ in h0] + [i for _, i in h0] + [r for r, _ in h1] + [i for _, i in h1]
    rows.append(cplx(0, 1, 0, ab)[1])
    rows.append(cplx(2 * n - 1, 1, 0)[0])
    return np.stack(rows)


def dense_solve(P: ModelProblem, b: BasePoint, phi: BoundaryData, free: FreeParams,
                N: int | None = None) -> LiftedDisc:
    """Least-squares solution of the linearized problem with fixed free parameters.

    Independent of the recursion: it only uses the forward operators.
    """
    N = P.N if N is None else N
    n = P.n
    L = dense_operator(P, b, N)
    F = free_parameter_rows(P, b, N)
    lhs = np.vstack([L, F])
    rhs = np.concatenate([boundary_target_vector(phi, n, N), free.to_vector()])
    x, *_ = np.linalg.lstsq(lhs, rhs, rcond=None)
    return LiftedDisc.from_vector(x, n, N)


def kernel_rank_report(P: ModelProblem, b: BasePoint, N: int | None = None) -> dict:
    """Rank and rank gap of the kernel basis against the dense null space.

    The recursion basis and an SVD null-space basis of the dense operator are
    placed side by side: when both span the same ``4n``-dimensional space the
    combined matrix has rank ``4n`` with a large gap after it.
    """
    N = P.N if N is None else N
    n = P.n
    Kb = np.stack([k.to_vector() for k in kernel_basis(P, b, N)], axis=1)
    L = dense_operator(P, b, N)
    U, s, Vt = np.linalg.svd(L, full_matrices=True)
    # null space: right singular vectors for the 4n smallest singular values
    null = Vt[-4 * n:].T
    s_op = np.concatenate([s, np.zeros(Vt.shape[0] - s.size)])
    combined = np.hstack([Kb / np.linalg.norm(Kb, axis=0), null])
    sc = np.linalg.svd(combined, compute_uv=False)
    sk = np.linalg.svd(Kb, compute_uv=False)
    tol = sc[0] * 1e-9
    return {
        "n": n,
        "N": N,
        "basis_size": Kb.shape[1],
        "basis_rank": int(np.sum(sk > sk[0] * 1e-10)),
        "rank": int(np.sum(sc > tol)),
        "rank_gap": float(sc[4 * n - 1] / max(sc[4 * n], 1e-300)),
        "operator_gap": float(s_op[-4 * n - 1] / max(s_op[-4 * n], 1e-300)),
    }


# ---------------------------------------------------------------------------
# evaluation map


@dataclass
class Evaluation:
    point: np.ndarray
    ratio: np.ndarray
    scale: float

    def to_vector(self) -> np.ndarray:
        """Real vector of length ``4n``: point, ratio without its unit real part, scale."""
        return np.concatenate([self.point.real, self.point.imag, [self.ratio[0].imag],
                               self.ratio[1:].real, self.ratio[1:].imag, [self.scale]])


def act(c: complex, w, J: AcsModel | None, at) -> np.ndarray:
    """``c . w`` for a tangent vector ``w`` at ``at`` (ordinary product when ``J`` is None)."""
    w = np.asarray(w, dtype=complex)
    if J is None:
        return c * w
    Jw = J.apply(at, w)
    return c.real * w + c.imag * Jw


def direction_ratio(v, a: complex, J: AcsModel | None = None, at=None) -> np.ndarray:
    w = act(1 / a, v, J, at)
    den = w[0].real
    if abs(den) < 1e-14 * max(np.abs(w).max(), 1e-300):
        raise ValueError("transversal normalization failed")
    return w / den


def evaluation_map(fd: LiftedDisc, a: complex, J: AcsModel | None = None) -> Evaluation:
    """Point, normalized tangent direction and scale of a lifted disc at the origin.

    The tangent direction is ``df(d/dx)`` at ``zeta = 0``, made scale free by
    the ``a^-1`` action of ``J`` at ``f(0)`` and division by the real part of
    its first component.
    """
    f, g = fd.f, fd.g
    p = f(0.0)
    w = f.d_zeta()(0.0) + f.d_zetabar()(0.0)
    ratio = direction_ratio(w, a, J, p)
    scale = float(g.d_zeta()(0.0)[-1].real)
    return Evaluation(p, ratio, scale)
