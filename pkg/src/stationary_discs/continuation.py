"""Homotopy continuation of stationary discs along the dilation family.

The unknown is the full coefficient vector of a lifted disc ``(f, g)`` with
degree cap ``N``.  For a parameter ``t`` the residual stacks, in this order:

* interior: the holomorphicity residual of the lifted structure of ``J^t`` at
  interior collocation nodes;
* boundary: ``rho^t(f)`` and the conormal residual at boundary nodes;
* normalization: evaluation map minus its target, times a weight.

The Jacobian is assembled node by node: every interior residual depends on
the coefficients only through the local jet ``(F, dF/dzeta, dF/dzetabar)`` at
its node, and every boundary residual through ``F``.  Derivatives in the jet
variables come from central differences (batched over all nodes) or in
closed form for the parts that are linear in the jet; the chain rule with the
exact monomial basis gives the coefficient-space Jacobian.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .algebra import DiscMap
from .cotangent import (LiftedDisc, LiftedStructure, conormal_residual, cr_operator,
                        holo_residual, interior_nodes, twisted_normal)
from .rhmodel import BasePoint, ModelProblem, direction_ratio, evaluation_map, explicit_disc
from .structures import (AcsModel, HypersurfaceModel, dilate, is_standard_form,
                         osculating_pair)

log = logging.getLogger(__name__)

DEFAULT_SCHEDULE = (0.0, 0.05, 0.1, 0.2, 0.4, 0.7, 1.0)


@dataclass(eq=False)
class ContinuationProblem:
    """Target data and numerical parameters for one continuation run."""

    J: AcsModel
    rho: HypersurfaceModel
    z_o: np.ndarray
    v: np.ndarray
    N: int = 8
    schedule: tuple = DEFAULT_SCHEDULE
    newton_tol: float = 1e-11
    residual_tol: float = 1e-8
    max_iter: int = 12
    min_step: float = 1e-3
    radii: int | None = None
    angles: int | None = None
    norm_weight: float = 1.0

    def __post_init__(self):
        n = self.J.n
        self.z_o = np.asarray(self.z_o, dtype=complex)
        self.v = np.asarray(self.v, dtype=complex)
        if self.z_o.shape != (n,) or self.v.shape != (n,):
            raise ValueError("z_o and v must be complex n-vectors")
        if np.any(self.z_o[:-1] != 0) or self.z_o[-1].imag != 0 or self.z_o[-1].real <= 0:
            raise ValueError("z_o must lie on the inward normal axis (0, ..., 0, x) with x > 0")
        if not np.any(self.v[:-1]):
            raise ValueError("v has no tangential component: real normal lines are excluded")
        if self.v[0] == 0:
            raise ValueError("transversal normalization failed: first component of v vanishes")
        rep = is_standard_form(self.J, self.rho)
        if not rep:
            raise ValueError("pair is not in standard form: " + "; ".join(rep.violations))
        sched = tuple(float(t) for t in self.schedule)
        if sched[0] > 0.1 or sched[-1] != 1.0 or any(b <= a for a, b in zip(sched, sched[1:])):
            raise ValueError("schedule must increase from <= 0.1 to 1")
        self.schedule = sched
        if self.radii is None:
            self.radii = max(8, self.N + 3)
        if self.angles is None:
            self.angles = 2 * self.N + 1

    @property
    def n(self) -> int:
        return self.J.n

    @property
    def model(self) -> ModelProblem:
        return ModelProblem(self.n, osculating_pair(self.J, self.rho).A, self.N)


@dataclass
class StepRecord:
    t: float
    iterations: int
    residual: float
    accepted: bool
    snapshot: np.ndarray | None = None


@dataclass
class ContinuationTrace:
    steps: list[StepRecord] = field(default_factory=list)
    status: str = "running"

    @property
    def accepted(self) -> list[StepRecord]:
        return [s for s in self.steps if s.accepted]


# ---------------------------------------------------------------------------
# discretization


def _unitary_with_first_column(u: np.ndarray) -> np.ndarray:
    m = u.shape[0]
    Q, _ = np.linalg.qr(np.column_stack([u, np.eye(m, dtype=complex)]))
    Q = Q[:, :m]
    Q[:, 0] = u
    # re-orthogonalize the remaining columns against the exact first column
    for j in range(1, m):
        col = Q[:, j] - Q[:, :j] @ (Q[:, :j].conj().T @ Q[:, j])
        Q[:, j] = col / np.linalg.norm(col)
    return Q


def initial_disc(prob: ContinuationProblem) -> tuple[LiftedDisc, complex]:
    """Explicit model disc through ``z_o`` tangent to the tangential part of ``v``.

    Returns the disc and the reference ``a`` used by the evaluation map.
    """
    n, m = prob.n, prob.n - 1
    x = prob.z_o[-1].real
    s = np.sqrt(2 * x)
    u = prob.v[:m] / np.linalg.norm(prob.v[:m])
    U = _unitary_with_first_column(u)
    A = prob.model.A
    Aw = U.conj().T @ A @ U.conj()
    Aw = 0.5 * (Aw - Aw.T)
    disc = explicit_disc(ModelProblem(n, Aw, prob.N), BasePoint(s, 1.0))
    f = disc.f.coeffs.copy()
    g = disc.g.coeffs.copy()
    f[:m] = np.einsum("ab,bpq->apq", U, f[:m])
    g[:m] = np.einsum("ab,bpq->apq", U.conj(), g[:m])
    return LiftedDisc(DiscMap(f), DiscMap(g)), complex(s * u[0])


class Discretization:
    """Collocation nodes, monomial bases and targets for a problem."""

    def __init__(self, prob: ContinuationProblem, a_ref: complex):
        self.prob = prob
        self.n = prob.n
        self.N = N = prob.N
        self.a_ref = a_ref
        x, _ = np.polynomial.legendre.leggauss(prob.radii)
        r = 0.5 * (x + 1)
        theta = 2 * np.pi * np.arange(prob.angles) / prob.angles
        self.inner = (r[:, None] * np.exp(1j * theta)[None, :]).ravel()
        self.bound = np.exp(2j * np.pi * np.arange(4 * N + 1) / (4 * N + 1))
        self.b_in, self.bz_in, self.bzb_in = self._bases(self.inner)
        self.b_bd = self._bases(self.bound)[0]
        self._pairs: dict[float, tuple[AcsModel, HypersurfaceModel]] = {}

    def _bases(self, z):
        N = self.N
        k = np.arange(N + 1)
        zp = z[:, None] ** k
        zq = np.conj(z)[:, None] ** k
        b = (zp[:, :, None] * zq[:, None, :]).reshape(len(z), -1)
        dzp = np.zeros_like(zp)
        dzp[:, 1:] = zp[:, :-1] * k[1:]
        dzq = np.zeros_like(zq)
        dzq[:, 1:] = zq[:, :-1] * k[1:]
        bz = (dzp[:, :, None] * zq[:, None, :]).reshape(len(z), -1)
        bzb = (zp[:, :, None] * dzq[:, None, :]).reshape(len(z), -1)
        return b, bz, bzb

    def pair(self, t: float) -> tuple[AcsModel, HypersurfaceModel]:
        t = float(t)
        if t not in self._pairs:
            if t == 0.0:
                pair = osculating_pair(self.prob.J, self.prob.rho)
                self._pairs[t] = (pair.acs(), pair.hypersurface())
            else:
                self._pairs[t] = dilate(self.prob.J, self.prob.rho, t)
        return self._pairs[t]

    def target(self, J: AcsModel) -> np.ndarray:
        prob = self.prob
        ratio = direction_ratio(prob.v, self.a_ref, J, prob.z_o)
        p = prob.z_o
        return np.concatenate([p.real, p.imag, [ratio[0].imag], ratio[1:].real, ratio[1:].imag, [1.0]])

    # -- coefficient vectors ---------------------------------------------------
    @property
    def size(self) -> int:
        return 2 * self.n * (self.N + 1) ** 2

    def coeffs(self, x: np.ndarray) -> np.ndarray:
        s = self.size
        return (x[:s] + 1j * x[s:]).reshape(2 * self.n, -1)

    def disc(self, x: np.ndarray) -> LiftedDisc:
        return LiftedDisc.from_vector(x, self.n, self.N)

    # -- residual pieces -------------------------------------------------------
    def interior_jet(self, c):
        return c @ self.b_in.T, c @ self.bz_in.T, c @ self.bzb_in.T

    @staticmethod
    def lifted_blocks(J: AcsModel, F: np.ndarray):
        """Lift blocks at nodes; ``F`` has shape (nodes, 2n)."""
        n = J.n
        L = LiftedStructure(J)
        Jr, dJ = J.real_jet(F[:, :n])
        return L.blocks_from_jet(Jr, dJ, F[:, n:])

    def interior_residual(self, J, F, Fz, Fzb) -> np.ndarray:
        PP, QQ = self.lifted_blocks(J, F)
        return cr_operator(PP, QQ, F, Fz, Fzb)

    def boundary_residual(self, J, rho, F) -> np.ndarray:
        """Real residual ``(rho(f), Re r_a, Im r_a, r_n)`` per boundary node."""
        n = self.n
        z, g = F[:, :n], F[:, n:]
        w = twisted_normal(rho, J, z, self.bound)
        ratio = g[:, -1] / w[:, -1]
        lam = ratio.real
        ra = g[:, :-1] - lam[:, None] * w[:, :-1]
        return np.concatenate([rho(z)[:, None], ra.real, ra.imag, ratio.imag[:, None]], axis=1)

    def normalization(self, J, x) -> np.ndarray:
        ev = evaluation_map(self.disc(x), self.a_ref, J)
        return (ev.to_vector() - self.target(J)) * self.prob.norm_weight

    def residual(self, t: float, x: np.ndarray) -> np.ndarray:
        J, rho = self.pair(t)
        c = self.coeffs(x)
        F, Fz, Fzb = (arr.T for arr in self.interior_jet(c))
        E = self.interior_residual(J, F, Fz, Fzb)
        Fb = (c @ self.b_bd.T).T
        R = self.boundary_residual(J, rho, Fb)
        return np.concatenate([E.real.ravel(), E.imag.ravel(), R.ravel(), self.normalization(J, x)])

    def split(self, r: np.ndarray) -> dict[str, np.ndarray]:
        ni = len(self.inner) * 2 * self.n * 2
        nb = len(self.bound) * 2 * self.n
        return {"interior": r[:ni], "boundary": r[ni:ni + nb], "normalization": r[ni + nb:]}

    # -- Jacobian --------------------------------------------------------------
    def jacobian(self, t: float, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
        J, rho = self.pair(t)
        n2 = 2 * self.n
        c = self.coeffs(x)
        F, Fz, Fzb = (arr.T for arr in self.interior_jet(c))
        nodes = F.shape[0]
        PP, QQ = self.lifted_blocks(J, F)
        # derivatives in F by central differences, all nodes at once
        D1F = np.zeros((nodes, n2, n2), dtype=complex)
        D2F = np.zeros_like(D1F)
        for comp in range(n2):
            dx = []
            for step in (h, 1j * h):
                e = np.zeros(n2, dtype=complex)
                e[comp] = step
                Ep = self.interior_residual(J, F + e, Fz, Fzb)
                Em = self.interior_residual(J, F - e, Fz, Fzb)
                dx.append((Ep - Em) / (2 * h))
            D1F[:, :, comp] = 0.5 * (dx[0] - 1j * dx[1])
            D2F[:, :, comp] = 0.5 * (dx[0] + 1j * dx[1])
        eye = 1j * np.eye(n2)
        D1z, D1zb, D2 = PP - eye, PP + eye, QQ
        b, bz, bzb = self.b_in, self.bz_in, self.bzb_in
        G1 = (np.einsum("kic,kp->kicp", D1F, b) + np.einsum("kic,kp->kicp", D1z, bz)
              + np.einsum("kic,kp->kicp", D1zb, bzb))
        G2 = (np.einsum("kic,kp->kicp", D2F, np.conj(b))
              + np.einsum("kic,kp->kicp", D2, np.conj(bz + bzb)))
        colre = (G1 + G2).reshape(nodes, n2, -1)
        colim = (1j * (G1 - G2)).reshape(nodes, n2, -1)
        Jin = np.concatenate([np.concatenate([colre.real, colim.real], axis=2).reshape(nodes * n2, -1),
                              np.concatenate([colre.imag, colim.imag], axis=2).reshape(nodes * n2, -1)])
        # boundary: derivatives in F at boundary nodes
        Fb = (c @ self.b_bd.T).T
        nb = Fb.shape[0]
        Rx = np.zeros((nb, n2, n2))
        Ry = np.zeros((nb, n2, n2))
        for comp in range(n2):
            for step, out in ((h, Rx), (1j * h, Ry)):
                e = np.zeros(n2, dtype=complex)
                e[comp] = step
                out[:, :, comp] = (self.boundary_residual(J, rho, Fb + e)
                                   - self.boundary_residual(J, rho, Fb - e)) / (2 * h)
        bb = self.b_bd
        Bre = np.einsum("kic,kp->kicp", Rx, bb.real) + np.einsum("kic,kp->kicp", Ry, bb.imag)
        Bim = -np.einsum("kic,kp->kicp", Rx, bb.imag) + np.einsum("kic,kp->kicp", Ry, bb.real)
        Jbd = np.concatenate([Bre.reshape(nb, n2, -1), Bim.reshape(nb, n2, -1)], axis=2).reshape(nb * n2, -1)
        # normalization: depends on a few low-order coefficients only
        Jn = np.zeros((4 * self.n, x.size))
        N1 = self.N + 1
        for comp in range(n2):
            for (p, q) in ((0, 0), (1, 0), (0, 1)):
                idx = comp * N1 * N1 + p * N1 + q
                for off in (0, self.size):
                    xp = x.copy()
                    xm = x.copy()
                    xp[idx + off] += h
                    xm[idx + off] -= h
                    Jn[:, idx + off] = (self.normalization(J, xp) - self.normalization(J, xm)) / (2 * h)
        return np.vstack([Jin, Jbd, Jn])


def fd_jacobian(disc: Discretization, t: float, x: np.ndarray, h: float = 1e-7) -> np.ndarray:
    """Plain forward differences in coefficient space (reference for tests)."""
    r0 = disc.residual(t, x)
    out = np.zeros((r0.size, x.size))
    for j in range(x.size):
        xp = x.copy()
        step = h * (1 + abs(x[j]))
        xp[j] += step
        out[:, j] = (disc.residual(t, xp) - r0) / step
    return out


# ---------------------------------------------------------------------------
# solver


@dataclass
class NewtonResult:
    x: np.ndarray
    iterations: int
    residual: float
    converged: bool
    condition: float = float("nan")
    history: list = field(default_factory=list)


def _lstsq_qr(A: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, float]:
    """Least-squares solution by column-pivoted QR, with a condition estimate."""
    Q, R, perm = scipy.linalg.qr(A, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    cond = float(diag[0] / diag[-1]) if diag[-1] > 0 else float("inf")
    if not np.isfinite(cond) or cond > 1e14:
        x, *_ = scipy.linalg.lstsq(A, b)
        return x, cond
    y = scipy.linalg.solve_triangular(R, Q.T @ b)
    x = np.empty_like(y)
    x[perm] = y
    return x, cond


def newton_solve(t: float, x0: np.ndarray, disc: Discretization, tol: float | None = None,
                 max_iter: int | None = None) -> NewtonResult:
    """Damped Gauss--Newton on the collocation system at parameter ``t``.

    The truncated system is overdetermined, so its residual generally stalls at
    a small floor.  The iteration counts as converged when the residual is
    below ``tol``, or when the step has stalled (relative size below 1e-10)
    with the residual below a tenth of the problem's ``residual_tol``.
    """
    prob = disc.prob
    tol = prob.newton_tol if tol is None else tol
    max_iter = prob.max_iter if max_iter is None else max_iter
    floor_tol = 0.1 * prob.residual_tol
    x = np.array(x0, dtype=float)
    r = disc.residual(t, x)
    res = float(np.abs(r).max())
    history = [res]
    cond = float("nan")
    it = 0
    stalled = False
    while res > tol and it < max_iter:
        it += 1
        Jac = disc.jacobian(t, x)
        step, cond = _lstsq_qr(Jac, -r)
        if np.linalg.norm(step) <= 1e-10 * (1 + np.linalg.norm(x)):
            stalled = True
            break
        alpha = 1.0
        while True:
            x_new = x + alpha * step
            try:
                r_new = disc.residual(t, x_new)
                res_new = float(np.abs(r_new).max())
            except ValueError:
                r_new, res_new = None, np.inf
            # accept on a decrease of the least-squares objective
            if r_new is not None and r_new @ r_new < r @ r:
                break
            if alpha < 1e-3:
                break
            alpha *= 0.5
        if r_new is None or r_new @ r_new >= r @ r:
            stalled = True
            break
        small = np.linalg.norm(alpha * step) <= 1e-10 * (1 + np.linalg.norm(x))
        x, r, res = x_new, r_new, res_new
        history.append(res)
        log.debug("t=%g it=%d res=%.3e", t, it, res)
        if small:
            stalled = True
            break
    converged = res <= tol or (stalled and res <= floor_tol)
    return NewtonResult(x, it, res, converged, cond, history)


def assemble_residual(t: float, fd: LiftedDisc, prob: ContinuationProblem,
                      disc: Discretization | None = None) -> np.ndarray:
    """Stacked real residual: interior block, boundary block, normalization block."""
    if disc is None:
        _, a_ref = initial_disc(prob)
        disc = Discretization(prob, a_ref)
    return disc.residual(t, fd.pad(prob.N).to_vector())


def continue_disc(prob: ContinuationProblem) -> tuple[LiftedDisc, ContinuationTrace]:
    """Follow the stationary disc from the osculating model to the target pair."""
    fd0, a_ref = initial_disc(prob)
    disc = Discretization(prob, a_ref)
    trace = ContinuationTrace()
    x = fd0.to_vector()
    t_prev = None
    targets = list(prob.schedule)
    t = targets.pop(0)
    while True:
        result = newton_solve(t, x, disc)
        ok = result.converged
        trace.steps.append(StepRecord(t, result.iterations, result.residual, ok,
                                      result.x.copy() if ok else None))
        log.info("t=%.4f iterations=%d residual=%.3e %s", t, result.iterations, result.residual,
                 "accepted" if ok else "rejected")
        if ok:
            x, t_prev = result.x, t
            if not targets:
                trace.status = "converged"
                break
            t = targets.pop(0)
            continue
        if t_prev is None or t - t_prev < 2 * prob.min_step:
            trace.status = "failed"
            break
        targets.insert(0, t)
        t = 0.5 * (t_prev + t)
    return disc.disc(x), trace


# ---------------------------------------------------------------------------
# verification


@dataclass
class StationaryReport:
    projection: float
    holomorphic: float
    boundary: float
    section: float
    tol: float
    degenerate: bool = False

    @property
    def groups(self) -> dict[str, bool]:
        return {
            "projection": self.projection <= self.tol,
            "holomorphic": self.holomorphic <= self.tol,
            "boundary": self.boundary <= self.tol and not self.degenerate,
        }

    @property
    def passed(self) -> bool:
        return all(self.groups.values())

    def as_dict(self) -> dict:
        return {"projection": self.projection, "holomorphic": self.holomorphic,
                "boundary": self.boundary, "min_multiplier": self.section,
                "degenerate": self.degenerate, "tol": self.tol, "groups": self.groups,
                "passed": self.passed}


def verify_stationary(J: AcsModel, rho: HypersurfaceModel, fd: LiftedDisc, tol: float = 1e-8,
                      samples: int = 64) -> StationaryReport:
    """Check the three defining conditions on grids finer than the solver's.

    (a) the lift projects onto ``f`` -- structural, reported as 0;
    (b) holomorphicity of the lift at interior nodes;
    (c) ``f`` on the hypersurface and the twisted lift conormal on the
        boundary, away from the zero section.
    """
    x, _ = np.polynomial.legendre.leggauss(11)
    r = 0.5 * (x + 1)
    theta = 2 * np.pi * (np.arange(samples) + 0.5) / samples
    inner = (r[:, None] * np.exp(1j * theta)[None, :]).ravel()
    bound = np.exp(2j * np.pi * (np.arange(2 * samples) + 0.25) / (2 * samples))
    hol = float(np.abs(holo_residual(LiftedStructure(J), fd, inner)).max())
    cr = conormal_residual(rho, J, fd, bound, check_section=False)
    bd = float(max(np.abs(cr.r0).max(), np.abs(cr.r).max()))
    gmax = float(np.abs(fd.g(bound)).max())
    lam_min = float(np.abs(cr.lam).min())
    degenerate = gmax == 0 or lam_min <= 1e-8 * gmax
    return StationaryReport(0.0, hol, bd, lam_min, tol, degenerate)


def tangency_angle(fd: LiftedDisc, v) -> float:
    """Angle between the real line of ``v`` and ``df(d/dx)`` at the origin."""
    w = fd.f.d_zeta()(0.0) + fd.f.d_zetabar()(0.0)
    wr = np.concatenate([w.real, w.imag])
    v = np.asarray(v, dtype=complex)
    vr = np.concatenate([v.real, v.imag])
    cos = abs(wr @ vr) / (np.linalg.norm(wr) * np.linalg.norm(vr))
    return float(np.arccos(min(1.0, cos)))


def tangency_residual(fd: LiftedDisc, v) -> float:
    """Sine of the tangency angle (accurate for tiny angles)."""
    w = fd.f.d_zeta()(0.0) + fd.f.d_zetabar()(0.0)
    wr = np.concatenate([w.real, w.imag])
    v = np.asarray(v, dtype=complex)
    vr = np.concatenate([v.real, v.imag])
    vr = vr / np.linalg.norm(vr)
    perp = wr - (wr @ vr) * vr
    return float(np.linalg.norm(perp) / np.linalg.norm(wr))
