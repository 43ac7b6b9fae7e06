"""Polynomials in conjugate pairs of complex variables and discs on the unit disc.

Two representations live here:

* ``PolyMap`` -- sparse polynomial in ``(z, zbar)`` with ``n`` complex variables.
  Coefficients may be scalars, vectors or matrices (``value_shape``).
* ``DiscMap`` -- dense bi-degree truncated polynomial in ``(zeta, zetabar)`` with
  vector values, the working type for discs and their linearizations.

Coefficients are never pruned with a tolerance: only exact zeros are dropped.
"""

from __future__ import annotations

from itertools import product
from numbers import Number
from typing import Iterable, Sequence

import numpy as np

Key = tuple[tuple[int, ...], tuple[int, ...]]


def _as_coeff(c, shape) -> np.ndarray:
    arr = np.asarray(c, dtype=complex)
    if arr.shape != shape:
        arr = np.broadcast_to(arr, shape).copy()
    return arr


class PolyMap:
    """Sparse polynomial in ``z^1..z^n`` and their conjugates.

    ``terms`` maps ``(p, q)`` (exponents of ``z`` and of ``zbar``) to a complex
    coefficient array of shape ``value_shape``.
    """

    __slots__ = ("nvars", "value_shape", "terms")

    def __init__(self, nvars: int, terms: dict | None = None, value_shape: tuple = ()):
        if nvars < 1:
            raise ValueError("nvars must be positive")
        self.nvars = int(nvars)
        self.value_shape = tuple(value_shape)
        clean = {}
        for (p, q), c in (terms or {}).items():
            p, q = tuple(int(e) for e in p), tuple(int(e) for e in q)
            if len(p) != self.nvars or len(q) != self.nvars:
                raise ValueError(f"exponent length mismatch for key {(p, q)}")
            arr = _as_coeff(c, self.value_shape)
            if np.any(arr != 0):
                clean[(p, q)] = arr
        self.terms = clean

    @classmethod
    def _trusted(cls, nvars: int, terms: dict, value_shape: tuple) -> "PolyMap":
        """Build from tuple keys and arrays of the right shape, dropping zeros."""
        obj = cls.__new__(cls)
        obj.nvars = nvars
        obj.value_shape = tuple(value_shape)
        obj.terms = {k: np.asarray(c) for k, c in terms.items() if c.any()}
        return obj

    # -- constructors -------------------------------------------------------
    @classmethod
    def zero(cls, nvars, value_shape=()):
        return cls(nvars, {}, value_shape)

    @classmethod
    def constant(cls, nvars, c):
        c = np.asarray(c, dtype=complex)
        z = (0,) * nvars
        return cls(nvars, {(z, z): c}, c.shape)

    @classmethod
    def variable(cls, nvars, index, conjugated=False):
        e = tuple(1 if k == index else 0 for k in range(nvars))
        z = (0,) * nvars
        key = (z, e) if conjugated else (e, z)
        return cls(nvars, {key: 1.0})

    @classmethod
    def monomial(cls, nvars, p, q, c=1.0):
        c = np.asarray(c, dtype=complex)
        return cls(nvars, {(tuple(p), tuple(q)): c}, c.shape)

    @classmethod
    def stack(cls, items: Sequence["PolyMap"]) -> "PolyMap":
        """Stack scalar (or equal-shape) polynomials along a new leading axis."""
        items = list(items)
        nv = items[0].nvars
        shape = items[0].value_shape
        keys = set()
        for it in items:
            if it.nvars != nv or it.value_shape != shape:
                raise ValueError("cannot stack polynomials of different types")
            keys.update(it.terms)
        zero = np.zeros(shape, dtype=complex)
        terms = {k: np.stack([it.terms.get(k, zero) for it in items]) for k in keys}
        return cls._trusted(nv, terms, (len(items),) + shape)

    # -- basic queries ------------------------------------------------------
    @property
    def value_dim(self) -> int:
        return int(np.prod(self.value_shape, dtype=int)) if self.value_shape else 1

    def degree(self) -> int:
        if not self.terms:
            return -1
        return max(sum(p) + sum(q) for p, q in self.terms)

    def weighted_order(self, weights: Sequence[int]) -> int | None:
        """Smallest weighted degree over stored monomials (None for the zero map)."""
        if not self.terms:
            return None
        w = np.asarray(weights)
        return int(min(w @ np.add(p, q) for p, q in self.terms))

    def coeff(self, p, q) -> np.ndarray:
        return self.terms.get((tuple(p), tuple(q)), np.zeros(self.value_shape, dtype=complex))

    def is_zero(self) -> bool:
        return not self.terms

    def is_real(self) -> bool:
        """True when the polynomial takes real values (coefficient symmetry)."""
        for (p, q), c in self.terms.items():
            if not np.array_equal(c, np.conj(self.coeff(q, p))):
                return False
        return True

    def max_abs_coeff(self) -> float:
        return max((float(np.abs(c).max()) for c in self.terms.values()), default=0.0)

    def __getitem__(self, idx) -> "PolyMap":
        terms = {k: np.asarray(c[idx]) for k, c in self.terms.items()}
        shape = np.zeros(self.value_shape)[idx].shape
        return PolyMap._trusted(self.nvars, terms, shape)

    def __repr__(self):
        return f"PolyMap(nvars={self.nvars}, shape={self.value_shape}, nterms={len(self.terms)})"

    # -- arithmetic ---------------------------------------------------------
    def _check(self, other):
        if other.nvars != self.nvars:
            raise ValueError("polynomials live in different variable sets")

    def __add__(self, other):
        if isinstance(other, Number):
            other = PolyMap.constant(self.nvars, np.full(self.value_shape, other, dtype=complex))
        self._check(other)
        shape = np.broadcast_shapes(self.value_shape, other.value_shape)
        terms = {k: _as_coeff(c, shape) for k, c in self.terms.items()}
        for k, c in other.terms.items():
            terms[k] = terms[k] + c if k in terms else _as_coeff(c, shape)
        return PolyMap._trusted(self.nvars, terms, shape)

    __radd__ = __add__

    def __neg__(self):
        return PolyMap._trusted(self.nvars, {k: -c for k, c in self.terms.items()}, self.value_shape)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, PolyMap):
            return self.mul(other)
        c = np.asarray(other, dtype=complex)
        shape = np.broadcast_shapes(self.value_shape, c.shape)
        return PolyMap._trusted(self.nvars, {k: _as_coeff(v * c, shape) for k, v in self.terms.items()}, shape)

    def __rmul__(self, other):
        if isinstance(other, PolyMap):
            return other.mul(self)
        c = np.asarray(other, dtype=complex)
        shape = np.broadcast_shapes(self.value_shape, c.shape)
        return PolyMap._trusted(self.nvars, {k: _as_coeff(c * v, shape) for k, v in self.terms.items()}, shape)

    def __matmul__(self, other):
        return self.matmul(other)

    def _product(self, other, op, max_degree):
        self._check(other)
        out: dict[Key, np.ndarray] = {}
        right = [(p2, q2, sum(p2) + sum(q2), c2) for (p2, q2), c2 in other.terms.items()]
        for (p1, q1), c1 in self.terms.items():
            d1 = sum(p1) + sum(q1)
            for p2, q2, d2, c2 in right:
                if max_degree is not None and d1 + d2 > max_degree:
                    continue
                key = (tuple(a + b for a, b in zip(p1, p2)), tuple(a + b for a, b in zip(q1, q2)))
                val = op(c1, c2)
                if key in out:
                    out[key] = out[key] + val
                else:
                    out[key] = val
        return out

    def mul(self, other: "PolyMap", max_degree: int | None = None) -> "PolyMap":
        """Elementwise (broadcast) product, optionally truncated in total degree."""
        shape = np.broadcast_shapes(self.value_shape, other.value_shape)
        terms = {k: _as_coeff(c, shape) for k, c in self._product(other, np.multiply, max_degree).items()}
        return PolyMap._trusted(self.nvars, terms, shape)

    def matmul(self, other: "PolyMap", max_degree: int | None = None) -> "PolyMap":
        shape = (np.zeros(self.value_shape) @ np.zeros(other.value_shape)).shape
        return PolyMap._trusted(self.nvars, self._product(other, np.matmul, max_degree), shape)

    def transpose(self) -> "PolyMap":
        return PolyMap._trusted(self.nvars, {k: c.T for k, c in self.terms.items()}, self.value_shape[::-1])

    def conj(self) -> "PolyMap":
        return PolyMap._trusted(self.nvars, {(q, p): np.conj(c) for (p, q), c in self.terms.items()},
                                self.value_shape)

    def real_part(self) -> "PolyMap":
        return (self + self.conj()) * 0.5

    def truncate(self, max_degree: int) -> "PolyMap":
        return PolyMap._trusted(self.nvars, {k: c for k, c in self.terms.items()
                                             if sum(k[0]) + sum(k[1]) <= max_degree}, self.value_shape)

    def homogeneous(self, degree: int) -> "PolyMap":
        return PolyMap._trusted(self.nvars, {k: c for k, c in self.terms.items()
                                             if sum(k[0]) + sum(k[1]) == degree}, self.value_shape)

    def select(self, predicate) -> "PolyMap":
        """Keep the terms whose key ``(p, q)`` satisfies ``predicate``."""
        return PolyMap(self.nvars, {k: c for k, c in self.terms.items() if predicate(*k)},
                       self.value_shape)

    def map_coeffs(self, fn) -> "PolyMap":
        """Apply ``fn(p, q, c)`` to every coefficient."""
        terms = {k: fn(k[0], k[1], c) for k, c in self.terms.items()}
        shape = next(iter(terms.values())).shape if terms else self.value_shape
        return PolyMap(self.nvars, terms, shape)

    # -- calculus -----------------------------------------------------------
    def wirtinger(self, var_index: int, conjugated: bool = False) -> "PolyMap":
        """Formal derivative d/dz^k (or d/dzbar^k when ``conjugated``)."""
        if not 0 <= var_index < self.nvars:
            raise IndexError("var_index out of range")
        out = {}
        for (p, q), c in self.terms.items():
            e = q if conjugated else p
            k = e[var_index]
            if k == 0:
                continue
            e2 = e[:var_index] + (k - 1,) + e[var_index + 1:]
            key = (p, e2) if conjugated else (e2, q)
            out[key] = c * k
        return PolyMap._trusted(self.nvars, out, self.value_shape)

    def real_derivative(self, real_index: int) -> "PolyMap":
        """Derivative along real coordinate ``real_index`` in (x^1..x^n, y^1..y^n) order."""
        k = real_index % self.nvars
        dz, dzb = self.wirtinger(k), self.wirtinger(k, conjugated=True)
        if real_index < self.nvars:
            return dz + dzb
        return (dz - dzb) * 1j

    # -- evaluation ---------------------------------------------------------
    def monomial_matrix(self, points) -> tuple[np.ndarray, list[Key]]:
        pts = np.asarray(points, dtype=complex)
        if pts.shape[-1] != self.nvars:
            raise ValueError(f"points must have last axis {self.nvars}")
        flat = pts.reshape(-1, self.nvars)
        keys = list(self.terms)
        if not keys:
            return np.zeros((flat.shape[0], 0), dtype=complex), keys
        dmax = max(max(max(p), max(q)) for p, q in keys)
        pw = np.ones((dmax + 1,) + flat.shape, dtype=complex)
        cpw = np.ones_like(pw)
        for d in range(1, dmax + 1):
            pw[d] = pw[d - 1] * flat
            cpw[d] = cpw[d - 1] * np.conj(flat)
        mono = np.ones((flat.shape[0], len(keys)), dtype=complex)
        for t, (p, q) in enumerate(keys):
            for i in range(self.nvars):
                if p[i]:
                    mono[:, t] *= pw[p[i], :, i]
                if q[i]:
                    mono[:, t] *= cpw[q[i], :, i]
        return mono, keys

    def __call__(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=complex)
        batch = pts.shape[:-1]
        mono, keys = self.monomial_matrix(pts)
        if not keys:
            return np.zeros(batch + self.value_shape, dtype=complex)
        cmat = np.stack([self.terms[k].reshape(-1) for k in keys])
        return (mono @ cmat).reshape(batch + self.value_shape)

    # -- composition --------------------------------------------------------
    def compose(self, subs: Sequence["PolyMap"], max_degree: int | None = None) -> "PolyMap":
        """Substitute ``z^i -> subs[i]`` (and ``zbar^i -> conj(subs[i])``).

        ``subs`` are scalar polynomials in a common variable set. With
        ``max_degree`` every intermediate product is truncated, which is exact
        for the retained degrees when every substitution has no constant term.
        """
        subs = list(subs)
        if len(subs) != self.nvars:
            raise ValueError("need one substitution per variable")
        m = subs[0].nvars
        one = PolyMap.constant(m, 1.0)
        if not self.terms:
            return PolyMap.zero(m, self.value_shape)
        cache: dict[tuple[int, int, bool], PolyMap] = {}

        def power(i, k, conj):
            if k == 0:
                return one
            key = (i, k, conj)
            if key not in cache:
                base = subs[i].conj() if conj else subs[i]
                cache[key] = power(i, k - 1, conj).mul(base, max_degree)
            return cache[key]

        acc: dict[Key, np.ndarray] = {}
        for (p, q), c in self.terms.items():
            mono = one
            for i in range(self.nvars):
                if p[i]:
                    mono = mono.mul(power(i, p[i], False), max_degree)
                if q[i]:
                    mono = mono.mul(power(i, q[i], True), max_degree)
            for k, v in mono.terms.items():
                val = v * c
                acc[k] = acc[k] + val if k in acc else val
        return PolyMap._trusted(m, acc, self.value_shape)


def variables(nvars: int) -> list[PolyMap]:
    """The coordinate functions ``z^1..z^n`` as scalar polynomials."""
    return [PolyMap.variable(nvars, i) for i in range(nvars)]


def wirtinger(p, var_index: int = 0, conjugated: bool = False):
    """Wirtinger derivative of a ``PolyMap`` or ``DiscMap``.

    For a ``DiscMap`` the only variable is ``zeta`` and ``var_index`` must be 0.
    """
    if isinstance(p, DiscMap):
        if var_index != 0:
            raise IndexError("a disc has a single variable")
        return p.d_zetabar() if conjugated else p.d_zeta()
    return p.wirtinger(var_index, conjugated)


def evaluate(p, point):
    """Exact evaluation of a ``PolyMap`` at ``point`` (or a ``DiscMap`` at ``zeta``)."""
    return p(point)


# ---------------------------------------------------------------------------
# Discs


class DiscMap:
    """Vector-valued polynomial in ``zeta`` and ``zetabar``.

    ``coeffs[i, p, q]`` is the coefficient of ``zeta^p zetabar^q`` in component
    ``i``; the degree cap ``N`` is ``coeffs.shape[1] - 1`` (square storage).
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        c = np.asarray(coeffs, dtype=complex)
        if c.ndim == 2:
            c = c[None]
        if c.ndim != 3 or c.shape[1] != c.shape[2]:
            raise ValueError("coeffs must have shape (dim, N+1, N+1)")
        self.coeffs = c

    @classmethod
    def zeros(cls, dim: int, N: int) -> "DiscMap":
        return cls(np.zeros((dim, N + 1, N + 1), dtype=complex))

    @classmethod
    def monomial(cls, p: int, q: int, c=1.0, N: int | None = None) -> "DiscMap":
        N = max(p, q) if N is None else N
        d = cls.zeros(1, N)
        d.coeffs[0, p, q] = c
        return d

    @classmethod
    def from_terms(cls, terms: dict, dim: int = 1, N: int | None = None) -> "DiscMap":
        """Build from ``{(p, q): value}`` with scalar or length-``dim`` values."""
        if N is None:
            N = max((max(p, q) for p, q in terms), default=0)
        d = cls.zeros(dim, N)
        for (p, q), v in terms.items():
            d.coeffs[:, p, q] += v
        return d

    @classmethod
    def stack(cls, items: Iterable["DiscMap"]) -> "DiscMap":
        items = list(items)
        N = max(it.N for it in items)
        return cls(np.concatenate([it.pad(N).coeffs for it in items], axis=0))

    @property
    def dim(self) -> int:
        return self.coeffs.shape[0]

    @property
    def N(self) -> int:
        return self.coeffs.shape[1] - 1

    @property
    def value_dim(self) -> int:
        return self.dim

    @property
    def degree_cap(self) -> int:
        return self.N

    def __repr__(self):
        return f"DiscMap(dim={self.dim}, N={self.N})"

    def __getitem__(self, idx) -> "DiscMap":
        if isinstance(idx, int):
            return DiscMap(self.coeffs[idx:idx + 1] if idx >= 0 else self.coeffs[[idx]])
        return DiscMap(self.coeffs[idx])

    def copy(self) -> "DiscMap":
        return DiscMap(self.coeffs.copy())

    def pad(self, N: int) -> "DiscMap":
        if N == self.N:
            return self
        if N < self.N:
            if np.any(self.coeffs[:, N + 1:, :]) or np.any(self.coeffs[:, :, N + 1:]):
                raise ValueError("cannot shrink the degree cap over nonzero coefficients")
            return DiscMap(self.coeffs[:, :N + 1, :N + 1])
        out = np.zeros((self.dim, N + 1, N + 1), dtype=complex)
        out[:, :self.N + 1, :self.N + 1] = self.coeffs
        return DiscMap(out)

    def trim(self) -> "DiscMap":
        """Shrink the cap to the smallest one holding every nonzero coefficient."""
        nz = np.nonzero(np.any(self.coeffs != 0, axis=0))
        top = int(max(nz[0].max(), nz[1].max())) if nz[0].size else 0
        return DiscMap(self.coeffs[:, :top + 1, :top + 1])

    def is_holomorphic(self) -> bool:
        return not np.any(self.coeffs[:, :, 1:])

    # -- arithmetic ---------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, DiscMap):
            N = max(self.N, other.N)
            return self.pad(N).coeffs, other.pad(N).coeffs
        c = np.asarray(other, dtype=complex)
        o = np.zeros_like(self.coeffs)
        o[:, 0, 0] = c
        return self.coeffs, o

    def __add__(self, other):
        a, b = self._coerce(other)
        return DiscMap(a + b)

    __radd__ = __add__

    def __sub__(self, other):
        a, b = self._coerce(other)
        return DiscMap(a - b)

    def __rsub__(self, other):
        a, b = self._coerce(other)
        return DiscMap(b - a)

    def __neg__(self):
        return DiscMap(-self.coeffs)

    def __mul__(self, other):
        if isinstance(other, DiscMap):
            return self.mul(other)
        c = np.asarray(other, dtype=complex)
        if c.ndim == 1:
            c = c[:, None, None]
        return DiscMap(self.coeffs * c)

    __rmul__ = __mul__

    def mul(self, other: "DiscMap") -> "DiscMap":
        """Pointwise product; the degree cap of the result is the sum of caps."""
        a, b = self.coeffs, other.coeffs
        if a.shape[0] != b.shape[0] and 1 not in (a.shape[0], b.shape[0]):
            raise ValueError("value dimensions do not broadcast")
        dim = max(a.shape[0], b.shape[0])
        Na, Nb = a.shape[1] - 1, b.shape[1] - 1
        out = np.zeros((dim, Na + Nb + 1, Na + Nb + 1), dtype=complex)
        for p, q in zip(*np.nonzero(np.any(a != 0, axis=0))):
            out[:, p:p + Nb + 1, q:q + Nb + 1] += a[:, p, q][:, None, None] * b
        return DiscMap(out)

    def conj(self) -> "DiscMap":
        return DiscMap(np.conj(np.swapaxes(self.coeffs, 1, 2)))

    def times_zeta(self, k: int = 1) -> "DiscMap":
        out = np.zeros((self.dim, self.N + k + 1, self.N + k + 1), dtype=complex)
        out[:, k:, :self.N + 1] = self.coeffs
        return DiscMap(out)

    def times_zetabar(self, k: int = 1) -> "DiscMap":
        out = np.zeros((self.dim, self.N + k + 1, self.N + k + 1), dtype=complex)
        out[:, :self.N + 1, k:] = self.coeffs
        return DiscMap(out)

    # -- calculus -----------------------------------------------------------
    def d_zeta(self) -> "DiscMap":
        out = np.zeros_like(self.coeffs)
        p = np.arange(1, self.N + 1)
        out[:, :-1, :] = self.coeffs[:, 1:, :] * p[None, :, None]
        return DiscMap(out)

    def d_zetabar(self) -> "DiscMap":
        out = np.zeros_like(self.coeffs)
        q = np.arange(1, self.N + 1)
        out[:, :, :-1] = self.coeffs[:, :, 1:] * q[None, None, :]
        return DiscMap(out)

    # -- evaluation ---------------------------------------------------------
    def basis(self, zeta) -> np.ndarray:
        """Monomials ``zeta^p zetabar^q`` at the given points, shape (..., N+1, N+1)."""
        z = np.asarray(zeta, dtype=complex)[..., None]
        k = np.arange(self.N + 1)
        return (z ** k)[..., :, None] * (np.conj(z) ** k)[..., None, :]

    def __call__(self, zeta) -> np.ndarray:
        """Values at ``zeta``, shape ``zeta.shape + (dim,)``."""
        return np.einsum("...pq,ipq->...i", self.basis(zeta), self.coeffs)

    def boundary_fourier(self) -> np.ndarray:
        return boundary_fourier(self)

    def norm(self) -> float:
        return float(np.abs(self.coeffs).max()) if self.coeffs.size else 0.0


def boundary_fourier(d: DiscMap) -> np.ndarray:
    """Laurent coefficients of ``d`` restricted to the unit circle.

    Returns an array of shape ``(dim, 2N+1)`` whose column ``m + N`` is the
    coefficient of ``zeta^m``, i.e. the sum of ``coeffs[p, q]`` over ``p - q = m``.
    """
    N = d.N
    out = np.zeros((d.dim, 2 * N + 1), dtype=complex)
    for m in range(-N, N + 1):
        out[:, m + N] = np.trace(d.coeffs, offset=-m, axis1=1, axis2=2)
    return out


def laurent_eval(table: np.ndarray, zeta) -> np.ndarray:
    """Evaluate a Laurent table (last axis indexed ``m + M``) at points on the circle."""
    table = np.asarray(table)
    M = (table.shape[-1] - 1) // 2
    z = np.asarray(zeta, dtype=complex)
    powers = z[..., None] ** np.arange(-M, M + 1)
    return np.einsum("...m,im->...i", powers, np.atleast_2d(table))


def laurent_resize(table: np.ndarray, M: int) -> np.ndarray:
    """Pad or cut a Laurent table to exponents ``-M..M``."""
    table = np.atleast_2d(np.asarray(table, dtype=complex))
    M0 = (table.shape[-1] - 1) // 2
    out = np.zeros(table.shape[:-1] + (2 * M + 1,), dtype=complex)
    lo = min(M, M0)
    out[..., M - lo:M + lo + 1] = table[..., M0 - lo:M0 + lo + 1]
    return out


def laurent_multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Product of two Laurent tables (convolution along the last axis)."""
    a = np.atleast_2d(a)
    b = np.atleast_2d(b)
    dim = max(a.shape[0], b.shape[0])
    a = np.broadcast_to(a, (dim, a.shape[1]))
    b = np.broadcast_to(b, (dim, b.shape[1]))
    return np.stack([np.convolve(x, y) for x, y in zip(a, b)])


def cauchy_green(d: DiscMap) -> DiscMap:
    """Cauchy-Green transform on the unit disc, componentwise.

    On monomials the transform is

        T(zeta^p zetabar^q) = zeta^p zetabar^(q+1) / (q+1)
                              - [p >= q+1] zeta^(p-q-1) / (q+1),

    the second term removing the holomorphic part picked up on the boundary.
    ``d_zetabar(T(d)) == d`` holds coefficientwise.
    """
    N = d.N
    out = np.zeros((d.dim, N + 2, N + 2), dtype=complex)
    for p in range(N + 1):
        for q in range(N + 1):
            c = d.coeffs[:, p, q]
            if not np.any(c):
                continue
            out[:, p, q + 1] += c / (q + 1)
            if p >= q + 1:
                out[:, p - q - 1, 0] -= c / (q + 1)
    return DiscMap(out)


def antiderivative_I(d: DiscMap) -> DiscMap:
    """Holomorphic primitive vanishing at the origin."""
    if not d.is_holomorphic():
        raise ValueError("antiderivative_I needs a holomorphic disc")
    N = d.N
    out = np.zeros((d.dim, N + 2, N + 2), dtype=complex)
    m = np.arange(N + 1)
    out[:, 1:, 0] = d.coeffs[:, :, 0] / (m + 1)
    return DiscMap(out)


def collocation_values(d: DiscMap, zeta) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Values, d/dzeta and d/dzetabar of ``d`` at ``zeta`` in one pass."""
    return d(zeta), d.d_zeta()(zeta), d.d_zetabar()(zeta)


def unit_roots(count: int) -> np.ndarray:
    return np.exp(2j * np.pi * np.arange(count) / count)


def multi_indices(nvars: int, max_degree: int):
    """All exponent vectors of total degree <= ``max_degree``."""
    for e in product(range(max_degree + 1), repeat=nvars):
        if sum(e) <= max_degree:
            yield e
