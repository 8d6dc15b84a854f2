"""R^2-valued trigonometric polynomials on the circle.

A :class:`TrigPolyPair` stores a sparse map ``mode -> (c1, c2)`` of complex
Fourier coefficients, ``p(theta) = sum_l c_l exp(i l theta)``.  A
:class:`GridFunctionPair` stores samples on the uniform grid
``theta_j = 2 pi j / M``.  Conversion between the two goes through a radix-2
FFT evaluated in multiple precision on numpy object arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from types import MappingProxyType
from typing import Mapping

import gmpy2
import numpy as np
from gmpy2 import mpc, mpfr

from .errors import InputError
from .numerics import PrecisionContext

__all__ = [
    "TrigPolyPair",
    "GridFunctionPair",
    "to_grid",
    "to_coeffs",
    "shift",
    "filter_small",
    "norm_rho_r",
    "sup_norm_grid",
    "average",
    "grid_angles",
    "check_grid_size",
]


def check_grid_size(M: int) -> int:
    if not isinstance(M, (int, np.integer)) or M < 2 or M & (M - 1):
        raise InputError(f"grid size must be a power of two >= 2, got {M!r}")
    return int(M)


def _zero_pair():
    return (mpc(0), mpc(0))


@dataclass(frozen=True, eq=False)
class TrigPolyPair:
    coeffs: Mapping[int, tuple]
    grid_size: int
    ctx: PrecisionContext

    def __post_init__(self):
        check_grid_size(self.grid_size)
        half = self.grid_size // 2
        for l in self.coeffs:
            if not -half <= l < half:
                raise InputError(f"mode {l} outside [-{half}, {half}) for grid size {self.grid_size}")
        if not isinstance(self.coeffs, MappingProxyType):
            object.__setattr__(self, "coeffs", MappingProxyType(dict(self.coeffs)))

    # constructors -----------------------------------------------------------
    @classmethod
    def zero(cls, grid_size, ctx):
        return cls({}, grid_size, ctx)

    @classmethod
    def constant(cls, c1, c2, grid_size, ctx):
        with ctx:
            return cls({0: (mpc(c1), mpc(c2))}, grid_size, ctx)

    @classmethod
    def from_modes(cls, modes, grid_size, ctx):
        """Build from ``{mode: (c1, c2)}`` with arbitrary numeric entries."""
        with ctx:
            return cls({int(l): (mpc(a), mpc(b)) for l, (a, b) in modes.items()}, grid_size, ctx)

    # queries ----------------------------------------------------------------
    def coeff(self, l):
        return self.coeffs.get(l) or _zero_pair()

    @property
    def support(self):
        return sorted(self.coeffs)

    @property
    def degree(self):
        return max((abs(l) for l in self.coeffs), default=0)

    def component(self, i):
        """Scalar coefficient map of component ``i`` (0 or 1)."""
        return {l: c[i] for l, c in self.coeffs.items()}

    def __call__(self, theta):
        """Pointwise value at ``theta`` (direct mode summation)."""
        with self.ctx:
            out = [mpc(0), mpc(0)]
            for l, (a, b) in self.coeffs.items():
                e = gmpy2.exp(mpc(0, 1) * (l * theta))
                out[0] += a * e
                out[1] += b * e
            return tuple(out)

    # algebra ----------------------------------------------------------------
    def _combine(self, other, op):
        if self.grid_size != other.grid_size:
            raise InputError("grid sizes differ")
        with self.ctx:
            out = {}
            for l in set(self.coeffs) | set(other.coeffs):
                a = self.coeff(l)
                b = other.coeff(l)
                out[l] = (op(a[0], b[0]), op(a[1], b[1]))
            return TrigPolyPair(out, self.grid_size, self.ctx)

    def __add__(self, other):
        return self._combine(other, lambda x, y: x + y)

    def __sub__(self, other):
        return self._combine(other, lambda x, y: x - y)

    def __neg__(self):
        return self.scale(-1)

    def scale(self, s):
        with self.ctx:
            return TrigPolyPair({l: (a * s, b * s) for l, (a, b) in self.coeffs.items()},
                                self.grid_size, self.ctx)

    def add_constant(self, v):
        """Add the constant vector ``v = (v1, v2)`` to the mode-0 coefficient."""
        with self.ctx:
            out = dict(self.coeffs)
            a, b = self.coeff(0)
            out[0] = (a + v[0], b + v[1])
            return TrigPolyPair(out, self.grid_size, self.ctx)

    def dot(self, v):
        """Scalar polynomial ``v . p`` returned as a dict ``mode -> coeff``."""
        with self.ctx:
            return {l: a * v[0] + b * v[1] for l, (a, b) in self.coeffs.items()}

    def max_abs(self):
        with self.ctx:
            return max((max(abs(a), abs(b)) for a, b in self.coeffs.values()), default=mpfr(0))

    def conjugate_symmetry_defect(self):
        """``max_l |c(-l) - conj(c(l))|`` over both components."""
        with self.ctx:
            worst = mpfr(0)
            for l, (a, b) in self.coeffs.items():
                a2, b2 = self.coeff(-l)
                worst = max(worst, abs(a2 - a.conjugate()), abs(b2 - b.conjugate()))
            return worst

    def with_grid_size(self, M):
        return TrigPolyPair(dict(self.coeffs), M, self.ctx)

    def __repr__(self):
        return f"TrigPolyPair(support={len(self.coeffs)}, degree={self.degree}, M={self.grid_size}, digits={self.ctx.digits})"


@dataclass(frozen=True, eq=False)
class GridFunctionPair:
    """Samples ``values[c, j]`` of component ``c`` at ``theta_j = 2 pi j / M``."""

    values: np.ndarray
    grid_size: int
    ctx: PrecisionContext

    def __post_init__(self):
        check_grid_size(self.grid_size)
        if self.values.shape != (2, self.grid_size):
            raise InputError(f"grid values must have shape (2, {self.grid_size}), got {self.values.shape}")


# --------------------------------------------------------------------------
# FFT machinery

_TWIDDLES: dict = {}
_BITREV: dict = {}


def _twiddles(M, bits, sign):
    key = (M, bits, sign)
    tw = _TWIDDLES.get(key)
    if tw is None:
        two_pi = 2 * gmpy2.const_pi()
        tw = np.empty(M // 2, dtype=object)
        for j in range(M // 2):
            ang = sign * two_pi * j / M
            tw[j] = mpc(gmpy2.cos(ang), gmpy2.sin(ang))
        _TWIDDLES[key] = tw
    return tw


def _bitrev(M):
    perm = _BITREV.get(M)
    if perm is None:
        nb = M.bit_length() - 1
        perm = np.array([int(format(i, f"0{nb}b")[::-1], 2) if nb else 0 for i in range(M)])
        _BITREV[M] = perm
    return perm


def fft(x, sign, ctx):
    """Unnormalized DFT ``X_k = sum_j x_j exp(sign 2 pi i j k / M)``.

    ``x`` may be 1-D (length M) or 2-D (rows transformed independently).
    """
    with ctx:
        x = np.asarray(x, dtype=object)
        M = x.shape[-1]
        check_grid_size(M)
        tw = _twiddles(M, ctx.bits, sign)
        lead = x.shape[:-1]
        y = x[..., _bitrev(M)]
        size = 2
        while size <= M:
            half = size // 2
            w = tw[:: M // size][:half]
            y = y.reshape(lead + (M // size, size))
            even = y[..., :half]
            odd = y[..., half:] * w
            y = np.concatenate([even + odd, even - odd], axis=-1)
            size *= 2
        return y.reshape(lead + (M,))


def grid_angles(M, ctx):
    """``theta_j = 2 pi j / M`` as an object array of mpfr."""
    with ctx:
        two_pi = 2 * gmpy2.const_pi()
        return np.array([two_pi * j / M for j in range(M)], dtype=object)


def to_grid(p: TrigPolyPair) -> GridFunctionPair:
    """Samples of ``p`` on the uniform grid of its declared size."""
    M, ctx = p.grid_size, p.ctx
    with ctx:
        spec = np.empty((2, M), dtype=object)
        spec.fill(mpc(0))
        for l, (a, b) in p.coeffs.items():
            spec[0, l % M] = a
            spec[1, l % M] = b
        return GridFunctionPair(fft(spec, +1, ctx), M, ctx)


def coeffs_from_samples(values, ctx):
    """Fourier coefficients ``mode -> c`` of one scalar grid function (1-D)."""
    M = len(values)
    with ctx:
        spec = fft(values, -1, ctx)
        half = M // 2
        return {(k if k < half else k - M): spec[k] / M for k in range(M)}


def to_coeffs(g: GridFunctionPair) -> TrigPolyPair:
    """Inverse of :func:`to_grid` for band-limited data."""
    M, ctx = g.grid_size, g.ctx
    with ctx:
        spec = fft(g.values, -1, ctx)
        half = M // 2
        out = {}
        for k in range(M):
            l = k if k < half else k - M
            out[l] = (spec[0, k] / M, spec[1, k] / M)
        return TrigPolyPair(out, M, ctx)


# --------------------------------------------------------------------------
# Operations


def shift(p: TrigPolyPair, delta) -> TrigPolyPair:
    """Coefficients of ``theta -> p(theta + delta)``."""
    with p.ctx:
        delta = mpfr(delta)
        out = {}
        for l, (a, b) in p.coeffs.items():
            e = gmpy2.exp(mpc(0, l * delta)) if l else mpc(1)
            out[l] = (a * e, b * e)
        return TrigPolyPair(out, p.grid_size, p.ctx)


def filter_small(p: TrigPolyPair, filter_digits: int) -> TrigPolyPair:
    """Zero every coefficient whose modulus is below ``10**-filter_digits``.

    The test is componentwise; a mode whose two components both vanish is
    dropped from the support.
    """
    with p.ctx:
        thresh = mpfr(10) ** (-filter_digits)
        zero = mpc(0)
        out = {}
        for l, (a, b) in p.coeffs.items():
            a2 = a if abs(a) >= thresh else zero
            b2 = b if abs(b) >= thresh else zero
            if a2 != 0 or b2 != 0:
                out[l] = (a2, b2)
        return TrigPolyPair(out, p.grid_size, p.ctx)


_COMPONENTS = {1: (0,), 2: (1,), "both": (0, 1)}


def norm_rho_r(p: TrigPolyPair, rho, r: int, component=("both")):
    """Weighted norm ``sqrt(sum_l |c_l|^2 exp(2 |l| rho) (1 + |l|)^r)``."""
    try:
        comps = _COMPONENTS[component]
    except KeyError:
        raise InputError(f"component must be 1, 2 or 'both', got {component!r}") from None
    if r < 0:
        raise InputError("r must be a nonnegative integer")
    with p.ctx:
        rho = mpfr(rho)
        total = mpfr(0)
        for l, pair in p.coeffs.items():
            al = abs(l)
            w = gmpy2.exp(2 * al * rho) * mpfr(1 + al) ** r
            for c in comps:
                total += gmpy2.norm(pair[c]) * w
        return gmpy2.sqrt(total)


def sup_norm_values(values, ctx):
    """Max over grid points of the Euclidean norm of the (complex) pair."""
    with ctx:
        return max(gmpy2.sqrt(gmpy2.norm(values[0, j]) + gmpy2.norm(values[1, j]))
                   for j in range(values.shape[1]))


def sup_norm_grid(p: TrigPolyPair):
    return sup_norm_values(to_grid(p).values, p.ctx)


def average(p: TrigPolyPair):
    """Mean value over the circle, i.e. the mode-0 coefficient."""
    return p.coeff(0)
