"""Second-difference cohomology equation ``phi(t+w) - 2 phi(t) + phi(t-w) = eta``."""

from __future__ import annotations

from dataclasses import dataclass

import gmpy2
from gmpy2 import mpfr

from .errors import NearResonanceError, SolvabilityError
from .trigpoly import TrigPolyPair

__all__ = ["SmallDivisorReport", "divisor", "apply_Lomega", "solve_cohomology"]

_DIVISORS: dict = {}


def divisor(l: int, omega):
    """``2 (cos(l omega) - 1)``, evaluated as ``-4 sin(l omega / 2)**2``.

    The sine form keeps full relative accuracy when ``l omega`` is close to a
    multiple of ``2 pi``.
    """
    key = (omega, omega.precision, gmpy2.get_context().precision, l)
    d = _DIVISORS.get(key)
    if d is None:
        s = gmpy2.sin(l * omega / 2)
        d = -4 * s * s
        if len(_DIVISORS) > 200_000:
            _DIVISORS.clear()
        _DIVISORS[key] = d
    return d


@dataclass(frozen=True)
class SmallDivisorReport:
    min_divisor: object
    arg_min_mode: int
    modes_solved: int


def apply_Lomega(phi: TrigPolyPair, omega) -> TrigPolyPair:
    """Fourier multiplier form of ``phi(t+w) - 2 phi(t) + phi(t-w)``."""
    with phi.ctx:
        omega = mpfr(omega)
        out = {}
        for l, (a, b) in phi.coeffs.items():
            if l == 0:
                continue
            d = divisor(l, omega)
            out[l] = (a * d, b * d)
        return TrigPolyPair(out, phi.grid_size, phi.ctx)


def solve_cohomology(eta: TrigPolyPair, omega, zero_tol):
    """Zero-average solution ``phi`` of ``L_omega phi = eta``.

    Returns ``(phi, report)``.  The free constant is set to zero.

    Raises
    ------
    SolvabilityError
        if a component of the average of ``eta`` exceeds ``zero_tol``.
    NearResonanceError
        if some divisor in the support of ``eta`` is below ``10**-(digits-20)``.
    """
    ctx = eta.ctx
    with ctx:
        omega = mpfr(omega)
        a0, b0 = eta.coeff(0)
        if max(abs(a0), abs(b0)) > zero_tol:
            raise SolvabilityError((a0, b0))
        floor = ctx.eps(20)
        out = {}
        dmin, lmin = None, 0
        for l, (a, b) in eta.coeffs.items():
            if l == 0:
                continue
            d = divisor(l, omega)
            ad = abs(d)
            if ad < floor:
                raise NearResonanceError(l, ad)
            if dmin is None or ad < dmin:
                dmin, lmin = ad, l
            out[l] = (a / d, b / d)
        report = SmallDivisorReport(dmin if dmin is not None else mpfr("inf"), lmin, len(out))
        return TrigPolyPair(out, eta.grid_size, ctx), report
