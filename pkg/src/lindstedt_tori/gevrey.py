"""Coefficient growth: ``A(n) = ln(||g_n||_{rho,r}) / n`` and the fit
``A(n) ~ sigma ln n + ln R``."""

from __future__ import annotations

from dataclasses import dataclass

import gmpy2
from gmpy2 import mpfr

from .errors import InputError
from .numerics import PrecisionContext, format_decimal
from .trigpoly import norm_rho_r

__all__ = ["ASequence", "GevreyFit", "a_sequence", "fit_log", "a_table", "fit_summary"]


class ASequence(list):
    """List of ``(n, A)``; ``skipped`` holds orders whose norm vanished."""

    def __init__(self, items=(), skipped=(), component="both"):
        super().__init__(items)
        self.skipped = list(skipped)
        self.component = component


def a_sequence(series, rho, r, component="both", n_max=None) -> ASequence:
    """``A_{rho,r}(n)`` for ``n = 1..n_max`` (default: every computed order)."""
    n_max = series.N if n_max is None else n_max
    if n_max > series.N:
        raise InputError(f"n_max={n_max} exceeds computed order {series.N}")
    items, skipped = [], []
    with series.ctx:
        for n in range(1, n_max + 1):
            nrm = norm_rho_r(series.orders[n], rho, r, component)
            if nrm == 0:
                skipped.append(n)
                continue
            items.append((n, gmpy2.log(nrm) / n))
    return ASequence(items, skipped, component)


@dataclass(frozen=True)
class GevreyFit:
    sigma: object
    lnR: object
    n_min: int
    n_max: int
    rss: object
    points: int
    component: str = "both"

    @property
    def R(self):
        return gmpy2.exp(self.lnR)


def fit_log(data, n_min, n_max, component="both", ctx=None) -> GevreyFit:
    """Unweighted least squares of ``A`` against ``(1, ln n)`` on ``[n_min, n_max]``."""
    ctx = ctx or PrecisionContext(60)
    with ctx:
        pts = [(mpfr(n), mpfr(a)) for n, a in data if n_min <= n <= n_max]
        if len(pts) < 3:
            raise InputError(f"need at least 3 points in [{n_min}, {n_max}], got {len(pts)}")
        xs = [gmpy2.log(n) for n, _ in pts]
        ys = [a for _, a in pts]
        k = len(pts)
        xm = sum(xs) / k
        ym = sum(ys) / k
        sxx = sum((x - xm) ** 2 for x in xs)
        if sxx == 0:
            raise InputError("fit range holds a single distinct n")
        sxy = sum((x - xm) * (y - ym) for x, y in zip(xs, ys))
        sigma = sxy / sxx
        lnR = ym - sigma * xm
        rss = sum((y - sigma * x - lnR) ** 2 for x, y in zip(xs, ys))
        return GevreyFit(sigma, lnR, n_min, n_max, rss, k, component)


def a_table(series, rho, r, n_max=None):
    """Rows ``(n, A component 1, A component 2, A both)`` for CSV export.

    An order whose component vanishes shows an empty cell.
    """
    seqs = [dict(a_sequence(series, rho, r, c, n_max)) for c in (1, 2, "both")]
    n_hi = series.N if n_max is None else n_max
    rows = []
    for n in range(1, n_hi + 1):
        rows.append([n] + [format_decimal(s[n], 17) if n in s else "" for s in seqs])
    return rows


def fit_summary(fits) -> str:
    """Key-value text block, one group per fit."""
    lines = []
    for f in fits:
        p = f"component_{f.component}"
        lines += [f"{p}.sigma = {format_decimal(f.sigma, 12)}",
                  f"{p}.lnR = {format_decimal(f.lnR, 12)}",
                  f"{p}.R = {format_decimal(f.R, 12)}",
                  f"{p}.rss = {format_decimal(f.rss, 6)}",
                  f"{p}.range = {f.n_min}:{f.n_max}",
                  f"{p}.points = {f.points}"]
    return "\n".join(lines) + "\n"
