"""Pade and Log-Pade approximants of scalar eps-series, with pole extraction.

Given ``f(eps) = sum f_i eps^i`` the [m/n] approximant is ``P/Q`` with
``Q(0) = 1`` and ``Q f - P = O(eps^{m+n+1})``.  The denominator solves the
n x n Toeplitz block of matching conditions at orders ``m+1 .. m+n``; the
numerator follows by convolution.

Lindstedt coefficients grow like ``rho^-i`` (and worse), so every solve is
done for the rescaled series ``f_i s^i`` with ``s`` close to the apparent
radius; the returned polynomials are in the original variable.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass, field

import gmpy2
from gmpy2 import mpc, mpfr

from .errors import DegenerateTableError, InputError, LindstedtError, NumericalError, SingularSystemError
from .numerics import PrecisionContext, poly_eval, poly_roots, solve_dense_linear

__all__ = [
    "ScalarSeries",
    "PadeApproximant",
    "Pole",
    "PoleSet",
    "COMPONENTS",
    "series_at_theta",
    "pade",
    "robust_pade",
    "default_ladder",
    "log_derivative_series",
    "strip_valuation",
    "poles_with_residues",
    "log_pade_poles",
    "pole_cloud",
    "pole_rows",
    "POLE_COLUMNS",
]

COMPONENTS = ("g1", "g2", "mu1", "mu2")


@dataclass(frozen=True)
class ScalarSeries:
    """Coefficients ``f_0..f_K``; stored as mpfr when all are real, else mpc."""

    coeffs: tuple
    ctx: PrecisionContext
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.coeffs) < 2:
            raise InputError("a scalar series needs at least two coefficients")
        with self.ctx:
            vals = [c if isinstance(c, (type(mpfr(0)), type(mpc(0)))) else mpc(c) for c in self.coeffs]
            if all(mpc(c).imag == 0 for c in vals):
                vals = [mpc(c).real for c in vals]
            else:
                vals = [mpc(c) for c in vals]
            object.__setattr__(self, "coeffs", tuple(vals))

    @property
    def is_real(self):
        return not any(isinstance(c, type(mpc(0))) for c in self.coeffs)

    def __len__(self):
        return len(self.coeffs)

    def with_coeffs(self, coeffs, **extra):
        prov = dict(self.provenance)
        prov.update(extra)
        return ScalarSeries(tuple(coeffs), self.ctx, prov)


def series_at_theta(series, theta, component="g1", K=None) -> ScalarSeries:
    """Coefficients of the selected component at fixed ``theta``.

    ``K`` defaults to the usable order (the last order is excluded while its
    constant is provisional).  Evaluations of ``g_i(theta)`` are real up to
    rounding; the imaginary part is checked and dropped.
    """
    if component not in COMPONENTS:
        raise InputError(f"component must be one of {COMPONENTS}, got {component!r}")
    if K is None:
        K = series.usable_order
    if not 1 <= K <= series.N:
        raise InputError(f"K={K} outside 1..{series.N}")
    ctx = series.ctx
    with ctx:
        theta = mpfr(theta)
        out = []
        for i in range(K + 1):
            if component.startswith("mu"):
                out.append(mpfr(series.mus[i][int(component[-1]) - 1]))
                continue
            z = series.orders[i](theta)[int(component[-1]) - 1]
            if abs(z.imag) > ctx.eps(10) * max(mpfr(1), abs(z)):
                raise NumericalError(f"g_{i}({theta}) has imaginary part {float(z.imag):.3e}")
            out.append(z.real)
        prov = {"component": component, "theta": str(theta), "gamma": series.config.gamma,
                "omega": series.config.omega.kind}
        return ScalarSeries(tuple(out), ctx, prov)


# --------------------------------------------------------------------------
# Approximants


@dataclass(frozen=True)
class PadeApproximant:
    numerator: tuple     # M_0..M_m, original variable
    denominator: tuple   # N_0..N_n with N_0 = 1
    m: int
    n: int
    ctx: PrecisionContext
    scale: object = 1    # eps = scale * x in the balanced variable
    reduced_from: tuple | None = None

    def __call__(self, eps):
        with self.ctx:
            return poly_eval(self.numerator, eps) / poly_eval(self.denominator, eps)

    def scaled_numerator(self):
        with self.ctx:
            return [c * self.scale ** i for i, c in enumerate(self.numerator)]

    def scaled_denominator(self):
        with self.ctx:
            return [c * self.scale ** i for i, c in enumerate(self.denominator)]

    def taylor(self, K):
        """Coefficients 0..K of the series expansion of ``M/N``."""
        N, M = self.denominator, self.numerator
        with self.ctx:
            q = []
            for j in range(K + 1):
                s = M[j] if j < len(M) else 0
                for i in range(1, min(j, len(N) - 1) + 1):
                    s -= N[i] * q[j - i]
                q.append(s)
            return q


def _balance_scale(coeffs, ctx):
    """``s`` such that ``|f_i| s^i`` is roughly level between first and last nonzero."""
    nz = [i for i, c in enumerate(coeffs) if c != 0]
    if len(nz) < 2:
        return mpfr(1)
    a, b = nz[0], nz[-1]
    with ctx:
        s = (abs(coeffs[a]) / abs(coeffs[b])) ** (mpfr(1) / (b - a))
        return s if s > 0 else mpfr(1)


def pade(f: ScalarSeries, m: int, n: int) -> PadeApproximant:
    """The [m/n] Pade approximant of ``f``.

    Raises :class:`DegenerateTableError` when the Toeplitz block is singular
    and :class:`NumericalError` when the result fails the re-expansion check.
    """
    if m < 0 or n < 0:
        raise InputError("Pade orders must be nonnegative")
    if m + n + 1 > len(f):
        raise InputError(f"[{m}/{n}] needs {m + n + 1} coefficients, series has {len(f)}")
    ctx = f.ctx
    with ctx:
        s = _balance_scale(f.coeffs[: m + n + 1], ctx)
        c = [x * s ** i for i, x in enumerate(f.coeffs[: m + n + 1])]
        cc = lambda j: c[j] if j >= 0 else mpfr(0)
        if n == 0:
            Nt = [mpfr(1)]
        else:
            A = [[cc(j - i) for i in range(1, n + 1)] for j in range(m + 1, m + n + 1)]
            rhs = [-c[j] for j in range(m + 1, m + n + 1)]
            try:
                sol = solve_dense_linear(A, rhs, ctx)
            except SingularSystemError as exc:
                raise DegenerateTableError(m, n, exc.column) from None
            Nt = [mpfr(1)] + sol
        Mt = [sum((Nt[i] * cc(j - i) for i in range(min(j, n) + 1)), mpfr(0)) for j in range(m + 1)]
        approx = PadeApproximant(tuple(x / s ** i for i, x in enumerate(Mt)),
                                 tuple(x / s ** i for i, x in enumerate(Nt)), m, n, ctx, s)
        # re-expansion in the balanced variable
        q = PadeApproximant(tuple(Mt), tuple(Nt), m, n, ctx).taylor(m + n)
        big = max(abs(x) for x in c)
        tol = mpfr(10) ** (-(ctx.digits // 2)) * big
        worst = max(abs(q[j] - c[j]) for j in range(m + n + 1))
        if worst > tol:
            raise NumericalError(f"[{m}/{n}] fails re-expansion check (defect {float(worst / big):.3e} relative)")
        return approx


def robust_pade(f: ScalarSeries, m: int, n: int) -> PadeApproximant:
    """Like :func:`pade`, stepping down the diagonal while the block is singular."""
    mm, nn = m, n
    while True:
        try:
            p = pade(f, mm, nn)
        except DegenerateTableError:
            if mm == 0 or nn == 0:
                raise
            mm, nn = mm - 1, nn - 1
            continue
        if (mm, nn) != (m, n):
            p = PadeApproximant(p.numerator, p.denominator, p.m, p.n, p.ctx, p.scale, (m, n))
        return p


def strip_valuation(f: ScalarSeries, zero_tol=None):
    """Split ``f = eps^v h`` with ``h_0 != 0``; returns ``(v, h)``.

    A coefficient counts as zero when its modulus is at most ``zero_tol``
    (default ``10**-(digits/2)``).
    """
    ctx = f.ctx
    with ctx:
        tol = mpfr(10) ** (-(ctx.digits // 2)) if zero_tol is None else mpfr(zero_tol)
        v = 0
        while v < len(f) and abs(f.coeffs[v]) <= tol:
            v += 1
        if v >= len(f) - 1:
            raise NumericalError("series is zero to working tolerance")
        return v, f.with_coeffs(f.coeffs[v:], valuation=v)


def log_derivative_series(f: ScalarSeries) -> ScalarSeries:
    """Coefficients of ``f'/f`` (length one less than ``f``)."""
    ctx = f.ctx
    c = f.coeffs
    with ctx:
        big = max(abs(x) for x in c)
        if abs(c[0]) <= mpfr(10) ** (-(ctx.digits // 2)) * big:
            raise NumericalError("log-derivative needs f_0 != 0; strip the valuation or change theta/component")
        F = []
        inv0 = 1 / c[0]
        for j in range(len(c) - 1):
            s = (j + 1) * c[j + 1]
            for i in range(j):
                s -= F[i] * c[j - i]
            F.append(s * inv0)
        return f.with_coeffs(F, log_derivative=True)


# --------------------------------------------------------------------------
# Poles


@dataclass(frozen=True)
class Pole:
    location: object
    residue: object
    spurious: bool


@dataclass(frozen=True)
class PoleSet:
    poles: tuple
    m: int
    n: int
    log_mode: bool
    component: str = ""
    error: str | None = None
    reduced_from: tuple | None = None


def _median_modulus(zs):
    return statistics.median(float(abs(z)) for z in zs) if zs else 0.0


def poles_with_residues(p: PadeApproximant, tol=None, froissart_rel=1e-8,
                        log_mode=False, component="") -> PoleSet:
    """Zeros of the denominator with residues ``M(z)/N'(z)``.

    A pole is flagged spurious (kept, not removed) when a numerator zero lies
    within ``froissart_rel`` times the median pole modulus, or when its
    residue is below ``tol`` times the largest residue (default
    ``10**-(digits/4)``).
    """
    if p.n < 1:
        raise InputError("denominator has degree 0; no poles")
    ctx = p.ctx
    with ctx:
        root_tol = ctx.eps(20)
        s = p.scale
        Nt = p.scaled_denominator()
        Mt = p.scaled_numerator()
        xs = poly_roots(Nt, root_tol, ctx)
        dN = [i * Nt[i] for i in range(1, len(Nt))]
        zeros_x = poly_roots(Mt, root_tol, ctx) if len(Mt) > 1 and any(x != 0 for x in Mt[1:]) else []
        locs, res = [], []
        for x in xs:
            d = poly_eval(dN, x)
            r = s * poly_eval(Mt, x) / d if d != 0 else mpc("inf")
            locs.append(s * x)
            res.append(mpc(r))
        zeros = [s * z for z in zeros_x]
        delta = mpfr(froissart_rel) * mpfr(_median_modulus(locs))
        rel = mpfr(10) ** (-(ctx.digits // 4)) if tol is None else mpfr(tol)
        rmax = max((abs(r) for r in res if gmpy2.is_finite(abs(r))), default=mpfr(0))
        poles = []
        for z, r in zip(locs, res):
            near_zero = any(abs(z - w) <= delta for w in zeros)
            tiny = gmpy2.is_finite(abs(r)) and abs(r) < rel * rmax
            poles.append(Pole(mpc(z), r, bool(near_zero or tiny)))
        return PoleSet(tuple(poles), p.m, p.n, log_mode, component, reduced_from=p.reduced_from)


def log_pade_poles(f: ScalarSeries, m: int, n: int, component="", **kw) -> PoleSet:
    """Poles of the Log-Pade approximant (Pade of the log-derivative).

    Leading zero coefficients are stripped first; a valuation ``v > 0``
    contributes the exact pole ``v / eps`` at the origin, reported as an
    extra non-spurious entry with residue ``v``.
    """
    v, h = strip_valuation(f)
    F = log_derivative_series(h)
    p = robust_pade(F, m, n)
    ps = poles_with_residues(p, log_mode=True, component=component, **kw)
    if v:
        with f.ctx:
            origin = Pole(mpc(0), mpc(v), False)
        ps = PoleSet(ps.poles + (origin,), ps.m, ps.n, True, component, reduced_from=ps.reduced_from)
    return ps


def pole_cloud(series, theta, orders, log_mode=False, components=None, K=None):
    """Pole sets for every component and every ``(m, n)`` in ``orders``.

    A failing cell yields a PoleSet with empty ``poles`` and ``error`` set;
    the loop continues.
    """
    if components is None:
        components = ["g1", "g2"] + (["mu1", "mu2"] if series.config.gamma == 1 else [])
    out = []
    for comp in components:
        try:
            f = series_at_theta(series, theta, comp, K)
        except LindstedtError as exc:
            out.extend(PoleSet((), m, n, log_mode, comp, error=str(exc)) for m, n in orders)
            continue
        for m, n in orders:
            try:
                if log_mode:
                    out.append(log_pade_poles(f, m, n, component=comp))
                else:
                    v, h = strip_valuation(f)
                    # eps^v h has the poles of h; the series shift keeps the Toeplitz block well posed
                    out.append(poles_with_residues(robust_pade(h, m, n), component=comp))
            except LindstedtError as exc:
                out.append(PoleSet((), m, n, log_mode, comp, error=str(exc)))
    return out


def default_ladder(series, log_mode=False):
    """Near-diagonal ``[m-1/m], [m/m]`` with the largest ``m`` the series supports.

    One coefficient is set aside for the usual valuation of 1 at ``theta``
    away from the symmetry points, one more for the log-derivative.
    """
    m = (series.usable_order - 1) // 2 - (1 if log_mode else 0)
    if m < 1:
        raise InputError(f"series of usable order {series.usable_order} is too short for a Pade ladder")
    return ((m - 1, m), (m, m))


POLE_COLUMNS = ("re", "im", "residue_re", "residue_im", "spurious", "component", "m", "n", "log_mode")


def pole_rows(sets, digits=20):
    """Flatten pole sets into CSV rows (see :data:`POLE_COLUMNS`)."""
    from .numerics import format_decimal

    rows = []
    for ps in sets:
        for p in ps.poles:
            z, r = mpc(p.location), mpc(p.residue)
            rows.append([format_decimal(z.real, digits), format_decimal(z.imag, digits),
                         format_decimal(r.real, digits), format_decimal(r.imag, digits),
                         int(p.spurious), ps.component, ps.m, ps.n, int(ps.log_mode)])
    return rows
