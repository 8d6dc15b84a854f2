"""Order-by-order Lindstedt expansion of lower dimensional tori.

The unknown is the periodic part ``g_eps(theta) = sum g_n(theta) eps^n`` of a
hull function ``theta k + g_eps(theta)`` and, in the dissipative map
(``gamma = 1``, contraction ``1 - eps^3``), a drift ``mu_eps = sum mu_n eps^n``.
Order ``n`` solves

    L_omega g_n = R_n + mu_n + E_n,

where ``E_3 = -omega k`` and ``E_n = -g_{n-3} + g_{n-3}(. - omega)`` for
``n >= 4`` (both only when ``gamma = 1``).  The constant ``beta_{n-1}`` of
``g_{n-1}`` along ``kperp`` is chosen so that the ``kperp`` average of the
right-hand side vanishes; ``R_n`` is affine in it, so two evaluations fix it
exactly.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import gmpy2
import numpy as np
from gmpy2 import mpc, mpfr

from .cohomology import apply_Lomega, solve_cohomology
from .errors import (ConsistencyError, DegenerateConfigError, InputError,
                     LindstedtError, NotFoundError)
from .numerics import FrequencySpec, PrecisionContext, eval_frequency, parse_decimal
from .potential import (PotentialSpec, advance_affine, d2v_quadratic_form,
                        default_potential, init_state, r_coefficient, r_grid)
from .trigpoly import TrigPolyPair, check_grid_size, filter_small, shift, sup_norm_grid

__all__ = [
    "LindstedtConfig",
    "LindstedtSeries",
    "check_order0",
    "find_beta0_candidates",
    "next_order",
    "run",
    "evaluate_partial_sum",
    "order_rhs",
    "OMEGA_UNITS",
]

log = logging.getLogger(__name__)

OMEGA_UNITS = ("turns", "radians")


@dataclass(frozen=True)
class LindstedtConfig:
    gamma: int = 0
    omega: FrequencySpec = field(default_factory=FrequencySpec)
    N: int = 120
    k: tuple = (1, 0)
    kperp: tuple = (0, 1)
    beta0: str = "0"
    potential: PotentialSpec | None = None
    digits: int = 400
    filter_digits: int = 100
    grid_size: int = 1024
    spill_from: int | None = None
    omega_units: str = "turns"

    def __post_init__(self):
        if self.omega_units not in OMEGA_UNITS:
            raise InputError(f"omega_units must be one of {OMEGA_UNITS}, got {self.omega_units!r}")
        if self.gamma not in (0, 1):
            raise InputError(f"gamma must be 0 or 1, got {self.gamma!r}")
        if not isinstance(self.N, int) or self.N < 0:
            raise InputError(f"order N must be a nonnegative integer, got {self.N!r}")
        object.__setattr__(self, "k", tuple(int(x) for x in self.k))
        object.__setattr__(self, "kperp", tuple(int(x) for x in self.kperp))
        if len(self.k) != 2 or len(self.kperp) != 2:
            raise InputError("k and kperp must be integer pairs")
        if self.k == (0, 0) or self.kperp == (0, 0):
            raise InputError("k and kperp must be nonzero")
        if self.k[0] * self.kperp[0] + self.k[1] * self.kperp[1] != 0:
            raise InputError(f"k={self.k} and kperp={self.kperp} are not orthogonal")
        check_grid_size(self.grid_size)
        ctx = self.ctx  # validates digits
        if self.filter_digits < 1:
            raise InputError("filter_digits must be positive")
        if self.filter_digits > ctx.digits:
            raise InputError(f"filter_digits={self.filter_digits} exceeds working precision {ctx.digits}")
        if isinstance(self.beta0, str):
            with ctx:
                parse_decimal(self.beta0)
        if self.potential is None:
            object.__setattr__(self, "potential", default_potential(ctx))
        # g_n has degree at most n * max|l.k|; the grid must resolve R_N
        jk = max(abs(l[0] * self.k[0] + l[1] * self.k[1]) for l, _ in self.potential.modes)
        if self.N * jk >= self.grid_size // 2:
            raise InputError(f"grid size {self.grid_size} cannot resolve order {self.N} "
                             f"(degree up to {self.N * jk}); use at least {_next_pow2(2 * self.N * jk + 2)}")

    @property
    def ctx(self) -> PrecisionContext:
        return PrecisionContext(self.digits)

    @property
    def beta0_value(self):
        with self.ctx:
            return parse_decimal(self.beta0) if isinstance(self.beta0, str) else mpfr(self.beta0)

    @property
    def rotation_number(self):
        """The frequency as given by ``omega`` (before unit conversion)."""
        return eval_frequency(self.omega, self.ctx)

    @property
    def omega_value(self):
        """Angle ``theta`` advances per iterate, in radians.

        With ``omega_units="turns"`` the frequency is a rotation number and
        the angle is ``2 pi`` times it.
        """
        w = self.rotation_number
        if self.omega_units == "radians":
            return w
        with self.ctx:
            return 2 * gmpy2.const_pi() * w


def _next_pow2(x):
    p = 1
    while p < x:
        p *= 2
    return p


@dataclass
class LindstedtSeries:
    """Coefficients ``g_0..g_N``, constants ``beta_n`` and drifts ``mu_n``.

    ``beta_provisional`` marks that ``beta_N`` (the constant of the last
    order) is a placeholder 0: it is only fixed when order ``N + 1`` is
    solved.  ``rhs`` keeps the filtered right-hand sides of the cohomology
    equations solved at construction time (empty after loading an archive).
    """

    config: LindstedtConfig
    omega: object
    orders: list = field(default_factory=list)
    betas: list = field(default_factory=list)
    mus: list = field(default_factory=list)
    beta_provisional: bool = True
    per_order_residual: list = field(default_factory=list)
    rhs: list = field(default_factory=list)
    loaded_below_context_precision: bool = False

    @property
    def N(self) -> int:
        return len(self.orders) - 1

    @property
    def ctx(self) -> PrecisionContext:
        return self.config.ctx

    @property
    def usable_order(self) -> int:
        """Highest order whose coefficient is final (``N - 1`` while ``beta_N`` is provisional)."""
        return self.N - 1 if self.beta_provisional else self.N


# --------------------------------------------------------------------------
# Order 0


def _zero_mode_average(V, k, kperp, beta):
    """Mean over theta of ``grad V(theta k + beta kperp)``.

    Only modes with ``l . k = 0`` survive the average, giving a
    trigonometric polynomial in ``beta``.
    """
    out = [mpc(0), mpc(0)]
    for l, a in V.modes:
        if l[0] * k[0] + l[1] * k[1] != 0:
            continue
        e = gmpy2.exp(mpc(0, beta * (l[0] * kperp[0] + l[1] * kperp[1])))
        out[0] += a[0] * e
        out[1] += a[1] * e
    return out


def check_order0(config: LindstedtConfig):
    """Return ``(|mean grad V(theta k + beta0 kperp)|, non-degeneracy average)``.

    Raises if the order-1 equation is not solvable or the non-degeneracy
    average vanishes.
    """
    ctx = config.ctx
    V, k, kperp = config.potential, config.k, config.kperp
    with ctx:
        beta0 = config.beta0_value
        avg = _zero_mode_average(V, k, kperp, beta0)
        size = gmpy2.sqrt(gmpy2.norm(avg[0]) + gmpy2.norm(avg[1]))
        g0 = TrigPolyPair.constant(beta0 * kperp[0], beta0 * kperp[1], config.grid_size, ctx)
        d2 = d2v_quadratic_form(V, k, kperp, g0, config.grid_size, ctx)
        nondeg = sum(d2) / len(d2)
        half = mpfr(10) ** (-(ctx.digits // 2))
        if size > half:
            raise DegenerateConfigError(
                f"beta0={float(beta0):.6g} does not make grad V(theta k + beta0 kperp) average to zero "
                f"(|average| = {float(size):.3e}); try find_beta0_candidates")
        if abs(nondeg) < half:
            raise DegenerateConfigError(f"non-degeneracy average vanishes ({float(nondeg):.3e})")
        return size, nondeg


def find_beta0_candidates(config: LindstedtConfig, n_samples: int = 64):
    """Zeros in ``[0, 2 pi)`` of the ``kperp`` component of the order-0 average."""
    if n_samples < 8:
        raise InputError("n_samples must be at least 8")
    ctx = config.ctx
    V, k, kperp = config.potential, config.k, config.kperp
    with ctx:
        two_pi = 2 * gmpy2.const_pi()

        def h(b):
            a = _zero_mode_average(V, k, kperp, b)
            return (a[0] * kperp[0] + a[1] * kperp[1]).real

        tol = ctx.eps(10)
        exact = mpfr(10) ** (-(ctx.digits - 20))
        xs = [two_pi * i / n_samples for i in range(n_samples + 1)]
        ys = [h(x) for x in xs]
        roots = []
        for i in range(n_samples):
            a, b, fa, fb = xs[i], xs[i + 1], ys[i], ys[i + 1]
            if abs(fa) <= exact:
                roots.append(a)
                continue
            if abs(fb) <= exact or (fa > 0) == (fb > 0):
                continue
            while b - a > tol:
                m = (a + b) / 2
                fm = h(m)
                if fm == 0:
                    a = b = m
                    break
                if (fm > 0) == (fa > 0):
                    a, fa = m, fm
                else:
                    b = m
            roots.append((a + b) / 2)
        if not roots:
            raise NotFoundError("no sign change of the order-0 average; supply beta0 manually")
        return roots


# --------------------------------------------------------------------------
# Order n


def _extra_terms(series, n):
    """Dissipative terms of the order-n equation besides ``R_n + mu_n``."""
    cfg = series.config
    if cfg.gamma == 0 or n < 3:
        return None
    if n == 3:
        w = series.omega
        return ("const", (-w * cfg.k[0], -w * cfg.k[1]))
    g = series.orders[n - 3]
    return ("poly", shift(g, -series.omega) - g)


def order_rhs(series, n, R):
    """Right-hand side ``R_n + mu_n + E_n`` given ``R_n``; uses the stored ``mu_n``."""
    mu = series.mus[n]
    rhs = R.add_constant(mu)
    extra = _extra_terms(series, n)
    if extra is not None:
        kind, val = extra
        rhs = rhs.add_constant(val) if kind == "const" else rhs + val
    return rhs


def _drift(series, n, R):
    cfg = series.config
    ctx = series.ctx
    with ctx:
        if cfg.gamma == 0 or n <= 2:
            return (mpfr(0), mpfr(0))
        k = cfg.k
        if n == 3:
            return (series.omega * k[0], series.omega * k[1])
        a, b = R.coeff(0)
        kk = k[0] * k[0] + k[1] * k[1]
        c = -((a * k[0] + b * k[1]).real) / kk
        return (c * k[0], c * k[1])


def _fix_beta(series, state, n):
    """Fix ``beta_{n-1}`` and return the snapshot holding the final ``F_{n-1}``."""
    cfg = series.config
    ctx = series.ctx
    kp = cfg.kperp
    with ctx:
        aff = advance_affine(state, series.orders[n - 1], kp)

        def kperp_average(st):
            vals = r_grid(st, n)
            return sum(vals[0] * kp[0] + vals[1] * kp[1]) / cfg.grid_size

        a = kperp_average(aff.at(0))
        # b - a from the t-linear part directly; subtracting two evaluations
        # would cancel catastrophically once R_n is large
        inc = aff.increment_grid()
        slope = sum(inc[0] * kp[0] + inc[1] * kp[1]) / cfg.grid_size
        if abs(slope) < mpfr(10) ** (-(ctx.digits // 2)):
            raise DegenerateConfigError(f"cannot fix beta_{n - 1}: kperp average does not depend on it")
        beta = -a / slope
        series.orders[n - 1] = series.orders[n - 1].add_constant((beta * kp[0], beta * kp[1]))
        series.betas[n - 1] = beta
        return aff.at(beta)


def next_order(series: LindstedtSeries, state, n: int):
    """Solve order ``n`` in place; return the updated nonlinearity snapshot.

    For ``n >= 2`` this first fixes ``beta_{n-1}`` (and so the final
    ``g_{n-1}``), then determines ``mu_n``, solves the cohomology equation
    and appends the filtered, zero-average ``g_n``.
    """
    cfg = series.config
    ctx = series.ctx
    if n >= 2:
        state = _fix_beta(series, state, n)
    R = r_coefficient(state, n)
    with ctx:
        series.mus.append(_drift(series, n, R))
        rhs = order_rhs(series, n, R)
        rhs = _truncate_to_degree(rhs, n, cfg, ctx)
        zero_tol = mpfr(10) ** (-(cfg.filter_digits - 10)) * max(mpfr(1), rhs.max_abs())
        g, _report = solve_cohomology(rhs, series.omega, zero_tol)
        g = filter_small(g, cfg.filter_digits)
        if g.degree > n * cfg.potential.degree:
            raise ConsistencyError(f"g_{n} has degree {g.degree} > {n * cfg.potential.degree}")
        resid = sup_norm_grid(apply_Lomega(g, series.omega) - rhs)
        series.per_order_residual.append(resid)
        series.rhs.append(filter_small(rhs, cfg.filter_digits))
        series.orders.append(g)
        series.betas.append(mpfr(0))
    return state


def next_order_conservative(series, state, n):
    if series.config.gamma != 0:
        raise InputError("series is dissipative")
    return next_order(series, state, n)


def next_order_dissipative(series, state, n):
    if series.config.gamma != 1:
        raise InputError("series is conservative")
    return next_order(series, state, n)


def _truncate_to_degree(rhs, n, cfg, ctx):
    """Drop modes above the theoretical degree ``n max|l.k|``.

    Those modes hold rounding noise only; anything larger signals aliasing.
    """
    jk = max(abs(l[0] * cfg.k[0] + l[1] * cfg.k[1]) for l, _ in cfg.potential.modes)
    bound = n * jk
    scale = rhs.max_abs()
    noise = scale * ctx.eps(15)
    keep = {}
    for l, (a, b) in rhs.coeffs.items():
        if abs(l) <= bound:
            keep[l] = (a, b)
        elif max(abs(a), abs(b)) > noise:
            raise ConsistencyError(f"order {n}: mode {l} above degree bound {bound} carries "
                                   f"{float(max(abs(a), abs(b))):.3e} (aliasing?)")
    return TrigPolyPair(keep, rhs.grid_size, ctx)


def run(config: LindstedtConfig, progress=None) -> LindstedtSeries:
    """Compute orders ``0..N``.

    On failure the exception carries the partial series as ``exc.partial``.
    ``progress``, if given, is called as ``progress(n, series)`` after each
    order.
    """
    check_order0(config)
    ctx = config.ctx
    M = config.grid_size
    with ctx:
        omega = config.omega_value
        beta0 = config.beta0_value
        kp = config.kperp
        g0 = TrigPolyPair.constant(beta0 * kp[0], beta0 * kp[1], M, ctx)
        series = LindstedtSeries(config, omega, orders=[g0], betas=[beta0],
                                 mus=[(mpfr(0), mpfr(0))])
        series.per_order_residual.append(mpfr(0))
        series.rhs.append(TrigPolyPair.zero(M, ctx))
        state = init_state(config.potential, config.k, kp, g0, M, ctx,
                           spill_from=config.spill_from)
        try:
            for n in range(1, config.N + 1):
                state = next_order(series, state, n)
                log.debug("order %d: residual %.3e", n, float(series.per_order_residual[-1]))
                if progress is not None:
                    progress(n, series)
        except LindstedtError as exc:
            exc.partial = series
            raise
        series.beta_provisional = config.N >= 1
        return series


def evaluate_partial_sum(series: LindstedtSeries, eps, theta, n_max: int | None = None):
    """``sum_{i <= n_max} g_i(theta) eps^i`` by Horner's rule in ``eps``."""
    if n_max is None:
        n_max = series.N
    if n_max > series.N:
        raise InputError(f"n_max={n_max} exceeds computed order {series.N}")
    with series.ctx:
        acc = [mpc(0), mpc(0)]
        for i in range(n_max, -1, -1):
            v = series.orders[i](theta)
            acc = [acc[0] * eps + v[0], acc[1] * eps + v[1]]
        return tuple(acc)
