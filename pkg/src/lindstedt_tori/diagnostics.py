"""Residual checks on a computed series.

Two independent measurements:

* the per-order cohomology residual ``|L_omega g_n - RHS_n|_inf``, with
  ``RHS_n`` taken from construction or rebuilt from the stored orders;
* the full invariance equation evaluated on partial sums, with ``grad V``
  summed directly from the potential modes.  It shares no code with the
  order-by-order expansion and so guards it.
"""

from __future__ import annotations

import gmpy2
import numpy as np
from gmpy2 import mpc, mpfr

from .cohomology import apply_Lomega
from .errors import InputError
from .lindstedt import order_rhs
from .potential import advance, init_state, r_coefficient
from .trigpoly import TrigPolyPair, grid_angles, shift, sup_norm_grid, sup_norm_values, to_grid

__all__ = ["cohomology_residual", "cohomology_residuals", "invariance_residual", "rebuild_rhs"]


def rebuild_rhs(series, n_max=None):
    """Right-hand sides ``RHS_1..RHS_n_max`` recomputed from the stored orders."""
    n_max = series.N if n_max is None else n_max
    cfg = series.config
    ctx = series.ctx
    out = [TrigPolyPair.zero(cfg.grid_size, ctx)]
    with ctx:
        state = init_state(cfg.potential, cfg.k, cfg.kperp, series.orders[0], cfg.grid_size, ctx)
        for n in range(1, n_max + 1):
            if n >= 2:
                state = advance(state, series.orders[n - 1])
            out.append(order_rhs(series, n, r_coefficient(state, n)))
    return out


def _residual(series, n, rhs):
    g = series.orders[n]
    with series.ctx:
        return sup_norm_grid(apply_Lomega(g, series.omega) - rhs)


def cohomology_residual(series, n, rhs=None):
    """``sup_theta |L_omega g_n - RHS_n|`` for one order ``n >= 1``."""
    if not 1 <= n <= series.N:
        raise InputError(f"order {n} outside 1..{series.N}")
    if rhs is None:
        rhs = series.rhs[n] if len(series.rhs) > n else rebuild_rhs(series, n)[n]
    return _residual(series, n, rhs)


def cohomology_residuals(series):
    """Residuals for orders ``1..N`` (one rebuild pass if RHS were not kept)."""
    rhs = series.rhs if len(series.rhs) > series.N else rebuild_rhs(series)
    return [_residual(series, n, rhs[n]) for n in range(1, series.N + 1)]


def _grid_values(p):
    return to_grid(p).values


def invariance_residual(series, eps, n):
    """Sup over the grid of the invariance-equation defect of ``sum_{i<=n} g_i eps^i``.

    The defect is ``G(t+w) - 2G(t) + G(t-w) + gamma eps^3 (k w + G(t) - G(t-w))
    - eps grad V(t k + G(t)) - mu_eps``, with ``mu_eps`` truncated at the same
    order.  ``eps`` may be complex.
    """
    if not 0 <= n <= series.N:
        raise InputError(f"order {n} outside 0..{series.N}")
    cfg = series.config
    ctx = series.ctx
    M = cfg.grid_size
    w = series.omega
    with ctx:
        eps = mpc(eps)
        # partial sums by Horner in eps, coefficientwise
        modes = {}
        for i in range(n, -1, -1):
            for l in modes:
                a, b = modes[l]
                modes[l] = (a * eps, b * eps)
            for l, (a, b) in series.orders[i].coeffs.items():
                a0, b0 = modes.get(l, (mpc(0), mpc(0)))
                modes[l] = (a0 + a, b0 + b)
        G = TrigPolyPair(modes, M, ctx)
        mu = [mpc(0), mpc(0)]
        for i in range(n, -1, -1):
            mu = [mu[0] * eps + series.mus[i][0], mu[1] * eps + series.mus[i][1]]

        Gv = _grid_values(G)
        Gp = _grid_values(shift(G, w))
        Gm = _grid_values(shift(G, -w))
        lhs = Gp - 2 * Gv + Gm
        if cfg.gamma == 1:
            e3 = eps ** 3
            k = cfg.k
            lhs = lhs + e3 * (Gv - Gm)
            lhs[0] = lhs[0] + e3 * k[0] * w
            lhs[1] = lhs[1] + e3 * k[1] * w

        theta = grid_angles(M, ctx)
        k = cfg.k
        q1 = np.array([k[0] * t for t in theta], dtype=object) + Gv[0]
        q2 = np.array([k[1] * t for t in theta], dtype=object) + Gv[1]
        # grad V by direct summation over all modes
        I = mpc(0, 1)
        gv = [np.array([mpc(0)] * M, dtype=object) for _ in (0, 1)]
        for l, a in cfg.potential.modes:
            e = np.array([gmpy2.exp(I * (l[0] * x + l[1] * y)) for x, y in zip(q1, q2)], dtype=object)
            gv[0] = gv[0] + a[0] * e
            gv[1] = gv[1] + a[1] * e
        defect = np.empty((2, M), dtype=object)
        defect[0] = lhs[0] - eps * gv[0] - mu[0]
        defect[1] = lhs[1] - eps * gv[1] - mu[1]
        return sup_norm_values(defect, ctx)
