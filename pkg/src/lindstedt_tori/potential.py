"""Trigonometric potentials and the power-series expansion of ``eps grad V``.

The gradient is stored as ``grad V(q) = sum_l alpha_l exp(i l . q)`` with
``l`` in Z^2 and ``alpha_l`` in C^2.  Along the hull ``q = theta k + g_eps``
every exponential is expanded in ``eps`` with the recursion

    F_n = (i / n) sum_{m<n} (m + 1) (l . g_{m+1}) F_{n-1-m},
    F_0 = exp(i l . (theta k + g_0)),

evaluated pointwise on the grid.  Then ``R_n = sum_l alpha_l F_{n-1}``.

Modes come in conjugate pairs ``(l, alpha), (-l, conj alpha)``; only one
representative of each pair is propagated and the partner is recovered by
conjugation, so ``R_n = sum_rep 2 Re(alpha_l F_{n-1})`` is real by
construction.
"""

from __future__ import annotations

import os
import pickle
import tempfile
from dataclasses import dataclass, field, replace

import gmpy2
import numpy as np
from gmpy2 import mpc, mpfr

from .errors import ConsistencyError, InputError
from .numerics import PrecisionContext, parse_decimal
from .trigpoly import GridFunctionPair, TrigPolyPair, coeffs_from_samples, grid_angles, to_grid

__all__ = [
    "PotentialSpec",
    "NonlinearityState",
    "default_potential",
    "init_state",
    "advance",
    "advance_affine",
    "r_coefficient",
    "r_grid",
    "d2v_quadratic_form",
    "grad_v",
]


@dataclass(frozen=True)
class PotentialSpec:
    """Gradient modes ``((l1, l2), (alpha1, alpha2))``."""

    modes: tuple
    ctx: PrecisionContext

    def __post_init__(self):
        with self.ctx:
            modes = tuple(((int(l[0]), int(l[1])), (mpc(a[0]), mpc(a[1]))) for l, a in self.modes)
        object.__setattr__(self, "modes", modes)
        lookup = {}
        for l, a in modes:
            if l == (0, 0):
                raise InputError("the constant mode (0, 0) is not allowed in a gradient")
            if l in lookup:
                raise InputError(f"duplicate mode {l}")
            lookup[l] = a
        tol = self.ctx.eps(10)
        with self.ctx:
            for l, a in modes:
                partner = lookup.get((-l[0], -l[1]))
                if partner is None:
                    raise InputError(f"mode {l} has no conjugate partner {(-l[0], -l[1])}")
                scale = max(abs(a[0]), abs(a[1]), 1)
                if max(abs(partner[0] - a[0].conjugate()), abs(partner[1] - a[1].conjugate())) > tol * scale:
                    raise InputError(f"mode {(-l[0], -l[1])} is not the conjugate of mode {l}")
                # alpha_l = i l Vhat_l must be parallel to l
                if abs(a[0] * l[1] - a[1] * l[0]) > tol * scale * (abs(l[0]) + abs(l[1])):
                    raise InputError(f"coefficient of mode {l} is not parallel to {l}")

    @property
    def degree(self) -> int:
        return max((abs(l[0]) + abs(l[1]) for l, _ in self.modes), default=0)

    def representatives(self):
        """One member of every conjugate pair (the lexicographically positive one)."""
        return [(l, a) for l, a in self.modes if l > (-l[0], -l[1])]

    def scaled(self, s):
        with self.ctx:
            return PotentialSpec(tuple((l, (a[0] * s, a[1] * s)) for l, a in self.modes), self.ctx)

    def shifted(self, c):
        """Gradient of ``q -> V(q + c)``: ``alpha_l -> alpha_l exp(i l . c)``."""
        with self.ctx:
            out = []
            for l, a in self.modes:
                e = gmpy2.exp(mpc(0, l[0] * mpfr(c[0]) + l[1] * mpfr(c[1])))
                out.append((l, (a[0] * e, a[1] * e)))
            return PotentialSpec(tuple(out), self.ctx)

    def to_records(self, digits):
        """Plain-text records ``[l1, l2, re1, im1, re2, im2]``."""
        from .numerics import format_decimal

        recs = []
        for l, a in self.modes:
            recs.append([l[0], l[1]] + [format_decimal(x, digits) for z in a for x in (z.real, z.imag)])
        return recs

    @classmethod
    def from_records(cls, records, ctx):
        modes = []
        with ctx:
            for rec in records:
                if len(rec) != 6:
                    raise InputError(f"potential mode record needs 6 fields, got {rec!r}")
                l1, l2 = int(rec[0]), int(rec[1])
                vals = [parse_decimal(str(x)) for x in rec[2:]]
                modes.append(((l1, l2), (mpc(vals[0], vals[1]), mpc(vals[2], vals[3]))))
        return cls(tuple(modes), ctx)


def default_potential(ctx: PrecisionContext) -> PotentialSpec:
    """Gradient of ``V(q) = -cos q1 - cos q2 - cos(q1 + q2)``."""
    with ctx:
        h = 1 / mpc(0, 2)  # 1/(2i)
        modes = []
        for l in ((1, 0), (0, 1), (1, 1)):
            modes.append((l, (l[0] * h, l[1] * h)))
            modes.append(((-l[0], -l[1]), (-l[0] * h, -l[1] * h)))
        return PotentialSpec(tuple(modes), ctx)


def grad_v(V: PotentialSpec, q1, q2):
    """Direct evaluation of ``grad V(q)`` by mode summation (real or complex q)."""
    with V.ctx:
        out = [mpc(0), mpc(0)]
        for l, a in V.modes:
            e = gmpy2.exp(mpc(0, 1) * (l[0] * q1 + l[1] * q2))
            out[0] += a[0] * e
            out[1] += a[1] * e
        return tuple(out)


# --------------------------------------------------------------------------
# Optional disk spill for the F history


class _Spilled:
    """Handle to an object array pickled on disk."""

    __slots__ = ("path",)

    def __init__(self, arr, directory):
        fd, self.path = tempfile.mkstemp(suffix=".pkl", dir=directory)
        with os.fdopen(fd, "wb") as fh:
            pickle.dump(arr, fh, protocol=pickle.HIGHEST_PROTOCOL)

    def load(self):
        with open(self.path, "rb") as fh:
            return pickle.load(fh)


def _get(x):
    return x.load() if isinstance(x, _Spilled) else x


@dataclass(frozen=True, eq=False)
class NonlinearityState:
    """Snapshot of the exponential expansion after ``len(g_history)`` orders.

    ``F[l][n]`` holds grid samples of ``F_n`` for every representative mode
    ``l``; ``dg[l][m]`` holds ``(m + 1) l . g_{m+1}`` on the grid.
    """

    V: PotentialSpec
    k: tuple
    kperp: tuple
    grid_size: int
    ctx: PrecisionContext
    F: dict
    dg: dict
    g_history: tuple
    spill_from: int | None = None
    spill_dir: str | None = field(default=None, repr=False)

    @property
    def order(self) -> int:
        """Index of the last committed ``g``."""
        return len(self.g_history) - 1

    def F_values(self, l, n):
        """Grid samples of ``F_n`` for any mode ``l`` (partners by conjugation)."""
        l = tuple(l)
        if l in self.F:
            return _get(self.F[l][n])
        neg = (-l[0], -l[1])
        if neg in self.F:
            return np.array([z.conjugate() for z in _get(self.F[neg][n])], dtype=object)
        raise KeyError(l)


def _real_grid(p: TrigPolyPair):
    vals = to_grid(p).values
    return (np.array([z.real for z in vals[0]], dtype=object),
            np.array([z.real for z in vals[1]], dtype=object))


def init_state(V, k, kperp, g0, M, ctx, spill_from=None, spill_dir=None) -> NonlinearityState:
    """Order-0 snapshot: ``F_0 = exp(i l . (theta k + g0))`` for every mode."""
    if any(l != 0 for l in g0.coeffs):
        raise InputError("g0 must be a constant trigonometric polynomial")
    with ctx:
        c = g0.coeff(0)
        c = (c[0].real, c[1].real)
        theta = grid_angles(M, ctx)
        F, dg = {}, {}
        for l, _ in V.representatives():
            lk = l[0] * k[0] + l[1] * k[1]
            phase = l[0] * c[0] + l[1] * c[1]
            F[l] = (np.array([gmpy2.exp(mpc(0, lk * t + phase)) for t in theta], dtype=object),)
            dg[l] = ()
        if spill_dir is None and spill_from is not None:
            spill_dir = tempfile.mkdtemp(prefix="lindstedt-F-")
        return NonlinearityState(V, tuple(k), tuple(kperp), M, ctx, F, dg, (g0,),
                                 spill_from, spill_dir)


def _convolution_head(state, l, n):
    """``sum_{m=0}^{n-2} dg[m] F[n-1-m]``: the part of ``n F_n / i`` that
    does not involve ``g_n``."""
    dgl, Fl = state.dg[l], state.F[l]
    acc = None
    for m in range(n - 1):
        term = _get(dgl[m]) * _get(Fl[n - 1 - m])
        acc = term if acc is None else acc + term
    return acc


def _store(state, arr, n):
    if state.spill_from is not None and n >= state.spill_from:
        return _Spilled(arr, state.spill_dir)
    return arr


def advance(state: NonlinearityState, g_new: TrigPolyPair) -> NonlinearityState:
    """Commit ``g_new`` as the next order and compute ``F_n`` for every mode."""
    return advance_affine(state, g_new, (0, 0)).at(0)


@dataclass(frozen=True, eq=False)
class AffineAdvance:
    """``F_n`` as an affine function of ``t`` when ``g_n -> g_n + t * direction``.

    Only the last term of the recursion depends on the constant part of
    ``g_n``: ``F_n(t) = F_n(0) + i t (l . direction) F_0``.
    """

    base: NonlinearityState
    g_new: TrigPolyPair
    direction: tuple
    F0_part: dict
    dg_part: dict

    def at(self, t) -> NonlinearityState:
        st = self.base
        n = len(st.g_history)
        ctx = st.ctx
        with ctx:
            t = mpfr(t)
            d = self.direction
            F, dg = {}, {}
            for l in st.F:
                ld = l[0] * d[0] + l[1] * d[1]
                Fn, dgn = self.F0_part[l], self.dg_part[l]
                if t != 0 and ld != 0:
                    F0 = _get(st.F[l][0])
                    Fn = Fn + F0 * mpc(0, t * ld)
                    dgn = dgn + n * t * ld
                F[l] = st.F[l] + (_store(st, Fn, n),)
                dg[l] = st.dg[l] + (_store(st, dgn, n - 1),)
            g = self.g_new
            if t != 0:
                g = g.add_constant((t * d[0], t * d[1]))
            return replace(st, F=F, dg=dg, g_history=st.g_history + (g,))

    def increment_grid(self):
        """Grid samples of ``R(t=1) - R(t=0)`` for the next ``R``.

        Formed from the ``t``-linear part alone, so it keeps full relative
        accuracy even when ``R`` itself is huge.
        """
        st = self.base
        d = self.direction
        M = st.grid_size
        with st.ctx:
            out = [np.array([mpfr(0)] * M, dtype=object) for _ in (0, 1)]
            for l, a in st.V.representatives():
                ld = l[0] * d[0] + l[1] * d[1]
                if ld == 0:
                    continue
                F0 = _get(st.F[l][0])
                for c in (0, 1):
                    if a[c] == 0:
                        continue
                    w = a[c] * mpc(0, ld)
                    out[c] = out[c] + np.array([2 * (w * z).real for z in F0], dtype=object)
            return np.array(out, dtype=object)


def advance_affine(state: NonlinearityState, g_new: TrigPolyPair, direction) -> AffineAdvance:
    """Prepare the next order for a one-parameter family of constant shifts.

    The convolution over earlier orders is computed once; ``.at(t)`` then
    yields the snapshot for ``g_new + t * direction`` in O(M) work.
    """
    n = len(state.g_history)
    ctx = state.ctx
    with ctx:
        g1, g2 = _real_grid(g_new)
        F0_part, dg_part = {}, {}
        unit = mpc(0, 1) / n
        for l in state.F:
            dgn = (g1 * l[0] + g2 * l[1]) * n
            last = dgn * _get(state.F[l][0])
            head = _convolution_head(state, l, n)
            total = last if head is None else head + last
            F0_part[l] = total * unit
            dg_part[l] = dgn
        return AffineAdvance(state, g_new, tuple(direction), F0_part, dg_part)


def r_grid(state: NonlinearityState, n: int):
    """Real grid samples (2, M) of ``R_n = sum_l alpha_l F_{n-1}``."""
    if n < 1 or n - 1 > state.order:
        raise InputError(f"R_{n} needs F_{n-1}; state holds orders 0..{state.order}")
    with state.ctx:
        out = [None, None]
        for l, a in state.V.representatives():
            Fv = _get(state.F[l][n - 1])
            for c in (0, 1):
                if a[c] == 0:
                    continue
                # alpha F + conj(alpha F) = 2 Re(alpha F)
                part = np.array([2 * (a[c] * z).real for z in Fv], dtype=object)
                out[c] = part if out[c] is None else out[c] + part
        M = state.grid_size
        zero = np.array([mpfr(0)] * M, dtype=object)
        return np.array([out[0] if out[0] is not None else zero,
                         out[1] if out[1] is not None else zero], dtype=object)


def r_coefficient(state: NonlinearityState, n: int) -> TrigPolyPair:
    """Fourier coefficients of ``R_n``; checks conjugate symmetry."""
    vals = r_grid(state, n)
    ctx = state.ctx
    with ctx:
        c1 = coeffs_from_samples(vals[0], ctx)
        c2 = coeffs_from_samples(vals[1], ctx)
        R = TrigPolyPair({l: (c1[l], c2[l]) for l in c1}, state.grid_size, ctx)
        scale = R.max_abs()
        if scale > 0 and R.conjugate_symmetry_defect() > ctx.eps(10) * scale:
            raise ConsistencyError(f"R_{n} is not the expansion of a real function")
        return R


def d2v_quadratic_form(V, k, kperp, g0, M, ctx):
    """Grid samples of ``kperp . D^2V(theta k + g0) kperp`` (1-D object array).

    ``D^2V`` follows from the gradient modes: ``d/dq (alpha e^{i l.q}) =
    alpha (i l)^T e^{i l.q}``.  The mean of the result is the
    non-degeneracy average.
    """
    with ctx:
        c = g0.coeff(0)
        c = (c[0].real, c[1].real)
        theta = grid_angles(M, ctx)
        out = np.array([mpfr(0)] * M, dtype=object)
        for l, a in V.representatives():
            lk = l[0] * k[0] + l[1] * k[1]
            lp = l[0] * kperp[0] + l[1] * kperp[1]
            w = (a[0] * kperp[0] + a[1] * kperp[1]) * mpc(0, lp)
            if w == 0:
                continue
            phase = l[0] * c[0] + l[1] * c[1]
            out = out + np.array([2 * (w * gmpy2.exp(mpc(0, lk * t + phase))).real for t in theta],
                                 dtype=object)
        return out
