"""Multiple precision scalars, Diophantine frequencies and dense solvers.

All arbitrary precision work is done with :mod:`gmpy2` (MPFR/MPC).  A
:class:`PrecisionContext` fixes the number of decimal digits; entering it
activates a matching gmpy2 context so that every ``mpfr``/``mpc`` created
inside carries exactly that precision.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import gmpy2
from gmpy2 import mpc, mpfr

from .errors import ConvergenceError, InputError, SingularSystemError

__all__ = [
    "PrecisionContext",
    "FrequencySpec",
    "FREQUENCY_KINDS",
    "eval_frequency",
    "solve_dense_linear",
    "poly_roots",
    "poly_eval",
    "format_decimal",
    "parse_decimal",
    "mpfr",
    "mpc",
]

LOG2_10 = math.log2(10.0)

_saved = threading.local()


@dataclass(frozen=True)
class PrecisionContext:
    """Working precision expressed in decimal digits.

    Use as a context manager::

        ctx = PrecisionContext(400)
        with ctx:
            x = mpfr(1) / 3
    """

    digits: int

    def __post_init__(self):
        if not isinstance(self.digits, int) or self.digits < 50:
            raise InputError(f"precision must be an integer >= 50 digits, got {self.digits!r}")

    @property
    def bits(self) -> int:
        return int(math.ceil(self.digits * LOG2_10)) + 8

    @property
    def print_digits(self) -> int:
        """Significant decimal digits that round-trip a value of ``bits`` bits."""
        return int(math.ceil(self.bits / LOG2_10)) + 1

    def __enter__(self):
        stack = getattr(_saved, "stack", None)
        if stack is None:
            stack = _saved.stack = []
        stack.append(gmpy2.get_context().copy())
        gmpy2.set_context(gmpy2.context(precision=self.bits))
        return self

    def __exit__(self, *exc):
        gmpy2.set_context(_saved.stack.pop())
        return False

    def eps(self, shave: int = 0):
        """``10**-(digits - shave)`` as an mpfr at this precision."""
        with self:
            return mpfr(10) ** (-(self.digits - shave))

    def pi(self):
        with self:
            return gmpy2.const_pi()


# --------------------------------------------------------------------------
# Frequencies

FREQUENCY_KINDS = ("golden", "sqrt2-inverse", "plastic-inverse", "tribonacci-inverse", "custom")


@dataclass(frozen=True)
class FrequencySpec:
    kind: str = "golden"
    custom_value: str | None = None

    def __post_init__(self):
        if self.kind not in FREQUENCY_KINDS:
            raise InputError(f"unknown frequency kind {self.kind!r}; expected one of {FREQUENCY_KINDS}")
        if self.kind == "custom":
            if self.custom_value is None:
                raise InputError("custom frequency needs custom_value")
            parse_decimal(self.custom_value)


def _newton_real_root(coeffs, lo, hi):
    """Root of the integer polynomial ``coeffs`` (ascending) in ``[lo, hi]``."""
    ctx = gmpy2.get_context()
    x = mpfr((lo + hi) / 2)
    # double precision seed by bisection, then Newton doubles the digits each step
    a, b = float(lo), float(hi)
    p = lambda t: sum(c * t**i for i, c in enumerate(coeffs))
    for _ in range(60):
        m = 0.5 * (a + b)
        if (p(a) < 0) == (p(m) < 0):
            a = m
        else:
            b = m
    x = mpfr(0.5 * (a + b))
    dcoeffs = [i * c for i, c in enumerate(coeffs)][1:]
    tol = mpfr(2) ** (-(ctx.precision - 4))
    for _ in range(200):
        px = mpfr(0)
        for c in reversed(coeffs):
            px = px * x + c
        dx = mpfr(0)
        for c in reversed(dcoeffs):
            dx = dx * x + c
        step = px / dx
        x -= step
        if abs(step) <= tol * abs(x):
            break
    return x


def eval_frequency(spec: FrequencySpec, ctx: PrecisionContext):
    """Rotation number ``omega`` (radians per iterate) at full context precision."""
    with ctx:
        if spec.kind == "golden":
            return (gmpy2.sqrt(mpfr(5)) - 1) / 2
        if spec.kind == "sqrt2-inverse":
            return 1 / gmpy2.sqrt(mpfr(2))
        if spec.kind == "plastic-inverse":
            # s^3 - s - 1
            return 1 / _newton_real_root([-1, -1, 0, 1], 1, 2)
        if spec.kind == "tribonacci-inverse":
            # t^3 - t^2 - t - 1
            return 1 / _newton_real_root([-1, -1, -1, 1], 1, 2)
        return parse_decimal(spec.custom_value)


# --------------------------------------------------------------------------
# Decimal I/O


def parse_decimal(text: str):
    """Parse a decimal string into an mpfr at the active precision."""
    if not isinstance(text, str):
        raise InputError(f"expected a decimal string, got {type(text).__name__}")
    s = text.strip()
    try:
        float(s)  # cheap syntax check; rejects 'abc', accepts exponents
        return mpfr(s)
    except (ValueError, TypeError) as exc:
        raise InputError(f"cannot parse decimal {text!r}") from exc


def format_decimal(x, digits: int) -> str:
    """Scientific notation with ``digits`` significant digits."""
    if not isinstance(x, type(mpfr(0))):
        x = mpfr(x)
    if x == 0:
        return "0"
    mant, exp, _ = x.digits(10, digits)
    sign = ""
    if mant[0] == "-":
        sign, mant = "-", mant[1:]
    return f"{sign}{mant[0]}.{mant[1:]}e{exp - 1}"


# --------------------------------------------------------------------------
# Dense linear algebra


def solve_dense_linear(A, b, ctx: PrecisionContext):
    """Gaussian elimination with partial pivoting.

    ``A`` is a square nested sequence of real or complex scalars, ``b`` a
    vector.  A pivot smaller than ``10**-(digits-10)`` times the largest
    entry of ``A`` raises :class:`SingularSystemError` naming the column.
    """
    n = len(A)
    if n == 0 or any(len(row) != n for row in A):
        raise InputError("matrix must be square with dimension >= 1")
    if len(b) != n:
        raise InputError("right-hand side has wrong length")
    with ctx:
        a = [[x for x in row] + [b[i]] for i, row in enumerate(A)]
        scale = max(abs(x) for row in A for x in row)
        if scale == 0:
            raise SingularSystemError(0)
        thresh = scale * ctx.eps(10)
        for col in range(n):
            piv = max(range(col, n), key=lambda r: abs(a[r][col]))
            if abs(a[piv][col]) <= thresh:
                raise SingularSystemError(col)
            if piv != col:
                a[col], a[piv] = a[piv], a[col]
            prow = a[col]
            inv = 1 / prow[col]
            for r in range(col + 1, n):
                row = a[r]
                f = row[col] * inv
                if f == 0:
                    continue
                for c in range(col + 1, n + 1):
                    row[c] -= f * prow[c]
                row[col] = 0
        x = [0] * n
        for r in range(n - 1, -1, -1):
            s = a[r][n]
            for c in range(r + 1, n):
                s -= a[r][c] * x[c]
            x[r] = s / a[r][r]
        return x


# --------------------------------------------------------------------------
# Polynomial roots


def poly_eval(coeffs, z):
    """Horner evaluation of ``sum coeffs[i] z**i``."""
    acc = 0
    for c in reversed(coeffs):
        acc = acc * z + c
    return acc


def _eval_with_derivative(coeffs, z):
    p = coeffs[-1]
    dp = 0
    for c in reversed(coeffs[:-1]):
        dp = dp * z + p
        p = p * z + c
    return p, dp


def _start_circle(c, deg):
    """Centroid of the roots and the geometric mean of the root distances to it.

    ``c`` is monic.  Starting on a circle about the origin can trap the
    iteration in a cycle when the roots cluster away from it.
    """
    center = -c[deg - 1] / deg
    # Taylor shift: coefficients of p(w + center)
    q = list(c)
    for i in range(deg):
        for j in range(deg - 1, i - 1, -1):
            q[j] += center * q[j + 1]
    for j in range(deg):
        if q[j] != 0:
            return center, abs(q[j]) ** (mpfr(1) / (deg - j))
    return center, mpfr(1)


def poly_roots(coeffs, tol, ctx: PrecisionContext, max_iter: int = 200):
    """All roots of ``sum coeffs[i] z**i`` by Aberth-Ehrlich iteration.

    Trailing (highest degree) coefficients below ``tol * max|coeff|`` are
    dropped first.  Initial guesses sit on a circle about the root centroid.

    Returns a list of ``mpc`` roots with multiplicity.  Each root satisfies
    ``|p(z)| <= tol * sum |c_i| |z|**i``.
    """
    with ctx:
        c = [mpc(x) for x in coeffs]
        if not c:
            raise InputError("empty coefficient list")
        big = max(abs(x) for x in c)
        if big == 0:
            raise InputError("zero polynomial has no well-defined roots")
        tol = mpfr(tol)
        while len(c) > 1 and abs(c[-1]) <= tol * big:
            c.pop()
        zeros = []
        while len(c) > 1 and c[0] == 0:
            zeros.append(mpc(0))
            c.pop(0)
        deg = len(c) - 1
        if deg == 0:
            return zeros
        if deg == 1:
            return zeros + [-c[0] / c[1]]
        lead = c[-1]
        c = [x / lead for x in c]
        absc = [abs(x) for x in c]
        center, radius = _start_circle(c, deg)
        offset = mpfr("0.4")
        two_pi = 2 * gmpy2.const_pi()
        z = [center + radius * gmpy2.exp(mpc(0, two_pi * j / deg + offset)) for j in range(deg)]
        done = [False] * deg
        for _ in range(max_iter):
            for i in range(deg):
                if done[i]:
                    continue
                zi = z[i]
                p, dp = _eval_with_derivative(c, zi)
                scale = poly_eval(absc, abs(zi))
                if abs(p) <= tol * scale:
                    done[i] = True
                    continue
                if dp == 0:
                    z[i] = zi + radius * tol ** (mpfr(1) / 3)
                    continue
                ratio = p / dp
                s = mpc(0)
                for j in range(deg):
                    if j != i:
                        d = zi - z[j]
                        if d != 0:
                            s += 1 / d
                z[i] = zi - ratio / (1 - ratio * s)
            if all(done):
                return zeros + z
        raise ConvergenceError(
            f"Aberth iteration did not converge in {max_iter} iterations "
            f"({deg - sum(done)} of {deg} roots unconverged)",
            best=zeros + z,
        )
