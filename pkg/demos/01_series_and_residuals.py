"""Compute a Lindstedt series for the golden rotation number and check it.

Run with ``python demos/01_series_and_residuals.py``; takes about a minute.
"""

# %% Configuration
import gmpy2
from gmpy2 import mpfr

from lindstedt_tori import LindstedtConfig, run
from lindstedt_tori.diagnostics import cohomology_residuals, invariance_residual
from lindstedt_tori.gevrey import a_sequence
from lindstedt_tori.numerics import FrequencySpec

cfg = LindstedtConfig(gamma=0, omega=FrequencySpec("golden"), N=40, digits=150,
                      filter_digits=60, grid_size=128)

# %% Orders 0..N
series = run(cfg)
print(f"computed orders 0..{series.N}; last usable order {series.usable_order}")

# %% Coefficient growth: A(n) = ln ||g_n||_{0.1,4} / n
A = dict(a_sequence(series, "0.1", 4))
for n in (5, 10, 20, 30, 40):
    print(f"A({n:2d}) = {float(A[n]): .6f}")

# %% Per-order cohomology residuals
res = cohomology_residuals(series)
print(f"largest cohomology residual: {float(max(res)):.2e}")

# %% Invariance equation on partial sums at eps = 1e-2
with series.ctx:
    for n in (0, 5, 10, 20, 30, 40):
        r = invariance_residual(series, mpfr("1e-2"), n)
        print(f"n={n:2d}  ln residual = {float(gmpy2.log(r)):8.2f}")
