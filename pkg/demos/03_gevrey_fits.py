"""Gevrey fits ``A(n) ~ sigma ln n + ln R`` for four rotation numbers.

Each series takes under a minute.  The fitted exponents over a short range
of orders are not the asymptotic ones; see the README.
"""

# %% Series for each frequency
from lindstedt_tori import LindstedtConfig, run
from lindstedt_tori.gevrey import a_sequence, fit_log
from lindstedt_tori.numerics import FrequencySpec

fits = {}
for kind in ("golden", "sqrt2-inverse", "plastic-inverse", "tribonacci-inverse"):
    s = run(LindstedtConfig(omega=FrequencySpec(kind), N=120, digits=400, grid_size=256))
    seq = a_sequence(s, "0.1", 4)
    fits[kind] = fit_log(seq, 40, 110)

# %% Summary
for kind, f in fits.items():
    print(f"{kind:20s} sigma = {float(f.sigma):.4f}   R = {float(f.R):.4e}   rss = {float(f.rss):.2e}")
