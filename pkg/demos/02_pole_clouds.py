"""Pade and Log-Pade singularities of the golden series, with and without dissipation.

Writes ``poles_conservative.csv`` and ``poles_dissipative.csv`` to the
current directory.  Takes one to two minutes.
"""

# %% Two series at desk scale
from lindstedt_tori import LindstedtConfig, io, pade, run
from lindstedt_tori.numerics import FrequencySpec

common = dict(omega=FrequencySpec("golden"), N=120, digits=400, filter_digits=100, grid_size=256)
cons = run(LindstedtConfig(gamma=0, **common))
diss = run(LindstedtConfig(gamma=1, **common))

# %% Pole clouds at theta = 1
orders = [(57, 57), (58, 58), (59, 59)]
for name, s in (("conservative", cons), ("dissipative", diss)):
    sets = pade.pole_cloud(s, "1", orders, components=["g1", "g2"])
    good = [complex(p.location) for ps in sets for p in ps.poles if not p.spurious]
    real_neg = sorted(z.real for z in good if abs(z.imag) < 1e-12 and z.real < 0)
    print(f"{name}: {len(good)} non-spurious poles; negative real poles nearest 0: "
          f"{[round(x, 4) for x in real_neg[-3:]]}")
    if name == "dissipative":
        near = [z for z in good if abs(z) <= 1 and abs(abs(1 - z ** 3) - 1) < 0.05]
        print(f"  {len(near)} of them lie close to the curve |1 - eps^3| = 1")
    chash = io.config_hash(io.config_record(s.config))
    io.write_csv(f"poles_{name}.csv", pade.POLE_COLUMNS, pade.pole_rows(sets), chash)

# %% Log-Pade of the first component: branch points show up as poles with residue -1/l
sets = pade.pole_cloud(cons, "1", [(57, 57)], log_mode=True, components=["g1"])
kept = [p for p in sets[0].poles if not p.spurious]
for p in sorted(kept, key=lambda p: abs(p.location))[:6]:
    z, r = complex(p.location), complex(p.residue)
    print(f"pole {z:.4f}  residue {r:.4f}")
