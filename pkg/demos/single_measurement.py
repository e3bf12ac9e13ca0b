"""A qubit measured by a pointer whose reading is copied into a record.

The pipeline finds which events each system commits to and tabulates the
history probabilities.

Run: python3 demos/single_measurement.py
"""

import itertools

from decolab import circuit as cc
from decolab import scenarios
from decolab.report import algebra_label

c, soi = scenarios.single_measurement()
hs = cc.derive_history_set(c, soi)

print(f"{'system':7} {'up':6} {'down':6}")
for name in soi.names():
    a = hs.analyses[name]
    print(f"{name:7} {algebra_label(a.up_dec):6} {algebra_label(a.down_dec):6}")

hd = hs.distribution
names = hd.nontrivial()
print("\nhistories over", ", ".join(names))
for values in itertools.product((0, 1), repeat=len(names)):
    p = cc.probability(hd, dict(zip(names, values)))
    if p > 1e-12:
        print("  " + "  ".join(f"{n}={v}" for n, v in zip(names, values)), f"{p:.6f}")



def show(dist):
    return {k[0]: round(v, 12) for k, v in dist.items()}


print("\nreading given the prepared state f_S=0:", show(cc.conditional(hd, ["e_S"], {"f_S": 0})))
print("record given e_S=1, f_M=0:", show(cc.conditional(hd, ["e_N"], {"e_S": 1, "f_M": 0})))
print("consistency passed:", cc.check_consistency(hd).passed)
