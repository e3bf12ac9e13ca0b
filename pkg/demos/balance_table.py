"""Three two-qubit interactions and what each lets the environment learn.

Run: python3 demos/balance_table.py
"""

import numpy as np

from decolab import bipartite as bp
from decolab.gates import cnot, swap
from decolab.report import algebra_label

CHANNELS = {
    "identity": np.eye(4),
    "swap": swap(2, 2),
    "cnot": cnot(),
}

print(f"{'channel':10} {'acc':6} {'pacc':6} {'dec':6}")
for name, u in CHANNELS.items():
    an = bp.analyze(bp.UnitaryChannel.square(u, 2))
    print(f"{name:10} {algebra_label(an.acc):6} {algebra_label(an.pacc):6} {algebra_label(an.dec):6}")

# only the cnot has an observable that survives and is also recorded in F
cf = bp.detect_control_form(bp.UnitaryChannel.square(cnot(), 2))
print("\ncnot control basis (columns):")
print(np.round(cf.control_basis.real, 6))
print("conditionals on F:")
for k, v in enumerate(cf.conditionals):
    print(f"  branch {k}:", np.round(v.real, 6).tolist())
