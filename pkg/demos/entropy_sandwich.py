"""Minimum output entropy and maximal p-norms of a channel versus its approximation.

Run: python3 demos/entropy_sandwich.py
"""
import numpy as np

from channel_forge.approximation import build_approximation
from channel_forge.metrics import verify_theorem5, verify_theorem7
from channel_forge.standard import HADAMARD, dephasing_dilation, depolarizing_kraus, unitary_channel

fixtures = {
    "hadamard": unitary_channel(HADAMARD),
    "dephasing": dephasing_dilation(),
    "depolarizing": depolarizing_kraus(2),
}

for name, phi in fixtures.items():
    ac = build_approximation(phi, 8)
    print(f"\n{name} (dim_A=8, {ac.n_terms} unitaries)")
    for p in (1, 2, np.inf):
        r = verify_theorem5(phi, ac, p, restarts=16, seed=0)
        print(f"  p={p}: {r.lower:.4f} <= {r.middle:.4f} <= {r.upper:.4f}  ok={r.passed}")
    r = verify_theorem7(phi, ac, restarts=16, seed=0)
    print(f"  entropy: {r.lower:.4f} <= {r.middle:.4f} <= {r.upper:.4f}  ok={r.passed}")
