"""Diamond distances between small circuits and between their compiled random-unitary versions.

Run: python3 demos/diamond_reduction.py   (about 20 s)
"""
from channel_forge.circuits import dephasing_circuit, identity_circuit, unitary_circuit
from channel_forge.diamond import verify_theorem10
from channel_forge.standard import PAULI_X

cases = {
    "identity vs X": (identity_circuit(), unitary_circuit(PAULI_X)),
    "identity vs dephasing": (identity_circuit(), dephasing_circuit()),
    "identity vs identity": (identity_circuit(), identity_circuit()),
}

for name, (q1, q2) in cases.items():
    r = verify_theorem10(q1, q2, m=4)
    print(f"{name}: mixed-state distance {r.q_distance.value:.4f}, "
          f"compiled distance {r.c_distance.value:.4f} (certified >= {r.c_certified_lower:.4f})")
