"""Build the random-unitary approximation of a qubit channel and watch it work.

Run: python3 demos/approximation_walkthrough.py
"""
import numpy as np

from channel_forge.approximation import (
    build_approximation,
    perp_mixing_distance,
    post_mixing_state,
    simulate_original,
)
from channel_forge.channels import validate_cptp
from channel_forge.metrics import entropy
from channel_forge.numerics import maximally_mixed, trace_norm
from channel_forge.standard import embedding_dilation
from channel_forge.sampling import random_channel, random_density, random_state_on

phi = random_channel(2, 2, rank=2, seed=7)
print("input channel valid:", validate_cptp(phi).passed)

for dim_a in (2, 4, 8):
    ac = build_approximation(phi, dim_a)
    print(f"\ndim_A={dim_a}: {ac.n_terms} unitaries, output A(x)H of dim {ac.dim}")

    # on the S0 block the approximation reproduces phi(sigma) (x) I/dim_B exactly
    sigma = random_density(2, seed=1)
    target = np.kron(phi.apply(sigma), maximally_mixed(ac.dim_B))
    print("  residual on S0:", f"{trace_norm(simulate_original(ac, sigma) - target):.1e}")

    # on the complement the output is within 2/dim_A of maximally mixed
    rho = random_state_on(ac.split.projector_perp(), seed=2)
    print(f"  distance on complement: {perp_mixing_distance(ac, rho):.4f} (bound {2 / dim_a:.4f})")
    print(f"  output entropy there: {entropy(ac.apply(rho)):.4f} bits of {np.log2(ac.dim):.0f}")

# the embedding dilation (U = I, nothing traced) meets the bound exactly
tight = build_approximation(embedding_dilation(8, 2), 8)
print("\nembedding dilation, dim_A=8:", f"{perp_mixing_distance(tight, post_mixing_state(8, 2)):.4f}")
