import numpy as np
import pytest

from channel_forge.channels import tensor_channels, to_choi
from channel_forge.circuits import Circuit, cnot_gate, dephasing_circuit, h_gate, identity_circuit, simulate
from channel_forge.diamond import (
    ESTIMATOR_SLACK,
    canonical_layout,
    classify,
    diamond_distance,
    diamond_distance_exhaustive,
    evaluate_witness,
    lift_witness,
    max_feasible_m,
    reduce_output_factors,
    verify_theorem10,
)
from channel_forge.numerics import CapacityError, DimensionError, ParameterError, trace_norm
from channel_forge.sampling import random_channel, random_density, random_pure_state
from channel_forge.standard import PAULI_X, dephasing_channel, depolarizing_channel, identity_channel, unitary_channel

from oracles import diamond_random_inputs, kraus_apply, with_ref

ident = identity_channel(2)
flip = unitary_channel(PAULI_X)
deph = dephasing_channel(2)


def test_equal_channels_zero():
    est = diamond_distance(ident, ident)
    assert est.value == 0 and est.method == "exact"
    c = random_channel(2, 2, rank=2, seed=1)
    assert diamond_distance(c, c).value == 0


def test_identity_vs_x():
    est = diamond_distance(ident, flip, restarts=8)
    assert abs(est.value - 2) < 1e-8
    assert est.method == "certified-lower"


def test_identity_vs_dephasing():
    est = diamond_distance(ident, deph, restarts=16)
    assert est.value >= 1 - 1e-8
    assert est.value <= 1 + 1e-6
    assert max(est.restart_values) <= 1 + 1e-6


def test_dim_f_below_dim_h():
    with pytest.raises(ParameterError):
        diamond_distance(ident, deph, dim_F=1)


def test_dim_mismatch():
    with pytest.raises(DimensionError):
        diamond_distance(ident, identity_channel(3))


@pytest.mark.parametrize("seed", range(4))
def test_value_is_achieved_by_witness(seed):
    a, b = random_channel(2, 2, rank=2, seed=seed), random_channel(2, 2, rank=3, seed=seed + 50)
    est = diamond_distance(a, b, restarts=8, seed=seed)
    assert abs(evaluate_witness(a, b, est.witness) - est.value) < 1e-8
    # independent re-evaluation from Kraus operators
    rho = np.outer(est.witness, est.witness.conj())
    direct = trace_norm(with_ref(lambda e: kraus_apply(a.kraus_ops, e), rho)
                        - with_ref(lambda e: kraus_apply(b.kraus_ops, e), rho))
    assert abs(direct - est.value) < 1e-8


@pytest.mark.parametrize("seed", range(4))
def test_beats_random_inputs_and_symmetric(seed):
    a, b = random_channel(2, 2, rank=2, seed=seed), random_channel(2, 2, rank=2, seed=seed + 7)
    ab = diamond_distance(a, b, restarts=16, seed=0).value
    ba = diamond_distance(b, a, restarts=16, seed=0).value
    assert abs(ab - ba) < 1e-8
    sampled = diamond_random_inputs(lambda e: kraus_apply(a.kraus_ops, e),
                                    lambda e: kraus_apply(b.kraus_ops, e), n=300, seed=seed)
    assert ab >= sampled - 1e-9


def test_triangle_on_samples():
    chans = [random_channel(2, 2, rank=2, seed=s) for s in range(4)]
    d = {(i, j): diamond_distance(chans[i], chans[j], restarts=16).value
         for i in range(4) for j in range(4) if i != j}
    for i in range(4):
        for j in range(4):
            for k in range(4):
                if len({i, j, k}) == 3:
                    assert d[i, k] <= d[i, j] + d[j, k] + 2 * ESTIMATOR_SLACK


def test_exhaustive_oracle_examples():
    assert abs(diamond_distance_exhaustive(ident, flip, resolution=8) - 2) < 1e-8
    assert diamond_distance_exhaustive(ident, ident, resolution=4) == 0
    with pytest.raises(ParameterError):
        diamond_distance_exhaustive(identity_channel(3), identity_channel(3))


@pytest.mark.parametrize("seed", range(10))
def test_exhaustive_agreement(seed):
    a = random_channel(2, 2, rank=2, seed=100 + seed)
    b = random_channel(2, 2, rank=2, seed=200 + seed)
    est = diamond_distance(a, b, restarts=32, seed=0).value
    grid = diamond_distance_exhaustive(a, b, resolution=10, polish=4)
    assert abs(est - grid) < 1e-4


def test_output_factor_reduction_exact():
    # both channels append the same I/2 factor: dropping it changes nothing
    noise = depolarizing_channel(2)
    a = tensor_channels(random_channel(2, 2, rank=2, seed=1), noise)
    b = tensor_channels(random_channel(2, 2, rank=2, seed=2), noise)
    full = diamond_distance(a, b, restarts=16, seed=0)
    reduced = diamond_distance(a, b, restarts=16, seed=0, output_factors=[2, 2])
    assert reduced.dropped_factors == [1]
    assert abs(full.value - reduced.value) < 1e-8
    _, _, dropped = reduce_output_factors(to_choi(a), to_choi(b), [2, 2])
    assert dropped == [1]


def test_output_factor_reduction_keeps_correlated_factors():
    a = dephasing_channel(4)
    b = identity_channel(4)
    _, _, dropped = reduce_output_factors(to_choi(a), to_choi(b), [2, 2])
    assert dropped == []


def test_monotone_ascent_guard_and_determinism():
    a, b = random_channel(2, 2, rank=2, seed=3), random_channel(2, 2, rank=2, seed=4)
    e1 = diamond_distance(a, b, restarts=8, seed=5).to_dict()
    e2 = diamond_distance(a, b, restarts=8, seed=5).to_dict()
    assert e1 == e2


# -- reduction harness ---------------------------------------------------------------------

def test_lift_witness_preserves_value():
    psi = random_pure_state(4, seed=0)
    lifted = lift_witness(psi, 2, 2, 2, 8)
    assert abs(np.linalg.norm(lifted) - 1) < 1e-12
    assert lifted.reshape(4, 2, 8)[0, :, :2].reshape(-1) @ psi.conj() == pytest.approx(1)


def test_canonical_layout_moves_ancillas_first():
    q = Circuit(3, (2,), (2,), (cnot_gate(0, 2), h_gate(1)))
    c = canonical_layout(q)
    assert c.ancilla == (0,) and c.traced == (0,)
    assert c.gates[0].targets == (1, 0) and c.gates[1].targets == (2,)
    rho = random_density(4, seed=0)
    assert np.allclose(simulate(q, rho), simulate(c, rho))


def test_theorem10_capacity_names_largest_m():
    assert max_feasible_m(1) == 6
    with pytest.raises(CapacityError) as exc:
        verify_theorem10(identity_circuit(1), identity_circuit(1), 7)
    assert "6" in str(exc.value)


def test_theorem10_small_m_identical():
    rep = verify_theorem10(identity_circuit(1), identity_circuit(1), 2, restarts=4)
    assert rep.c_distance.value <= rep.q_distance.value + rep.epsilon + rep.slack
    assert rep.passed and rep.notes


def test_theorem10_small_m_dephasing():
    rep = verify_theorem10(identity_circuit(1), dephasing_circuit(), 3, restarts=4)
    assert rep.c_certified_lower >= 1 - 1e-6
    assert rep.passed


def test_classify():
    assert classify(1.8, 1.9, 1.5, 0.5).answer == "yes"
    v = classify(0.1, 0.2, 1.5, 0.5)
    assert v.answer == "no" and v.evidence == "consensus"
    assert classify(1.0, 1.0, 1.5, 0.5).answer == "undetermined"
    with pytest.raises(ParameterError):
        classify(1, 1, 0.5, 1.0)
