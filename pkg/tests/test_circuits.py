import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from channel_forge.channels import validate_cptp
from channel_forge.circuits import (
    Circuit,
    Gate,
    ancilla_input,
    circuit_to_choi,
    circuit_to_kraus,
    cnot_gate,
    compile_approximation,
    conditional_mixer,
    dephase_gates,
    dephasing_circuit,
    embedding_circuit,
    expected_gate_counts,
    first_set_ancilla,
    h_gate,
    identity_circuit,
    lemma9_closed_form,
    lemma9_distance,
    mixer_gate_count,
    mixer_output,
    noise_gates,
    pad_ancillas,
    ru_gate,
    run_gates,
    simulate,
    u_gate,
    unitary_circuit,
    x_gate,
)
from channel_forge.numerics import (
    CapacityError,
    ParameterError,
    StructuralError,
    ket,
    maximally_mixed,
    partial_trace,
    permute_subsystems,
    proj,
    tensor,
    trace_norm,
)
from channel_forge.sampling import random_density, random_unitary
from channel_forge.standard import PAULI_X, PAULI_Z

from conftest import bell, plus
from oracles import run_circuit_dense

seeds = st.integers(0, 2**31 - 1)


def random_gate_list(seed, n, count=6):
    rng = np.random.default_rng(seed)
    gates = []
    for i in range(count):
        k = int(rng.integers(1, min(n, 2) + 1))
        targets = tuple(int(t) for t in rng.choice(n, size=k, replace=False))
        u = random_unitary(2**k, seed=seed + i)
        gates.append(Gate("u" if rng.random() < 0.5 else "ru", targets, u))
    return gates


# -- simulator ---------------------------------------------------------------------------

def test_empty_circuit_is_identity():
    rho = random_density(4, seed=0)
    assert np.allclose(simulate(identity_circuit(2), rho), rho)


def test_single_ru_z():
    c = Circuit(1, gates=(ru_gate((0,), PAULI_Z),))
    assert np.allclose(simulate(c, plus()), np.eye(2) / 2)


def test_dephasing_circuit():
    assert np.allclose(simulate(dephasing_circuit(), plus()), np.eye(2) / 2)
    rho = random_density(2, seed=1)
    once = simulate(dephasing_circuit(), rho)
    assert np.allclose(once, np.diag(np.diag(rho)))
    assert np.allclose(simulate(dephasing_circuit(), once), once)


@given(seeds, st.integers(1, 4))
def test_simulator_matches_dense_reference(seed, n):
    gates = random_gate_list(seed, n)
    rho = random_density(2**n, seed=seed)
    assert np.max(np.abs(run_gates(gates, rho, n) - run_circuit_dense(gates, rho, n))) < 1e-12


@given(seeds, st.floats(0, 1))
def test_simulator_linear(seed, t):
    c = Circuit(3, (0,), (1,), tuple(g for g in random_gate_list(seed, 3)))
    r1, r2 = random_density(4, seed=seed), random_density(4, seed=seed + 1)
    lhs = simulate(c, t * r1 + (1 - t) * r2)
    assert np.max(np.abs(lhs - (t * simulate(c, r1) + (1 - t) * simulate(c, r2)))) < 1e-12


def test_reference_system_untouched():
    c = unitary_circuit(random_unitary(2, seed=3))
    out = simulate(c, bell())
    assert np.allclose(partial_trace(out, [2, 2], [1]), np.eye(2) / 2)


def test_capacity():
    big = Circuit(15, ancilla=tuple(range(14)), gates=(x_gate(0),))
    with pytest.raises(CapacityError):
        simulate(big, np.eye(2) / 2)


def test_structural_errors():
    with pytest.raises(StructuralError):
        Circuit(2, gates=(x_gate(3),))
    with pytest.raises(StructuralError):
        Gate("measure", (0,), np.eye(2))
    with pytest.raises(StructuralError):
        Circuit(1, traced=(0,))
    with pytest.raises(StructuralError):
        Circuit.from_dict({"n_qubits": 1})


def test_circuit_json_round_trip():
    c, _ = compile_approximation(pad_ancillas(dephasing_circuit(), 2))
    back = Circuit.from_dict(json.loads(json.dumps(c.to_dict())))
    assert back.model == "random_unitary" and back.ancilla == c.ancilla and back.traced == c.traced
    rho = random_density(2**c.n_qubits, seed=0)
    assert np.allclose(simulate(back, rho), simulate(c, rho))


# -- building blocks ------------------------------------------------------------------------

def test_dephase_gates_examples():
    assert np.allclose(run_gates(dephase_gates([0]), plus(), 1), np.eye(2) / 2)
    assert np.allclose(run_gates(dephase_gates([0, 1]), bell(), 2), np.diag([0.5, 0, 0, 0.5]))
    basis = proj(ket(2, 4))
    assert np.allclose(run_gates(dephase_gates([0, 1]), basis, 2), basis)


def test_noise_gates_examples():
    for s in range(3):
        assert np.allclose(run_gates(noise_gates([0]), random_density(2, seed=s), 1), np.eye(2) / 2)
    rho = random_density(8, seed=4)
    out = run_gates(noise_gates([2]), rho, 3)
    assert np.max(np.abs(out - tensor(partial_trace(rho, [4, 2], [0]), np.eye(2) / 2))) < 1e-12
    assert noise_gates([]) == []


def test_conditional_mixer_fixes_zero_ancillas():
    for m, n in [(1, 1), (2, 1), (3, 1)]:
        rho = tensor(proj(ket(0, 2**m)), random_density(2**n, seed=m))
        assert np.allclose(run_gates(conditional_mixer(m, n), rho, m + n), rho)


def test_conditional_mixer_m1():
    rho = random_density(2, seed=0)
    out = run_gates(dephase_gates([0]) + conditional_mixer(1, 1), tensor(proj(ket(1, 2)), rho), 2)
    assert np.allclose(out, tensor(proj(ket(1, 2)), np.eye(2) / 2))
    assert np.allclose(out, lemma9_closed_form(1, 1, 0, np.ones((1, 1))))


def test_conditional_mixer_m2_k1_distance():
    c, _ = compile_approximation(pad_ancillas(identity_circuit(1), 2))
    rho = random_density(2, seed=1)
    out = mixer_output(c, 1, rho)
    assert abs(trace_norm(out - maximally_mixed(8)) - 0.5) < 1e-12


@pytest.mark.parametrize("m,n", [(1, 1), (2, 1), (3, 2), (4, 1)])
def test_mixer_gate_count(m, n):
    assert len(conditional_mixer(m, n)) == mixer_gate_count(m, n) == m * (4 * m + 2 * n - 4)


# -- compilation ------------------------------------------------------------------------

def expected_compiled_output(q, c, rho):
    """Q(rho) on kept qubits tensored with I/2 on each traced qubit, in circuit qubit order."""
    kept = [x for x in range(q.n_qubits) if x not in q.traced]
    order = kept + list(q.traced)
    m = tensor(simulate(q, rho), maximally_mixed(2 ** len(q.traced)))
    return permute_subsystems(m, [2] * q.n_qubits, [order.index(x) for x in range(q.n_qubits)])


@pytest.mark.parametrize("make,m", [
    (lambda: identity_circuit(1), 1),
    (dephasing_circuit, 2),
    (lambda: Circuit(3, (0, 1), (1,), (cnot_gate(2, 0), h_gate(1), cnot_gate(1, 2))), 2),
])
def test_compile_simulation_equality(make, m):
    q = pad_ancillas(make(), m)
    c, rep = compile_approximation(q)
    assert rep.m == len(q.ancilla) == m
    assert rep.formula_ok
    for s in range(4):
        rho = random_density(2 ** len(q.data_qubits), seed=s)
        full_in = ancilla_input(c, 0, rho)
        assert np.max(np.abs(simulate(c, full_in) - expected_compiled_output(q, c, rho))) < 1e-10


def test_compile_report_counts():
    q = pad_ancillas(dephasing_circuit(), 3)
    c, rep = compile_approximation(q)
    assert rep.gate_counts == expected_gate_counts(3, 1, 1, 3)
    assert rep.total_gates == len(c.gates) == 3 + mixer_gate_count(3, 1) + 1 + 6
    assert rep.random_unitary_gates == rep.total_gates - 1
    assert compile_approximation(q)[1].to_dict() == rep.to_dict()


def test_compile_rejects_non_unitary_gates():
    q = Circuit(2, (0,), (0,), (ru_gate((1,), PAULI_X),))
    with pytest.raises(StructuralError):
        compile_approximation(q)
    with pytest.raises(StructuralError):
        compile_approximation(identity_circuit(1))


def test_compiled_circuit_is_unital_cptp():
    c, _ = compile_approximation(pad_ancillas(dephasing_circuit(), 2))
    k = circuit_to_kraus(c)
    assert validate_cptp(k).passed
    d = c.dim_in
    assert np.max(np.abs(simulate(c, maximally_mixed(d)) - maximally_mixed(d))) < 1e-9


def test_circuit_choi_matches_simulation():
    q = dephasing_circuit()
    j = circuit_to_choi(q)
    rho = random_density(2, seed=3)
    assert np.allclose(j.apply(rho), simulate(q, rho))


@given(seeds)
def test_output_decomposition_over_ancilla_basis(seed):
    # C(rho) = sum_i p_i C(|i><i| (x) rho_i) with (p_i, rho_i) from dephasing the ancillas
    c, _ = compile_approximation(pad_ancillas(dephasing_circuit(), 2))
    rho = random_density(2**c.n_qubits, seed=seed)
    deph = run_gates(dephase_gates(c.ancilla), rho, c.n_qubits)
    total = np.zeros_like(rho)
    blocks = permute_subsystems(deph, [2] * c.n_qubits, list(c.ancilla) + list(c.data_qubits))
    da, dh = 2 ** len(c.ancilla), 2 ** len(c.data_qubits)
    b4 = blocks.reshape(da, dh, da, dh)
    for i in range(da):
        blk = b4[i, :, i, :]
        p = np.trace(blk).real
        if p < 1e-15:
            continue
        total += p * simulate(c, ancilla_input(c, i, blk / p))
    assert np.max(np.abs(simulate(c, rho) - total)) < 1e-10


# -- ancilla-mixing bound for compiled circuits -------------------------------------------------

def test_first_set_ancilla():
    assert first_set_ancilla(0b100, 3) == 0
    assert first_set_ancilla(0b011, 3) == 1
    assert first_set_ancilla(0b001, 3) == 2
    with pytest.raises(ParameterError):
        first_set_ancilla(0, 3)


def test_lemma9_examples():
    c2, _ = compile_approximation(pad_ancillas(dephasing_circuit(), 2))
    rho = random_density(2, seed=0)
    assert lemma9_distance(c2, 1, rho) <= 0.5 + 1e-9
    c3, _ = compile_approximation(pad_ancillas(dephasing_circuit(), 3))
    assert lemma9_distance(c3, 5, bell()) <= 0.25 + 1e-9
    with pytest.raises(ParameterError):
        lemma9_distance(c3, 0, bell())


@pytest.mark.parametrize("m", [2, 3])
def test_lemma9_identity_tightness_and_closed_form(m):
    c, _ = compile_approximation(embedding_circuit(m, 1))
    for k in range(1, 2**m):
        for rho in (random_density(2, seed=k), bell()):
            assert abs(lemma9_distance(c, k, rho) - 1 / 2 ** (m - 1)) < 1e-9
            j = first_set_ancilla(k, m)
            rho_f = partial_trace(rho, [2, rho.shape[0] // 2], [1]) if rho.shape[0] > 2 else np.ones((1, 1))
            closed = lemma9_closed_form(m, 1, j, rho_f)
            assert np.max(np.abs(mixer_output(c, k, rho, through_stage=j) - closed)) < 1e-10


def test_u_gate_validation():
    with pytest.raises(Exception):
        u_gate((0,), np.array([[1, 1], [0, 1]], dtype=complex))
