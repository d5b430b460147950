import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from channel_forge.numerics import (
    MAX_DIM,
    CapacityError,
    DimensionError,
    ParameterError,
    ValidationError,
    check_density,
    check_dim,
    check_pure_state,
    check_storage,
    decode_matrix,
    decode_vector,
    eig_hermitian,
    encode_matrix,
    ket,
    maximally_mixed,
    partial_trace,
    permute_subsystems,
    proj,
    schatten_p_norm,
    tensor,
    trace_norm,
)
from channel_forge.sampling import ginibre, random_density, random_unitary, rng_from

from conftest import bell, plus
from oracles import partial_trace_loops, trace_norm_eig

seeds = st.integers(0, 2**31 - 1)

X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.diag([1, -1]).astype(complex)


# -- tensor ---------------------------------------------------------------------------

def test_tensor_identities():
    assert np.allclose(tensor(np.eye(2), np.eye(2)), np.eye(4))


def test_tensor_z_with_projector():
    out = tensor(Z, proj(ket(0, 2)))
    expected = np.zeros((4, 4))
    expected[0, 0], expected[2, 2] = 1, -1
    assert np.array_equal(out, expected)


@given(seeds)
def test_tensor_mixed_product(seed):
    rng = rng_from(seed)
    a, b, c, d = (ginibre(rng, 2, 2) for _ in range(4))
    assert np.allclose(tensor(a, b) @ tensor(c, d), tensor(a @ c, b @ d), atol=1e-12)


def test_tensor_overflow():
    big = np.eye(2)
    with pytest.raises(CapacityError):
        tensor(*([big] * 15))
    assert check_dim(MAX_DIM) == MAX_DIM
    with pytest.raises(DimensionError):
        check_dim(MAX_DIM + 1)


def test_storage_cap():
    assert check_storage(10) == 10
    with pytest.raises(CapacityError):
        check_storage(2**40)


# -- partial trace ----------------------------------------------------------------------

@given(seeds)
def test_partial_trace_product(seed):
    ra = random_density(3, seed=seed)
    rb = random_density(2, seed=seed + 1)
    assert np.allclose(partial_trace(np.kron(ra, rb), [3, 2], [0]), ra, atol=1e-12)
    assert np.allclose(partial_trace(np.kron(ra, rb), [3, 2], [1]), rb, atol=1e-12)


def test_partial_trace_bell():
    assert np.allclose(partial_trace(bell(), [2, 2], [0]), np.eye(2) / 2)


def test_partial_trace_full_is_trace(rng):
    m = ginibre(rng, 6, 6)
    out = partial_trace(m, [2, 3], [])
    assert out.shape == (1, 1)
    assert np.isclose(out[0, 0], np.trace(m))


@pytest.mark.parametrize("dims,keep", [([2, 3, 2], [1]), ([2, 2, 2], [0, 2]), ([3, 2], [1]), ([2, 2, 3], [2, 0])])
def test_partial_trace_matches_loops(rng, dims, keep):
    d = int(np.prod(dims))
    m = ginibre(rng, d, d)
    assert np.allclose(partial_trace(m, dims, keep), partial_trace_loops(m, dims, keep), atol=1e-12)


@given(seeds, st.floats(-3, 3), st.floats(-3, 3))
def test_partial_trace_linear(seed, a, b):
    rng = rng_from(seed)
    m1, m2 = ginibre(rng, 6, 6), ginibre(rng, 6, 6)
    lhs = partial_trace(a * m1 + b * m2, [3, 2], [0])
    rhs = a * partial_trace(m1, [3, 2], [0]) + b * partial_trace(m2, [3, 2], [0])
    assert np.allclose(lhs, rhs, atol=1e-12 * (1 + abs(a) + abs(b)) * 10)


def test_partial_trace_dims_mismatch():
    with pytest.raises(DimensionError):
        partial_trace(np.eye(4), [2, 3], [0])


def test_permute_subsystems(rng):
    a, b, c = ginibre(rng, 2, 2), ginibre(rng, 3, 3), ginibre(rng, 2, 2)
    m = tensor(a, b, c)
    assert np.allclose(permute_subsystems(m, [2, 3, 2], [2, 0, 1]), tensor(c, a, b))


# -- eig_hermitian ------------------------------------------------------------------------

def test_eig_diagonal_descending():
    w, _ = eig_hermitian(np.diag([3.0, 1.0, 2.0]))
    assert np.allclose(w, [3, 2, 1])


def test_eig_pauli_x():
    w, v = eig_hermitian(X)
    assert np.allclose(w, [1, -1])
    plus_v = np.array([1, 1]) / np.sqrt(2)
    assert np.isclose(abs(v[:, 0].conj() @ plus_v), 1)


def test_eig_reconstruction_64(rng):
    g = ginibre(rng, 64, 64)
    h = g + g.conj().T
    w, v = eig_hermitian(h)
    assert np.max(np.abs(v @ np.diag(w) @ v.conj().T - h)) < 1e-9
    assert abs(w.sum() - np.trace(h).real) < 1e-9


def test_eig_rejects_non_hermitian():
    with pytest.raises(ValidationError):
        eig_hermitian(np.array([[0, 1], [0, 0]], dtype=complex))


@given(seeds)
def test_eig_sum_is_trace(seed):
    g = ginibre(rng_from(seed), 5, 5)
    h = g + g.conj().T
    assert abs(eig_hermitian(h)[0].sum() - np.trace(h).real) < 1e-9


# -- norms ------------------------------------------------------------------------------

def test_trace_norm_examples():
    assert np.isclose(trace_norm(random_density(4, seed=3)), 1)
    assert np.isclose(trace_norm(proj(ket(0, 2)) - proj(ket(1, 2))), 2)
    assert abs(trace_norm(proj(ket(0, 2)) - plus()) - np.sqrt(2)) < 1e-12


@given(seeds)
def test_trace_norm_unitary_invariance(seed):
    rng = rng_from(seed)
    m = ginibre(rng, 4, 4)
    u, v = random_unitary(4, seed=seed), random_unitary(4, seed=seed + 7)
    assert abs(trace_norm(u @ m @ v) - trace_norm(m)) < 1e-9


@given(seeds)
def test_trace_norm_hermitian_oracle(seed):
    g = ginibre(rng_from(seed), 5, 5)
    h = g + g.conj().T
    assert abs(trace_norm(h) - trace_norm_eig(h)) < 1e-9


def test_schatten_examples():
    assert np.isclose(schatten_p_norm(maximally_mixed(4), 2), 0.5)
    assert np.isclose(schatten_p_norm(maximally_mixed(4), np.inf), 0.25)
    pure = random_density(3, rank=1, seed=1)
    for p in (1, 1.5, 2, 7, np.inf):
        assert np.isclose(schatten_p_norm(pure, p), 1)


@given(seeds)
def test_schatten_p1_is_trace_norm(seed):
    m = ginibre(rng_from(seed), 4, 3)
    assert abs(schatten_p_norm(m, 1) - trace_norm(m)) < 1e-10


@given(seeds)
def test_schatten_monotone_in_p(seed):
    rho = random_density(4, seed=seed)
    vals = [schatten_p_norm(rho, p) for p in (1, 1.2, 1.5, 2, 3, 5, 10, np.inf)]
    assert all(a >= b - 1e-12 for a, b in zip(vals, vals[1:]))


def test_schatten_rejects_p_below_one():
    with pytest.raises(ParameterError):
        schatten_p_norm(np.eye(2), 0.5)


# -- state checks and serialization ---------------------------------------------------------

def test_state_checks():
    check_pure_state(np.array([1, 0], dtype=complex))
    with pytest.raises(ValidationError):
        check_pure_state(np.array([1, 1], dtype=complex))
    check_density(np.eye(2) / 2)
    with pytest.raises(ValidationError):
        check_density(np.diag([1.5, -0.5]))
    with pytest.raises(ValidationError):
        check_density(np.eye(2))


def test_encode_round_trip(rng):
    m = ginibre(rng, 3, 2)
    assert np.array_equal(decode_matrix(encode_matrix(m)), m)
    v = m[:, 0]
    assert np.array_equal(decode_vector([[z.real, z.imag] for z in v]), v)


def test_decode_rejects_bad_pairs():
    with pytest.raises(Exception) as exc:
        decode_matrix([[[1, 0], [0]]], "u")
    assert "u" in str(exc.value)
