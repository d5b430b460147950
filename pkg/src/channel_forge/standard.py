"""Building blocks for the random-unitary approximation, plus fixture channels.

All mixing channels are uniform mixtures of discrete Weyl operators
``X^a Z^b`` with ``X|j> = |j+1 mod d>`` and ``Z|j> = w^j |j>``,
``w = exp(2 pi i / d)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import KrausChannel, RandomUnitaryChannel, StinespringDilation
from .numerics import ParameterError, StructuralError, check_dim, check_storage

I2 = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
CZ = np.diag([1, 1, 1, -1]).astype(complex)
SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)


def shift_operator(d: int) -> np.ndarray:
    return np.roll(np.eye(d, dtype=complex), 1, axis=0)


def phase_operator(d: int) -> np.ndarray:
    return np.diag(np.exp(2j * np.pi * np.arange(d) / d))


@dataclass(frozen=True)
class WeylFamily:
    dim: int
    ops: np.ndarray  # shape (dim**2, dim, dim), index a*dim + b holds X^a Z^b

    def uniform_mixture(self) -> RandomUnitaryChannel:
        n = self.ops.shape[0]
        return RandomUnitaryChannel(self.dim, np.full(n, 1.0 / n), self.ops)


def _weyl_ops(d: int) -> np.ndarray:
    if d == 1:
        return np.ones((1, 1, 1), dtype=complex)
    x, z = shift_operator(d), phase_operator(d)
    xs = [np.linalg.matrix_power(x, a) for a in range(d)]
    zs = [np.linalg.matrix_power(z, b) for b in range(d)]
    return np.stack([xa @ zb for xa in xs for zb in zs])


def weyl_family(d: int) -> WeylFamily:
    if d < 2:
        raise ParameterError(f"Weyl family needs d >= 2, got {d}")
    check_dim(d)
    check_storage(d**4, f"Weyl family for d={d}")
    return WeylFamily(d, _weyl_ops(d))


def depolarizing_channel(d: int) -> RandomUnitaryChannel:
    """Completely depolarizing channel ``rho -> I/d``."""
    return weyl_family(d).uniform_mixture()


def noise_on_factor(d_k: int, d_b: int) -> RandomUnitaryChannel:
    """``rho -> tr_B(rho) (x) I/d_B`` on K (x) B, as ``I_K (x)`` Weyl mixture on B."""
    d = d_k * d_b
    check_dim(d)
    check_storage(d_b**2 * d * d, f"noise_on_factor({d_k}, {d_b})")
    ops = _weyl_ops(d_b)
    us = np.einsum("ij,akl->aikjl", np.eye(d_k), ops).reshape(-1, d, d)
    return RandomUnitaryChannel(d, np.full(us.shape[0], 1.0 / us.shape[0]), us)


@dataclass(frozen=True)
class SubspaceSplit:
    """``S0 = |0>_A (x) H`` and its complement inside A (x) H."""

    dim_A: int
    dim_H: int

    def __post_init__(self):
        if self.dim_A < 2:
            raise ParameterError(f"dim_A must be at least 2, got {self.dim_A}")
        if self.dim_H < 1:
            raise ParameterError(f"dim_H must be positive, got {self.dim_H}")
        check_dim(self.dim_A * self.dim_H)

    @property
    def dim(self) -> int:
        return self.dim_A * self.dim_H

    @property
    def dim_s0(self) -> int:
        return self.dim_H

    @property
    def dim_perp(self) -> int:
        return (self.dim_A - 1) * self.dim_H

    def projector_s0(self) -> np.ndarray:
        p = np.zeros((self.dim, self.dim), dtype=complex)
        p[: self.dim_H, : self.dim_H] = np.eye(self.dim_H)
        return p

    def projector_perp(self) -> np.ndarray:
        return np.eye(self.dim, dtype=complex) - self.projector_s0()

    def perp_basis(self) -> np.ndarray:
        """Columns are the basis ``|a>|h>``, ``a >= 1``, in lexicographic order."""
        return np.eye(self.dim, dtype=complex)[:, self.dim_H :]


def dephase_split(s: SubspaceSplit) -> RandomUnitaryChannel:
    """Kill the coherences between S0 and its complement, leaving both blocks alone."""
    phase = np.ones(s.dim)
    phase[s.dim_H :] = -1.0
    us = np.stack([np.eye(s.dim, dtype=complex), np.diag(phase).astype(complex)])
    return RandomUnitaryChannel(s.dim, np.array([0.5, 0.5]), us)


def mix_subspace(s: SubspaceSplit) -> RandomUnitaryChannel:
    """Uniform Weyl mixture on the complement of S0, identity on S0."""
    n = s.dim_perp
    check_storage(n * n * s.dim * s.dim, f"mix_subspace({s.dim_A}, {s.dim_H})")
    ops = _weyl_ops(n)
    us = np.zeros((ops.shape[0], s.dim, s.dim), dtype=complex)
    us[:, : s.dim_H, : s.dim_H] = np.eye(s.dim_H)
    us[:, s.dim_H :, s.dim_H :] = ops
    return RandomUnitaryChannel(s.dim, np.full(ops.shape[0], 1.0 / ops.shape[0]), us)


# -- fixture channels --------------------------------------------------------

def identity_channel(d: int) -> KrausChannel:
    return KrausChannel(d, d, np.eye(d, dtype=complex)[None])


def unitary_channel(u) -> KrausChannel:
    u = np.asarray(u, dtype=complex)
    return KrausChannel(u.shape[1], u.shape[0], u[None])


def dephasing_channel(d: int = 2) -> KrausChannel:
    """Completely dephasing channel: keeps only the diagonal."""
    ops = np.zeros((d, d, d), dtype=complex)
    for i in range(d):
        ops[i, i, i] = 1.0
    return KrausChannel(d, d, ops)


def dephasing_dilation() -> StinespringDilation:
    """Qubit dephasing: CNOT from the input onto the ancilla, then trace the ancilla.

    The factor order on the way in is (ancilla, input) and on the way out
    (kept output, traced), so a swap follows the CNOT.
    """
    cnot_h_to_a = np.array(  # control = second factor, target = first factor
        [[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]], dtype=complex
    )
    return StinespringDilation(2, 2, 2, 2, SWAP @ cnot_h_to_a)


def swap_dilation() -> StinespringDilation:
    """SWAP of ancilla and input.  The input lands in the kept factor: identity channel."""
    return StinespringDilation(2, 2, 2, 2, SWAP)


def reset_dilation() -> StinespringDilation:
    """``U = I``: the input stays in the traced factor, giving ``rho -> |0><0|``."""
    return StinespringDilation(2, 2, 2, 2, np.eye(4, dtype=complex))


def embedding_dilation(dim_a: int, dim_h: int) -> StinespringDilation:
    """``U = I`` with nothing traced: ``sigma -> |0><0| (x) sigma``."""
    d = dim_a * dim_h
    return StinespringDilation(dim_a, dim_h, d, 1, np.eye(d, dtype=complex))


def identity_dilation(dim_a: int, dim_h: int) -> StinespringDilation:
    """``U`` = swap of A and H: the identity channel on H with the ancilla traced."""
    d = dim_a * dim_h
    perm = np.eye(d, dtype=complex).reshape(dim_a, dim_h, d).transpose(1, 0, 2).reshape(d, d)
    return StinespringDilation(dim_a, dim_h, dim_h, dim_a, perm)


def depolarizing_kraus(d: int = 2) -> KrausChannel:
    fam = weyl_family(d)
    return KrausChannel(d, d, fam.ops / d)


def pauli_channel(probs) -> RandomUnitaryChannel:
    """Qubit Pauli channel with weights for (I, X, Y, Z)."""
    p = np.asarray(probs, dtype=float)
    if p.shape != (4,):
        raise StructuralError("pauli_channel needs four weights")
    return RandomUnitaryChannel(2, p, np.stack([I2, PAULI_X, PAULI_Y, PAULI_Z]))
