"""Seeded random states, unitaries and channels for tests and sweeps."""
from __future__ import annotations

import numpy as np

from .channels import KrausChannel, RandomUnitaryChannel, StinespringDilation


def rng_from(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def ginibre(rng, rows: int, cols: int) -> np.ndarray:
    return rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))


def random_pure_state(dim: int, seed=None) -> np.ndarray:
    rng = rng_from(seed)
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def random_density(dim: int, rank: int | None = None, seed=None) -> np.ndarray:
    """Induced-measure random state of the given rank (full rank by default)."""
    rng = rng_from(seed)
    g = ginibre(rng, dim, rank or dim)
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_unitary(dim: int, seed=None) -> np.ndarray:
    """Haar-random unitary via QR with the phase fix."""
    rng = rng_from(seed)
    q, r = np.linalg.qr(ginibre(rng, dim, dim))
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_isometry(rows: int, cols: int, seed=None) -> np.ndarray:
    rng = rng_from(seed)
    q, r = np.linalg.qr(ginibre(rng, rows, cols))
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_channel(dim_in: int, dim_out: int, rank: int = 2, seed=None) -> KrausChannel:
    """Channel with ``rank`` Kraus operators cut from a random isometry."""
    if dim_out * rank < dim_in:
        raise ValueError(f"rank {rank} is too small for a {dim_in} -> {dim_out} channel")
    v = random_isometry(dim_out * rank, dim_in, seed)
    ops = v.reshape(dim_out, rank, dim_in).transpose(1, 0, 2)
    return KrausChannel(dim_in, dim_out, ops)


def random_dilation(dim_a: int, dim_h: int, dim_k: int, seed=None) -> StinespringDilation:
    d = dim_a * dim_h
    if d % dim_k:
        raise ValueError(f"dim_K={dim_k} does not divide dim_A*dim_H={d}")
    return StinespringDilation(dim_a, dim_h, dim_k, d // dim_k, random_unitary(d, seed))


def random_state_on(projector: np.ndarray, seed=None) -> np.ndarray:
    """Random full-rank density matrix supported on the range of ``projector``."""
    w, v = np.linalg.eigh(projector)
    basis = v[:, w > 0.5]
    sub = random_density(basis.shape[1], seed=seed)
    return basis @ sub @ basis.conj().T


def random_ru_channel(dim: int, n_terms: int = 3, seed=None) -> RandomUnitaryChannel:
    rng = rng_from(seed)
    probs = rng.dirichlet(np.ones(n_terms))
    us = np.stack([random_unitary(dim, rng) for _ in range(n_terms)])
    return RandomUnitaryChannel(dim, probs, us)
