"""Random-unitary approximation of an arbitrary channel.

Given a dilation ``Phi(s) = tr_B U(|0><0| (x) s)U^*`` with ancilla A, the
approximation acts on A (x) H as

    rho -> N_B( U [ (M o D)(rho) ] U^* )

where ``D`` dephases S0 against its complement, ``M`` mixes the complement
completely and ``N_B`` replaces B by the maximally mixed state.  Each stage is
a :class:`RandomUnitaryChannel`, so their symbolic composition is one too.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.linalg import null_space

from .channels import (
    ChoiMatrix,
    KrausChannel,
    RandomUnitaryChannel,
    StinespringDilation,
    choi_to_kraus,
    compose,
)
from .numerics import (
    DimensionError,
    ParameterError,
    check_density,
    maximally_mixed,
    permute_subsystems,
    trace_norm,
)
from .standard import SubspaceSplit, dephase_split, mix_subspace, noise_on_factor

MAX_TERMS = 10**6
SUPPORT_TOL = 1e-10


def _pad_dilation(s: StinespringDilation, factor: int) -> StinespringDilation:
    """Enlarge A to A (x) E and B to B (x) E with ``U (x) I_E``."""
    da, dh, dk, db, e = s.dim_A, s.dim_H, s.dim_K, s.dim_B, factor
    big = np.kron(np.asarray(s.u), np.eye(e))  # (A H E) -> (K B E)
    # reorder the input factors (A, E, H) -> (A, H, E) expected by big
    d = da * dh * e
    p = np.eye(d, dtype=complex).reshape(da, dh, e, d).transpose(0, 2, 1, 3).reshape(d, d)
    return StinespringDilation(da * e, dh, dk, db * e, big @ p.T)


def dilation_from_kraus(k: KrausChannel, dim_a: int) -> StinespringDilation:
    """Complete ``V = sum_b K_b (x) |b>`` to a unitary on A (x) H."""
    dh, dk = k.dim_in, k.dim_out
    total = dim_a * dh
    if total % dk:
        raise ParameterError(f"dim_A*dim_H={total} is not divisible by dim_K={dk}")
    db = total // dk
    if db < k.rank:
        raise ParameterError(f"dim_B={db} is smaller than the Kraus rank {k.rank}")
    ops = np.zeros((db, dk, dh), dtype=complex)
    ops[: k.rank] = k.kraus_ops
    v = ops.transpose(1, 0, 2).reshape(dk * db, dh)
    rest = null_space(v.conj().T)
    u = np.hstack([v, rest])
    return StinespringDilation(dim_a, dh, dk, db, u)


def minimal_ancilla_dim(k: KrausChannel) -> int:
    """Smallest ``dim_A >= 2`` for which a dilation of ``k`` exists."""
    dh, dk, r = k.dim_in, k.dim_out, k.rank
    a = 2
    while True:
        if (a * dh) % dk == 0 and a * dh // dk >= r:
            return a
        a += 1


def dilation_for(phi, dim_a: int) -> StinespringDilation:
    if isinstance(phi, StinespringDilation):
        if dim_a == phi.dim_A:
            return phi
        if dim_a > phi.dim_A and dim_a % phi.dim_A == 0:
            return _pad_dilation(phi, dim_a // phi.dim_A)
    k = choi_to_kraus(phi.choi())
    need = minimal_ancilla_dim(k)
    if dim_a < need:
        raise ParameterError(f"dim_A={dim_a} is below the minimal dilation ancilla dimension {need}")
    return dilation_from_kraus(k, dim_a)


@dataclass(frozen=True)
class OutputDecomposition:
    q: float
    sigma: np.ndarray | None  # state on H, the S0 block
    rho_perp: np.ndarray | None  # state on A (x) H supported on the complement
    dim_A: int
    dim_H: int

    def reconstruct(self) -> np.ndarray:
        d = self.dim_A * self.dim_H
        out = np.zeros((d, d), dtype=complex)
        if self.sigma is not None:
            out[: self.dim_H, : self.dim_H] += self.q * self.sigma
        if self.rho_perp is not None:
            out += (1 - self.q) * self.rho_perp
        return out


@dataclass(frozen=True)
class ApproxChannel:
    phi: object = field(repr=False)
    dilation: StinespringDilation = field(repr=False)
    split: SubspaceSplit
    stages: tuple[RandomUnitaryChannel, ...] = field(repr=False)
    ru: RandomUnitaryChannel | None = field(repr=False)

    @property
    def dim_A(self) -> int:
        return self.dilation.dim_A

    @property
    def dim_H(self) -> int:
        return self.dilation.dim_H

    @property
    def dim_K(self) -> int:
        return self.dilation.dim_K

    @property
    def dim_B(self) -> int:
        return self.dilation.dim_B

    @property
    def m(self) -> float:
        return float(np.log2(self.dim_A))

    @property
    def dim(self) -> int:
        return self.split.dim

    dim_in = dim
    dim_out = dim

    @property
    def n_terms(self) -> int:
        return int(np.prod([s.n_terms for s in self.stages]))

    def apply(self, rho) -> np.ndarray:
        out = np.asarray(rho, dtype=complex)
        for stage in self.stages:
            out = stage.apply(out)
        return out

    def stage_outputs(self, rho) -> list[np.ndarray]:
        """States after D, M, U and N_B in turn."""
        outs, cur = [], np.asarray(rho, dtype=complex)
        for stage in self.stages:
            cur = stage.apply(cur)
            outs.append(cur)
        return outs

    def adjoint(self, x) -> np.ndarray:
        out = np.asarray(x, dtype=complex)
        for stage in reversed(self.stages):
            out = stage.adjoint(out)
        return out

    @cached_property
    def _choi(self) -> ChoiMatrix:
        d = self.dim
        units = np.eye(d * d, dtype=complex).reshape(d * d, d, d)
        for stage in self.stages:
            p, us = stage.probs, stage.unitaries
            nxt = np.zeros_like(units)
            for pk, u in zip(p, us):
                nxt += pk * (u @ units @ u.conj().T)
            units = nxt
        # units[i*d + j] = Phi(|i><j|)
        j4 = units.reshape(d, d, d, d).transpose(0, 2, 1, 3)
        return ChoiMatrix(d, d, j4.reshape(d * d, d * d))

    def choi(self) -> ChoiMatrix:
        return self._choi


def build_approximation(phi, dim_A: int, action_only: bool = False,
                        max_terms: int = MAX_TERMS) -> ApproxChannel:
    """Construct the random-unitary approximation of ``phi`` with ancilla dimension ``dim_A``.

    ``phi`` may be any channel representation.  A :class:`StinespringDilation`
    is used as given (or padded when ``dim_A`` is a multiple of its ancilla
    dimension); anything else is dilated from its minimal Kraus form.

    With ``action_only`` the symbolic composite is skipped and only the four
    stage channels are kept.
    """
    if dim_A < 2:
        raise ParameterError(f"dim_A must be at least 2, got {dim_A}")
    dil = dilation_for(phi, dim_A)
    split = SubspaceSplit(dil.dim_A, dil.dim_H)
    d = split.dim
    conj = RandomUnitaryChannel(d, np.ones(1), np.asarray(dil.u)[None])
    stages = (dephase_split(split), mix_subspace(split), conj, noise_on_factor(dil.dim_K, dil.dim_B))
    n = int(np.prod([s.n_terms for s in stages]))
    ru = None
    if not action_only:
        if n > max_terms:
            raise ParameterError(
                f"composite has {n} terms (> {max_terms}); use action_only=True"
            )
        ru = stages[0]
        for s in stages[1:]:
            ru = compose(s, ru)
    return ApproxChannel(phi, dil, split, stages, ru)


def _embed_s0(ac: ApproxChannel, sigma: np.ndarray) -> np.ndarray:
    d = ac.dim
    out = np.zeros((d, d), dtype=complex)
    out[: ac.dim_H, : ac.dim_H] = sigma
    return out


def simulate_original(ac: ApproxChannel, sigma) -> np.ndarray:
    """Output of the approximation on ``|0><0| (x) sigma``."""
    sigma = check_density(sigma, "sigma")
    if sigma.shape[0] != ac.dim_H:
        raise DimensionError(f"sigma must be {ac.dim_H}-dimensional, got {sigma.shape[0]}")
    rho = _embed_s0(ac, sigma)
    return ac.ru.apply(rho) if ac.ru is not None else ac.apply(rho)


def expected_simulation(ac: ApproxChannel, sigma) -> np.ndarray:
    """``Phi(sigma) (x) I/dim_B`` computed from the dilation directly."""
    return np.kron(ac.dilation.apply(sigma), maximally_mixed(ac.dim_B))


def decompose_input(ac: ApproxChannel, rho) -> OutputDecomposition:
    rho = check_density(rho)
    if rho.shape[0] != ac.dim:
        raise DimensionError(f"rho must be {ac.dim}-dimensional, got {rho.shape[0]}")
    dh = ac.dim_H
    block0 = rho[:dh, :dh]
    q = float(np.clip(np.trace(block0).real, 0.0, 1.0))
    sigma = block0 / q if q > 0 else None
    perp = ac.split.projector_perp()
    rho_perp = perp @ rho @ perp / (1 - q) if q < 1 else None
    return OutputDecomposition(q, sigma, rho_perp, ac.dim_A, dh)


def output_mix_check(ac: ApproxChannel, rho) -> float:
    """Trace-norm residual of the two-term output formula on input ``rho``."""
    dec = decompose_input(ac, rho)
    target = np.zeros((ac.dim, ac.dim), dtype=complex)
    if dec.sigma is not None:
        target += dec.q * expected_simulation(ac, dec.sigma)
    if dec.rho_perp is not None:
        target += (1 - dec.q) * ac.apply(dec.rho_perp)
    return trace_norm(ac.apply(rho) - target)


def perp_mixing_distance(ac: ApproxChannel, rho) -> float:
    """Trace distance of the output from ``I/dim`` for inputs on the complement of S0."""
    rho = check_density(rho)
    if rho.shape[0] != ac.dim:
        raise DimensionError(f"rho must be {ac.dim}-dimensional, got {rho.shape[0]}")
    leak = float(np.max(np.abs(ac.split.projector_s0() @ rho))) if ac.dim_H else 0.0
    if leak > SUPPORT_TOL:
        raise ParameterError(f"rho is not supported on the complement of S0 (overlap {leak:.3e})")
    return trace_norm(ac.apply(rho) - maximally_mixed(ac.dim))


def post_mixing_state(dim_a: int, dim_h: int) -> np.ndarray:
    """``(I_A - |0><0|)/(dim_A - 1) (x) I_H/dim_H``: the mixed state reached from the complement."""
    a = np.eye(dim_a, dtype=complex)
    a[0, 0] = 0
    return np.kron(a / (dim_a - 1), maximally_mixed(dim_h))


def mixing_entropy_bound(m: float) -> float:
    """Entropy deficit ``m / 2**(m-3)`` allowed for inputs on the complement of S0."""
    return m / 2 ** (m - 3)


def reorder_output(ac: ApproxChannel, rho_kb: np.ndarray, order=(1, 0)) -> np.ndarray:
    return permute_subsystems(rho_kb, [ac.dim_K, ac.dim_B], order)
