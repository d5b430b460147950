"""Entropy and Schatten-norm functionals and their channel optimizations.

Both ``S_min`` and ``nu_p`` are attained on pure inputs (entropy is concave
and norms are convex in the input), so the optimizers search the unit
sphere.  The local method is a linearize-and-jump ascent: at the current
output ``s`` take the gradient ``G`` of the objective, pull it back with the
adjoint channel and move to the top eigenvector of ``Phi^*(G)``.  By
convexity (concavity for entropy) every accepted step improves the
objective, and any global optimum is a fixed point.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channels import choi_to_kraus, tensor_channels
from .numerics import (
    MAX_DIM,
    CapacityError,
    ParameterError,
    check_density,
    encode_matrix,
    psd_eigenvalues,
)

DEFAULT_RESTARTS = 32
CONVERGENCE_TOL = 1e-10
MAX_ITER = 500
LOG_FLOOR = 1e-15
BASE_SLACK = 1e-6


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("CHANNEL_FORGE_THREADS", "1")))
    except ValueError:
        return 1


# -- scalar functionals -------------------------------------------------------

def entropy_of_spectrum(w: np.ndarray) -> float:
    w = np.clip(np.asarray(w, dtype=float), 0.0, None)
    w = w[w > 0]
    return max(0.0, float(-np.sum(w * np.log2(w))))


def entropy(rho) -> float:
    """Von Neumann entropy in bits."""
    rho = check_density(rho)
    return entropy_of_spectrum(psd_eigenvalues(rho))


def pnorm_of_spectrum(w: np.ndarray, p: float) -> float:
    w = np.clip(np.asarray(w, dtype=float), 0.0, None)
    if np.isinf(p):
        return float(w.max())
    top = w.max()
    if top == 0:
        return 0.0
    return float(top * np.sum((w / top) ** p) ** (1.0 / p))


def fannes_bound(delta: float, dim: int) -> tuple[float, bool]:
    """Continuity bound ``delta*log2(dim) - delta*log2(delta)`` for ``delta = ||rho - sigma||_1``.

    The flag is False when ``delta > 1/e``, where the bound is not valid.
    """
    if delta < 0:
        raise ParameterError(f"delta must be nonnegative, got {delta}")
    eta = 0.0 if delta == 0 else -delta * math.log2(delta)
    return delta * math.log2(dim) + eta, delta <= 1 / math.e


# -- channel access -----------------------------------------------------------

@dataclass(frozen=True)
class _PureMap:
    """Minimal Kraus form used by the optimizers: fast action on pure inputs."""

    ops: np.ndarray  # (r, dout, din)

    @classmethod
    def of(cls, c) -> "_PureMap":
        if isinstance(c, _PureMap):
            return c
        k = choi_to_kraus(c.choi())
        return cls(np.asarray(k.kraus_ops))

    @property
    def dim_in(self) -> int:
        return self.ops.shape[2]

    def output(self, psi: np.ndarray) -> np.ndarray:
        b = self.ops @ psi  # (r, dout)
        return b.T @ b.conj()

    def adjoint(self, g: np.ndarray) -> np.ndarray:
        k = self.ops
        return np.einsum("aji,jk,akl->il", k.conj(), g, k, optimize=True)


def _top_vector(h: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh((h + h.conj().T) / 2)
    return v[:, -1]


# -- objectives ----------------------------------------------------------------

class _Objective:
    sense = 1.0  # +1 maximize, -1 minimize

    def value(self, out: np.ndarray) -> float:
        raise NotImplementedError

    def gradient(self, out: np.ndarray) -> np.ndarray:
        """Hermitian operator whose top eigenvector (after pull-back) is the next input."""
        raise NotImplementedError


class _EntropyObjective(_Objective):
    sense = -1.0

    def value(self, out):
        return entropy_of_spectrum(np.linalg.eigvalsh((out + out.conj().T) / 2))

    def gradient(self, out):
        w, v = np.linalg.eigh((out + out.conj().T) / 2)
        logw = np.log2(np.clip(w, LOG_FLOOR, None))
        return (v * logw) @ v.conj().T


class _PNormObjective(_Objective):
    def __init__(self, p: float):
        self.p = p

    def value(self, out):
        return pnorm_of_spectrum(np.linalg.eigvalsh((out + out.conj().T) / 2), self.p)

    def gradient(self, out):
        w, v = np.linalg.eigh((out + out.conj().T) / 2)
        w = np.clip(w, 0.0, None)
        if np.isinf(self.p):
            # average of the subgradients over a degenerate top eigenspace
            top = v[:, w >= w[-1] - 1e-10]
            return top @ top.conj().T / top.shape[1]
        return (v * w ** (self.p - 1)) @ v.conj().T


@dataclass
class OptResult:
    value: float
    witness: np.ndarray
    restarts_used: int
    iterations: int
    converged: bool
    seed: int
    restart_values: list[float] = field(default_factory=list)
    spread: float = 0.0
    method: str = "consensus"

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "method": self.method,
            "witness": encode_matrix(self.witness),
            "restarts_used": self.restarts_used,
            "iterations": self.iterations,
            "converged": self.converged,
            "seed": self.seed,
            "spread": self.spread,
            "restart_values": list(self.restart_values),
        }


def _ascend(pm: _PureMap, obj: _Objective, psi: np.ndarray, max_iter: int):
    out = pm.output(psi)
    val = obj.value(out)
    for it in range(1, max_iter + 1):
        nxt = _top_vector(obj.sense * pm.adjoint(obj.gradient(out)))
        nout = pm.output(nxt)
        nval = obj.value(nout)
        gain = obj.sense * (nval - val)
        if gain < 0:
            return psi, val, it, True  # the jump would worsen things: local optimum
        psi, out, val = nxt, nout, nval
        if gain < CONVERGENCE_TOL:
            return psi, val, it, True
    return psi, val, max_iter, False


def top_quartile_spread(values, sense: float) -> float:
    v = np.sort(np.asarray(values, dtype=float) * sense)[::-1]
    k = max(1, math.ceil(len(v) / 4))
    best = v[:k]
    return float(best.max() - best.min())


def _optimize(c, obj: _Objective, restarts: int, seed: int, max_iter: int = MAX_ITER,
              starts=None) -> OptResult:
    if restarts < 1:
        raise ParameterError(f"restarts must be at least 1, got {restarts}")
    pm = _PureMap.of(c)
    d = pm.dim_in
    children = np.random.SeedSequence(seed).spawn(restarts)

    def run(i):
        rng = np.random.default_rng(children[i])
        v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        return _ascend(pm, obj, v / np.linalg.norm(v), max_iter)

    n_threads = thread_count()
    if n_threads > 1 and restarts > 1:
        with ThreadPoolExecutor(n_threads) as ex:
            runs = list(ex.map(run, range(restarts)))
    else:
        runs = [run(i) for i in range(restarts)]
    if starts is not None:
        runs += [_ascend(pm, obj, np.asarray(s, dtype=complex) / np.linalg.norm(s), max_iter) for s in starts]
    vals = [r[1] for r in runs]
    best = int(np.argmax(obj.sense * np.asarray(vals)))
    psi = runs[best][0]
    value = obj.value(pm.output(psi))
    return OptResult(
        value=value,
        witness=psi,
        restarts_used=len(runs),
        iterations=int(sum(r[2] for r in runs)),
        converged=bool(runs[best][3]),
        seed=seed,
        restart_values=[float(x) for x in vals],
        spread=top_quartile_spread(vals, obj.sense),
    )


def min_output_entropy(phi, restarts: int = DEFAULT_RESTARTS, seed: int = 0, starts=None) -> OptResult:
    """Multi-start estimate (an upper bound) of the minimum output entropy in bits."""
    return _optimize(phi, _EntropyObjective(), restarts, seed, starts=starts)


def max_output_pnorm(phi, p: float, restarts: int = DEFAULT_RESTARTS, seed: int = 0, starts=None) -> OptResult:
    """Multi-start estimate (a lower bound) of the maximum output Schatten p-norm."""
    if not p >= 1:
        raise ParameterError(f"p must be >= 1, got {p}")
    return _optimize(phi, _PNormObjective(float(p)), restarts, seed, starts=starts)


def output_entropy(phi, psi) -> float:
    return _EntropyObjective().value(_PureMap.of(phi).output(np.asarray(psi, dtype=complex)))


def output_pnorm(phi, psi, p: float) -> float:
    return _PNormObjective(float(p)).value(_PureMap.of(phi).output(np.asarray(psi, dtype=complex)))


# -- sandwich verifiers ---------------------------------------------------------

@dataclass
class SandwichReport:
    name: str
    lower: float
    middle: float
    upper: float
    slack: float
    spreads: dict[str, float]
    lower_ok: bool
    upper_ok: bool
    in_regime: bool = True
    notes: list[str] = field(default_factory=list)
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.lower_ok and self.upper_ok

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "lower": {"value": self.lower, "method": "consensus"},
            "middle": {"value": self.middle, "method": "consensus"},
            "upper": {"value": self.upper, "method": "consensus"},
            "slack": self.slack,
            "spreads": dict(self.spreads),
            "lower_ok": self.lower_ok,
            "upper_ok": self.upper_ok,
            "in_regime": self.in_regime,
            "notes": list(self.notes),
            "details": dict(self.details),
        }


def _s0_starts(ac, witness: np.ndarray) -> list[np.ndarray]:
    # |0>_A (x) witness of the original channel: seeds the search on S0
    v = np.zeros(ac.dim, dtype=complex)
    v[: ac.dim_H] = witness
    return [v]


def verify_theorem5(phi, ac, p: float, restarts: int = DEFAULT_RESTARTS, seed: int = 0) -> SandwichReport:
    """Check ``nu_p(Phi) <= nu_p(Phi')/||I_B/d_B||_p <= nu_p(Phi) + 2 d_B/d_A``."""
    r_phi = max_output_pnorm(phi, p, restarts, seed)
    r_apx = max_output_pnorm(ac, p, restarts, seed, starts=_s0_starts(ac, r_phi.witness))
    db = ac.dim_B
    norm_b = db ** (1.0 / p - 1.0) if not np.isinf(p) else 1.0 / db
    lower = r_phi.value
    middle = r_apx.value / norm_b
    upper = lower + 2 * db / ac.dim_A
    spreads = {"phi": r_phi.spread, "phi_prime": r_apx.spread / norm_b}
    slack = BASE_SLACK + max(spreads.values())
    return SandwichReport(
        name="theorem5",
        lower=lower,
        middle=middle,
        upper=upper,
        slack=slack,
        spreads=spreads,
        lower_ok=lower <= middle + slack,
        upper_ok=middle <= upper + slack,
        details={"p": "inf" if np.isinf(p) else p, "dim_A": ac.dim_A, "dim_B": db,
                 "restarts": restarts, "seed": seed,
                 # the proof's sharper bound; never above ``upper``
                 "proof_upper": lower + 2 * db ** (1.0 - (0.0 if np.isinf(p) else 1.0 / p)) / ac.dim_A},
    )


def verify_theorem7(phi, ac, restarts: int = DEFAULT_RESTARTS, seed: int = 0) -> SandwichReport:
    """Check ``S_min(Phi) >= S_min(Phi') - log d_B >= S_min(Phi) - 8 log d_A / d_A``.

    The report's ``lower``/``upper`` follow the numeric order:
    ``upper = S_min(Phi)`` and ``lower = S_min(Phi) - 8 m / 2^m``.
    """
    r_phi = min_output_entropy(phi, restarts, seed)
    r_apx = min_output_entropy(ac, restarts, seed, starts=_s0_starts(ac, r_phi.witness))
    m = math.log2(ac.dim_A)
    upper = r_phi.value
    middle = r_apx.value - math.log2(ac.dim_B)
    lower = upper - 8 * m / ac.dim_A
    spreads = {"phi": r_phi.spread, "phi_prime": r_apx.spread}
    slack = BASE_SLACK + max(spreads.values())
    notes = []
    in_regime = m >= 3 and ac.dim_A >= ac.dim_H
    if not in_regime:
        notes.append("outside bound regime: needs log2(dim_A) >= 3 and dim_A >= dim_H")
    return SandwichReport(
        name="theorem7",
        lower=lower,
        middle=middle,
        upper=upper,
        slack=slack,
        spreads=spreads,
        lower_ok=lower <= middle + slack,
        upper_ok=middle <= upper + slack,
        in_regime=in_regime,
        notes=notes,
        details={"dim_A": ac.dim_A, "dim_B": ac.dim_B, "m": m, "restarts": restarts, "seed": seed},
    )


# -- additivity / multiplicativity probes ------------------------------------------

@dataclass
class GapReport:
    kind: str
    gap: float
    phi_value: float
    psi_value: float
    joint_value: float
    joint_optimizer: float
    product_value: float
    spread: float
    certificate: str

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "gap": {"value": self.gap, "method": "consensus"},
            "phi_value": {"value": self.phi_value, "method": "consensus"},
            "psi_value": {"value": self.psi_value, "method": "consensus"},
            "joint_value": {"value": self.joint_value, "method": "consensus"},
            "product_value": {"value": self.product_value, "method": "exact"},
            "joint_optimizer": self.joint_optimizer,
            "spread": self.spread,
            "certificate": self.certificate,
        }


def _joint(phi, psi):
    if phi.dim_in * psi.dim_in * phi.dim_out * psi.dim_out > MAX_DIM:
        raise CapacityError("Choi matrix of the tensor product channel exceeds max_dim")
    return tensor_channels(phi, psi)


def additivity_report(phi, psi, restarts: int = DEFAULT_RESTARTS, seed: int = 0) -> GapReport:
    r1 = min_output_entropy(phi, restarts, seed)
    r2 = min_output_entropy(psi, restarts, seed)
    joint = _joint(phi, psi)
    w = np.kron(r1.witness, r2.witness)
    r12 = min_output_entropy(joint, restarts, seed, starts=[w])
    prod = output_entropy(joint, w)
    s12 = min(r12.value, prod)
    gap = max(0.0, r1.value + r2.value - s12)
    return GapReport("additivity", gap, r1.value, r2.value, s12, r12.value, prod,
                     max(r1.spread, r2.spread, r12.spread),
                     "gap >= 0 certified by the product witness; a positive gap is heuristic, not a certified violation")


def multiplicativity_report(phi, psi, p: float, restarts: int = DEFAULT_RESTARTS, seed: int = 0) -> GapReport:
    r1 = max_output_pnorm(phi, p, restarts, seed)
    r2 = max_output_pnorm(psi, p, restarts, seed)
    joint = _joint(phi, psi)
    w = np.kron(r1.witness, r2.witness)
    r12 = max_output_pnorm(joint, p, restarts, seed, starts=[w])
    prod = output_pnorm(joint, w, p)
    n12 = max(r12.value, prod)
    gap = max(0.0, n12 - r1.value * r2.value)
    return GapReport("multiplicativity", gap, r1.value, r2.value, n12, r12.value, prod,
                     max(r1.spread, r2.spread, r12.spread),
                     "gap >= 0 certified by the product witness; a positive gap is heuristic, not a certified violation")


def additivity_gap(phi, psi, restarts: int = DEFAULT_RESTARTS, seed: int = 0) -> float:
    """``S_min(Phi) + S_min(Psi) - S_min(Phi (x) Psi)`` estimated from the certifiable side."""
    return additivity_report(phi, psi, restarts, seed).gap


def multiplicativity_gap(phi, psi, p: float, restarts: int = DEFAULT_RESTARTS, seed: int = 0) -> float:
    """``nu_p(Phi (x) Psi) - nu_p(Phi) nu_p(Psi)`` estimated from the certifiable side."""
    return multiplicativity_report(phi, psi, p, restarts, seed).gap


def output_state(phi, psi) -> np.ndarray:
    return _PureMap.of(phi).output(np.asarray(psi, dtype=complex))

