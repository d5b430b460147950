"""Channel representations, CPTP validation and conversions.

Four interchangeable representations are provided as frozen dataclasses:

* :class:`KrausChannel`      -- ``rho -> sum_k K rho K^*``
* :class:`StinespringDilation` -- ``rho -> tr_B U (|0><0|_A (x) rho) U^*``
* :class:`RandomUnitaryChannel` -- ``rho -> sum_i p_i U_i rho U_i^*``
* :class:`ChoiMatrix`        -- ``J = sum_ij |i><j| (x) Phi(|i><j|)``

Every representation exposes ``dim_in``, ``dim_out``, ``apply`` and ``choi``,
which is all that the functions below rely on.  The Choi matrix is stored
with the input factor first and is unnormalized (trace ``dim_in``).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .numerics import (
    TOL_PSD,
    TOL_UNITARY,
    CapacityError,
    DimensionError,
    StructuralError,
    ValidationError,
    as_square,
    check_dim,
    check_storage,
    decode_matrix,
    encode_matrix,
    hermiticity_residual,
    partial_trace,
    unitarity_residual,
)

TOL_TP = 1e-9
TOL_PROBS = 1e-10
MAX_RU_TERMS = 10**6


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


def _apply_choi4(j4: np.ndarray, rho: np.ndarray) -> np.ndarray:
    # j4[i, k, j, l] = Phi(|i><j|)[k, l]
    return np.tensordot(rho, j4, axes=([0, 1], [0, 2]))


@dataclass(frozen=True)
class KrausChannel:
    dim_in: int
    dim_out: int
    kraus_ops: np.ndarray = field(repr=False)  # shape (r, dim_out, dim_in)

    def __post_init__(self):
        ops = np.asarray(self.kraus_ops, dtype=complex)
        if ops.ndim == 2:
            ops = ops[None]
        if ops.ndim != 3 or ops.shape[0] < 1:
            raise StructuralError("kraus_ops: need a non-empty list of matrices")
        if ops.shape[1:] != (self.dim_out, self.dim_in):
            raise StructuralError(
                f"kraus_ops: each operator must be {self.dim_out}x{self.dim_in}, got {ops.shape[1:]}"
            )
        check_dim(self.dim_in * self.dim_out, "Choi matrix")
        object.__setattr__(self, "kraus_ops", _freeze(ops))

    @property
    def rank(self) -> int:
        return self.kraus_ops.shape[0]

    def apply(self, rho) -> np.ndarray:
        rho = np.asarray(rho, dtype=complex)
        k = self.kraus_ops
        return np.einsum("aij,jk,alk->il", k, rho, k.conj(), optimize=True)

    def adjoint(self, x) -> np.ndarray:
        k = self.kraus_ops
        return np.einsum("aji,jk,akl->il", k.conj(), np.asarray(x, dtype=complex), k, optimize=True)

    def choi(self) -> "ChoiMatrix":
        vecs = self.kraus_ops.transpose(0, 2, 1).reshape(self.rank, -1)
        return ChoiMatrix(self.dim_in, self.dim_out, vecs.T @ vecs.conj())


@dataclass(frozen=True)
class StinespringDilation:
    """Unitary ``u`` from A (x) H to K (x) B; the ancilla A starts in ``|0>``."""

    dim_A: int
    dim_H: int
    dim_K: int
    dim_B: int
    u: np.ndarray = field(repr=False)

    def __post_init__(self):
        u = as_square(self.u, "u")
        if self.dim_A * self.dim_H != self.dim_K * self.dim_B:
            raise StructuralError(
                f"dim_A*dim_H={self.dim_A * self.dim_H} differs from dim_K*dim_B={self.dim_K * self.dim_B}"
            )
        if u.shape[0] != self.dim_A * self.dim_H:
            raise StructuralError(f"u: expected dimension {self.dim_A * self.dim_H}, got {u.shape[0]}")
        res = unitarity_residual(u)
        if res > TOL_UNITARY:
            raise ValidationError(f"u is not unitary (residual {res:.3e})")
        object.__setattr__(self, "u", _freeze(u))

    @property
    def dim_in(self) -> int:
        return self.dim_H

    @property
    def dim_out(self) -> int:
        return self.dim_K

    def isometry(self) -> np.ndarray:
        """Columns of ``u`` with the ancilla in ``|0>``: a (dim_K*dim_B) x dim_H isometry."""
        return np.asarray(self.u[:, : self.dim_H])

    def apply(self, rho) -> np.ndarray:
        v = self.isometry()
        out = v @ np.asarray(rho, dtype=complex) @ v.conj().T
        return partial_trace(out, [self.dim_K, self.dim_B], keep=[0])

    def to_kraus(self) -> KrausChannel:
        return stinespring_to_kraus(self)

    def choi(self) -> "ChoiMatrix":
        return self.to_kraus().choi()


@dataclass(frozen=True)
class RandomUnitaryChannel:
    dim: int
    probs: np.ndarray = field(repr=False)
    unitaries: np.ndarray = field(repr=False)  # shape (n, dim, dim)

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float).reshape(-1)
        us = np.asarray(self.unitaries, dtype=complex)
        if us.ndim == 2:
            us = us[None]
        if us.ndim != 3 or us.shape[0] != p.size or p.size < 1:
            raise StructuralError("probs and unitaries must be non-empty lists of equal length")
        if us.shape[1:] != (self.dim, self.dim):
            raise StructuralError(f"unitaries must be {self.dim}x{self.dim}, got {us.shape[1:]}")
        if np.any(p < 0) or abs(p.sum() - 1.0) > TOL_PROBS:
            raise ValidationError(f"probs must be a probability vector (sum={p.sum():.12f})")
        eye = np.eye(self.dim)
        res = np.max(np.abs(np.matmul(us.conj().transpose(0, 2, 1), us) - eye))
        if res > TOL_UNITARY:
            raise ValidationError(f"unitaries are not unitary (residual {res:.3e})")
        object.__setattr__(self, "probs", p.copy())
        self.probs.setflags(write=False)
        object.__setattr__(self, "unitaries", _freeze(us))

    @property
    def dim_in(self) -> int:
        return self.dim

    @property
    def dim_out(self) -> int:
        return self.dim

    @property
    def n_terms(self) -> int:
        return self.probs.size

    @classmethod
    def _trusted(cls, dim: int, probs: np.ndarray, unitaries: np.ndarray) -> "RandomUnitaryChannel":
        # products of already validated terms skip the O(n d^3) unitarity check
        obj = object.__new__(cls)
        object.__setattr__(obj, "dim", dim)
        object.__setattr__(obj, "probs", np.array(probs, dtype=float))
        obj.probs.setflags(write=False)
        object.__setattr__(obj, "unitaries", _freeze(unitaries))
        return obj

    def apply(self, rho) -> np.ndarray:
        rho = np.asarray(rho, dtype=complex)
        if hermiticity_residual(rho) <= 1e-14 * max(1.0, float(np.max(np.abs(rho)))):
            return self._apply_hermitian(rho)
        us = self.unitaries
        out = np.zeros((self.dim, self.dim), dtype=complex)
        # chunk to bound the temporary (n, d, d) arrays
        step = max(1, 2**22 // (self.dim * self.dim))
        for s in range(0, self.n_terms, step):
            u = us[s : s + step]
            t = np.matmul(np.matmul(u, rho), u.conj().transpose(0, 2, 1))
            out += np.tensordot(self.probs[s : s + step], t, axes=1)
        return out

    def _apply_hermitian(self, rho: np.ndarray) -> np.ndarray:
        # rho = W diag(s) W^*, so the output is X diag(s) X^* with X = [sqrt(p_i) U_i W]
        w, v = np.linalg.eigh((rho + rho.conj().T) / 2)
        keep = np.abs(w) > 1e-15 * max(1.0, float(np.max(np.abs(w))))
        if not np.any(keep):
            return np.zeros((self.dim, self.dim), dtype=complex)
        wk, vk = w[keep], v[:, keep] * np.sqrt(np.abs(w[keep]))
        x = np.sqrt(self.probs)[:, None, None] * np.matmul(self.unitaries, vk)
        x = x.transpose(1, 0, 2).reshape(self.dim, -1)
        sign = np.tile(np.sign(wk), self.n_terms)
        out = (x * sign) @ x.conj().T
        return (out + out.conj().T) / 2

    def adjoint(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=complex)
        us = self.unitaries
        t = np.matmul(np.matmul(us.conj().transpose(0, 2, 1), x), us)
        return np.tensordot(self.probs, t, axes=1)

    def to_kraus(self) -> KrausChannel:
        return ru_to_kraus(self)

    def choi(self) -> "ChoiMatrix":
        return self.to_kraus().choi()


@dataclass(frozen=True)
class ChoiMatrix:
    dim_in: int
    dim_out: int
    j: np.ndarray = field(repr=False)

    def __post_init__(self):
        j = as_square(self.j, "j")
        if j.shape[0] != self.dim_in * self.dim_out:
            raise StructuralError(
                f"j: expected dimension {self.dim_in * self.dim_out}, got {j.shape[0]}"
            )
        object.__setattr__(self, "j", _freeze(j))

    def tensor4(self) -> np.ndarray:
        """View as ``t[i, k, j, l] = Phi(|i><j|)[k, l]``."""
        return np.asarray(self.j).reshape(self.dim_in, self.dim_out, self.dim_in, self.dim_out)

    def apply(self, rho) -> np.ndarray:
        return _apply_choi4(self.tensor4(), np.asarray(rho, dtype=complex))

    def adjoint(self, x) -> np.ndarray:
        return np.einsum("lk,ikjl->ji", np.asarray(x, dtype=complex), self.tensor4())

    def choi(self) -> "ChoiMatrix":
        return self

    def to_kraus(self) -> KrausChannel:
        return choi_to_kraus(self)


CHANNEL_TYPES = (KrausChannel, StinespringDilation, RandomUnitaryChannel, ChoiMatrix)


@dataclass
class ValidationReport:
    passed: bool
    residuals: dict[str, float]
    problems: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "residuals": dict(self.residuals), "problems": list(self.problems)}


def validate_cptp(c) -> ValidationReport:
    """Check complete positivity and trace preservation via the Choi matrix."""
    j = c.choi()
    jm = np.asarray(j.j)
    herm = hermiticity_residual(jm)
    lam_min = float(np.linalg.eigvalsh((jm + jm.conj().T) / 2)[0])
    tp = partial_trace(jm, [j.dim_in, j.dim_out], keep=[0])
    tp_res = float(np.max(np.abs(tp - np.eye(j.dim_in))))
    residuals = {
        "hermiticity": herm,
        "min_choi_eigenvalue": min(lam_min, 0.0),
        "trace_preservation": tp_res,
    }
    problems = []
    if herm > TOL_PSD:
        problems.append(f"Choi matrix not Hermitian (residual {herm:.3e})")
    if lam_min < -TOL_PSD:
        problems.append(f"Choi matrix not PSD (min eigenvalue {lam_min:.3e})")
    if tp_res > TOL_TP:
        problems.append(f"not trace preserving (residual {tp_res:.3e})")
    if isinstance(c, RandomUnitaryChannel):
        residuals["probability_sum"] = abs(float(c.probs.sum()) - 1.0)
    return ValidationReport(not problems, residuals, problems)


def ru_to_kraus(c: RandomUnitaryChannel) -> KrausChannel:
    ops = np.sqrt(c.probs)[:, None, None] * c.unitaries
    return KrausChannel(c.dim, c.dim, ops)


def stinespring_to_kraus(s: StinespringDilation) -> KrausChannel:
    v = s.isometry().reshape(s.dim_K, s.dim_B, s.dim_H)
    return KrausChannel(s.dim_H, s.dim_K, v.transpose(1, 0, 2))


def kraus_to_choi(c: KrausChannel) -> ChoiMatrix:
    return c.choi()


def choi_to_kraus(j: ChoiMatrix, tol: float = TOL_PSD) -> KrausChannel:
    """Kraus operators from the eigendecomposition of ``J``, largest eigenvalue first."""
    jm = np.asarray(j.j)
    if hermiticity_residual(jm) > TOL_PSD:
        raise ValidationError("Choi matrix is not Hermitian")
    w, v = np.linalg.eigh((jm + jm.conj().T) / 2)
    if w[0] < -tol:
        raise ValidationError(f"Choi matrix is not PSD (min eigenvalue {w[0]:.3e})")
    order = np.argsort(w)[::-1]
    w, v = w[order], v[:, order]
    keep = w > tol
    if not np.any(keep):
        raise ValidationError("Choi matrix has no eigenvalue above tolerance")
    vecs = v[:, keep] * np.sqrt(w[keep])
    ops = vecs.T.reshape(-1, j.dim_in, j.dim_out).transpose(0, 2, 1)
    return KrausChannel(j.dim_in, j.dim_out, ops)


def to_choi(c) -> ChoiMatrix:
    return c.choi()


def apply(c, rho) -> np.ndarray:
    rho = as_square(rho, "rho")
    if rho.shape[0] != c.dim_in:
        raise DimensionError(f"channel expects input dimension {c.dim_in}, got {rho.shape[0]}")
    return c.apply(rho)


def apply_with_reference(c, rho, dim_ref: int | None = None) -> np.ndarray:
    """Apply ``c (x) id_F`` to ``rho`` on H (x) F; the channel acts on the first factor."""
    rho = as_square(rho, "rho")
    d = rho.shape[0]
    if dim_ref is None:
        if d % c.dim_in:
            raise DimensionError(f"input dimension {d} is not a multiple of {c.dim_in}")
        dim_ref = d // c.dim_in
    if c.dim_in * dim_ref != d:
        raise DimensionError(f"expected dimension {c.dim_in}*{dim_ref}, got {d}")
    j4 = c.choi().tensor4()
    r = rho.reshape(c.dim_in, dim_ref, c.dim_in, dim_ref)
    # out[k, f, l, g] = sum_ij r[i, f, j, g] j4[i, k, j, l]
    out = np.einsum("ifjg,ikjl->kflg", r, j4, optimize=True)
    dout = c.dim_out * dim_ref
    return out.reshape(dout, dout)


def compose(c2, c1):
    """The channel ``c2 o c1`` (apply ``c1`` first)."""
    if c1.dim_out != c2.dim_in:
        raise DimensionError(f"cannot compose: {c1.dim_out} != {c2.dim_in}")
    if isinstance(c1, RandomUnitaryChannel) and isinstance(c2, RandomUnitaryChannel):
        n = c1.n_terms * c2.n_terms
        if n > MAX_RU_TERMS:
            raise CapacityError(f"composite has {n} random-unitary terms (> {MAX_RU_TERMS})")
        check_storage(n * c1.dim * c1.dim, "composite unitaries")
        probs = np.outer(c2.probs, c1.probs).reshape(-1)
        us = np.matmul(c2.unitaries[:, None], c1.unitaries[None]).reshape(n, c1.dim, c1.dim)
        return RandomUnitaryChannel._trusted(c1.dim, probs, us)
    k1 = _kraus_of(c1).kraus_ops
    k2 = _kraus_of(c2).kraus_ops
    ops = np.matmul(k2[:, None], k1[None]).reshape(-1, c2.dim_out, c1.dim_in)
    return KrausChannel(c1.dim_in, c2.dim_out, ops)


def tensor_channels(c1, c2):
    """The parallel channel ``c1 (x) c2``."""
    if isinstance(c1, RandomUnitaryChannel) and isinstance(c2, RandomUnitaryChannel):
        d = c1.dim * c2.dim
        check_dim(d)
        check_storage(c1.n_terms * c2.n_terms * d * d, "tensor-product unitaries")
        probs = np.outer(c1.probs, c2.probs).reshape(-1)
        us = np.einsum("aij,bkl->abikjl", c1.unitaries, c2.unitaries).reshape(-1, d, d)
        return RandomUnitaryChannel._trusted(d, probs, us)
    k1 = _kraus_of(c1).kraus_ops
    k2 = _kraus_of(c2).kraus_ops
    din, dout = c1.dim_in * c2.dim_in, c1.dim_out * c2.dim_out
    check_dim(din * dout, "Choi matrix")
    check_storage(k1.shape[0] * k2.shape[0] * din * dout, "tensor-product Kraus operators")
    ops = np.einsum("aij,bkl->abikjl", k1, k2).reshape(-1, dout, din)
    return KrausChannel(din, dout, ops)


def _kraus_of(c) -> KrausChannel:
    if isinstance(c, KrausChannel):
        return c
    if hasattr(c, "to_kraus"):
        return c.to_kraus()
    return choi_to_kraus(c.choi())


def action_residual(c1, c2) -> float:
    """Largest entrywise difference of the two actions over all matrix units ``|i><j|``."""
    if (c1.dim_in, c1.dim_out) != (c2.dim_in, c2.dim_out):
        raise DimensionError("channels have different dimensions")
    j1 = np.asarray(c1.choi().j)
    j2 = np.asarray(c2.choi().j)
    return float(np.max(np.abs(j1 - j2)))


def channels_equal(c1, c2, tol: float = 1e-9) -> bool:
    return action_residual(c1, c2) <= tol


# -- JSON ---------------------------------------------------------------------

def channel_to_dict(c) -> dict:
    if isinstance(c, KrausChannel):
        return {"kind": "kraus", "dim_in": c.dim_in, "dim_out": c.dim_out,
                "kraus_ops": [encode_matrix(k) for k in c.kraus_ops]}
    if isinstance(c, StinespringDilation):
        return {"kind": "stinespring", "dim_in": c.dim_H, "dim_out": c.dim_K,
                "dim_A": c.dim_A, "dim_B": c.dim_B, "u": encode_matrix(c.u)}
    if isinstance(c, RandomUnitaryChannel):
        return {"kind": "random_unitary", "dim_in": c.dim, "dim_out": c.dim,
                "probs": [float(p) for p in c.probs],
                "unitaries": [encode_matrix(u) for u in c.unitaries]}
    if isinstance(c, ChoiMatrix):
        return {"kind": "choi", "dim_in": c.dim_in, "dim_out": c.dim_out, "j": encode_matrix(c.j)}
    if hasattr(c, "choi"):
        return channel_to_dict(c.choi())
    raise StructuralError(f"cannot serialize {type(c).__name__}")


def _field(d: dict, name: str):
    if name not in d:
        raise StructuralError(f"missing field '{name}'")
    return d[name]


def _int_field(d: dict, name: str) -> int:
    v = _field(d, name)
    if not isinstance(v, int) or isinstance(v, bool) or v < 1:
        raise StructuralError(f"field '{name}' must be a positive integer, got {v!r}")
    return v


def channel_from_dict(d: dict):
    """Build a channel from its JSON form.  Invariant violations raise."""
    if not isinstance(d, dict):
        raise StructuralError("channel JSON must be an object")
    kind = _field(d, "kind")
    dim_in = _int_field(d, "dim_in")
    dim_out = _int_field(d, "dim_out")
    if kind == "kraus":
        ops = _field(d, "kraus_ops")
        if not isinstance(ops, list) or not ops:
            raise StructuralError("field 'kraus_ops' must be a non-empty list")
        mats = [decode_matrix(k, f"kraus_ops[{i}]") for i, k in enumerate(ops)]
        if len({m.shape for m in mats}) != 1:
            _raise_shape("kraus_ops")
        return KrausChannel(dim_in, dim_out, np.stack(mats))
    if kind == "stinespring":
        dim_a, dim_b = _int_field(d, "dim_A"), _int_field(d, "dim_B")
        return StinespringDilation(dim_a, dim_in, dim_out, dim_b, decode_matrix(_field(d, "u"), "u"))
    if kind == "random_unitary":
        if dim_in != dim_out:
            raise StructuralError("random_unitary channels need dim_in == dim_out")
        us = [decode_matrix(u, f"unitaries[{i}]") for i, u in enumerate(_field(d, "unitaries"))]
        if not us or len({u.shape for u in us}) != 1:
            _raise_shape("unitaries")
        return RandomUnitaryChannel(dim_in, np.asarray(_field(d, "probs"), dtype=float), np.stack(us))
    if kind == "choi":
        return ChoiMatrix(dim_in, dim_out, decode_matrix(_field(d, "j"), "j"))
    raise StructuralError(f"unknown channel kind {kind!r}")


def _raise_shape(name: str):
    raise StructuralError(f"field '{name}': matrices have inconsistent shapes")

