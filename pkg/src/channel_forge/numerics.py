"""Dense complex linear algebra shared by the rest of the package.

Matrices are plain ``numpy`` arrays of dtype ``complex128``.  States and
unitaries are validated on the way in by the ``check_*`` helpers; nothing is
wrapped in a container class.
"""
from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

TOL_STATE = 1e-10
TOL_HERM = 1e-10
TOL_PSD = 1e-9
TOL_TRACE = 1e-9
TOL_UNITARY = 1e-10
MAX_DIM = 16384
# dense storage cap (complex entries, ~1 GiB)
MAX_ELEMENTS = 2**26


class ChannelForgeError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(ChannelForgeError, ValueError):
    pass


class CapacityError(DimensionError):
    """A matrix dimension exceeds :data:`MAX_DIM`."""


class ValidationError(ChannelForgeError, ValueError):
    pass


class ParameterError(ChannelForgeError, ValueError):
    pass


class StructuralError(ChannelForgeError, ValueError):
    pass


def check_dim(dim: int, what: str = "matrix") -> int:
    if dim > MAX_DIM:
        raise CapacityError(f"{what} dimension {dim} exceeds max_dim={MAX_DIM}")
    return dim


def check_storage(n_elements: int, what: str = "array") -> int:
    if n_elements > MAX_ELEMENTS:
        raise CapacityError(f"{what} needs {n_elements} complex entries, above the cap of {MAX_ELEMENTS}")
    return n_elements


def as_matrix(m, name: str = "matrix") -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise DimensionError(f"{name} must be a non-empty 2-D array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError(f"{name} has non-finite entries")
    return a


def as_square(m, name: str = "matrix") -> np.ndarray:
    a = as_matrix(m, name)
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {a.shape}")
    return a


def hermiticity_residual(m: np.ndarray) -> float:
    return float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0


def check_pure_state(psi, tol: float = TOL_STATE) -> np.ndarray:
    v = np.asarray(psi, dtype=complex).reshape(-1)
    if v.size < 1 or not np.all(np.isfinite(v)):
        raise ValidationError("pure state must be a finite non-empty vector")
    err = abs(np.linalg.norm(v) - 1.0)
    if err > tol:
        raise ValidationError(f"pure state norm deviates from 1 by {err:.3e}")
    return v


def check_density(rho, name: str = "rho") -> np.ndarray:
    """Validate a density matrix and return it as a complex array."""
    r = as_square(rho, name)
    herm = hermiticity_residual(r)
    if herm > TOL_HERM:
        raise ValidationError(f"{name} is not Hermitian (residual {herm:.3e})")
    tr_err = abs(np.trace(r) - 1.0)
    if tr_err > TOL_TRACE:
        raise ValidationError(f"{name} trace deviates from 1 by {tr_err:.3e}")
    lam_min = np.linalg.eigvalsh((r + r.conj().T) / 2)[0]
    if lam_min < -TOL_PSD:
        raise ValidationError(f"{name} has negative eigenvalue {lam_min:.3e}")
    return r


def unitarity_residual(u: np.ndarray) -> float:
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[1]))))


def check_unitary(u, name: str = "unitary") -> np.ndarray:
    a = as_square(u, name)
    res = unitarity_residual(a)
    if res > TOL_UNITARY:
        raise ValidationError(f"{name} is not unitary (residual {res:.3e})")
    return a


def ket(index: int, dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def proj(psi) -> np.ndarray:
    """Rank-one operator ``|psi><psi|``."""
    v = np.asarray(psi, dtype=complex).reshape(-1)
    return np.outer(v, v.conj())


def maximally_mixed(dim: int) -> np.ndarray:
    return np.eye(dim, dtype=complex) / dim


def tensor(*ops) -> np.ndarray:
    """Kronecker product of one or more matrices (left factor most significant)."""
    if not ops:
        raise DimensionError("tensor needs at least one operand")
    out = np.asarray(ops[0], dtype=complex)
    for b in ops[1:]:
        b = np.asarray(b, dtype=complex)
        check_dim(out.shape[0] * b.shape[0], "tensor product")
        check_dim(out.shape[-1] * b.shape[-1], "tensor product")
        out = np.kron(out, b)
    return out


def _check_dims(m: np.ndarray, dims: Sequence[int]) -> None:
    if int(np.prod(dims)) != m.shape[0]:
        raise DimensionError(f"factor dims {tuple(dims)} do not multiply to {m.shape[0]}")


def partial_trace(m, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Trace out every factor of ``m`` whose index is not in ``keep``.

    ``dims`` lists the factor dimensions in tensor order.  Kept factors stay
    in their original relative order.  Keeping nothing returns a 1x1 matrix
    holding the full trace.
    """
    m = as_square(m)
    dims = [int(d) for d in dims]
    _check_dims(m, dims)
    keep = sorted(set(int(k) for k in keep))
    n = len(dims)
    if any(k < 0 or k >= n for k in keep):
        raise DimensionError(f"keep indices {keep} out of range for {n} factors")
    t = m.reshape(dims + dims)
    drop = [i for i in range(n) if i not in keep]
    # trace the highest axes first so the remaining indices stay valid
    for count, i in enumerate(sorted(drop, reverse=True)):
        cur = n - count
        t = np.trace(t, axis1=i, axis2=i + cur)
    d_keep = int(np.prod([dims[k] for k in keep])) if keep else 1
    return t.reshape(d_keep, d_keep)


def permute_subsystems(m, dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors so that new factor ``i`` is old factor ``perm[i]``.

    Works on square operators and on vectors.
    """
    a = np.asarray(m, dtype=complex)
    dims = [int(d) for d in dims]
    perm = list(perm)
    if sorted(perm) != list(range(len(dims))):
        raise DimensionError(f"{perm} is not a permutation of {len(dims)} factors")
    if a.ndim == 1:
        if a.size != int(np.prod(dims)):
            raise DimensionError("vector length does not match factor dims")
        return a.reshape(dims).transpose(perm).reshape(-1)
    _check_dims(a, dims)
    n = len(dims)
    axes = perm + [n + p for p in perm]
    d = a.shape[0]
    return a.reshape(dims + dims).transpose(axes).reshape(d, d)


def eig_hermitian(m) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues in descending order with matching eigenvector columns."""
    a = as_square(m)
    herm = hermiticity_residual(a)
    if herm > TOL_HERM * max(1.0, float(np.max(np.abs(a)))):
        raise ValidationError(f"matrix is not Hermitian (residual {herm:.3e})")
    w, v = np.linalg.eigh((a + a.conj().T) / 2)
    return w[::-1].copy(), v[:, ::-1].copy()


def singular_values(m) -> np.ndarray:
    a = as_matrix(m)
    if a.shape[0] == a.shape[1] and hermiticity_residual(a) <= TOL_HERM * max(1.0, float(np.max(np.abs(a)))):
        return np.sort(np.abs(np.linalg.eigvalsh((a + a.conj().T) / 2)))[::-1]
    return np.linalg.svd(a, compute_uv=False)


def trace_norm(m) -> float:
    return float(np.sum(singular_values(m)))


def schatten_p_norm(m, p: float) -> float:
    """Schatten p-norm; ``p=np.inf`` gives the operator norm."""
    if not (p >= 1):
        raise ParameterError(f"Schatten p-norm needs p >= 1, got {p}")
    s = singular_values(m)
    if np.isinf(p):
        return float(s[0])
    if p == 1:
        return float(np.sum(s))
    smax = s[0]
    if smax == 0:
        return 0.0
    # scale to avoid overflow for large p
    return float(smax * np.sum((s / smax) ** p) ** (1.0 / p))


def psd_eigenvalues(rho) -> np.ndarray:
    """Eigenvalues of a (nearly) PSD matrix with roundoff negatives clipped to 0."""
    r = np.asarray(rho, dtype=complex)
    w = np.linalg.eigvalsh((r + r.conj().T) / 2)
    return np.clip(w, 0.0, None)


# -- JSON encoding: complex scalars are [re, im] pairs, matrices row-major ----

def encode_complex(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


def encode_matrix(m) -> list:
    a = np.asarray(m, dtype=complex)
    if a.ndim == 1:
        return [encode_complex(z) for z in a]
    return [[encode_complex(z) for z in row] for row in a]


def decode_matrix(data, name: str = "matrix") -> np.ndarray:
    """Inverse of :func:`encode_matrix` for 2-D operators."""
    arr = _decode_pairs(data, name)
    if arr.ndim != 2:
        raise StructuralError(f"{name}: expected a matrix of [re, im] pairs, got shape {arr.shape}")
    return arr


def decode_vector(data, name: str = "vector") -> np.ndarray:
    arr = _decode_pairs(data, name)
    if arr.ndim != 1:
        raise StructuralError(f"{name}: expected a vector of [re, im] pairs, got shape {arr.shape}")
    return arr


def _decode_pairs(data, name: str) -> np.ndarray:
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise StructuralError(f"{name}: cannot parse entries ({exc})") from None
    if arr.ndim < 2 or arr.shape[-1] != 2:
        raise StructuralError(f"{name}: complex entries must be [re, im] pairs")
    out = arr[..., 0] + 1j * arr[..., 1]
    if not np.all(np.isfinite(out)):
        raise StructuralError(f"{name}: non-finite entries")
    return out
