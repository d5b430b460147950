"""Slow, independent reference implementations used to cross-check the library."""
import itertools

import numpy as np


def partial_trace_loops(m, dims, keep):
    """Explicit index sum over the traced factors."""
    n = len(dims)
    keep = sorted(keep)
    traced = [i for i in range(n) if i not in keep]
    kd = [dims[i] for i in keep]
    out = np.zeros((int(np.prod(kd)), int(np.prod(kd))), dtype=complex)
    strides = [int(np.prod(dims[i + 1:])) for i in range(n)]

    def flat(idx):
        return sum(i * s for i, s in zip(idx, strides))

    for ko in itertools.product(*[range(d) for d in kd]):
        for kp in itertools.product(*[range(d) for d in kd]):
            total = 0j
            for t in itertools.product(*[range(dims[i]) for i in traced]):
                a = [0] * n
                b = [0] * n
                for pos, i in enumerate(keep):
                    a[i], b[i] = ko[pos], kp[pos]
                for pos, i in enumerate(traced):
                    a[i] = b[i] = t[pos]
                total += m[flat(a), flat(b)]
            r = int(np.ravel_multi_index(ko, kd)) if kd else 0
            c = int(np.ravel_multi_index(kp, kd)) if kd else 0
            out[r, c] = total
    return out


def choi_from_action(apply, din):
    """J = sum_ij |i><j| (x) Phi(|i><j|) by brute force over matrix units."""
    blocks = None
    for i in range(din):
        for j in range(din):
            e = np.zeros((din, din), dtype=complex)
            e[i, j] = 1
            out = apply(e)
            if blocks is None:
                dout = out.shape[0]
                blocks = np.zeros((din * dout, din * dout), dtype=complex)
            blocks[i * dout:(i + 1) * dout, j * dout:(j + 1) * dout] = out
    return blocks


def trace_norm_eig(h):
    """Trace norm of a Hermitian matrix from its eigenvalues."""
    return float(np.sum(np.abs(np.linalg.eigvalsh((h + h.conj().T) / 2))))


def entropy_eig(rho):
    w = np.linalg.eigvalsh(rho)
    w = w[w > 1e-15]
    return float(-np.sum(w * np.log2(w)))


def kraus_apply(ops, rho):
    return sum(k @ rho @ k.conj().T for k in ops)


def diamond_random_inputs(apply1, apply2, n=400, seed=0):
    """Lower bound for qubit channels from random pure inputs on H (x) F, F a qubit."""
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(n):
        v = rng.normal(size=4) + 1j * rng.normal(size=4)
        v /= np.linalg.norm(v)
        rho = np.outer(v, v.conj())
        best = max(best, trace_norm_eig(with_ref(apply1, rho) - with_ref(apply2, rho)))
    return best


def with_ref(apply, rho, d=2, f=2):
    """(Phi (x) id_F)(rho) for rho on H (x) F, by linearity over matrix units of H."""
    r4 = rho.reshape(d, f, d, f)
    out = None
    for i in range(d):
        for j in range(d):
            e = np.zeros((d, d), dtype=complex)
            e[i, j] = 1
            term = np.kron(apply(e), r4[i, :, j, :])
            out = term if out is None else out + term
    return out


def full_gate_matrix(u, targets, n):
    """Embed a gate on ``targets`` into ``n`` qubits by explicit bit manipulation (qubit 0 = MSB)."""
    k = len(targets)
    dim = 2**n
    out = np.zeros((dim, dim), dtype=complex)
    for col in range(dim):
        bits = [(col >> (n - 1 - q)) & 1 for q in range(n)]
        sub_in = 0
        for t in targets:
            sub_in = 2 * sub_in + bits[t]
        for sub_out in range(2**k):
            amp = u[sub_out, sub_in]
            if amp == 0:
                continue
            nb = list(bits)
            for pos, t in enumerate(targets):
                nb[t] = (sub_out >> (k - 1 - pos)) & 1
            row = 0
            for b in nb:
                row = 2 * row + b
            out[row, col] += amp
    return out


def run_circuit_dense(gates, rho, n):
    """Reference simulator: dense 2^n x 2^n conjugations."""
    for g in gates:
        full = full_gate_matrix(g.matrix, g.targets, n)
        moved = full @ rho @ full.conj().T
        rho = moved if g.kind == "u" else 0.5 * (rho + moved)
    return rho
