"""Qubit circuits built from unitary gates and probability-1/2 random-unitary gates.

Two circuit models are supported:

* ``"mixed"``: ancilla qubits start in ``|0>``, gates act, traced qubits are
  discarded.  The input is the non-ancilla qubits in ascending order.
* ``"random_unitary"``: every qubit is an input and nothing is traced.  This
  is what :func:`compile_approximation` produces; ``traced`` then only records
  which qubits carry the noise factor B.

Qubit 0 is the most significant tensor factor.  A reference system ``F`` is
appended after the circuit qubits and never touched by gates.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channels import ChoiMatrix, choi_to_kraus
from .numerics import (
    MAX_DIM,
    TOL_UNITARY,
    CapacityError,
    DimensionError,
    ParameterError,
    StructuralError,
    as_square,
    decode_matrix,
    encode_matrix,
    maximally_mixed,
    partial_trace,
    permute_subsystems,
    trace_norm,
    unitarity_residual,
)
from .standard import CNOT, CZ, HADAMARD, PAULI_X, PAULI_Z

GATE_KINDS = ("u", "ru")
MODELS = ("mixed", "random_unitary")


def controlled(u: np.ndarray) -> np.ndarray:
    """``|0><0| (x) I + |1><1| (x) u`` with the control as the first qubit."""
    u = np.asarray(u, dtype=complex)
    d = u.shape[0]
    out = np.eye(2 * d, dtype=complex)
    out[d:, d:] = u
    return out


@dataclass(frozen=True)
class Gate:
    kind: str
    targets: tuple[int, ...]
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise StructuralError(f"gate kind must be one of {GATE_KINDS}, got {self.kind!r}")
        t = tuple(int(x) for x in self.targets)
        if len(t) not in (1, 2) or len(set(t)) != len(t) or min(t) < 0:
            raise StructuralError(f"gate targets must be 1 or 2 distinct qubits, got {t}")
        u = as_square(self.matrix, "gate matrix")
        if u.shape[0] != 2 ** len(t):
            raise StructuralError(f"gate on {len(t)} qubit(s) needs a {2 ** len(t)}x{2 ** len(t)} matrix")
        if unitarity_residual(u) > TOL_UNITARY:
            raise StructuralError("gate matrix is not unitary")
        u = u.copy()
        u.setflags(write=False)
        object.__setattr__(self, "targets", t)
        object.__setattr__(self, "matrix", u)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "targets": list(self.targets), "matrix": encode_matrix(self.matrix)}

    @classmethod
    def from_dict(cls, d: dict) -> "Gate":
        for key in ("kind", "targets", "matrix"):
            if key not in d:
                raise StructuralError(f"gate: missing field '{key}'")
        return cls(d["kind"], tuple(d["targets"]), decode_matrix(d["matrix"], "gate matrix"))


def u_gate(targets, matrix) -> Gate:
    return Gate("u", tuple(targets), matrix)


def ru_gate(targets, matrix) -> Gate:
    return Gate("ru", tuple(targets), matrix)


def x_gate(q: int) -> Gate:
    return u_gate((q,), PAULI_X)


def z_gate(q: int) -> Gate:
    return u_gate((q,), PAULI_Z)


def h_gate(q: int) -> Gate:
    return u_gate((q,), HADAMARD)


def cnot_gate(control: int, target: int) -> Gate:
    return u_gate((control, target), CNOT)


def cz_gate(a: int, b: int) -> Gate:
    return u_gate((a, b), CZ)


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    ancilla: tuple[int, ...] = ()
    traced: tuple[int, ...] = ()
    gates: tuple[Gate, ...] = ()
    model: str = "mixed"

    def __post_init__(self):
        if self.n_qubits < 1:
            raise StructuralError(f"n_qubits must be positive, got {self.n_qubits}")
        if self.model not in MODELS:
            raise StructuralError(f"model must be one of {MODELS}, got {self.model!r}")
        anc = tuple(sorted(int(q) for q in self.ancilla))
        tr = tuple(sorted(int(q) for q in self.traced))
        for name, qs in (("ancilla", anc), ("traced", tr)):
            if len(set(qs)) != len(qs) or any(q < 0 or q >= self.n_qubits for q in qs):
                raise StructuralError(f"{name} qubits {qs} out of range or repeated")
        gates = tuple(self.gates)
        for i, g in enumerate(gates):
            if max(g.targets) >= self.n_qubits:
                raise StructuralError(f"gates[{i}] targets {g.targets} out of range")
        if self.model == "mixed" and len(tr) == self.n_qubits:
            raise StructuralError("a mixed circuit must keep at least one output qubit")
        if self.model == "mixed" and len(anc) == self.n_qubits:
            raise StructuralError("a mixed circuit needs at least one input qubit")
        object.__setattr__(self, "ancilla", anc)
        object.__setattr__(self, "traced", tr)
        object.__setattr__(self, "gates", gates)

    @property
    def input_qubits(self) -> tuple[int, ...]:
        if self.model == "random_unitary":
            return tuple(range(self.n_qubits))
        return tuple(q for q in range(self.n_qubits) if q not in self.ancilla)

    @property
    def output_qubits(self) -> tuple[int, ...]:
        if self.model == "random_unitary":
            return tuple(range(self.n_qubits))
        return tuple(q for q in range(self.n_qubits) if q not in self.traced)

    @property
    def data_qubits(self) -> tuple[int, ...]:
        """Qubits outside the ancilla set (the space H)."""
        return tuple(q for q in range(self.n_qubits) if q not in self.ancilla)

    @property
    def dim_in(self) -> int:
        return 2 ** len(self.input_qubits)

    @property
    def dim_out(self) -> int:
        return 2 ** len(self.output_qubits)

    def apply(self, rho) -> np.ndarray:
        return simulate(self, rho)

    def choi(self) -> ChoiMatrix:
        return circuit_to_choi(self)

    def to_dict(self) -> dict:
        return {
            "n_qubits": self.n_qubits,
            "ancilla": list(self.ancilla),
            "traced": list(self.traced),
            "model": self.model,
            "gates": [g.to_dict() for g in self.gates],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Circuit":
        if not isinstance(d, dict):
            raise StructuralError("circuit JSON must be an object")
        for key in ("n_qubits", "gates"):
            if key not in d:
                raise StructuralError(f"circuit: missing field '{key}'")
        if not isinstance(d["gates"], list):
            raise StructuralError("circuit: field 'gates' must be a list")
        gates = []
        for i, g in enumerate(d["gates"]):
            try:
                gates.append(Gate.from_dict(g))
            except StructuralError as exc:
                raise StructuralError(f"gates[{i}]: {exc}") from None
        return cls(int(d["n_qubits"]), tuple(d.get("ancilla", ())), tuple(d.get("traced", ())),
                   tuple(gates), d.get("model", "mixed"))


# -- simulation -----------------------------------------------------------------

def _apply_unitary(t: np.ndarray, u: np.ndarray, targets, n: int) -> np.ndarray:
    """Conjugate the density tensor ``t`` of ``n`` qubits by ``u`` on ``targets``."""
    k = len(targets)
    ut = u.reshape((2,) * (2 * k))
    axes_in = list(range(k, 2 * k))
    t = np.tensordot(ut, t, axes=(axes_in, list(targets)))
    t = np.moveaxis(t, list(range(k)), list(targets))
    bra = [n + q for q in targets]
    t = np.tensordot(ut.conj(), t, axes=(axes_in, bra))
    return np.moveaxis(t, list(range(k)), bra)


def apply_gate(t: np.ndarray, g: Gate, n: int) -> np.ndarray:
    moved = _apply_unitary(t, g.matrix, g.targets, n)
    if g.kind == "u":
        return moved
    return 0.5 * (t + moved)


def run_gates(gates, rho: np.ndarray, n: int) -> np.ndarray:
    """Apply a gate list to a ``2**n`` density matrix (all qubits are gate-addressable)."""
    d = 2**n
    t = np.asarray(rho, dtype=complex).reshape((2,) * (2 * n))
    for g in gates:
        t = apply_gate(t, g, n)
    return t.reshape(d, d)


def _check_total(n_total: int) -> None:
    if 2**n_total > MAX_DIM:
        raise CapacityError(f"{n_total} qubits exceed max_dim={MAX_DIM}")


def simulate(c: Circuit, rho_in, n_ref: int | None = None) -> np.ndarray:
    """Run ``c (x) id_F`` on ``rho_in`` (circuit inputs first, then the reference).

    Ancillas of mixed circuits are prepared in ``|0>`` and traced qubits are
    removed at the end; the output lists the kept circuit qubits in
    ascending order followed by the reference.
    """
    rho = as_square(rho_in, "rho")
    n_in = len(c.input_qubits)
    if n_ref is None:
        ratio = rho.shape[0] // 2**n_in
        if ratio * 2**n_in != rho.shape[0] or ratio & (ratio - 1):
            raise DimensionError(f"input dimension {rho.shape[0]} is not 2^{n_in} times a power of 2")
        n_ref = ratio.bit_length() - 1
    if rho.shape[0] != 2 ** (n_in + n_ref):
        raise DimensionError(f"expected input dimension {2 ** (n_in + n_ref)}, got {rho.shape[0]}")
    n_tot = c.n_qubits + n_ref
    _check_total(n_tot)
    inputs = list(c.input_qubits)
    extra = [q for q in range(c.n_qubits) if q not in inputs]  # ancillas of a mixed circuit
    full = rho
    if extra:
        zero = np.zeros((2 ** len(extra),) * 2, dtype=complex)
        zero[0, 0] = 1.0
        full = np.kron(rho, zero)
    # current factor order: inputs, reference, ancillas -> qubits 0..n-1, reference
    order = inputs + [c.n_qubits + r for r in range(n_ref)] + extra
    perm = [order.index(q) for q in range(n_tot)]
    full = permute_subsystems(full, [2] * n_tot, perm)
    out = run_gates(c.gates, full, n_tot)
    if c.model == "mixed" and c.traced:
        keep = [q for q in range(n_tot) if q not in c.traced]
        out = partial_trace(out, [2] * n_tot, keep)
    return out


def circuit_to_choi(c: Circuit) -> ChoiMatrix:
    """Choi matrix from one simulation on the unnormalized maximally entangled input."""
    n_in = len(c.input_qubits)
    din = 2**n_in
    _check_total(c.n_qubits + n_in)
    phi = np.eye(din, dtype=complex).reshape(-1)
    out = simulate(c, np.outer(phi, phi), n_ref=n_in)  # factors: output, reference
    dout = c.dim_out
    j = permute_subsystems(out, [dout, din], [1, 0])
    return ChoiMatrix(din, dout, j)


def circuit_to_kraus(c: Circuit):
    return choi_to_kraus(circuit_to_choi(c))


# -- random-unitary building blocks ----------------------------------------------

def dephase_gates(qubits) -> list[Gate]:
    """Independent probability-1/2 Z on each qubit: full dephasing in the computational basis."""
    return [ru_gate((q,), PAULI_Z) for q in qubits]


def noise_gates(qubits) -> list[Gate]:
    """Probability-1/2 Z then probability-1/2 X on each qubit: its marginal becomes I/2."""
    gates = []
    for q in qubits:
        gates += [ru_gate((q,), PAULI_Z), ru_gate((q,), PAULI_X)]
    return gates


def controlled_noise(control: int, target: int) -> list[Gate]:
    return [ru_gate((control, target), controlled(PAULI_Z)),
            ru_gate((control, target), controlled(PAULI_X))]


def mixer_stage(j: int, a_qubits, h_qubits) -> list[Gate]:
    """Stage ``j``: if ancilla ``a_j`` is set, mix everything else, then mix ``a_j``
    unless all other ancillas are zero."""
    a_qubits, h_qubits = list(a_qubits), list(h_qubits)
    aj = a_qubits[j]
    others_a = [q for q in a_qubits if q != aj]
    gates = []
    for q in sorted(others_a) + sorted(h_qubits):
        gates += controlled_noise(aj, q)
    for q in sorted(others_a):
        gates += controlled_noise(q, aj)
    return gates


def conditional_mixer(m: int, n: int, a_qubits=None, h_qubits=None) -> list[Gate]:
    """The ``m``-stage controlled-noise circuit mixing everything unless the ancillas are all zero."""
    if m < 1 or n < 0:
        raise ParameterError(f"need m >= 1 and n >= 0, got m={m}, n={n}")
    a = list(range(m)) if a_qubits is None else list(a_qubits)
    h = list(range(m, m + n)) if h_qubits is None else list(h_qubits)
    if len(a) != m or len(h) != n:
        raise ParameterError("qubit lists do not match m and n")
    gates = []
    for j in range(m):
        gates += mixer_stage(j, a, h)
    return gates


def mixer_gate_count(m: int, n: int) -> int:
    return m * (4 * m + 2 * n - 4)


# -- compilation ------------------------------------------------------------------

@dataclass
class CompileReport:
    m: int
    n: int
    gate_counts: dict[str, int]
    total_gates: int
    random_unitary_gates: int
    formula: dict[str, int]

    @property
    def formula_ok(self) -> bool:
        return self.gate_counts == self.formula

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "n": self.n,
            "gate_counts": dict(self.gate_counts),
            "total_gates": self.total_gates,
            "random_unitary_gates": self.random_unitary_gates,
            "formula": dict(self.formula),
            "formula_ok": self.formula_ok,
        }


def expected_gate_counts(m: int, n: int, n_unitary: int, n_traced: int) -> dict[str, int]:
    return {"D_A": m, "M": mixer_gate_count(m, n), "U": n_unitary, "N_B": 2 * n_traced}


def compile_approximation(q: Circuit) -> tuple[Circuit, CompileReport]:
    """Random-unitary circuit ``N_B(U[(M o D_A)(rho)]U^*)`` approximating the mixed circuit ``q``."""
    if q.model != "mixed":
        raise StructuralError("compile_approximation expects a mixed-state circuit")
    for i, g in enumerate(q.gates):
        if g.kind != "u":
            raise StructuralError(f"gates[{i}] is not unitary; canonicalize the circuit first")
    a = list(q.ancilla)
    if not a:
        raise StructuralError("circuit has no ancilla qubits; pad it first")
    h = list(q.data_qubits)
    m, n = len(a), len(h)
    stages = {
        "D_A": dephase_gates(a),
        "M": conditional_mixer(m, n, a, h),
        "U": list(q.gates),
        "N_B": noise_gates(q.traced),
    }
    gates = [g for part in stages.values() for g in part]
    c = Circuit(q.n_qubits, tuple(a), tuple(q.traced), tuple(gates), model="random_unitary")
    counts = {k: len(v) for k, v in stages.items()}
    report = CompileReport(
        m=m,
        n=n,
        gate_counts=counts,
        total_gates=len(gates),
        random_unitary_gates=sum(g.kind == "ru" for g in gates),
        formula=expected_gate_counts(m, n, len(q.gates), len(q.traced)),
    )
    return c, report


def pad_ancillas(q: Circuit, m: int) -> Circuit:
    """Append unused ancilla qubits (also traced) until ``q`` has ``m`` of them."""
    extra = m - len(q.ancilla)
    if extra < 0:
        raise ParameterError(f"circuit already has {len(q.ancilla)} > {m} ancillas")
    new = tuple(range(q.n_qubits, q.n_qubits + extra))
    return Circuit(q.n_qubits + extra, q.ancilla + new, q.traced + new, q.gates, q.model)


# -- inputs in the compiled layout -------------------------------------------------

def _to_qubit_order(c: Circuit, mat: np.ndarray, n_ref: int) -> np.ndarray:
    """Reorder a matrix given as (A qubits, H qubits, reference) into circuit qubit order."""
    order = list(c.ancilla) + list(c.data_qubits) + [c.n_qubits + r for r in range(n_ref)]
    n_tot = c.n_qubits + n_ref
    return permute_subsystems(mat, [2] * n_tot, [order.index(q) for q in range(n_tot)])


def ancilla_input(c: Circuit, k: int, rho_hf, n_ref: int = 0) -> np.ndarray:
    """``|k><k|_A (x) rho`` with ``rho`` on H (x) F, laid out in circuit qubit order."""
    m = len(c.ancilla)
    ka = np.zeros((2**m, 2**m), dtype=complex)
    ka[k, k] = 1.0
    return _to_qubit_order(c, np.kron(ka, np.asarray(rho_hf, dtype=complex)), n_ref)


def lemma9_closed_form(m: int, n: int, j: int, rho_f: np.ndarray) -> np.ndarray:
    """``(I_A + |e_j><e_j| - |0><0|)/2^m (x) I_H/2^n (x) rho_F`` in (A, H, F) order,
    where ``e_j`` is the ancilla string with only bit ``j`` set."""
    da = 2**m
    a = np.eye(da, dtype=complex)
    a[0, 0] -= 1.0
    e = 1 << (m - 1 - j)
    a[e, e] += 1.0
    return np.kron(np.kron(a / da, maximally_mixed(2**n)), rho_f)


def first_set_ancilla(k: int, m: int) -> int:
    """Index (0 = most significant) of the first ancilla qubit that is 1 in ``|k>``."""
    for j in range(m):
        if (k >> (m - 1 - j)) & 1:
            return j
    raise ParameterError("k = 0 has no set ancilla qubit")


def _split_rho(c: Circuit, rho_hf) -> tuple[np.ndarray, int, int]:
    rho = as_square(rho_hf, "rho")
    n = len(c.data_qubits)
    ratio = rho.shape[0] // 2**n
    if ratio * 2**n != rho.shape[0] or ratio & (ratio - 1):
        raise DimensionError(f"rho dimension {rho.shape[0]} is not 2^{n} times a power of 2")
    return rho, n, ratio.bit_length() - 1


def mixer_output(c: Circuit, k: int, rho_hf, through_stage: int | None = None) -> np.ndarray:
    """State after ``D_A`` and the first ``through_stage + 1`` mixer stages (all stages by default),
    in (A, H, F) order."""
    rho, n, n_ref = _split_rho(c, rho_hf)
    m = len(c.ancilla)
    stages = m if through_stage is None else through_stage + 1
    gates = dephase_gates(c.ancilla)
    for j in range(stages):
        gates += mixer_stage(j, c.ancilla, c.data_qubits)
    n_tot = c.n_qubits + n_ref
    _check_total(n_tot)
    out = run_gates(gates, ancilla_input(c, k, rho, n_ref), n_tot)
    order = list(c.ancilla) + list(c.data_qubits) + [c.n_qubits + r for r in range(n_ref)]
    return permute_subsystems(out, [2] * n_tot, order)


def lemma9_distance(c: Circuit, k: int, rho_hf) -> float:
    """``||(C (x) id_F)(|k><k| (x) rho) - I_{AH}/d (x) tr_H rho||_1`` for a compiled circuit."""
    m = len(c.ancilla)
    if not 0 < k < 2**m:
        raise ParameterError(f"k must satisfy 0 < k < 2^{m}, got {k}")
    rho, n, n_ref = _split_rho(c, rho_hf)
    out = simulate(c, ancilla_input(c, k, rho, n_ref), n_ref=n_ref)
    rho_f = partial_trace(rho, [2**n, 2**n_ref], keep=[1]) if n_ref else np.ones((1, 1))
    target = np.kron(maximally_mixed(2**c.n_qubits), rho_f)
    return trace_norm(out - target)


# -- fixtures ------------------------------------------------------------------------

def identity_circuit(n: int = 1) -> Circuit:
    return Circuit(n, (), (), ())


def unitary_circuit(u, n: int = 1) -> Circuit:
    targets = tuple(range(n))
    return Circuit(n, (), (), (u_gate(targets, u),))


def dephasing_circuit() -> Circuit:
    """CNOT from the data qubit onto an ancilla, then trace the ancilla."""
    return Circuit(2, (0,), (0,), (cnot_gate(1, 0),))


def embedding_circuit(m: int, n: int = 1) -> Circuit:
    """``m`` ancillas, no gates, nothing traced: ``sigma -> |0><0| (x) sigma``."""
    return Circuit(m + n, tuple(range(m)), (), ())
