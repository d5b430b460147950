"""End-to-end verification suite: every bound checked on fixture channels.

A manifest is a list of named checks with parameters.  Each check returns a
:class:`CheckResult` whose measurements carry the measured value, the bound
it is compared against and a method tag (``exact``, ``certified-lower`` or
``consensus``).
"""
from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import metrics
from .approximation import (
    build_approximation,
    mixing_entropy_bound,
    perp_mixing_distance,
    post_mixing_state,
    simulate_original,
)
from .channels import action_residual, apply_with_reference, choi_to_kraus
from .circuits import (
    Circuit,
    cnot_gate,
    compile_approximation,
    dephasing_circuit,
    embedding_circuit,
    first_set_ancilla,
    h_gate,
    identity_circuit,
    lemma9_closed_form,
    lemma9_distance,
    mixer_output,
    unitary_circuit,
)
from .diamond import verify_theorem10
from .numerics import StructuralError, maximally_mixed, partial_trace, trace_norm
from .sampling import (
    random_channel,
    random_density,
    random_ru_channel,
    random_state_on,
)
from .standard import (
    HADAMARD,
    PAULI_X,
    dephasing_dilation,
    depolarizing_kraus,
    embedding_dilation,
    unitary_channel,
)


class ManifestError(StructuralError):
    pass


@dataclass
class Measurement:
    quantity: str
    value: float
    bound: float | None
    relation: str  # "<=", ">=", "==" or "info"
    method: str
    ok: bool = True

    def to_dict(self) -> dict:
        return {"quantity": self.quantity, "value": _num(self.value), "bound": _num(self.bound),
                "relation": self.relation, "method": self.method, "ok": self.ok}


def _num(x):
    if x is None:
        return None
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


@dataclass
class CheckResult:
    name: str
    params: dict
    measurements: list[Measurement] = field(default_factory=list)
    runtime: float = 0.0
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(m.ok for m in self.measurements)

    def add(self, quantity, value, bound, relation, method, tol=0.0) -> Measurement:
        if relation == "<=":
            ok = value <= bound + tol
        elif relation == ">=":
            ok = value >= bound - tol
        elif relation == "==":
            ok = abs(value - bound) <= tol
        else:
            ok = True
        m = Measurement(quantity, float(value), None if bound is None else float(bound), relation, method, bool(ok))
        self.measurements.append(m)
        return m

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "params": self.params,
                "measurements": [m.to_dict() for m in self.measurements], "notes": list(self.notes)}


FIXTURES = {
    "unitary": lambda: unitary_channel(HADAMARD),
    "dephasing": dephasing_dilation,
    "depolarizing": lambda: depolarizing_kraus(2),
}


def _p_value(p):
    return np.inf if p in ("inf", float("inf")) else float(p)


# -- individual checks ----------------------------------------------------------------

def check_prop1(dims_A=(2, 4, 8), n_channels=20, dim_H=2, seed=0, tol=1e-10) -> CheckResult:
    r = CheckResult("prop1", {"dims_A": list(dims_A), "n_channels": n_channels, "dim_H": dim_H, "seed": seed})
    for da in dims_A:
        worst = 0.0
        for i in range(n_channels):
            phi = random_channel(dim_H, dim_H, rank=2, seed=[seed, da, i])
            ac = build_approximation(phi, da)
            sigma = random_density(dim_H, seed=[seed, da, i, 1])
            target = np.kron(phi.apply(sigma), maximally_mixed(ac.dim_B))
            worst = max(worst, trace_norm(simulate_original(ac, sigma) - target))
        r.add(f"max residual dim_A={da}", worst, tol, "<=", "exact")
    return r


def check_lemma3(dims=(2, 4, 8), samples=10, dim_H=2, seed=0, tol=1e-9) -> CheckResult:
    r = CheckResult("lemma3", {"dims": list(dims), "samples": samples, "dim_H": dim_H, "seed": seed})
    for d in dims:
        phi = random_channel(dim_H, dim_H, rank=2, seed=[seed, d])
        ac = build_approximation(phi, d)
        perp = ac.split.projector_perp()
        worst = max(perp_mixing_distance(ac, random_state_on(perp, [seed, d, i])) for i in range(samples))
        r.add(f"max distance d={d}", worst, 2 / d, "<=", "exact", tol)
        tight = build_approximation(embedding_dilation(d, dim_H), d)
        val = perp_mixing_distance(tight, post_mixing_state(d, dim_H))
        r.add(f"tightness d={d}", val, 2 / d, "==", "exact", tol)
    return r


def check_corollary4(dim_A=8, dim_H=2, samples=10, seed=0, tol=1e-8) -> CheckResult:
    r = CheckResult("corollary4", {"dim_A": dim_A, "dim_H": dim_H, "samples": samples, "seed": seed})
    m = math.log2(dim_A)
    if m < 3 or dim_A < dim_H:
        r.notes.append("outside bound regime")
    bound = math.log2(dim_A * dim_H) - mixing_entropy_bound(m)
    phi = random_channel(dim_H, dim_H, rank=2, seed=seed)
    ac = build_approximation(phi, dim_A)
    perp = ac.split.projector_perp()
    worst = min(metrics.entropy(ac.apply(random_state_on(perp, [seed, i]))) for i in range(samples))
    r.add("min output entropy on S0-perp", worst, bound, ">=", "exact", tol)
    return r


def check_theorem5(fixtures=("unitary", "dephasing", "depolarizing"), dims_A=(4, 8), ps=(1, 2, "inf"),
                   restarts=32, seed=0, max_spread=1e-4) -> CheckResult:
    r = CheckResult("theorem5", {"fixtures": list(fixtures), "dims_A": list(dims_A), "ps": list(ps),
                                 "restarts": restarts, "seed": seed})
    for name in fixtures:
        phi = FIXTURES[name]()
        for da in dims_A:
            ac = build_approximation(phi, da)
            for p in ps:
                rep = metrics.verify_theorem5(phi, ac, _p_value(p), restarts, seed)
                tag = f"{name} dim_A={da} p={p}"
                r.add(f"{tag} nu_p(Phi) <= middle", rep.lower, rep.middle, "<=", "consensus", rep.slack)
                r.add(f"{tag} middle <= nu_p(Phi) + 2 d_B/d_A", rep.middle, rep.upper, "<=", "consensus", rep.slack)
                r.add(f"{tag} spread", max(rep.spreads.values()), max_spread, "<=", "consensus")
    return r


def check_theorem7(fixtures=("unitary", "dephasing", "depolarizing"), dim_A=8, restarts=32, seed=0) -> CheckResult:
    r = CheckResult("theorem7", {"fixtures": list(fixtures), "dim_A": dim_A, "restarts": restarts, "seed": seed})
    for name in fixtures:
        phi = FIXTURES[name]()
        ac = build_approximation(phi, dim_A)
        rep = metrics.verify_theorem7(phi, ac, restarts, seed)
        r.add(f"{name} S_min(Phi') - log d_B <= S_min(Phi)", rep.middle, rep.upper, "<=", "consensus", rep.slack)
        r.add(f"{name} S_min(Phi') - log d_B >= S_min(Phi) - 8 m/d_A", rep.middle, rep.lower, ">=",
              "consensus", rep.slack)
        if not rep.in_regime:
            r.notes.append(f"{name}: outside bound regime")
    return r


def check_lemma9(ms=(2, 3), n=1, refs=(1, 2), seed=0, tol=1e-9, tol_closed=1e-10) -> CheckResult:
    r = CheckResult("lemma9", {"ms": list(ms), "n": n, "refs": list(refs), "seed": seed})
    for m in ms:
        # a nontrivial unitary so the bound is checked away from the equality case
        c, _ = compile_approximation(_scrambled_embedding(m, n))
        tight, _ = compile_approximation(embedding_circuit(m, n))
        for nref in refs:
            worst, worst_closed, worst_tight = 0.0, 0.0, 0.0
            for k in range(1, 2**m):
                rho = random_density(2 ** (n + nref), seed=[seed, m, nref, k])
                worst = max(worst, lemma9_distance(c, k, rho))
                rho_f = partial_trace(rho, [2**n, 2**nref], keep=[1])
                j = first_set_ancilla(k, m)
                st = mixer_output(c, k, rho, through_stage=j)
                worst_closed = max(worst_closed, float(np.max(np.abs(st - lemma9_closed_form(m, n, j, rho_f)))))
                worst_tight = max(worst_tight, abs(lemma9_distance(tight, k, rho) - 1 / 2 ** (m - 1)))
            r.add(f"max distance m={m} ref={nref}", worst, 1 / 2 ** (m - 1), "<=", "exact", tol)
            r.add(f"closed form residual m={m} ref={nref}", worst_closed, tol_closed, "<=", "exact")
            r.add(f"equality gap (identity U) m={m} ref={nref}", worst_tight, tol, "<=", "exact")
    return r


def _scrambled_embedding(m: int, n: int) -> Circuit:
    gates = (h_gate(m), cnot_gate(m, 0), h_gate(0))
    return Circuit(m + n, tuple(range(m)), tuple(range(m - 1)), gates)


def check_theorem10(m=4, restarts=16, seed=0, q_restarts=64) -> CheckResult:
    r = CheckResult("theorem10", {"m": m, "restarts": restarts, "seed": seed, "q_restarts": q_restarts})
    cases = {
        "identity vs X": (identity_circuit(), unitary_circuit(PAULI_X)),
        "identity vs dephasing": (identity_circuit(), dephasing_circuit()),
        "identity vs identity": (identity_circuit(), identity_circuit()),
    }
    for label, (q1, q2) in cases.items():
        rep = verify_theorem10(q1, q2, m, restarts, seed, q_restarts)
        dq, dc = rep.q_distance.value, rep.c_distance.value
        r.add(f"{label}: Q distance", dq, None, "info", rep.q_distance.method)
        r.add(f"{label}: certified C lower bound >= Q distance", rep.c_certified_lower, dq, ">=",
              "certified-lower", 1e-6)
        r.add(f"{label}: C estimate <= Q distance + eps", dc, dq + rep.epsilon, "<=", "consensus", rep.slack)
    return r


def check_properties(n_channels=100, n_pairs=100, seed=0, tol=1e-9) -> CheckResult:
    r = CheckResult("properties", {"n_channels": n_channels, "n_pairs": n_pairs, "seed": seed})
    worst_rt, worst_unital = 0.0, 0.0
    for i in range(n_channels):
        din, dout = 2 + i % 3, 2 + (i // 3) % 3
        phi = random_channel(din, dout, rank=max(1 + i % 4, -(-din // dout)), seed=[seed, i])
        worst_rt = max(worst_rt, action_residual(phi, choi_to_kraus(phi.choi())))
        ru = random_ru_channel(2 + i % 4, 1 + i % 5, seed=[seed, i, 1])
        d = ru.dim
        worst_unital = max(worst_unital, float(np.max(np.abs(ru.apply(np.eye(d) / d) - np.eye(d) / d))))
    r.add("CPTP round-trip residual", worst_rt, tol, "<=", "exact")
    r.add("random-unitary unitality residual", worst_unital, 1e-10, "<=", "exact")
    contraction = entropy_drop = 0
    for i in range(n_pairs):
        da, db = 2 + i % 3, 2 + (i // 3) % 2
        psi = random_ru_channel(da, 1 + i % 4, seed=[seed, i, 2])
        rho = random_density(da * db, rank=1 + i % (da * db), seed=[seed, i, 3])
        ref = np.kron(maximally_mixed(da), partial_trace(rho, [da, db], keep=[1]))
        before = trace_norm(rho - ref)
        after = trace_norm(apply_with_reference(psi, rho, db) - ref)
        contraction += after > before + 1e-8
        sigma = random_density(da, rank=1 + i % da, seed=[seed, i, 4])
        entropy_drop += metrics.entropy(psi.apply(sigma)) < metrics.entropy(sigma) - 1e-8
    r.add("contraction violations", contraction, 0, "<=", "exact")
    r.add("entropy monotonicity violations", entropy_drop, 0, "<=", "exact")
    phi = random_channel(2, 2, rank=2, seed=seed)
    a = metrics.min_output_entropy(phi, 8, seed).to_dict()
    b = metrics.min_output_entropy(phi, 8, seed).to_dict()
    same = json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)
    r.add("optimizer determinism (identical JSON)", float(same), 1.0, "==", "exact")
    return r


CHECKS = {
    "prop1": check_prop1,
    "lemma3": check_lemma3,
    "corollary4": check_corollary4,
    "theorem5": check_theorem5,
    "theorem7": check_theorem7,
    "lemma9": check_lemma9,
    "theorem10": check_theorem10,
    "properties": check_properties,
}


@dataclass
class VerifyManifest:
    checks: list[tuple[str, dict]] = field(default_factory=list)

    def __post_init__(self):
        for name, params in self.checks:
            if name not in CHECKS:
                raise ManifestError(f"unknown check {name!r}; known: {sorted(CHECKS)}")
            if not isinstance(params, dict):
                raise ManifestError(f"check {name!r}: params must be an object")

    @classmethod
    def default(cls) -> "VerifyManifest":
        return cls([(name, {}) for name in CHECKS])

    @classmethod
    def from_dict(cls, d) -> "VerifyManifest":
        if not isinstance(d, dict) or not isinstance(d.get("checks"), list):
            raise ManifestError("manifest must be an object with a 'checks' list")
        out = []
        for i, c in enumerate(d["checks"]):
            if isinstance(c, str):
                out.append((c, {}))
            elif isinstance(c, dict) and "name" in c:
                out.append((c["name"], dict(c.get("params", {}))))
            else:
                raise ManifestError(f"checks[{i}] must be a name or an object with 'name'")
        return cls(out)


@dataclass
class SuiteReport:
    results: list[CheckResult]
    runtimes: dict[str, float]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "checks": [r.to_dict() for r in self.results]}


def run_verify(manifest: VerifyManifest) -> SuiteReport:
    results, runtimes = [], {}
    for name, params in manifest.checks:
        t0 = time.perf_counter()
        try:
            res = CHECKS[name](**params)
        except TypeError as exc:
            raise ManifestError(f"check {name!r}: bad parameters ({exc})") from None
        res.runtime = time.perf_counter() - t0
        runtimes[name] = res.runtime
        results.append(res)
    return SuiteReport(results, runtimes)

