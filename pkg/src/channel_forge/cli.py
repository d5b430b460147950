"""Command-line interface.

Exit codes: 0 success / all checks pass, 1 a check failed, 2 usage or schema
error, 3 a dimension cap was hit.
"""
from __future__ import annotations

import argparse
import json
import sys
from datetime import datetime, timezone

import numpy as np

from . import metrics
from .approximation import build_approximation, dilation_for, minimal_ancilla_dim
from .channels import (
    KrausChannel,
    RandomUnitaryChannel,
    StinespringDilation,
    channel_from_dict,
    channel_to_dict,
    choi_to_kraus,
    validate_cptp,
)
from .circuits import Circuit, compile_approximation, pad_ancillas, simulate
from .diamond import RESTARTS_QUBIT, diamond_distance, verify_theorem10
from .numerics import (
    CapacityError,
    ChannelForgeError,
    ValidationError,
    check_density,
    decode_matrix,
    decode_vector,
    encode_matrix,
    proj,
    trace_norm,
)
from .standard import SubspaceSplit, dephase_split, depolarizing_channel, mix_subspace, noise_on_factor
from .verify import VerifyManifest, run_verify

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_CAP = 0, 1, 2, 3


class UsageError(Exception):
    pass


# -- I/O helpers ----------------------------------------------------------------------

def _read_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise UsageError(f"{path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON ({exc})") from None


def _write_json(obj, path: str | None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True)
    if path is None:
        print(text)
    else:
        with open(path, "w") as fh:
            fh.write(text + "\n")


def _load_channel(path: str):
    try:
        return channel_from_dict(_read_json(path))
    except ChannelForgeError as exc:
        if isinstance(exc, (ValidationError, CapacityError)):
            raise
        raise UsageError(f"{path}: {exc}") from None


def _load_state(path: str) -> np.ndarray:
    """State JSON: ``{"kind": "density", "matrix": ...}`` or ``{"kind": "pure", "amplitudes": ...}``."""
    d = _read_json(path)
    try:
        if isinstance(d, list):
            return check_density(decode_matrix(d, "state"))
        kind = d.get("kind", "density")
        if kind == "pure":
            v = decode_vector(d["amplitudes"], "amplitudes")
            return proj(v / np.linalg.norm(v))
        if kind == "density":
            return check_density(decode_matrix(d["matrix"], "matrix"))
        raise UsageError(f"{path}: unknown state kind {kind!r}")
    except KeyError as exc:
        raise UsageError(f"{path}: missing field {exc}") from None
    except ChannelForgeError as exc:
        raise UsageError(f"{path}: {exc}") from None


def state_to_dict(rho: np.ndarray) -> dict:
    return {"kind": "density", "dim": int(rho.shape[0]), "matrix": encode_matrix(rho)}


def _load_circuit(path: str) -> Circuit:
    try:
        return Circuit.from_dict(_read_json(path))
    except (ChannelForgeError, TypeError, ValueError) as exc:
        raise UsageError(f"{path}: {exc}") from None


def _report(command: str, body: dict, args) -> dict:
    out = {"command": command, "seed": getattr(args, "seed", None)}
    out.update(body)
    out["timestamp"] = datetime.now(timezone.utc).isoformat()
    return out


def _emit(report: dict, args, human: str) -> None:
    if getattr(args, "json", False):
        _write_json(report, None)
    else:
        print(human)
    if getattr(args, "report", None):
        _write_json(report, args.report)


def _p_arg(text: str) -> float:
    if text.lower() in ("inf", "infinity"):
        return float("inf")
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid p: {text!r}") from None


def _p_json(p: float):
    return "inf" if np.isinf(p) else p


# -- subcommands --------------------------------------------------------------------------

def cmd_validate(args) -> int:
    try:
        c = _load_channel(args.file)
    except ValidationError as exc:
        report = _report("validate", {"passed": False, "residuals": {}, "problems": [str(exc)]}, args)
        _emit(report, args, f"FAIL {args.file}: {exc}")
        return EXIT_FAIL
    rep = validate_cptp(c)
    body = rep.to_dict()
    body["residuals"] = {k: {"value": v, "method": "exact"} for k, v in rep.residuals.items()}
    report = _report("validate", body, args)
    lines = [f"{'PASS' if rep.passed else 'FAIL'} {args.file}"]
    lines += [f"  {k}: {v:.3e}" for k, v in rep.residuals.items()]
    lines += [f"  problem: {p}" for p in rep.problems]
    _emit(report, args, "\n".join(lines))
    return EXIT_OK if rep.passed else EXIT_FAIL


def _convert(c, kind: str):
    if kind == "choi":
        return c.choi()
    if kind == "kraus":
        return c if isinstance(c, KrausChannel) else choi_to_kraus(c.choi())
    if kind == "stinespring":
        if isinstance(c, StinespringDilation):
            return c
        k = _convert(c, "kraus")
        return dilation_for(k, minimal_ancilla_dim(k))
    if kind == "random_unitary":
        if isinstance(c, RandomUnitaryChannel):
            return c
        raise UsageError("only random-unitary channels can be written as random_unitary")
    raise UsageError(f"unknown target kind {kind!r}")


def cmd_convert(args) -> int:
    c = _load_channel(args.input)
    out = _convert(c, args.to)
    _write_json(channel_to_dict(out), args.out)
    return EXIT_OK


def cmd_make_channel(args) -> int:
    name = args.name
    if name == "depolarizing":
        c = depolarizing_channel(args.dim)
    elif name == "noise-factor":
        c = noise_on_factor(args.dim_k, args.dim_b)
    elif name == "dephase-split":
        c = dephase_split(SubspaceSplit(args.dim_a, args.dim_h))
    elif name == "mix-subspace":
        c = mix_subspace(SubspaceSplit(args.dim_a, args.dim_h))
    else:  # pragma: no cover - argparse restricts choices
        raise UsageError(f"unknown channel {name!r}")
    _write_json(channel_to_dict(c), args.out)
    return EXIT_OK


def cmd_approximate(args) -> int:
    phi = _load_channel(args.channel)
    ac = build_approximation(phi, args.dim_a, action_only=args.action_only)
    out = ac.ru if ac.ru is not None else ac.choi()
    _write_json(channel_to_dict(out), args.out)
    if not args.quiet:
        print(f"dim_A={ac.dim_A} dim_H={ac.dim_H} dim_K={ac.dim_K} dim_B={ac.dim_B} "
              f"terms={ac.n_terms} written as {channel_to_dict(out)['kind']}")
    return EXIT_OK


def _opt_report(res: metrics.OptResult, name: str, args, extra=None) -> dict:
    body = {"quantity": name, "restarts": args.restarts}
    body.update(res.to_dict())
    if extra:
        body.update(extra)
    return _report(name, body, args)


def cmd_entropy_min(args) -> int:
    phi = _load_channel(args.channel)
    res = metrics.min_output_entropy(phi, args.restarts, args.seed)
    _emit(_opt_report(res, "entropy-min", args), args,
          f"S_min ~ {res.value:.12g} bits (upper bound; spread {res.spread:.2e})")
    return EXIT_OK


def cmd_pnorm_max(args) -> int:
    phi = _load_channel(args.channel)
    res = metrics.max_output_pnorm(phi, args.p, args.restarts, args.seed)
    _emit(_opt_report(res, "pnorm-max", args, {"p": _p_json(args.p)}), args,
          f"nu_{args.p:g} ~ {res.value:.12g} (lower bound; spread {res.spread:.2e})")
    return EXIT_OK


def cmd_gap(args) -> int:
    a, b = _load_channel(args.a), _load_channel(args.b)
    if args.kind == "additivity":
        rep = metrics.additivity_report(a, b, args.restarts, args.seed)
    else:
        rep = metrics.multiplicativity_report(a, b, args.p, args.restarts, args.seed)
    body = rep.to_dict()
    if args.kind == "multiplicativity":
        body["p"] = _p_json(args.p)
    _emit(_report("gap", body, args), args, f"{args.kind} gap ~ {rep.gap:.6g} ({rep.certificate})")
    return EXIT_OK


def cmd_trace_dist(args) -> int:
    r1, r2 = _load_state(args.a), _load_state(args.b)
    if r1.shape != r2.shape:
        raise UsageError(f"states have different dimensions {r1.shape[0]} and {r2.shape[0]}")
    val = trace_norm(r1 - r2)
    _emit(_report("trace-dist", {"trace_norm": {"value": val, "method": "exact"}}, args), args,
          f"||a - b||_1 = {val:.12g}")
    return EXIT_OK


def cmd_diamond_dist(args) -> int:
    a, b = _load_channel(args.a), _load_channel(args.b)
    est = diamond_distance(a, b, dim_F=args.dim_f, restarts=args.restarts, seed=args.seed)
    _emit(_report("diamond-dist", est.to_dict(), args), args,
          f"||a - b||_diamond >= {est.value:.12g} (certified lower bound; best of {est.restarts} restarts)")
    return EXIT_OK


def cmd_compile_circuit(args) -> int:
    q = _load_circuit(args.input)
    if args.m is not None:
        q = pad_ancillas(q, args.m)
    c, rep = compile_approximation(q)
    _write_json(c.to_dict(), args.out)
    if args.report:
        _write_json(_report("compile-circuit", rep.to_dict(), args), args.report)
    print(f"m={rep.m} n={rep.n} gates={rep.total_gates} random-unitary={rep.random_unitary_gates} "
          f"counts={rep.gate_counts}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    c = _load_circuit(args.circuit)
    rho = _load_state(args.state)
    out = simulate(c, rho)
    if args.out:
        _write_json(state_to_dict(out), args.out)
    if args.json or not args.out:
        _write_json(state_to_dict(out), None)
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.theorem is not None:
        if args.theorem != 10:
            raise UsageError("--theorem only supports 10; use --checks for the other verifiers")
        if not (args.q1 and args.q2 and args.m):
            raise UsageError("--theorem 10 needs --q1, --q2 and --m")
        rep = verify_theorem10(_load_circuit(args.q1), _load_circuit(args.q2), args.m,
                               restarts=args.restarts or 16, seed=args.seed)
        body = rep.to_dict()
        human = (f"{'PASS' if rep.passed else 'FAIL'} m={rep.m} Q={rep.q_distance.value:.9g} "
                 f"C>={rep.c_certified_lower:.9g} C~{rep.c_distance.value:.9g} eps={rep.epsilon:g}")
        _emit(_report("verify", body, args), args, human)
        return EXIT_OK if rep.passed else EXIT_FAIL
    if args.manifest:
        manifest = VerifyManifest.from_dict(_read_json(args.manifest))
    elif args.checks:
        manifest = VerifyManifest([(n.strip(), {}) for n in args.checks.split(",") if n.strip()])
    else:
        manifest = VerifyManifest.default()
    suite = run_verify(manifest)
    report = _report("verify", suite.to_dict(), args)
    report["timestamp"] = {"utc": report["timestamp"], "runtime_s": suite.runtimes}
    lines = []
    for r in suite.results:
        lines.append(f"{'PASS' if r.passed else 'FAIL'} {r.name} ({suite.runtimes[r.name]:.1f} s)")
        for m in r.measurements:
            bound = "" if m.bound is None else f" {m.relation} {m.bound:.6g}"
            flag = "" if m.ok else "  <-- violated"
            lines.append(f"    {m.quantity}: {m.value:.6g}{bound} [{m.method}]{flag}")
    _emit(report, args, "\n".join(lines) if lines else "no checks")
    return EXIT_OK if suite.passed else EXIT_FAIL


# -- parser -------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="channel-forge", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        return p

    def common(p, restarts=metrics.DEFAULT_RESTARTS):
        p.add_argument("--restarts", type=int, default=restarts)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--json", action="store_true", help="machine-readable output")
        p.add_argument("--report", help="also write the JSON report to this file")

    p = add("validate", cmd_validate, "check a channel file for complete positivity and trace preservation")
    p.add_argument("file")
    p.add_argument("--json", action="store_true")
    p.add_argument("--report")

    p = add("convert", cmd_convert, "convert a channel between representations")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--to", required=True, choices=["kraus", "choi", "stinespring", "random_unitary"])
    p.add_argument("--out")

    p = add("make-channel", cmd_make_channel, "write a standard channel as JSON")
    p.add_argument("name", choices=["depolarizing", "noise-factor", "dephase-split", "mix-subspace"])
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--dim-k", type=int, default=2)
    p.add_argument("--dim-b", type=int, default=2)
    p.add_argument("--dim-a", type=int, default=2)
    p.add_argument("--dim-h", type=int, default=2)
    p.add_argument("--out")

    p = add("approximate", cmd_approximate, "build the random-unitary approximation of a channel")
    p.add_argument("--channel", required=True)
    p.add_argument("--dim-a", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--action-only", action="store_true", help="write the Choi matrix instead of the RU terms")
    p.add_argument("--quiet", action="store_true")

    p = add("entropy-min", cmd_entropy_min, "estimate the minimum output entropy")
    p.add_argument("--channel", required=True)
    common(p)

    p = add("pnorm-max", cmd_pnorm_max, "estimate the maximum output p-norm")
    p.add_argument("--channel", required=True)
    p.add_argument("--p", type=_p_arg, required=True)
    common(p)

    p = add("gap", cmd_gap, "additivity / multiplicativity gap probe")
    p.add_argument("--kind", choices=["additivity", "multiplicativity"], required=True)
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--p", type=_p_arg, default=2.0)
    common(p)

    p = add("trace-dist", cmd_trace_dist, "trace norm of the difference of two states")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--json", action="store_true")
    p.add_argument("--report")

    p = add("diamond-dist", cmd_diamond_dist, "diamond-norm distance estimate between two channels")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--dim-f", type=int)
    common(p, RESTARTS_QUBIT)

    p = add("compile-circuit", cmd_compile_circuit, "compile a mixed-state circuit into a random-unitary circuit")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--report")
    p.add_argument("--m", type=int, help="pad to this many ancilla qubits first")
    p.add_argument("--seed", type=int, default=0)

    p = add("simulate", cmd_simulate, "simulate a circuit on a state")
    p.add_argument("--circuit", required=True)
    p.add_argument("--state", required=True)
    p.add_argument("--out")
    p.add_argument("--json", action="store_true")

    p = add("verify", cmd_verify, "run the verification suite")
    p.add_argument("--manifest")
    p.add_argument("--checks", help="comma-separated check names")
    p.add_argument("--theorem", type=int)
    p.add_argument("--q1")
    p.add_argument("--q2")
    p.add_argument("--m", type=int)
    p.add_argument("--restarts", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true")
    p.add_argument("--report")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CapacityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (UsageError, ChannelForgeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
