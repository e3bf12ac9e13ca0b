"""Command-line front end.

Exit status is 0 on success, 1 on an input error and 2 on an internal
consistency failure. Diagnostics go to stderr as ``error E<code>: message``.
"""

from __future__ import annotations

import argparse
import os
import sys
from collections.abc import Sequence

import numpy as np

from . import bipartite as bp
from . import qcdl
from . import report as rp
from .broken import oracle_preferred_match
from .circuit import (
    SystemsOfInterest,
    check_consistency,
    conditional,
    derive_history_set,
    probability,
)
from .errors import DecolabError, InputError
from .gates import cnot, swap
from .hamiltonian import (
    HamiltonianModel,
    acc_h,
    dec_h,
    detect_control_form_h,
    pacc_h,
    robust_algebra,
    rotating_frame_robust,
)
from .linops import PAULI, kron
from .scenarios import SCENARIOS
from .sieve import sieve_check

SEED_ENV = "DECOLAB_SEED"
_BIPARTITE_BUILTINS = {
    "identity": lambda: np.eye(4, dtype=complex),
    "swap": lambda: swap(2, 2),
    "cnot": cnot,
}
_HAMILTONIAN_BUILTINS = {
    "zz": [(1.0, "ZZ")],
    "zi": [(1.0, "ZI")],
    "xx_zz": [(1.0, "XX"), (1.0, "ZZ")],
}


def _exit_code(exc: DecolabError) -> int:
    return 1 if isinstance(exc, InputError) else 2


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw == "":
        return 0
    try:
        value = int(raw)
    except ValueError:
        raise InputError(f"{SEED_ENV}={raw!r} is not an integer") from None
    if not 0 <= value < 2**64:
        raise InputError(f"{SEED_ENV} must lie in [0, 2^64)")
    return value


def _u64(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must lie in [0, 2^64)")
    return value


def _assignment(text: str | None) -> dict[str, int]:
    out: dict[str, int] = {}
    if not text:
        return out
    for item in text.split(","):
        key, sep, value = item.partition("=")
        key = key.strip()
        if not sep or not key:
            raise InputError(f"malformed assignment {item!r}; expected name=value")
        if key in out:
            raise InputError(f"{key!r} assigned twice")
        try:
            out[key] = int(value)
        except ValueError:
            raise InputError(f"value of {key!r} is not an integer") from None
    return out


def _names(text: str | None) -> list[str]:
    if not text:
        return []
    return [t.strip() for t in text.split(",") if t.strip()]


def _seed_for_numpy(seed: int) -> int:
    return seed % 2**32


def _read_document(args, stdin) -> qcdl.Document:
    builtin = getattr(args, "builtin", None)
    if builtin is not None:
        return _builtin_document(args.command, builtin)
    if args.circuit in (None, "-"):
        text = stdin.read()
        if isinstance(text, bytes):
            text = text.decode("utf-8")
        return qcdl.parse(text)
    return qcdl.load(args.circuit)


def _builtin_document(command: str, name: str) -> qcdl.Document:
    if command in ("bipartite", "sieve"):
        if name not in _BIPARTITE_BUILTINS:
            raise InputError(f"unknown bipartite builtin {name!r}; choices: {', '.join(_BIPARTITE_BUILTINS)}")
        return qcdl.parse(_bipartite_text(name))
    if command == "hamiltonian":
        if name not in _HAMILTONIAN_BUILTINS:
            raise InputError(f"unknown hamiltonian builtin {name!r}; choices: {', '.join(_HAMILTONIAN_BUILTINS)}")
        return qcdl.parse(_hamiltonian_text(name))
    return qcdl.builtin_scenario(name)


def _bipartite_text(name: str) -> str:
    return f"version: {qcdl.VERSION}\nbipartite:\n  in_split: [2, 2]\n  gate: {name}\n...\n"


def _hamiltonian_text(name: str) -> str:
    terms = "".join(f"    - {{coeff: {c!r}, pauli: {p}}}\n" for c, p in _HAMILTONIAN_BUILTINS[name])
    return f"version: {qcdl.VERSION}\nhamiltonian:\n  dims: [2, 2]\n  terms:\n{terms}...\n"


def _need(doc: qcdl.Document, kind: str) -> None:
    if doc.kind != kind:
        raise InputError(f"expected a {kind} document, got a {doc.kind} document")


def _systems(doc: qcdl.Document, spec: str | None) -> SystemsOfInterest:
    _need(doc, "circuit")
    declared = doc.systems
    if spec in (None, "all"):
        if declared is None:
            raise InputError("document declares no systems of interest; pass --systems segments")
        return declared
    if spec == "segments":
        return SystemsOfInterest.all_segments(doc.circuit)
    if declared is None:
        raise InputError("document declares no systems of interest")
    return declared.subset(_names(spec))


def _history_report(hd) -> dict:
    names, rows = rp.history_rows(hd)
    total = sum(float(r["probability"]) for r in rows)
    return {"variables": names, "rows": rows, "total": "%.12f" % float(hd.table.sum()), "rows_total": "%.12f" % total}


def _consistency_report(hd) -> dict:
    c = check_consistency(hd)
    return {
        "passed": c.passed,
        "violations": c.violations(),
        "normalization_error": "%.3e" % c.normalization_error,
        "additivity_error": "%.3e" % c.additivity_error,
        "strong_orthogonality_error": "%.3e" % c.strong_error,
    }


def _circuit_core(doc, args, seed: int, oracle: bool):
    soi = _systems(doc, args.systems)
    hs = derive_history_set(doc.circuit, soi, _seed_for_numpy(seed))
    out = {"systems": {n: rp.system_summary(hs.analyses[n], _seed_for_numpy(seed)) for n in soi.names()}}
    if oracle:
        orc = oracle_preferred_match(doc.circuit, soi, _seed_for_numpy(seed), hs)
        out["oracle"] = {"passed": orc.passed, "failures": [f"{e.system}:{e.direction}" for e in orc.failures()]}
    return hs, out


# ---------------------------------------------------------------- subcommands


def cmd_bipartite(doc, args, seed):
    _need(doc, "bipartite")
    ch = doc.channel
    s = _seed_for_numpy(seed)
    an = bp.analyze(ch, s)
    out = {
        "channel": {"in_split": [ch.dim_s, ch.dim_f], "out_split": [ch.dim_t, ch.dim_g]},
        "acc": rp.algebra_summary(an.acc, s),
        "pacc": rp.algebra_summary(an.pacc, s),
        "dec": rp.algebra_summary(an.dec, s),
        "events": rp.events_summary(an.decomposition),
        "influences": {"S->G": bp.system_influences_environment(ch)},
    }
    if ch.dim_s == 2 and ch.dim_g == 2:
        for a in ("X", "Y", "Z"):
            m = kron(PAULI[a], np.eye(ch.dim_f))
            for b in ("X", "Z"):
                n = kron(np.eye(ch.dim_t), PAULI[b])
                out["influences"][f"{a}_S->{b}_G"] = bp.influences_op(m, n, ch)
    if ch.dim_s == ch.dim_t and ch.dim_f == ch.dim_g:
        cf = bp.detect_control_form(ch, s)
        out["control_form"] = None if cf is None else {
            "basis": [[[z.real + 0.0, z.imag + 0.0] for z in cf.control_basis[:, k]] for k in range(cf.control_basis.shape[1])]
        }
    return out


def cmd_analyze(doc, args, seed):
    _, out = _circuit_core(doc, args, seed, args.oracle)
    return out


def cmd_histories(doc, args, seed):
    hs, out = _circuit_core(doc, args, seed, args.oracle)
    out["histories"] = _history_report(hs.distribution)
    out["consistency"] = _consistency_report(hs.distribution)
    return out


def cmd_prob(doc, args, seed):
    soi = _systems(doc, args.systems)
    hs = derive_history_set(doc.circuit, soi, _seed_for_numpy(seed))
    hd = hs.distribution
    assignments = [_assignment(args.given)] if args.given is not None else list(doc.queries.probabilities)
    if not assignments:
        raise InputError("prob needs --given or probability queries in the document")
    results = [{"assignment": a, "probability": rp.fmt_prob(probability(hd, a))} for a in assignments]
    out = {"queries": results}
    if len(results) == 1:
        out.update(results[0])
    return out


def cmd_condition(doc, args, seed):
    soi = _systems(doc, args.systems)
    hs = derive_history_set(doc.circuit, soi, _seed_for_numpy(seed))
    hd = hs.distribution
    if args.target is not None:
        queries = [(_names(args.target), _assignment(args.given))]
    else:
        queries = [(list(q.targets), dict(q.given)) for q in doc.queries.conditionals]
    if not queries:
        raise InputError("condition needs --target or conditional queries in the document")
    results = []
    for targets, given in queries:
        if not targets:
            raise InputError("--target names no variables")
        dist = conditional(hd, targets, given)
        results.append({
            "targets": targets,
            "given": ",".join(f"{k}={v}" for k, v in given.items()),
            "distribution": {",".join(map(str, k)): rp.fmt_prob(p) for k, p in dist.items()},
        })
    out = {"conditionals": results}
    if len(results) == 1:
        out["conditional"] = results[0]
    return out


def cmd_hamiltonian(doc, args, seed):
    _need(doc, "hamiltonian")
    m: HamiltonianModel = doc.hamiltonian
    s = _seed_for_numpy(seed)
    dec, events = dec_h(m, s)
    out = {
        "channel": {"in_split": [m.dim_s, m.dim_f], "out_split": [m.dim_s, m.dim_f]},
        "pacc": rp.algebra_summary(pacc_h(m), s),
        "acc": rp.algebra_summary(acc_h(m), s),
        "dec": rp.algebra_summary(dec, s),
        "rob": rp.algebra_summary(robust_algebra(m), s),
        "rotating_frame_robust": rp.algebra_summary(rotating_frame_robust(m), s),
        "events": rp.events_summary(events),
    }
    cf = detect_control_form_h(m, s)
    out["control_form"] = None if cf is None else {
        "basis": [[[z.real + 0.0, z.imag + 0.0] for z in cf.control_basis[:, k]] for k in range(cf.control_basis.shape[1])],
        "conditionals": [[[[z.real + 0.0, z.imag + 0.0] for z in row] for row in hk] for hk in cf.conditionals],
    }
    return out


def cmd_sieve(doc, args, seed):
    _need(doc, "bipartite")
    reports = sieve_check(doc.channel, n_random=args.random_states, seed=_seed_for_numpy(seed),
                          epsilon=args.epsilon, strict=True)
    return {"sieve": [
        {
            "state": r.state,
            "max_loss": "%.12g" % (r.max_loss + 0.0),
            "zero_loss": r.zero_loss,
            "in_pacc": r.in_pacc,
            "below_epsilon": r.below_epsilon,
        }
        for r in reports
    ]}


def cmd_validate(doc, args, seed):
    out = {"valid": True, "kind": doc.kind}
    if doc.kind == "circuit":
        c = doc.circuit
        n = 0 if doc.systems is None else len(doc.systems)
        out["summary"] = f"{len(c.wires)} wires, {len(c.layers)} layers, {n} systems of interest"
    return out


_COMMANDS = {
    "bipartite": cmd_bipartite,
    "analyze": cmd_analyze,
    "histories": cmd_histories,
    "prob": cmd_prob,
    "condition": cmd_condition,
    "hamiltonian": cmd_hamiltonian,
    "sieve": cmd_sieve,
    "validate": cmd_validate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="decolab", description="Causal-decoherence analysis of circuits and channels.")
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=_u64, default=None, help=f"sampling seed (overrides ${SEED_ENV})")
    common.add_argument("--format", choices=("text", "structured"), default="text")
    common.add_argument("--out", default=None, help="write the report here instead of stdout")
    source = argparse.ArgumentParser(add_help=False)
    source.add_argument("--circuit", default=None, help="input document; '-' or absent reads stdin")
    source.add_argument("--builtin", default=None, help="use a builtin input instead of a file")
    circ = argparse.ArgumentParser(add_help=False)
    circ.add_argument("--systems", default=None, help="comma-separated labels, 'all' (declared) or 'segments'")

    sub.add_parser("bipartite", parents=[common, source], help="algebras of a bipartite unitary")
    for name, helptext in (("analyze", "per-system algebras of a circuit"), ("histories", "history table and consistency")):
        p = sub.add_parser(name, parents=[common, source, circ], help=helptext)
        p.add_argument("--oracle", action="store_true", help="cross-check against the broken-wire route")
    p = sub.add_parser("prob", parents=[common, source, circ], help="probability of one history")
    p.add_argument("--given", default=None, help="full assignment k=v,...")
    p = sub.add_parser("condition", parents=[common, source, circ], help="conditional distribution")
    p.add_argument("--given", default=None, help="conditions k=v,...")
    p.add_argument("--target", default=None, help="target variables v,...")
    sub.add_parser("hamiltonian", parents=[common, source], help="algebras of a hamiltonian")
    p = sub.add_parser("sieve", parents=[common, source], help="predictability sieve of a bipartite unitary")
    p.add_argument("--random-states", type=int, default=4)
    p.add_argument("--epsilon", type=float, default=1e-3)
    sub.add_parser("validate", parents=[common, source], help="parse and validate a document")
    p = sub.add_parser("scenario", parents=[common], help="print a builtin scenario document")
    p.add_argument("name", choices=SCENARIOS)
    return parser


def _write(data: bytes, path: str | None, stdout) -> None:
    if path is None:
        buf = getattr(stdout, "buffer", None)
        if buf is not None:
            buf.write(data)
            buf.flush()
        else:
            stdout.write(data.decode("utf-8"))
        return
    try:
        with open(path, "wb") as fh:
            fh.write(data)
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc.strerror}") from None


def run(argv: Sequence[str] | None = None, stdin=None, stdout=None, stderr=None) -> int:
    stdin = sys.stdin if stdin is None else stdin
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        seed = _seed(args)
        if args.command == "scenario":
            doc = qcdl.builtin_scenario(args.name)
            _write(qcdl.serialize(doc.circuit, doc.systems).encode("utf-8"), args.out, stdout)
            return 0
        doc = _read_document(args, stdin)
        body = _COMMANDS[args.command](doc, args, seed)
        report = rp.base_report(args.command, doc.digest, seed)
        report.update(body)
        _write(rp.emit(report, args.format), args.out, stdout)
    except DecolabError as exc:
        code = getattr(exc, "code", "E000")
        print(f"error {code}: {exc}", file=stderr)
        return _exit_code(exc)
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
