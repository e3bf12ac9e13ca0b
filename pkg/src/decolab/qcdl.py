"""The ``.qcdl`` circuit-description format.

A document is a YAML mapping that must end with the explicit end marker
``...``. Its ``version`` is ``qcdl-1``. It then describes exactly one of:

* a circuit: ``wires``, ``layers``, optional ``systems`` and ``queries``;
* a bipartite channel: ``bipartite: {in_split, out_split, gate}``;
* a Hamiltonian: ``hamiltonian: {dims, matrix | terms}``.

Complex entries are ``[re, im]`` pairs. Gate records are mappings::

    {gate: controlled, conditionals: [identity, pauli_x], in: [s, f], out: [s, f], name: A}

``out`` defaults to ``in``. Matrix rows are indexed by the ``out`` legs and
columns by the ``in`` legs. Unknown keys and duplicate keys are errors, and
every error carries the line and column of the offending node.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field

import numpy as np
import yaml

from . import scenarios
from .bipartite import UnitaryChannel
from .circuit import Circuit, Gate, SystemRef, SystemsOfInterest
from .errors import DecolabError, InputError
from .gates import BUILTINS, GateSpec
from .hamiltonian import HamiltonianModel
from .linops import PAULI, kron

VERSION = "qcdl-1"
EXTENSION = ".qcdl"

_INT = re.compile(r"[-+]?[0-9]+\Z")
_FLOAT = re.compile(r"[-+]?(\.[0-9]+|[0-9]+(\.[0-9]*)?)([eE][-+]?[0-9]+)?\Z")


class ParseError(InputError):
    """Syntax or validation error at a position in the source."""

    code = "E110"

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line, self.column, self.message = line, column, message
        where = f"line {line}, column {column}: " if line is not None else ""
        super().__init__(where + message)


def _err(node, message: str) -> ParseError:
    mark = getattr(node, "start_mark", None)
    if mark is None:
        return ParseError(message)
    return ParseError(message, mark.line + 1, mark.column + 1)


# ---------------------------------------------------------------- node access


def _scalar(node):
    if not isinstance(node, yaml.ScalarNode):
        raise _err(node, "expected a scalar")
    text = node.value
    if node.style in ("'", '"'):
        return text
    if text in ("true", "false"):
        return text == "true"
    if _INT.match(text):
        return int(text)
    if _FLOAT.match(text):
        return float(text)
    if text in ("", "~", "null"):
        raise _err(node, "empty value")
    return text


def _mapping(node, allowed: set[str], required: set[str] = frozenset()) -> dict[str, yaml.Node]:
    if not isinstance(node, yaml.MappingNode):
        raise _err(node, "expected a mapping")
    out: dict[str, yaml.Node] = {}
    for knode, vnode in node.value:
        key = _scalar(knode)
        if not isinstance(key, str):
            raise _err(knode, f"mapping key {key!r} is not a name")
        if key in out:
            raise _err(knode, f"duplicate key {key!r}")
        if key not in allowed:
            raise _err(knode, f"unknown key {key!r}; allowed: {', '.join(sorted(allowed))}")
        out[key] = vnode
    missing = sorted(required - set(out))
    if missing:
        raise _err(node, f"missing key(s) {', '.join(missing)}")
    return out


def _sequence(node) -> list[yaml.Node]:
    if not isinstance(node, yaml.SequenceNode):
        raise _err(node, "expected a list")
    return list(node.value)


def _string(node) -> str:
    v = _scalar(node)
    if not isinstance(v, str) or not v:
        raise _err(node, "expected a non-empty name")
    return v


def _integer(node, minimum: int | None = None) -> int:
    v = _scalar(node)
    if isinstance(v, bool) or not isinstance(v, int):
        raise _err(node, "expected an integer")
    if minimum is not None and v < minimum:
        raise _err(node, f"expected an integer >= {minimum}")
    return v


def _real(node) -> float:
    v = _scalar(node)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise _err(node, "expected a number")
    return float(v)


def _boolean(node) -> bool:
    v = _scalar(node)
    if not isinstance(v, bool):
        raise _err(node, "expected true or false")
    return v


def _complex_matrix(node) -> np.ndarray:
    rows = []
    for rnode in _sequence(node):
        row = []
        for cnode in _sequence(rnode):
            pair = _sequence(cnode)
            if len(pair) != 2:
                raise _err(cnode, "complex entries are [re, im] pairs")
            row.append(complex(_real(pair[0]), _real(pair[1])))
        rows.append(row)
    if not rows or any(len(r) != len(rows) for r in rows):
        raise _err(node, "matrix must be square and non-empty")
    return np.array(rows, dtype=complex)


# ---------------------------------------------------------------- documents


@dataclass(frozen=True)
class ConditionalQuery:
    targets: tuple[str, ...]
    given: dict[str, int]


@dataclass(frozen=True)
class Queries:
    probabilities: tuple[dict[str, int], ...] = ()
    conditionals: tuple[ConditionalQuery, ...] = ()


@dataclass(frozen=True, eq=False)
class Document:
    version: str = VERSION
    circuit: Circuit | None = None
    systems: SystemsOfInterest | None = None
    queries: Queries = field(default_factory=Queries)
    channel: UnitaryChannel | None = None
    channel_gate: GateSpec | None = None
    hamiltonian: HamiltonianModel | None = None
    digest: str = ""

    @property
    def kind(self) -> str:
        if self.circuit is not None:
            return "circuit"
        if self.channel is not None:
            return "bipartite"
        return "hamiltonian"


def _gate_spec(node, allow_legs: bool) -> tuple[GateSpec, dict[str, yaml.Node]]:
    if isinstance(node, yaml.ScalarNode):
        name = _string(node)
        if name not in BUILTINS or name in ("controlled", "matrix"):
            raise _err(node, f"unknown or incomplete builtin {name!r}")
        return GateSpec(name), {}
    allowed = {"gate", "conditionals", "matrix", "adjoint"}
    if allow_legs:
        allowed |= {"in", "out", "name"}
    fields = _mapping(node, allowed, {"gate"})
    name = _string(fields["gate"])
    if name not in BUILTINS:
        raise _err(fields["gate"], f"unknown builtin gate {name!r}; choices: {', '.join(BUILTINS)}")
    adjoint = _boolean(fields["adjoint"]) if "adjoint" in fields else False
    conds: tuple[GateSpec, ...] = ()
    matrix = None
    if name == "controlled":
        if "conditionals" not in fields:
            raise _err(node, "controlled gate needs conditionals")
        conds = tuple(_gate_spec(c, False)[0] for c in _sequence(fields["conditionals"]))
        if not conds:
            raise _err(fields["conditionals"], "controlled gate needs at least one conditional")
    elif "conditionals" in fields:
        raise _err(fields["conditionals"], "only controlled gates take conditionals")
    if name == "matrix":
        if "matrix" not in fields:
            raise _err(node, "matrix gate needs a matrix")
        matrix = _complex_matrix(fields["matrix"])
    elif "matrix" in fields:
        raise _err(fields["matrix"], "only matrix gates take a matrix")
    try:
        return GateSpec(name, conds, matrix, adjoint), fields
    except DecolabError as exc:
        raise _err(node, str(exc)) from None


def _labels(node, wires: dict[str, int]) -> list[str]:
    out = []
    for n in _sequence(node):
        label = _string(n)
        if label not in wires:
            raise _err(n, f"unknown wire {label!r}")
        out.append(label)
    return out


def _parse_circuit(top: dict[str, yaml.Node]) -> tuple[Circuit, SystemsOfInterest | None, Queries]:
    wires: list[tuple[str, int]] = []
    seen: dict[str, int] = {}
    for wnode in _sequence(top["wires"]):
        f = _mapping(wnode, {"label", "dim"}, {"label", "dim"})
        label = _string(f["label"])
        if label in seen:
            raise _err(f["label"], f"duplicate wire label {label!r}")
        seen[label] = _integer(f["dim"], 1)
        wires.append((label, seen[label]))
    layers = []
    for lnode in _sequence(top["layers"]):
        layer = []
        used: set[str] = set()
        for gnode in _sequence(lnode):
            gspec, fields = _gate_spec(gnode, True)
            if "in" not in fields:
                raise _err(gnode, "gate needs its input wires under 'in'")
            ins = _labels(fields["in"], seen)
            outs = _labels(fields["out"], seen) if "out" in fields else list(ins)
            overlap = used & set(ins)
            if overlap:
                raise _err(gnode, f"wires {sorted(overlap)} already used in this layer")
            used |= set(ins)
            name = _string(fields["name"]) if "name" in fields else ""
            try:
                if sorted(ins) != sorted(outs) or len(set(ins)) != len(ins):
                    raise InputError("'out' must reorder the distinct wires of 'in'")
                layer.append(scenarios.bind(wires, gspec, ins, outs, name))
            except DecolabError as exc:
                raise _err(gnode, str(exc)) from None
        layers.append(tuple(layer))
    try:
        circuit = Circuit(tuple(wires), tuple(layers))
    except DecolabError as exc:
        raise _err(top["layers"], str(exc)) from None
    systems = None
    if "systems" in top:
        refs = []
        names: set[str] = set()
        segments: dict[tuple[int, int], str] = {}
        for snode in _sequence(top["systems"]):
            f = _mapping(snode, {"name", "wire", "slot"}, {"wire", "slot"})
            wire = _string(f["wire"])
            if wire not in seen:
                raise _err(f["wire"], f"unknown wire {wire!r}")
            slot = _integer(f["slot"], 0)
            if slot >= circuit.n_slots:
                raise _err(f["slot"], f"slot {slot} out of range 0..{circuit.n_slots - 1}")
            ref = SystemRef(circuit.wire_index(wire), slot, _string(f["name"]) if "name" in f else "")
            if ref.label() in names:
                raise _err(snode, f"duplicate system name {ref.label()!r}")
            seg = circuit.segment(ref.wire, ref.slot)
            if seg in segments:
                raise _err(snode, f"system {ref.label()!r} names the same wire segment as {segments[seg]!r}")
            names.add(ref.label())
            segments[seg] = ref.label()
            refs.append(ref)
        systems = SystemsOfInterest(circuit, tuple(refs))
    queries = _parse_queries(top["queries"]) if "queries" in top else Queries()
    return circuit, systems, queries


def _assignment(node) -> dict[str, int]:
    if not isinstance(node, yaml.MappingNode):
        raise _err(node, "expected a mapping of event variables to indices")
    out = {}
    for knode, vnode in node.value:
        key = _string(knode)
        if key in out:
            raise _err(knode, f"duplicate key {key!r}")
        out[key] = _integer(vnode, 0)
    return out


def _parse_queries(node) -> Queries:
    f = _mapping(node, {"probabilities", "conditionals"})
    probs = tuple(_assignment(n) for n in _sequence(f["probabilities"])) if "probabilities" in f else ()
    conds = []
    for cnode in _sequence(f["conditionals"]) if "conditionals" in f else []:
        g = _mapping(cnode, {"target", "given"}, {"target"})
        targets = tuple(_string(t) for t in _sequence(g["target"]))
        given = _assignment(g["given"]) if "given" in g else {}
        conds.append(ConditionalQuery(targets, given))
    return Queries(probs, tuple(conds))


def _parse_bipartite(node) -> tuple[UnitaryChannel, GateSpec]:
    f = _mapping(node, {"in_split", "out_split", "gate"}, {"in_split", "gate"})
    splits = []
    for key in ("in_split", "out_split"):
        if key not in f:
            splits.append(splits[0])
            continue
        parts = [_integer(n, 1) for n in _sequence(f[key])]
        if len(parts) != 2:
            raise _err(f[key], f"{key} needs two dimensions")
        splits.append(tuple(parts))
    gspec, _ = _gate_spec(f["gate"], False)
    try:
        u = gspec.build(list(splits[0]))
        return UnitaryChannel(u, splits[0], splits[1]), gspec
    except DecolabError as exc:
        raise _err(f["gate"], str(exc)) from None


def _pauli_string(node, n: int) -> np.ndarray:
    word = _string(node)
    if len(word) != n or any(ch not in PAULI for ch in word):
        raise _err(node, f"pauli string must have {n} letters from I, X, Y, Z")
    return kron(*(PAULI[ch] for ch in word))


def _parse_hamiltonian(node) -> HamiltonianModel:
    f = _mapping(node, {"dims", "matrix", "terms"}, {"dims"})
    dims = [_integer(n, 1) for n in _sequence(f["dims"])]
    if len(dims) != 2:
        raise _err(f["dims"], "hamiltonian dims are [dim_S, dim_F]")
    if ("matrix" in f) == ("terms" in f):
        raise _err(node, "give exactly one of 'matrix' or 'terms'")
    if "matrix" in f:
        h = _complex_matrix(f["matrix"])
    else:
        if any(d != 2 for d in dims):
            raise _err(f["dims"], "pauli terms need qubit factors")
        h = np.zeros((4, 4), dtype=complex)
        for tnode in _sequence(f["terms"]):
            t = _mapping(tnode, {"coeff", "pauli"}, {"coeff", "pauli"})
            h = h + _real(t["coeff"]) * _pauli_string(t["pauli"], 2)
    try:
        return HamiltonianModel(h, dims[0], dims[1])
    except DecolabError as exc:
        raise _err(node, str(exc)) from None


def _compose(text: str) -> yaml.Node:
    try:
        events = list(yaml.parse(text, Loader=yaml.SafeLoader))
        root = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        raise ParseError(f"syntax error: {exc.problem or exc.context}",
                         mark.line + 1 if mark else None, mark.column + 1 if mark else None) from None
    except yaml.YAMLError as exc:
        raise ParseError(f"syntax error: {exc}") from None
    ends = [e for e in events if isinstance(e, yaml.DocumentEndEvent)]
    if root is None:
        raise ParseError("empty document")
    if len(ends) != 1 or not ends[0].explicit:
        mark = ends[-1].start_mark if ends else None
        raise ParseError("document must end with the end marker '...' (possible truncation)",
                         mark.line + 1 if mark else None, mark.column + 1 if mark else None)
    return root


def parse(text: str) -> Document:
    """Parse and validate a document."""
    if not isinstance(text, str):
        raise ParseError("input must be text")
    root = _compose(text)
    allowed = {"version", "wires", "layers", "systems", "queries", "bipartite", "hamiltonian"}
    top = _mapping(root, allowed, {"version"})
    version = _scalar(top["version"])
    if version != VERSION:
        raise _err(top["version"], f"unsupported version {version!r}; expected {VERSION!r}")
    digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
    circuit_keys = {"wires", "layers", "systems", "queries"} & set(top)
    kinds = [k for k in ("bipartite", "hamiltonian") if k in top] + (["circuit"] if circuit_keys else [])
    if len(kinds) != 1:
        raise _err(root, "a document describes exactly one circuit, bipartite channel or hamiltonian")
    if kinds[0] == "bipartite":
        ch, gspec = _parse_bipartite(top["bipartite"])
        return Document(VERSION, channel=ch, channel_gate=gspec, digest=digest)
    if kinds[0] == "hamiltonian":
        return Document(VERSION, hamiltonian=_parse_hamiltonian(top["hamiltonian"]), digest=digest)
    for key in ("wires", "layers"):
        if key not in top:
            raise _err(root, f"circuit document needs {key!r}")
    circuit, systems, queries = _parse_circuit(top)
    return Document(VERSION, circuit, systems, queries, digest=digest)


def load(path) -> Document:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    except UnicodeDecodeError:
        raise InputError(f"{path} is not UTF-8 text") from None
    return parse(text)


# ---------------------------------------------------------------- serializer


def _q(s: str) -> str:
    return json.dumps(s)


def _num(x: float) -> str:
    return "%.17g" % float(x)


def _matrix_text(m: np.ndarray) -> str:
    rows = ("[" + ", ".join(f"[{_num(z.real)}, {_num(z.imag)}]" for z in row) + "]" for row in m)
    return "[" + ", ".join(rows) + "]"


def _spec_text(s: GateSpec) -> str:
    if s.name not in ("controlled", "matrix") and not s.adjoint:
        return _q(s.name)
    return "{" + ", ".join(_spec_fields(s)) + "}"


def _spec_fields(s: GateSpec) -> list[str]:
    parts = [f"gate: {_q(s.name)}"]
    if s.name == "controlled":
        parts.append("conditionals: [" + ", ".join(_spec_text(c) for c in s.conditionals) + "]")
    if s.name == "matrix":
        parts.append(f"matrix: {_matrix_text(s.matrix)}")
    if s.adjoint:
        parts.append("adjoint: true")
    return parts


def _gate_text(circuit: Circuit, gate: Gate) -> str:
    spec = gate.spec if isinstance(gate.spec, GateSpec) else GateSpec("matrix", matrix=gate.matrix)
    labels = circuit.labels
    parts = _spec_fields(spec)
    parts.append("in: [" + ", ".join(_q(labels[w]) for w in gate.inputs) + "]")
    if gate.outputs != gate.inputs:
        parts.append("out: [" + ", ".join(_q(labels[w]) for w in gate.outputs) + "]")
    if gate.name:
        parts.append(f"name: {_q(gate.name)}")
    return "{" + ", ".join(parts) + "}"


def _assignment_text(a: dict[str, int]) -> str:
    return "{" + ", ".join(f"{_q(k)}: {int(v)}" for k, v in a.items()) + "}"


def serialize(circuit: Circuit, systems: SystemsOfInterest | None = None, queries: Queries | None = None) -> str:
    """Canonical text of a circuit document; builtin gates keep their names."""
    lines = [f"version: {VERSION}", "wires:"]
    lines += [f"  - {{label: {_q(label)}, dim: {dim}}}" for label, dim in circuit.wires]
    if not circuit.wires:
        lines[-1] = "wires: []"
    if circuit.layers:
        lines.append("layers:")
        for layer in circuit.layers:
            if not layer:
                lines.append("  - []")
                continue
            lines.append("  - - " + _gate_text(circuit, layer[0]))
            lines += ["    - " + _gate_text(circuit, g) for g in layer[1:]]
    else:
        lines.append("layers: []")
    if systems is not None:
        lines.append("systems:" if len(systems) else "systems: []")
        for r in systems.refs:
            name = f"name: {_q(r.name)}, " if r.name else ""
            lines.append(f"  - {{{name}wire: {_q(circuit.labels[r.wire])}, slot: {r.slot}}}")
    if queries is not None and (queries.probabilities or queries.conditionals):
        lines.append("queries:")
        if queries.probabilities:
            lines.append("  probabilities:")
            lines += [f"    - {_assignment_text(a)}" for a in queries.probabilities]
        if queries.conditionals:
            lines.append("  conditionals:")
            for c in queries.conditionals:
                given = f", given: {_assignment_text(c.given)}" if c.given else ""
                lines.append("    - {target: [" + ", ".join(_q(t) for t in c.targets) + "]" + given + "}")
    lines.append("...")
    return "\n".join(lines) + "\n"


def serialize_document(doc: Document) -> str:
    if doc.kind == "circuit":
        return serialize(doc.circuit, doc.systems, doc.queries)
    if doc.kind == "bipartite":
        ch = doc.channel
        spec = doc.channel_gate or GateSpec("matrix", matrix=ch.u)
        return (
            f"version: {VERSION}\nbipartite:\n  in_split: [{ch.in_split[0]}, {ch.in_split[1]}]\n"
            f"  out_split: [{ch.out_split[0]}, {ch.out_split[1]}]\n  gate: {_spec_text(spec)}\n...\n"
        )
    m = doc.hamiltonian
    return (
        f"version: {VERSION}\nhamiltonian:\n  dims: [{m.dim_s}, {m.dim_f}]\n"
        f"  matrix: {_matrix_text(m.h)}\n...\n"
    )


def _same_gate(g: Gate, h: Gate, tol: float) -> bool:
    def builtin(x: Gate):
        return x.spec if isinstance(x.spec, GateSpec) and x.spec.name != "matrix" else None

    a, b = builtin(g), builtin(h)
    if (a is None) != (b is None) or (a is not None and a != b):
        return False
    return g.matrix.shape == h.matrix.shape and bool(np.max(np.abs(g.matrix - h.matrix), initial=0.0) <= tol)


def circuits_equal(a: Circuit, b: Circuit, tol: float = 0.0) -> bool:
    """Structural equality: wires, gate placement, names, builtin specs and matrices."""
    if a.wires != b.wires or len(a.layers) != len(b.layers):
        return False
    for la, lb in zip(a.layers, b.layers):
        if len(la) != len(lb):
            return False
        for g, h in zip(la, lb):
            if g.inputs != h.inputs or g.outputs != h.outputs or g.name != h.name:
                return False
            if not _same_gate(g, h, tol):
                return False
    return True


def systems_equal(a: SystemsOfInterest | None, b: SystemsOfInterest | None) -> bool:
    if a is None or b is None:
        return a is None and b is None
    return [(r.wire, r.slot, r.label()) for r in a.refs] == [(r.wire, r.slot, r.label()) for r in b.refs]


def builtin_scenario(name: str, v=None, w=None) -> Document:
    """One of :data:`scenarios.SCENARIOS` as a document."""
    params = {"v": v} if name == "single_measurement" else {"v": v, "w": w}
    if name not in scenarios.SCENARIOS:
        raise InputError(f"unknown scenario {name!r}; choices: {', '.join(scenarios.SCENARIOS)}")
    circuit, systems = scenarios.scenario(name, **params)
    text = serialize(circuit, systems)
    return Document(VERSION, circuit, systems, digest=hashlib.sha256(text.encode("utf-8")).hexdigest())
