"""Shared fixtures for the test suite: Pauli operators, algebra equality
shortcuts, cached scenario runs, and the qcdl fuzz generator and mutator."""

from __future__ import annotations

import copy
import functools
import json

import numpy as np

from decolab import circuit as cc
from decolab import scenarios
from decolab import vnalgebra as va
from decolab.linops import PAULI, kron, projector
from decolab.sampling import haar_unitary, rng_for

I2 = PAULI["I"]
X = PAULI["X"]
Y = PAULI["Y"]
Z = PAULI["Z"]
KET0 = np.array([1, 0], dtype=complex)
KET1 = np.array([0, 1], dtype=complex)
PLUS = np.array([1, 1], dtype=complex) / np.sqrt(2)
MINUS = np.array([1, -1], dtype=complex) / np.sqrt(2)


def span(*ops, d: int | None = None) -> va.OperatorAlgebra:
    """The algebra spanned by the identity and ``ops`` (assumed closed)."""
    d = d if d is not None else np.asarray(ops[0]).shape[0]
    return va.from_spanning_set([np.eye(d, dtype=complex)] + [np.asarray(o, dtype=complex) for o in ops], (d,))


def trivial(d: int = 2) -> va.OperatorAlgebra:
    return va.trivial(d)


def full(d: int = 2) -> va.OperatorAlgebra:
    return va.full(d)


def same(a: va.OperatorAlgebra, b: va.OperatorAlgebra) -> bool:
    return a.ambient_dim == b.ambient_dim and va.equals(a, b)


@functools.lru_cache(maxsize=None)
def history(name: str, labels: tuple[str, ...] | None = None):
    """Cached history set of a builtin scenario, optionally on a subset of its systems."""
    c, soi = scenarios.scenario(name)
    if labels is not None:
        soi = soi.subset(labels)
    return c, soi, cc.derive_history_set(c, soi)


@functools.lru_cache(maxsize=None)
def oracle(name: str):
    """Cached broken-wire comparison for a builtin scenario."""
    from decolab.broken import oracle_preferred_match

    c, soi, hs = history(name)
    return oracle_preferred_match(c, soi, history=hs)


BLOCK_SHAPES = [
    [(1, 1), (1, 1)],
    [(2, 1)],
    [(1, 2)],
    [(2, 1), (1, 1)],
    [(1, 1), (1, 1), (1, 1)],
    [(2, 2)],
    [(1, 2), (1, 2)],
    [(2, 1), (1, 2)],
    [(1, 3), (2, 1)],
    [(3, 1), (1, 1)],
]


def planted_algebra(seed):
    """A random unitary conjugate of ``⊕ L(C^n) ⊗ I_m`` with its block shape."""
    rng = rng_for(seed)
    shape = BLOCK_SHAPES[int(rng.integers(len(BLOCK_SHAPES)))]
    d = sum(n * m for n, m in shape)
    ops, offset = [], 0
    for n, m in shape:
        for i in range(n):
            for j in range(n):
                unit = np.zeros((n, n), dtype=complex)
                unit[i, j] = 1
                big = np.zeros((d, d), dtype=complex)
                big[offset:offset + n * m, offset:offset + n * m] = np.kron(unit, np.eye(m))
                ops.append(big)
        offset += n * m
    u = haar_unitary(d, rng)
    return va.from_spanning_set([u @ o @ u.conj().T for o in ops]), shape


def hamiltonian_corpus(seed: int, n: int = 50):
    """Two-qubit Hamiltonians cycling through generic, control-form, dressed control-form and product cases."""
    from decolab.hamiltonian import HamiltonianModel
    from decolab.sampling import random_hermitian

    rng = np.random.default_rng(seed)
    out = []
    for i in range(n):
        kind = i % 4
        if kind == 0:
            h = random_hermitian(4, rng)
        elif kind in (1, 2):
            psi = haar_unitary(2, rng)
            h = sum(kron(np.outer(psi[:, k], psi[:, k].conj()), random_hermitian(2, rng)) for k in range(2))
            if kind == 2:
                h = h + kron(psi @ np.diag(rng.normal(size=2)) @ psi.conj().T, I2)
        else:
            h = kron(random_hermitian(2, rng), random_hermitian(2, rng)) + kron(random_hermitian(2, rng), I2)
        out.append(HamiltonianModel(h, 2, 2))
    return out


def event_index(hd: cc.HistoryDistribution, var: str, target: np.ndarray, circuit, ref) -> int:
    """Index of the event of ``var`` whose projector at ``ref``'s slot is ``target`` on its wire."""
    fam = hd.families[hd.index(var)]
    p = circuit.prefix_unitaries[ref.slot]
    from decolab.linops import embed

    want = embed(target, circuit.dims, [ref.wire])
    for i, pulled in enumerate(fam):
        if np.allclose(p @ pulled @ p.conj().T, want, atol=1e-9):
            return i
    raise AssertionError(f"no event of {var} matches the requested projector")


# ---------------------------------------------------------------- qcdl fuzz corpus


def _num(x: float) -> str:
    return repr(float(x))


def _matrix(m: np.ndarray) -> str:
    return "[" + ", ".join("[" + ", ".join(f"[{_num(z.real)}, {_num(z.imag)}]" for z in row) + "]" for row in m) + "]"


def _spec(g: dict) -> str:
    name = g["gate"]
    if name not in ("controlled", "matrix") and not g.get("adjoint"):
        return json.dumps(name)
    parts = [f"gate: {json.dumps(name)}"]
    if name == "controlled":
        parts.append("conditionals: [" + ", ".join(_spec(c) for c in g["conditionals"]) + "]")
    if name == "matrix":
        parts.append("matrix: " + _matrix(g["matrix"]))
    if g.get("adjoint"):
        parts.append("adjoint: true")
    return "{" + ", ".join(parts) + "}"


def render(model: dict) -> str:
    """Document text for a model, written independently of ``qcdl.serialize``."""
    out = ["version: qcdl-1", "wires:"]
    out += [f"  - {{label: {json.dumps(label)}, dim: {dim}}}" for label, dim in model["wires"]]
    out.append("layers:" if model["layers"] else "layers: []")
    for layer in model["layers"]:
        if not layer:
            out.append("  - []")
            continue
        for j, g in enumerate(layer):
            body = _spec(g)
            fields = body[1:-1] if body.startswith("{") else f"gate: {body}"
            fields += ", in: [" + ", ".join(json.dumps(w) for w in g["in"]) + "]"
            if "out" in g:
                fields += ", out: [" + ", ".join(json.dumps(w) for w in g["out"]) + "]"
            if g.get("name"):
                fields += f", name: {json.dumps(g['name'])}"
            out.append(("  - - " if j == 0 else "    - ") + "{" + fields + "}")
    if "systems" in model:
        out.append("systems:" if model["systems"] else "systems: []")
        out += [f"  - {{name: {json.dumps(n)}, wire: {json.dumps(w)}, slot: {s}}}" for n, w, s in model["systems"]]
    out.append("...")
    return "\n".join(out) + "\n"


def _random_gate(rng, wires: dict[str, int], free: list[str]) -> dict | None:
    qubits = [w for w in free if wires[w] == 2]
    kinds = ["identity", "matrix1"]
    if qubits:
        kinds += ["hadamard", "pauli_x", "pauli_y", "pauli_z"]
    if len(qubits) >= 2:
        kinds += ["cnot", "swap"]
    if len(free) >= 2:
        kinds += ["controlled", "matrix2"]
    kind = kinds[rng.integers(len(kinds))]
    adjoint = bool(rng.random() < 0.2)
    if kind in ("hadamard", "pauli_x", "pauli_y", "pauli_z"):
        return {"gate": kind, "in": [qubits[rng.integers(len(qubits))]], "adjoint": adjoint}
    if kind == "identity":
        return {"gate": "identity", "in": [free[rng.integers(len(free))]]}
    if kind == "matrix1":
        w = free[rng.integers(len(free))]
        return {"gate": "matrix", "in": [w], "matrix": haar_unitary(wires[w], rng), "adjoint": adjoint}
    if kind in ("cnot", "swap"):
        a, b = rng.choice(len(qubits), size=2, replace=False)
        g = {"gate": kind, "in": [qubits[a], qubits[b]], "adjoint": adjoint}
        if rng.random() < 0.3:
            g["out"] = [qubits[b], qubits[a]]
        return g
    a, b = rng.choice(len(free), size=2, replace=False)
    ctrl, tgt = free[a], free[b]
    if kind == "matrix2":
        dim = wires[ctrl] * wires[tgt]
        return {"gate": "matrix", "in": [ctrl, tgt], "matrix": haar_unitary(dim, rng), "adjoint": adjoint}
    conds = []
    for _ in range(wires[ctrl]):
        if wires[tgt] == 2 and rng.random() < 0.5:
            conds.append({"gate": ["identity", "pauli_x", "hadamard", "pauli_z"][rng.integers(4)]})
        else:
            conds.append({"gate": "matrix", "matrix": haar_unitary(wires[tgt], rng)})
    return {"gate": "controlled", "in": [ctrl, tgt], "conditionals": conds, "adjoint": adjoint}


def fuzz_model(seed: int) -> dict:
    """A random valid circuit document model."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 5))
    labels = [f"w{i}" for i in range(n)]
    dims = {w: int(rng.choice([2, 2, 2, 3])) for w in labels}
    layers = []
    for _ in range(int(rng.integers(0, 5))):
        free = list(labels)
        layer = []
        while free and rng.random() < 0.8:
            g = _random_gate(rng, dims, free)
            for w in g["in"]:
                free.remove(w)
            if rng.random() < 0.4:
                g["name"] = f"g{len(layers)}_{len(layer)}"
            layer.append(g)
        layers.append(layer)
    starts = {w: [0] for w in labels}
    for k, layer in enumerate(layers):
        for g in layer:
            for w in g["in"]:
                starts[w].append(k + 1)
    segments = [(w, s) for w in labels for s in starts[w]]
    pick = rng.choice(len(segments), size=int(rng.integers(0, len(segments) + 1)), replace=False)
    systems = [(f"S{i}", segments[j][0], segments[j][1]) for i, j in enumerate(sorted(pick))]
    return {"wires": [(w, dims[w]) for w in labels], "layers": layers, "systems": systems}


MUTATIONS = ("dim_change", "label_collision", "truncation")


def _dim_sensitive_wires(model: dict) -> list[str]:
    out = set()
    for layer in model["layers"]:
        for g in layer:
            if g["gate"] in ("cnot", "hadamard", "pauli_x", "pauli_y", "pauli_z", "matrix"):
                out.update(g["in"])
            elif g["gate"] == "controlled":
                out.add(g["in"][0])
    return sorted(out)


def mutate(model: dict, kind: str, seed: int) -> str | None:
    """Text of an invalid variant of ``model``, or ``None`` when ``kind`` does not apply."""
    rng = np.random.default_rng(seed)
    m = copy.deepcopy(model)
    if kind == "dim_change":
        wires = _dim_sensitive_wires(m)
        if not wires:
            return None
        w = wires[rng.integers(len(wires))]
        m["wires"] = [(label, (d + 1 if d == 2 else d - 1) if label == w else d) for label, d in m["wires"]]
        return render(m)
    if kind == "label_collision":
        options = []
        if len(m["wires"]) >= 2:
            options.append("wire")
        if len(m["systems"]) >= 2:
            options.append("system")
        if not options:
            return None
        if options[rng.integers(len(options))] == "wire":
            i, j = rng.choice(len(m["wires"]), size=2, replace=False)
            m["wires"][i] = (m["wires"][j][0], m["wires"][i][1])
        else:
            i, j = rng.choice(len(m["systems"]), size=2, replace=False)
            m["systems"][i] = (m["systems"][j][0],) + tuple(m["systems"][i][1:])
        return render(m)
    if kind == "truncation":
        text = render(m)
        end = text.rindex("...")
        return text[: int(rng.integers(0, end))]
    raise ValueError(kind)


def model_matches(model: dict, circ) -> bool:
    """Check a parsed circuit against the model it was rendered from."""
    if [(b, d) for b, d in circ.wires] != [tuple(w) for w in model["wires"]]:
        return False
    if len(circ.layers) != len(model["layers"]):
        return False
    labels = circ.labels
    for gl, ml in zip(circ.layers, model["layers"]):
        if len(gl) != len(ml):
            return False
        for g, mg in zip(gl, ml):
            if [labels[w] for w in g.inputs] != mg["in"]:
                return False
            if [labels[w] for w in g.outputs] != mg.get("out", mg["in"]):
                return False
            if g.spec.name != mg["gate"] or g.spec.adjoint != bool(mg.get("adjoint")):
                return False
            if mg["gate"] == "matrix":
                want = np.conj(mg["matrix"].T) if mg.get("adjoint") else mg["matrix"]
                if not np.array_equal(g.matrix, want):
                    return False
    return True


def bell_projector() -> np.ndarray:
    return projector((kron(KET0, KET0) + kron(KET1, KET1)) / np.sqrt(2))
