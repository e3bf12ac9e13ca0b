"""Layered unitary circuits, systems of interest, and their decohered histories.

A circuit has fixed wire tracks. Slot ``k`` is the time boundary before layer
``k`` (slot 0 is the input, slot ``len(layers)`` the output). A wire segment
runs between consecutive gates touching its wire; a :class:`SystemRef` names a
segment by any slot inside it.

Algebras of a system are reported at its own slot. Event projectors are also
pulled back to the input boundary, where all probabilities are evaluated.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import vnalgebra as va
from .errors import ConsistencyError, DimensionError, InputError, NullEventError
from .linops import (
    TAU_ALG,
    check_unitary,
    dagger,
    embed,
    local_generators,
)

NEGATIVE_CLAMP = -1e-12
NORMALIZATION_TOL = 1e-9
NULL_EVENT = 1e-12


def place(matrix: np.ndarray, col_dims: Sequence[int], row_dims: Sequence[int],
          positions: Sequence[int]) -> np.ndarray:
    """Full-width operator applying ``matrix`` on ``positions``, identity elsewhere.

    ``matrix`` maps the legs at ``positions`` (dims taken from ``col_dims``)
    to the same positions with dims from ``row_dims``; the other positions
    must have equal row and column dims.
    """
    n = len(col_dims)
    positions = list(positions)
    rest = [i for i in range(n) if i not in positions]
    if any(col_dims[i] != row_dims[i] for i in rest):
        raise DimensionError("untouched legs must keep their dimension")
    din = [col_dims[p] for p in positions]
    dout = [row_dims[p] for p in positions]
    if matrix.shape != (math.prod(dout), math.prod(din)):
        raise DimensionError(f"gate shape {matrix.shape} does not match legs {din} -> {dout}")
    drest = [col_dims[i] for i in rest]
    big = np.kron(matrix, np.eye(math.prod(drest), dtype=complex))
    t = big.reshape(dout + drest + din + drest)
    order = positions + rest
    k = len(order)
    row_axes = [order.index(i) for i in range(n)]
    col_axes = [k + order.index(i) for i in range(n)]
    return t.transpose(row_axes + col_axes).reshape(math.prod(row_dims), math.prod(col_dims))


@dataclass(frozen=True, eq=False)
class Gate:
    """A unitary binding input legs to wires ``inputs`` and output legs to ``outputs``.

    ``outputs`` is a reordering of ``inputs``; ``spec`` keeps the builtin
    description for serialization and ``name`` is a free-form tag.
    """

    matrix: np.ndarray
    inputs: tuple[int, ...]
    outputs: tuple[int, ...]
    spec: object | None = None
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(int(i) for i in self.inputs))
        object.__setattr__(self, "outputs", tuple(int(i) for i in self.outputs))
        object.__setattr__(self, "matrix", check_unitary(self.matrix, f"gate {self.name or ''}".strip()))
        if sorted(self.inputs) != sorted(self.outputs) or len(set(self.inputs)) != len(self.inputs):
            raise DimensionError("gate outputs must be a reordering of distinct input wires")

    def adjoint(self) -> "Gate":
        return Gate(dagger(self.matrix), self.outputs, self.inputs, None, self.name + "^-1" if self.name else "")


@dataclass(frozen=True, eq=False)
class Circuit:
    wires: tuple[tuple[str, int], ...]
    layers: tuple[tuple[Gate, ...], ...]

    def __post_init__(self):
        wires = tuple((str(label), int(dim)) for label, dim in self.wires)
        layers = tuple(tuple(layer) for layer in self.layers)
        object.__setattr__(self, "wires", wires)
        object.__setattr__(self, "layers", layers)
        labels = [w[0] for w in wires]
        if len(set(labels)) != len(labels):
            raise InputError("wire labels must be unique")
        if any(d < 1 for _, d in wires):
            raise DimensionError("wire dimensions must be positive")
        dims = self.dims
        for li, layer in enumerate(layers):
            used: set[int] = set()
            for gate in layer:
                if any(w < 0 or w >= len(wires) for w in gate.inputs):
                    raise InputError(f"layer {li}: gate refers to an unknown wire")
                if used & set(gate.inputs):
                    raise InputError(f"layer {li}: gates act on overlapping wires")
                used |= set(gate.inputs)
                din = math.prod(dims[w] for w in gate.inputs)
                dout = math.prod(dims[w] for w in gate.outputs)
                if gate.matrix.shape != (dout, din):
                    raise DimensionError(
                        f"layer {li}: gate {gate.name!r} has shape {gate.matrix.shape}, wires need {(dout, din)}"
                    )

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(d for _, d in self.wires)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.wires)

    @property
    def dim(self) -> int:
        return math.prod(self.dims)

    @property
    def n_slots(self) -> int:
        return len(self.layers) + 1

    def wire_index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise InputError(f"unknown wire {label!r}") from None

    def gate_operator(self, gate: Gate) -> np.ndarray:
        dims = list(self.dims)
        # Reorder the matrix's output legs to follow the input binding order.
        order = list(gate.inputs)
        mat = gate.matrix
        perm = [order.index(w) for w in gate.outputs]
        out_dims = [dims[w] for w in gate.outputs]
        if perm != list(range(len(perm))):
            t = mat.reshape(out_dims + [dims[w] for w in gate.inputs])
            k = len(perm)
            inv = [perm.index(j) for j in range(k)]
            t = t.transpose(inv + list(range(k, 2 * k)))
            mat = t.reshape(mat.shape)
        return place(mat, dims, dims, order)

    @cached_property
    def layer_unitaries(self) -> tuple[np.ndarray, ...]:
        out = []
        for layer in self.layers:
            u = np.eye(self.dim, dtype=complex)
            for gate in layer:
                u = self.gate_operator(gate) @ u
            out.append(check_unitary(u, "layer unitary"))
        return tuple(out)

    @cached_property
    def prefix_unitaries(self) -> tuple[np.ndarray, ...]:
        """``P_k``: the evolution from slot 0 to slot ``k``."""
        acc = [np.eye(self.dim, dtype=complex)]
        for u in self.layer_unitaries:
            acc.append(u @ acc[-1])
        return tuple(acc)

    def unitary(self) -> np.ndarray:
        return self.prefix_unitaries[-1]

    def transport(self, op: np.ndarray, from_slot: int, to_slot: int) -> np.ndarray:
        """Re-express an operator given at ``from_slot`` in the frame of ``to_slot``."""
        p = self.prefix_unitaries
        u = p[to_slot] @ dagger(p[from_slot])
        return u @ op @ dagger(u)

    def touches(self, layer: int, wire: int) -> Gate | None:
        for gate in self.layers[layer]:
            if wire in gate.inputs:
                return gate
        return None

    def segment(self, wire: int, slot: int) -> tuple[int, int]:
        """``(wire, start_slot)`` of the segment containing ``(wire, slot)``."""
        if not 0 <= wire < len(self.wires) or not 0 <= slot < self.n_slots:
            raise InputError(f"system coordinates (wire {wire}, slot {slot}) out of range")
        start = 0
        for layer in range(slot):
            if self.touches(layer, wire) is not None:
                start = layer + 1
        return (wire, start)

    def segment_end(self, seg: tuple[int, int]) -> int | None:
        wire, start = seg
        for layer in range(start, len(self.layers)):
            if self.touches(layer, wire) is not None:
                return layer
        return None

    def successors(self, seg: tuple[int, int]) -> list[tuple[int, int]]:
        end = self.segment_end(seg)
        if end is None:
            return []
        gate = self.touches(end, seg[0])
        return [(w, end + 1) for w in gate.outputs]

    def all_segments(self) -> list[tuple[int, int]]:
        segs = set()
        for w in range(len(self.wires)):
            for s in range(self.n_slots):
                segs.add(self.segment(w, s))
        return sorted(segs, key=lambda x: (x[1], x[0]))

    def reachable(self, seg: tuple[int, int]) -> set[tuple[int, int]]:
        """Segments strictly above ``seg`` along directed wire paths."""
        seen: set[tuple[int, int]] = set()
        stack = self.successors(seg)
        while stack:
            s = stack.pop()
            if s not in seen:
                seen.add(s)
                stack.extend(self.successors(s))
        return seen

    def without_gates(self, names: Iterable[str]) -> "Circuit":
        names = set(names)
        return Circuit(self.wires, tuple(tuple(g for g in layer if g.name not in names) for layer in self.layers))


@dataclass(frozen=True)
class SystemRef:
    wire: int
    slot: int
    name: str = ""

    def label(self) -> str:
        return self.name or f"{self.wire}@{self.slot}"


@dataclass(frozen=True, eq=False)
class SystemsOfInterest:
    """The chosen systems, ordered so that every system follows those below it."""

    circuit: Circuit
    refs: tuple[SystemRef, ...]

    def __post_init__(self):
        refs = tuple(self.refs)
        segs = [self.circuit.segment(r.wire, r.slot) for r in refs]
        if len(set(segs)) != len(segs):
            raise InputError("systems of interest must name distinct wire segments")
        names = [r.label() for r in refs]
        if len(set(names)) != len(names):
            raise InputError("systems of interest must have distinct names")
        order = sorted(range(len(refs)), key=lambda i: (segs[i][1], i))
        object.__setattr__(self, "refs", tuple(refs[i] for i in order))

    @classmethod
    def from_labels(cls, circuit: Circuit, entries: Iterable[tuple[str, str, int]]) -> "SystemsOfInterest":
        """Build from ``(name, wire_label, slot)`` triples."""
        return cls(circuit, tuple(SystemRef(circuit.wire_index(w), int(s), n) for n, w, s in entries))

    @classmethod
    def all_segments(cls, circuit: Circuit) -> "SystemsOfInterest":
        return cls(circuit, tuple(SystemRef(w, s, f"{circuit.labels[w]}@{s}") for w, s in circuit.all_segments()))

    def __len__(self) -> int:
        return len(self.refs)

    def names(self) -> list[str]:
        return [r.label() for r in self.refs]

    def segment(self, ref: SystemRef) -> tuple[int, int]:
        return self.circuit.segment(ref.wire, ref.slot)

    def above(self, ref: SystemRef) -> list[SystemRef]:
        up = self.circuit.reachable(self.segment(ref))
        return [r for r in self.refs if self.segment(r) in up]

    def below(self, ref: SystemRef) -> list[SystemRef]:
        seg = self.segment(ref)
        return [r for r in self.refs if seg in self.circuit.reachable(self.segment(r))]

    def subset(self, names: Iterable[str]) -> "SystemsOfInterest":
        names = list(names)
        by_name = {r.label(): r for r in self.refs}
        missing = [n for n in names if n not in by_name]
        if missing:
            raise InputError(f"unknown systems {missing}")
        return SystemsOfInterest(self.circuit, tuple(by_name[n] for n in names))

    def ref(self, name: str) -> SystemRef:
        for r in self.refs:
            if r.label() == name:
                return r
        raise InputError(f"unknown system {name!r}")


def pullback(circuit: Circuit, ref: SystemRef) -> va.OperatorAlgebra:
    """Full algebra of ``ref``'s wire at its slot, expressed at the input boundary."""
    circuit.segment(ref.wire, ref.slot)
    alg = va.factor_algebra(circuit.dims, ref.wire)
    p = circuit.prefix_unitaries[ref.slot]
    basis = np.einsum("ji,kjl,lm->kim", np.conj(p), alg.basis, p)
    return va.OperatorAlgebra(basis, circuit.dims)


@dataclass(frozen=True, eq=False)
class SystemAnalysis:
    ref: SystemRef
    up_pacc: va.OperatorAlgebra
    up_acc: va.OperatorAlgebra
    up_dec: va.OperatorAlgebra
    down_pacc: va.OperatorAlgebra
    down_acc: va.OperatorAlgebra
    down_dec: va.OperatorAlgebra
    up_events: va.SubspaceDecomposition
    down_events: va.SubspaceDecomposition
    pulled_back_up: np.ndarray
    pulled_back_down: np.ndarray


def _wire_generators_at(circuit: Circuit, refs: Sequence[SystemRef], slot: int) -> list[np.ndarray]:
    gens = []
    p = circuit.prefix_unitaries
    for r in refs:
        u = p[slot] @ dagger(p[r.slot])
        for g in local_generators(circuit.dims[r.wire]):
            gens.append(u @ embed(g, circuit.dims, [r.wire]) @ dagger(u))
    return gens


def _dec_triple(circuit: Circuit, ref: SystemRef, others: Sequence[SystemRef], seed: int):
    pacc = va.factor_commutant(_wire_generators_at(circuit, others, ref.slot), circuit.dims, ref.wire)
    acc = va.commutant(pacc, within=va.full(pacc.ambient_dim))
    dec = va.intersect(acc, pacc)
    if not va.equals(dec, va.center(pacc)):
        raise ConsistencyError(f"system {ref.label()}: decohered algebra differs from the centre")
    events = va.block_structure(dec, seed).decomposition()
    return pacc, acc, dec, events


def _pull_projectors(circuit: Circuit, ref: SystemRef, events: va.SubspaceDecomposition) -> np.ndarray:
    p = circuit.prefix_unitaries[ref.slot]
    return np.array([dagger(p) @ embed(q, circuit.dims, [ref.wire]) @ p for q in events.projectors])


def system_analysis(circuit: Circuit, soi: SystemsOfInterest, ref: SystemRef, seed: int = 0) -> SystemAnalysis:
    """Up and down decohered algebras of ``ref`` relative to the other systems."""
    if ref not in soi.refs:
        raise InputError(f"{ref.label()} is not a system of interest")
    up = _dec_triple(circuit, ref, soi.above(ref), seed)
    down = _dec_triple(circuit, ref, soi.below(ref), seed)
    return SystemAnalysis(
        ref=ref,
        up_pacc=up[0], up_acc=up[1], up_dec=up[2],
        down_pacc=down[0], down_acc=down[1], down_dec=down[2],
        up_events=up[3], down_events=down[3],
        pulled_back_up=_pull_projectors(circuit, ref, up[3]),
        pulled_back_down=_pull_projectors(circuit, ref, down[3]),
    )


def _max_commutator(families: Sequence[np.ndarray]) -> float:
    worst = 0.0
    for (i, a), (j, b) in itertools.combinations(enumerate(families), 2):
        if len(a) == 1 or len(b) == 1:
            continue
        comm = a[:, None] @ b[None] - b[None] @ a[:, None]
        worst = max(worst, float(np.max(np.abs(comm))))
    return worst


def _products(d: int, families: Sequence[np.ndarray], reverse: bool = False) -> np.ndarray:
    """Products over all index tuples, first family varying slowest."""
    out = np.eye(d, dtype=complex)[None]
    for fam in families:
        if reverse:
            out = (fam[None] @ out[:, None]).reshape(-1, d, d)
        else:
            out = (out[:, None] @ fam[None]).reshape(-1, d, d)
    return out


@dataclass(frozen=True, eq=False)
class HistoryDistribution:
    """Probabilities over ``(f_1, e_1, ..., f_n, e_n)``.

    ``families[i]`` holds the pulled-back projectors of ``variables[i]``;
    ``f_`` variables are down-events (state-like), ``e_`` variables up-events.
    """

    d: int
    variables: tuple[str, ...]
    arities: tuple[int, ...]
    table: np.ndarray
    families: tuple[np.ndarray, ...] = field(repr=False)

    def index(self, name: str) -> int:
        try:
            return self.variables.index(name)
        except ValueError:
            raise InputError(f"unknown event variable {name!r}") from None

    def nontrivial(self) -> list[str]:
        return [v for v, a in zip(self.variables, self.arities) if a > 1]

    def down_families(self) -> list[np.ndarray]:
        return [f for v, f in zip(self.variables, self.families) if v.startswith("f_")]

    def up_families(self) -> list[np.ndarray]:
        return [f for v, f in zip(self.variables, self.families) if v.startswith("e_")]


def _tabulate(d: int, down: Sequence[np.ndarray], up: Sequence[np.ndarray]) -> tuple[np.ndarray, float]:
    """Table over (down tuple, up tuple) and the product-order discrepancy."""
    pd, pu = _products(d, down), _products(d, up)
    spread = 0.0
    if len(down) > 1:
        spread = max(spread, float(np.max(np.abs(pd - _products(d, down, reverse=True)))))
    if len(up) > 1:
        spread = max(spread, float(np.max(np.abs(pu - _products(d, up, reverse=True)))))
    table = np.real(pd.reshape(len(pd), -1) @ np.swapaxes(pu, 1, 2).reshape(len(pu), -1).T) / d
    return table, spread


def _assemble(d: int, names: Sequence[str], downs: Sequence[np.ndarray], ups: Sequence[np.ndarray]) -> HistoryDistribution:
    nd = [f for f in downs if len(f) > 1]
    nu = [f for f in ups if len(f) > 1]
    if _max_commutator(nd) > TAU_ALG or _max_commutator(nu) > TAU_ALG:
        raise ConsistencyError("decohered projectors of different systems fail to commute")
    flat, spread = _tabulate(d, nd, nu)
    if spread > TAU_ALG:
        raise ConsistencyError(f"projector products depend on ordering (spread {spread:.2e})")
    if flat.size and float(np.min(flat)) < NEGATIVE_CLAMP:
        raise ConsistencyError(f"negative history probability {float(np.min(flat)):.3e}")
    flat = np.where(flat < 0, 0.0, flat)
    if abs(float(flat.sum()) - 1.0) > NORMALIZATION_TOL:
        raise ConsistencyError(f"history probabilities sum to {float(flat.sum())!r}")
    shape = [len(f) for f in nd] + [len(f) for f in nu]
    t = flat.reshape(shape)
    n = len(names)
    dn = [i for i in range(n) if len(downs[i]) > 1]
    un = [i for i in range(n) if len(ups[i]) > 1]
    # interleave: axis order (f_1, e_1, ..., f_n, e_n)
    axes_pos = {("f", i): k for k, i in enumerate(dn)}
    axes_pos.update({("e", i): len(dn) + k for k, i in enumerate(un)})
    variables, arities, families, perm = [], [], [], []
    for i, name in enumerate(names):
        for kind, fams in (("f", downs), ("e", ups)):
            variables.append(f"{kind}_{name}")
            arities.append(len(fams[i]))
            families.append(fams[i])
            if (kind, i) in axes_pos:
                perm.append(axes_pos[(kind, i)])
    t = t.transpose(perm).reshape(arities) if perm else t.reshape(arities)
    return HistoryDistribution(d, tuple(variables), tuple(arities), t, tuple(families))


@dataclass(frozen=True, eq=False)
class HistorySet:
    distribution: HistoryDistribution
    analyses: dict[str, SystemAnalysis]
    systems: SystemsOfInterest


def derive_history_set(circuit: Circuit, soi: SystemsOfInterest, seed: int = 0) -> HistorySet:
    """Per-system analyses and the probability table of the derived history set."""
    analyses = {r.label(): system_analysis(circuit, soi, r, seed) for r in soi.refs}
    names = soi.names()
    dist = _assemble(
        circuit.dim, names,
        [analyses[n].pulled_back_down for n in names],
        [analyses[n].pulled_back_up for n in names],
    )
    return HistorySet(dist, analyses, soi)


def _normalize_assignment(hd: HistoryDistribution, assignment) -> dict[str, int]:
    if isinstance(assignment, Mapping):
        out = {}
        for k, v in assignment.items():
            i = hd.index(k)
            v = int(v)
            if not 0 <= v < hd.arities[i]:
                raise InputError(f"{k}={v} outside arity {hd.arities[i]}")
            out[k] = v
        return out
    values = tuple(int(v) for v in assignment)
    if len(values) != len(hd.variables):
        raise InputError(f"expected {len(hd.variables)} indices, got {len(values)}")
    return _normalize_assignment(hd, dict(zip(hd.variables, values)))


def probability(hd: HistoryDistribution, assignment, exact: bool = False) -> float:
    """Probability of a full history; trivial variables may be omitted.

    ``exact`` recomputes the trace from the stored projectors instead of
    reading the table.
    """
    a = _normalize_assignment(hd, assignment)
    missing = [v for v in hd.nontrivial() if v not in a]
    if missing:
        raise InputError(f"assignment leaves {missing} unspecified; use marginal()")
    idx = tuple(a.get(v, 0) for v in hd.variables)
    if not exact:
        return float(hd.table[idx])
    down = np.eye(hd.d, dtype=complex)
    up = np.eye(hd.d, dtype=complex)
    for v, fam, i in zip(hd.variables, hd.families, idx):
        if v.startswith("f_"):
            down = down @ fam[i]
        else:
            up = up @ fam[i]
    return float(np.real(np.trace(down @ up))) / hd.d


def marginal(hd: HistoryDistribution, names: Sequence[str]) -> np.ndarray:
    """Marginal table with axes in the order of ``names``."""
    idx = [hd.index(n) for n in names]
    if len(set(idx)) != len(idx):
        raise InputError("marginal variables must be distinct")
    others = tuple(i for i in range(len(hd.variables)) if i not in idx)
    m = hd.table.sum(axis=others)
    kept = sorted(idx)
    return np.transpose(m, [kept.index(i) for i in idx])


def conditional(hd: HistoryDistribution, targets: Sequence[str], given: Mapping[str, int]) -> dict[tuple[int, ...], float]:
    """``Prob(targets | given)`` as a map from target index tuples to probabilities."""
    targets = list(targets)
    given = _normalize_assignment(hd, given)
    overlap = set(targets) & set(given)
    if overlap:
        raise InputError(f"variables {sorted(overlap)} are both targets and conditions")
    names = targets + list(given)
    joint = marginal(hd, names)
    sel = joint[(Ellipsis,) + tuple(given[g] for g in given)] if given else joint
    norm = float(sel.sum())
    if norm <= NULL_EVENT:
        raise NullEventError(f"conditioning event {given} has probability {norm:.3e}")
    return {tuple(int(i) for i in k): float(sel[k]) / norm for k in np.ndindex(*sel.shape)}


@dataclass(frozen=True)
class ConsistencyReport:
    nonnegative: bool
    normalization_error: float
    additivity_error: float
    strong_error: float
    table_error: float
    tol: float = 1e-9

    @property
    def passed(self) -> bool:
        return (
            self.nonnegative
            and self.normalization_error < self.tol
            and self.additivity_error < self.tol
            and self.strong_error < self.tol
            and self.table_error < self.tol
        )

    def violations(self) -> list[str]:
        out = []
        if not self.nonnegative:
            out.append("negative probability")
        for name in ("normalization_error", "additivity_error", "strong_error", "table_error"):
            if getattr(self, name) >= self.tol:
                out.append(f"{name}={getattr(self, name):.3e}")
        return out


def decoherence_functional(families: Sequence[np.ndarray], rho: np.ndarray) -> np.ndarray:
    """``D(h, h') = Tr(C_h rho C_h'^dagger)`` with ``C_h = P_m^{h_m} ... P_1^{h_1}``.

    ``families`` are listed in temporal order; histories are enumerated with
    the first family varying slowest.
    """
    d = rho.shape[0]
    c = np.eye(d, dtype=complex)[None]
    for fam in families:
        c = (fam[None] @ c[:, None]).reshape(-1, d, d)
    a = (c @ rho).reshape(len(c), -1)
    return a @ np.conj(c.reshape(len(c), -1)).T


def functional_consistency(families: Sequence[np.ndarray], rho: np.ndarray,
                           table: np.ndarray | None = None, tol: float = 1e-9) -> ConsistencyReport:
    """Sum-rule and strong-orthogonality checks of a projector history family."""
    dmat = decoherence_functional(families, rho)
    shape = tuple(len(f) for f in families)
    probs = np.real(np.diag(dmat))
    nonneg = bool(np.min(probs, initial=0.0) >= NEGATIVE_CLAMP)
    norm_err = abs(float(probs.sum()) - 1.0)
    add_err = 0.0
    idx = list(np.ndindex(*shape)) if shape else [()]
    for a, ha in enumerate(idx):
        for b in range(a + 1, len(idx)):
            hb = idx[b]
            diff = sum(x != y for x, y in zip(ha, hb))
            if diff == 1:
                add_err = max(add_err, 2 * abs(float(np.real(dmat[a, b]))))
    off = dmat - np.diag(np.diag(dmat))
    strong = float(np.max(np.abs(off), initial=0.0))
    table_err = 0.0 if table is None else float(np.max(np.abs(probs - np.asarray(table).reshape(-1)), initial=0.0))
    return ConsistencyReport(nonneg, norm_err, add_err, strong, table_err, tol)


def check_consistency(hd: HistoryDistribution, tol: float = 1e-9) -> ConsistencyReport:
    """Consistency of a derived history set with the maximally mixed initial state."""
    nd = [f for f in hd.down_families() if len(f) > 1]
    nu = [f for f in hd.up_families() if len(f) > 1]
    rho = np.eye(hd.d, dtype=complex) / hd.d
    flat, _ = _tabulate(hd.d, nd, nu)
    return functional_consistency(nd + nu, rho, flat, tol)


def table_at_slot(circuit: Circuit, hd: HistoryDistribution, slot: int) -> np.ndarray:
    """Recompute the flat (down, up) table with every projector moved to ``slot``."""
    p = circuit.prefix_unitaries[slot]

    def move(fam):
        return np.einsum("ij,kjl,ml->kim", p, fam, np.conj(p))

    nd = [move(f) for f in hd.down_families() if len(f) > 1]
    nu = [move(f) for f in hd.up_families() if len(f) > 1]
    return _tabulate(hd.d, nd, nu)[0]
