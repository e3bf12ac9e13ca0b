"""Broken-wire route to the preferred decompositions of a circuit.

Cutting the wire segment of every system of interest turns the circuit into a
single unitary ``V: (⊗ X_out) ⊗ P -> (⊗ X_in) ⊗ F``. ``X_out`` is the fresh
leg leaving the cut, ``X_in`` the leg entering it, ``P`` the circuit input and
``F`` the circuit output.

The up-route pacc of ``X`` is the set of operators ``M`` on ``X_out`` with
``V (M ⊗ I) V^dagger`` trivial on every ``Y_in``; the down route applies the
same test to ``V^-1``. The operators are pushed through the network gate by
gate. Whenever one reaches a cut, it must act as the identity on the entering
leg; it is then traced out there and the leaving leg starts with the identity.
This never forms ``V`` itself, whose dimension is the circuit dimension times
that of every cut.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from . import vnalgebra as va
from .circuit import Circuit, Gate, SystemRef, SystemsOfInterest, derive_history_set
from .errors import DimensionError
from .linops import TAU_INF, dagger, embed, matrix_units, stacked_kernel
from .sampling import haar_unitary

MAX_DENSE_DIM = 4096
INCOMPATIBLE_SAMPLES = 20
COMMUTATION_TOL = 1e-6


def _apply_gate(x: np.ndarray, gate: Gate, dims: Sequence[int]) -> np.ndarray:
    """Conjugate a batch ``x`` of shape ``(k, *dims, *dims)`` by one gate."""
    n = len(dims)
    m = len(gate.inputs)
    ut = gate.matrix.reshape([dims[w] for w in gate.outputs] + [dims[w] for w in gate.inputs])
    ins = list(range(m, 2 * m))
    y = np.tensordot(ut, x, axes=(ins, [1 + w for w in gate.inputs]))
    y = np.moveaxis(y, list(range(m)), [1 + w for w in gate.outputs])
    y = np.tensordot(np.conj(ut), y, axes=(ins, [1 + n + w for w in gate.inputs]))
    return np.moveaxis(y, list(range(m)), [1 + n + w for w in gate.outputs])


def _cut(x: np.ndarray, wire: int, dims: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    """Split ``x`` into its identity part on ``wire`` and the remainder."""
    d = dims[wire]
    pre, post = math.prod(dims[:wire]), math.prod(dims[wire + 1:])
    v = np.ascontiguousarray(x).reshape(len(x), pre, d, post, pre, d, post)
    t = np.einsum("kaibcie->kabce", v) / d
    rep = t[:, :, None, :, :, None, :] * np.eye(d)[None, None, :, None, None, :, None]
    return rep.reshape(x.shape), (v - rep).reshape(x.shape)


@dataclass(frozen=True, eq=False)
class BrokenCircuit:
    """A circuit with the segments of ``systems`` cut open."""

    circuit: Circuit
    systems: SystemsOfInterest

    @property
    def cuts(self) -> tuple[SystemRef, ...]:
        return self.systems.refs

    def input_legs(self) -> list[tuple[str, int]]:
        c = self.circuit
        return [(f"{r.label()}_out", c.dims[r.wire]) for r in self.cuts] + list(c.wires)

    def output_legs(self) -> list[tuple[str, int]]:
        c = self.circuit
        return [(f"{r.label()}_in", c.dims[r.wire]) for r in self.cuts] + list(c.wires)

    @property
    def dim(self) -> int:
        return math.prod(d for _, d in self.input_legs())

    def unitary(self) -> np.ndarray:
        """Dense ``V`` with legs ordered as :meth:`input_legs` and :meth:`output_legs`.

        Built on a register of the circuit wires plus one ancilla per cut:
        at each cut the wire is swapped with its ancilla.
        """
        if self.dim > MAX_DENSE_DIM:
            raise DimensionError(f"broken channel of dimension {self.dim} exceeds {MAX_DENSE_DIM}")
        c = self.circuit
        nw = len(c.wires)
        dims = list(c.dims) + [c.dims[r.wire] for r in self.cuts]
        big = Circuit(
            tuple(c.wires) + tuple((f"_cut{i}", d) for i, d in enumerate(dims[nw:])),
            (),
        )
        total = np.eye(math.prod(dims), dtype=complex)

        def swaps_at(slot: int) -> None:
            nonlocal total
            for i, r in enumerate(self.cuts):
                if r.slot == slot:
                    d = c.dims[r.wire]
                    sw = np.eye(d * d)[[(b * d + a) for a in range(d) for b in range(d)]]
                    total = big.gate_operator(Gate(sw, (r.wire, nw + i), (r.wire, nw + i))) @ total

        for layer in range(len(c.layers)):
            swaps_at(layer)
            for gate in c.layers[layer]:
                total = big.gate_operator(gate) @ total
        swaps_at(len(c.layers))
        # register order is (wires, ancillas); V wants (ancillas, wires) on both sides
        t = total.reshape(dims + dims)
        n = len(dims)
        order = list(range(nw, n)) + list(range(nw))
        t = t.transpose(order + [n + i for i in order])
        return t.reshape(total.shape)

    def _propagate(self, ref: SystemRef, ops: np.ndarray, up: bool) -> list[np.ndarray]:
        """Constraint residuals met by ``ops`` (on ``ref``'s wire) on the way to the cuts."""
        c = self.circuit
        dims = list(c.dims)
        k = len(ops)
        x = np.array([embed(op, dims, [ref.wire]) for op in ops]).reshape([k] + dims + dims)
        residuals = []

        def cuts_at(slot: int) -> None:
            nonlocal x
            for r in self.cuts:
                if r.slot == slot and r != ref:
                    x, res = _cut(x, r.wire, dims)
                    residuals.append(res.reshape(k, -1).T)

        if up:
            for layer in range(ref.slot, len(c.layers)):
                for gate in c.layers[layer]:
                    x = _apply_gate(x, gate, dims)
                cuts_at(layer + 1)
        else:
            for layer in range(ref.slot - 1, -1, -1):
                for gate in c.layers[layer]:
                    x = _apply_gate(x, gate.adjoint(), dims)
                cuts_at(layer)
        return residuals

    def residual_map(self, ref: SystemRef, up: bool = True) -> np.ndarray:
        """Linear map from ``vec(M)`` on ``ref``'s wire to the residuals at the cuts.

        Returned as the triangular factor of the stacked residuals, which keeps
        the kernel and every residual norm.
        """
        d = self.circuit.dims[ref.wire]
        blocks = self._propagate(ref, matrix_units(d), up)
        if not blocks:
            return np.zeros((0, d * d), dtype=complex)
        return np.linalg.qr(np.vstack(blocks), mode="r")

    def pacc(self, ref: SystemRef, up: bool = True, rmap: np.ndarray | None = None) -> va.OperatorAlgebra:
        d = self.circuit.dims[ref.wire]
        rmap = self.residual_map(ref, up) if rmap is None else rmap
        kern = stacked_kernel([rmap], d * d)
        return va.OperatorAlgebra(np.ascontiguousarray(kern.T.reshape(-1, d, d)), (d,))

    def influence_residuals(self, ref: SystemRef, ops: np.ndarray, up: bool = True,
                            rmap: np.ndarray | None = None) -> np.ndarray:
        """Relative size of the part of each propagated operator left on the cut legs."""
        ops = np.asarray(ops, dtype=complex)
        vecs = ops.reshape(len(ops), -1)
        if rmap is None:
            blocks = self._propagate(ref, ops, up)
            if not blocks:
                return np.zeros(len(ops))
            tot = np.sqrt(sum(np.sum(np.abs(r) ** 2, axis=0) for r in blocks))
        else:
            tot = np.linalg.norm(rmap @ vecs.T, axis=0)
        return tot / np.maximum(np.linalg.norm(vecs, axis=1), 1e-300)


def break_wires(circuit: Circuit, soi: SystemsOfInterest) -> BrokenCircuit:
    return BrokenCircuit(circuit, soi)


@dataclass(frozen=True)
class OracleEntry:
    system: str
    direction: str
    circuit_dim: int
    broken_dim: int
    match: bool
    preferred_noninfluencing: bool
    incompatible_samples: int
    incompatible_all_influence: bool

    @property
    def passed(self) -> bool:
        return self.match and self.preferred_noninfluencing and self.incompatible_all_influence


@dataclass(frozen=True)
class OracleReport:
    entries: tuple[OracleEntry, ...]

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def failures(self) -> list[OracleEntry]:
        return [e for e in self.entries if not e.passed]


def _incompatible_family(pref: np.ndarray, d: int, rng: np.random.Generator) -> np.ndarray:
    while True:
        q = haar_unitary(d, rng)
        fam = np.einsum("ik,jk->kij", q, np.conj(q))
        comm = np.einsum("aij,bjk->abik", pref, fam) - np.einsum("bij,ajk->abik", fam, pref)
        if float(np.max(np.abs(comm))) > COMMUTATION_TOL:
            return fam


def oracle_preferred_match(circuit: Circuit, soi: SystemsOfInterest, seed: int = 0,
                           history=None) -> OracleReport:
    """Compare the circuit-route decohered algebras with the broken-wire route.

    For every system and direction the broken route gives ``Z(pacc)``; its
    blocks form the preferred decomposition. That family must leave no trace
    on the cut legs. Each of the sampled rank-1 families that fail to commute
    with it must leave one.
    """
    hs = history if history is not None else derive_history_set(circuit, soi, seed)
    bc = break_wires(circuit, soi)
    rng = np.random.default_rng(seed)
    entries = []
    for ref in soi.refs:
        name = ref.label()
        analysis = hs.analyses[name]
        d = circuit.dims[ref.wire]
        for up, label, dec_c in ((True, "up", analysis.up_dec), (False, "down", analysis.down_dec)):
            rmap = bc.residual_map(ref, up)
            dec_b = va.center(bc.pacc(ref, up, rmap))
            match = va.equals(dec_b, dec_c)
            pref = np.asarray(va.block_structure(dec_b, seed).decomposition().projectors)
            quiet = bool(np.all(bc.influence_residuals(ref, pref, up, rmap) <= TAU_INF))
            samples, loud = 0, True
            if len(pref) > 1:
                for _ in range(INCOMPATIBLE_SAMPLES):
                    fam = _incompatible_family(pref, d, rng)
                    samples += 1
                    loud &= bool(np.any(bc.influence_residuals(ref, fam, up, rmap) > TAU_INF))
            entries.append(OracleEntry(name, label, dec_c.dim, dec_b.dim, match, quiet, samples, loud))
    return OracleReport(tuple(entries))


def dense_pacc(bc: BrokenCircuit, ref: SystemRef, up: bool = True) -> va.OperatorAlgebra:
    """pacc of one cut leg read off the dense broken channel (small networks only)."""
    from .bipartite import UnitaryChannel, pacc_algebra

    v = bc.unitary()
    if not up:
        v = dagger(v)
    legs = [d for _, d in bc.input_legs()]
    i = bc.cuts.index(ref)
    ncut = len(bc.cuts)
    n = len(legs)
    # source leg first; cut legs on the far side form the target
    order_in = [i] + [j for j in range(n) if j != i]
    order_out = [j for j in range(n) if j >= ncut] + list(range(ncut))
    t = v.reshape(legs + legs)
    t = t.transpose(order_out + [n + j for j in order_in])
    u = t.reshape(v.shape)
    ds = legs[i]
    dg = math.prod(legs[:ncut])
    return pacc_algebra(UnitaryChannel(u, (ds, v.shape[0] // ds), (v.shape[0] // dg, dg)))
