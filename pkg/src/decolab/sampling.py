"""Seeded random operators, channels and circuits used by the checks and tests."""

from __future__ import annotations

import numpy as np
from scipy.stats import unitary_group

from .bipartite import UnitaryChannel
from .circuit import Circuit, Gate, SystemRef, SystemsOfInterest
from .gates import HADAMARD, cnot, controlled, swap
from .linops import kron, projector


def rng_for(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def haar_unitary(d: int, rng) -> np.ndarray:
    return np.asarray(unitary_group.rvs(d, random_state=rng_for(rng)), dtype=complex).reshape(d, d)


def haar_state(d: int, rng) -> np.ndarray:
    rng = rng_for(rng)
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)


def random_density(d: int, rng, rank: int | None = None) -> np.ndarray:
    rng = rng_for(rng)
    rank = d if rank is None else rank
    a = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


def random_hermitian(d: int, rng, scale: float = 1.0) -> np.ndarray:
    rng = rng_for(rng)
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return scale * 0.5 * (a + a.conj().T)


def coherent_control_unitary(ds: int, df: int, rng) -> np.ndarray:
    """``sum_k |phi_k><psi_k| ⊗ V_k`` with Haar bases and Haar conditionals."""
    rng = rng_for(rng)
    psi = haar_unitary(ds, rng)
    phi = haar_unitary(ds, rng)
    return sum(kron(np.outer(phi[:, k], psi[:, k].conj()), haar_unitary(df, rng)) for k in range(ds))


def two_qubit_corpus(seed: int = 0) -> list[tuple[str, UnitaryChannel]]:
    """100 two-qubit channels: 40 Haar, 40 coherent-control, 10 local products, 10 products with a swap."""
    rng = rng_for(seed)
    out = []
    for i in range(40):
        out.append((f"haar_{i}", UnitaryChannel.square(haar_unitary(4, rng), 2)))
    for i in range(40):
        out.append((f"control_{i}", UnitaryChannel.square(coherent_control_unitary(2, 2, rng), 2)))
    for i in range(10):
        out.append((f"local_{i}", UnitaryChannel.square(kron(haar_unitary(2, rng), haar_unitary(2, rng)), 2)))
    for i in range(10):
        u = swap(2, 2) @ kron(haar_unitary(2, rng), haar_unitary(2, rng))
        out.append((f"swapped_{i}", UnitaryChannel.square(u, 2)))
    return out


def _one_qubit_gate(rng) -> np.ndarray:
    choice = rng.integers(3)
    if choice == 0:
        return HADAMARD
    if choice == 1:
        return np.diag([1, np.exp(1j * rng.uniform(0, 2 * np.pi))])
    return haar_unitary(2, rng)


def random_circuit(seed, n_wires: int = 4, depth: int = 5) -> Circuit:
    """Qubit circuit whose layers mix CNOTs, random controlled unitaries and one-qubit gates."""
    rng = rng_for(seed)
    wires = tuple((chr(ord("a") + i), 2) for i in range(n_wires))
    layers = []
    for _ in range(depth):
        free = list(rng.permutation(n_wires))
        layer = []
        while free:
            kind = rng.integers(4) if len(free) >= 2 else 3
            if kind == 3:
                w = int(free.pop())
                if rng.random() < 0.7:
                    layer.append(Gate(_one_qubit_gate(rng), (w,), (w,)))
                continue
            a, b = int(free.pop()), int(free.pop())
            if kind == 0:
                layer.append(Gate(cnot(), (a, b), (a, b)))
            elif kind == 1:
                layer.append(Gate(controlled([np.eye(2), haar_unitary(2, rng)]), (a, b), (a, b)))
            else:
                layer.append(Gate(coherent_control_unitary(2, 2, rng), (a, b), (a, b)))
        layers.append(tuple(layer))
    return Circuit(wires, tuple(layers))


def random_systems(circuit: Circuit, seed, k: int | None = None) -> SystemsOfInterest:
    """A random set of distinct wire segments."""
    rng = rng_for(seed)
    segs = circuit.all_segments()
    k = int(rng.integers(2, min(len(segs), 7) + 1)) if k is None else k
    pick = sorted(rng.choice(len(segs), size=k, replace=False))
    refs = tuple(SystemRef(segs[i][0], segs[i][1], f"{circuit.labels[segs[i][0]]}@{segs[i][1]}") for i in pick)
    return SystemsOfInterest(circuit, refs)


def rank_one_family(d: int, rng) -> np.ndarray:
    u = haar_unitary(d, rng)
    return np.array([projector(u[:, k]) for k in range(d)])
