"""Builtin gate matrices.

Every gate maps its bound input legs to its bound output legs; the leg order
of the matrix follows the binding order, leftmost most significant.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, InputError
from .linops import PAULI, check_unitary, kron

HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


def identity(dims: Sequence[int]) -> np.ndarray:
    return np.eye(int(np.prod(dims)), dtype=complex)


def swap(d1: int, d2: int) -> np.ndarray:
    """Exchange of two legs: ``|a>|b> -> |b>|a>``."""
    out = np.zeros((d1 * d2, d1 * d2), dtype=complex)
    for a in range(d1):
        for b in range(d2):
            out[b * d1 + a, a * d2 + b] = 1.0
    return out


def controlled(conditionals: Sequence[np.ndarray]) -> np.ndarray:
    """``sum_k |k><k| ⊗ V_k`` with the control on the first leg."""
    conditionals = [check_unitary(v, f"conditional {k}") for k, v in enumerate(conditionals)]
    if not conditionals:
        raise InputError("controlled gate needs at least one conditional")
    shapes = {v.shape for v in conditionals}
    if len(shapes) != 1:
        raise DimensionError(f"conditionals have different shapes {sorted(shapes)}")
    n = len(conditionals)
    return sum(kron(np.diag(np.eye(n)[k]), v) for k, v in enumerate(conditionals))


def cnot() -> np.ndarray:
    return controlled([PAULI["I"], PAULI["X"]])


SINGLE_QUBIT = {
    "hadamard": HADAMARD,
    "pauli_x": PAULI["X"],
    "pauli_y": PAULI["Y"],
    "pauli_z": PAULI["Z"],
}


@dataclass(frozen=True, eq=False)
class GateSpec:
    """A builtin gate description that can be turned into a matrix for given legs.

    ``name`` is one of :data:`BUILTINS`. ``controlled`` carries its
    conditionals; ``matrix`` carries an explicit unitary.
    """

    name: str
    conditionals: tuple["GateSpec", ...] = ()
    matrix: np.ndarray | None = None
    adjoint: bool = False

    def __post_init__(self):
        if self.name not in BUILTINS:
            raise InputError(f"unknown builtin gate {self.name!r}; choices: {', '.join(BUILTINS)}")
        object.__setattr__(self, "conditionals", tuple(self.conditionals))
        if self.name == "matrix":
            if self.matrix is None:
                raise InputError("matrix gate needs an explicit matrix")
            object.__setattr__(self, "matrix", check_unitary(self.matrix, "explicit matrix"))

    def build(self, dims: Sequence[int]) -> np.ndarray:
        """Matrix acting on legs of dimensions ``dims``."""
        dims = [int(d) for d in dims]
        n = self.name
        if n == "identity":
            m = identity(dims)
        elif n == "swap":
            if len(dims) != 2:
                raise DimensionError("swap binds exactly two wires")
            m = swap(*dims)
        elif n == "cnot":
            if dims != [2, 2]:
                raise DimensionError(f"cnot needs two qubit wires, got dims {dims}")
            m = cnot()
        elif n in SINGLE_QUBIT:
            if dims != [2]:
                raise DimensionError(f"{n} needs one qubit wire, got dims {dims}")
            m = SINGLE_QUBIT[n]
        elif n == "controlled":
            if len(dims) < 2 or dims[0] != len(self.conditionals):
                raise DimensionError(
                    f"controlled gate with {len(self.conditionals)} conditionals needs a control of that dimension"
                )
            m = controlled([c.build(dims[1:]) for c in self.conditionals])
        else:
            m = self.matrix
            if m.shape[0] != int(np.prod(dims)):
                raise DimensionError(f"explicit matrix of size {m.shape[0]} does not fit wires of dims {dims}")
        return np.conj(m.T) if self.adjoint else np.array(m, dtype=complex)

    def __eq__(self, other) -> bool:
        if not isinstance(other, GateSpec):
            return NotImplemented
        same_matrix = (self.matrix is None and other.matrix is None) or (
            self.matrix is not None and other.matrix is not None and np.array_equal(self.matrix, other.matrix)
        )
        return (
            self.name == other.name
            and self.adjoint == other.adjoint
            and self.conditionals == other.conditionals
            and same_matrix
        )

    __hash__ = None


BUILTINS = ("identity", "swap", "cnot", "controlled", "hadamard", "pauli_x", "pauli_y", "pauli_z", "matrix")


def spec(name: str, *conditionals: "GateSpec | str", adjoint: bool = False) -> GateSpec:
    """Shorthand: ``spec("controlled", "identity", "pauli_x")``."""
    conds = tuple(c if isinstance(c, GateSpec) else GateSpec(c) for c in conditionals)
    return GateSpec(name, conds, adjoint=adjoint)


def explicit(matrix: np.ndarray, adjoint: bool = False) -> GateSpec:
    return GateSpec("matrix", matrix=np.asarray(matrix, dtype=complex), adjoint=adjoint)
