"""Builtin measurement circuits.

``single_measurement``: a system qubit prepared through ``V`` from a line
entangled with environment ``F``, copied by a CNOT onto a device qubit whose
input has interacted with ``G``; the device output then interacts with ``H``.

``two_measurements``: the same, followed by ``W`` on the system line and a
second device (environments ``J``, ``K``) reading it out.

``wigner``: like ``two_measurements``, but the first device's interactions
with the system and with ``H`` are undone by their inverses before ``W``.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from .circuit import Circuit, Gate, SystemsOfInterest
from .errors import InputError
from .gates import GateSpec, explicit, spec

SCENARIOS = ("single_measurement", "two_measurements", "wigner")

SINGLE_SYSTEMS = ("F1", "F2", "G1", "G2", "S", "M", "N", "H1", "H2")


def bind(wires: Sequence[tuple[str, int]], gate_spec: GateSpec, inputs: Sequence[str],
         outputs: Sequence[str] | None = None, name: str = "") -> Gate:
    """Instantiate ``gate_spec`` on the labelled wires."""
    labels = [w[0] for w in wires]
    dims = dict(wires)
    outputs = list(inputs) if outputs is None else list(outputs)
    for label in list(inputs) + outputs:
        if label not in dims:
            raise InputError(f"unknown wire {label!r}")
    matrix = gate_spec.build([dims[w] for w in inputs])
    return Gate(matrix, tuple(labels.index(w) for w in inputs), tuple(labels.index(w) for w in outputs),
                gate_spec, name)


def _as_spec(g) -> GateSpec:
    if g is None:
        return spec("hadamard")
    if isinstance(g, GateSpec):
        return g
    if isinstance(g, str):
        return spec(g)
    return explicit(np.asarray(g, dtype=complex))


def _record() -> GateSpec:
    return spec("controlled", "identity", "pauli_x")


def single_measurement(v=None) -> tuple[Circuit, SystemsOfInterest]:
    v = _as_spec(v)
    wires = (("s", 2), ("f", 2), ("m", 2), ("g", 2), ("h", 2))
    layers = (
        (bind(wires, _record(), ["s", "f"], name="A"), bind(wires, _record(), ["m", "g"], name="B")),
        (bind(wires, v, ["s"], name="V"),),
        (bind(wires, spec("cnot"), ["s", "m"], name="CNOT"),),
        (bind(wires, _record(), ["m", "h"], name="C"),),
    )
    c = Circuit(wires, layers)
    systems = [
        ("F1", "f", 0), ("F2", "f", 1), ("G1", "g", 0), ("G2", "g", 1), ("S", "s", 2),
        ("M", "m", 1), ("N", "m", 3), ("H1", "h", 0), ("H2", "h", 4),
    ]
    return c, SystemsOfInterest.from_labels(c, systems)


_SECOND_WIRES = (("s", 2), ("f", 2), ("m", 2), ("g", 2), ("h", 2), ("o", 2), ("j", 2), ("k", 2))


def two_measurements(v=None, w=None) -> tuple[Circuit, SystemsOfInterest]:
    v, w = _as_spec(v), _as_spec(w)
    wires = _SECOND_WIRES
    layers = (
        (bind(wires, _record(), ["s", "f"], name="A"), bind(wires, _record(), ["m", "g"], name="B"),
         bind(wires, _record(), ["o", "j"], name="D")),
        (bind(wires, v, ["s"], name="V"),),
        (bind(wires, spec("cnot"), ["s", "m"], name="CNOT"),),
        (bind(wires, _record(), ["m", "h"], name="C"), bind(wires, w, ["s"], name="W")),
        (bind(wires, spec("cnot"), ["s", "o"], name="CNOT2"),),
        (bind(wires, _record(), ["o", "k"], name="E"),),
    )
    c = Circuit(wires, layers)
    systems = [
        ("F1", "f", 0), ("F2", "f", 1), ("G1", "g", 0), ("G2", "g", 1), ("S", "s", 2),
        ("M", "m", 1), ("N", "m", 3), ("H1", "h", 0), ("H2", "h", 4), ("T", "s", 3),
        ("J1", "j", 0), ("J2", "j", 1), ("O", "o", 1), ("P", "o", 5), ("K1", "k", 0), ("K2", "k", 6),
    ]
    return c, SystemsOfInterest.from_labels(c, systems)


def wigner(v=None, w=None) -> tuple[Circuit, SystemsOfInterest]:
    v, w = _as_spec(v), _as_spec(w)
    wires = _SECOND_WIRES
    undo_cnot = spec("cnot", adjoint=True)
    undo_record = GateSpec("controlled", _record().conditionals, adjoint=True)
    layers = (
        (bind(wires, _record(), ["s", "f"], name="A"), bind(wires, _record(), ["m", "g"], name="B")),
        (bind(wires, v, ["s"], name="V"),),
        (bind(wires, spec("cnot"), ["s", "m"], name="CNOT"),),
        (bind(wires, _record(), ["m", "h"], name="C"),),
        (bind(wires, undo_record, ["m", "h"], name="C_inv"),),
        (bind(wires, undo_cnot, ["s", "m"], name="CNOT_inv"),),
        (bind(wires, w, ["s"], name="W"), bind(wires, _record(), ["o", "j"], name="D")),
        (bind(wires, spec("cnot"), ["s", "o"], name="CNOT2"),),
        (bind(wires, _record(), ["o", "k"], name="E"),),
    )
    c = Circuit(wires, layers)
    systems = [
        ("F1", "f", 0), ("F2", "f", 1), ("G1", "g", 0), ("G2", "g", 1), ("S", "s", 2),
        ("M", "m", 1), ("N", "m", 3), ("H1", "h", 0), ("H2", "h", 4), ("T", "s", 6),
        ("J1", "j", 0), ("J2", "j", 7), ("O", "o", 7), ("P", "o", 8), ("K1", "k", 0), ("K2", "k", 9),
    ]
    return c, SystemsOfInterest.from_labels(c, systems)


def scenario(name: str, **params) -> tuple[Circuit, SystemsOfInterest]:
    builders = {"single_measurement": single_measurement, "two_measurements": two_measurements, "wigner": wigner}
    if name not in builders:
        raise InputError(f"unknown scenario {name!r}; choices: {', '.join(SCENARIOS)}")
    return builders[name](**params)
