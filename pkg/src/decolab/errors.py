"""Exception hierarchy.

Input problems derive from :class:`InputError` (CLI exit code 1); violations of
an identity the library guarantees derive from :class:`ConsistencyError`
(CLI exit code 2).
"""

from __future__ import annotations


class DecolabError(Exception):
    """Base class for all library errors."""

    code = "E000"


class InputError(DecolabError, ValueError):
    """Malformed or out-of-contract input."""

    code = "E100"


class DimensionError(InputError):
    """Operand shapes or tensor factorizations do not match."""

    code = "E101"


class ToleranceError(InputError):
    """An operand fails a numerical property check (Hermitian, unitary, state).

    The message names the violated tolerance.
    """

    code = "E102"


class NullEventError(InputError):
    """Conditioning on an event of (numerically) zero probability."""

    code = "E103"


class ClusteringAmbiguityError(DecolabError):
    """Eigenvalue clustering could not be resolved after resampling."""

    code = "E200"


class ConsistencyError(DecolabError):
    """Two routes to the same quantity disagree; this signals a bug."""

    code = "E201"
