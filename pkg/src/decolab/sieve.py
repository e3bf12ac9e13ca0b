"""Predictability sieve for a unitary channel.

The loss of a system state is the entropy the system marginal gains through
the channel. A pure state loses nothing for every environment state exactly
when its projector is potentially accessible; the maximally mixed
environment already decides it.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .bipartite import UnitaryChannel, pacc_algebra, system_marginal
from . import vnalgebra as va
from .errors import ConsistencyError, DimensionError
from .linops import TAU_PSD, check_state, projector
from .sampling import haar_state, rng_for

LOSS_TOL = 1e-8
DEFAULT_EPSILON = 1e-3


def von_neumann_entropy(rho) -> float:
    """``-Tr(rho ln rho)`` in nats; eigenvalues at or below ``tau_psd`` are dropped."""
    rho = check_state(rho)
    w = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    w = w[w > TAU_PSD]
    return max(0.0, float(-np.sum(w * np.log(w))))


def predictability_loss(ch: UnitaryChannel, rho_f, rho_s) -> float:
    """``S(Tr_G U (rho_S ⊗ rho_F) U^dagger) - S(rho_S)``."""
    rho_s, rho_f = check_state(rho_s, "rho_s"), check_state(rho_f, "rho_f")
    marginal = system_marginal(ch, rho_s, rho_f)
    marginal = 0.5 * (marginal + marginal.conj().T)
    return von_neumann_entropy(marginal) - von_neumann_entropy(rho_s)


@dataclass(frozen=True)
class SieveReport:
    state: str
    vector: np.ndarray
    losses: tuple[tuple[str, float], ...]
    zero_loss: bool
    in_pacc: bool
    epsilon: float = DEFAULT_EPSILON

    @property
    def max_loss(self) -> float:
        return max(loss for _, loss in self.losses)

    @property
    def below_epsilon(self) -> bool:
        """Approximate sieve column; not part of the verdict."""
        return self.max_loss < self.epsilon

    @property
    def agrees(self) -> bool:
        return self.zero_loss == self.in_pacc


def environment_samples(d: int) -> list[tuple[str, np.ndarray]]:
    """The maximally mixed state and the computational basis states."""
    out = [("mixed", np.eye(d, dtype=complex) / d)]
    out += [(f"basis_{j}", projector(np.eye(d)[j])) for j in range(d)]
    return out


def state_samples(ch: UnitaryChannel, n_random: int = 4, seed: int = 0,
                  pacc: va.OperatorAlgebra | None = None) -> list[tuple[str, np.ndarray]]:
    """Computational states, the uniform superposition, vectors of the pacc blocks, and Haar states."""
    d = ch.dim_s
    out = [(f"basis_{j}", np.eye(d, dtype=complex)[j]) for j in range(d)]
    out.append(("uniform", np.ones(d, dtype=complex) / np.sqrt(d)))
    if pacc is not None:
        for i, block in enumerate(va.block_structure(pacc, seed).blocks):
            for j in range(block.isometry.shape[1]):
                out.append((f"block_{i}_{j}", block.isometry[:, j]))
    rng = rng_for(seed)
    out += [(f"random_{j}", haar_state(d, rng)) for j in range(n_random)]
    return out


def sieve_check(ch: UnitaryChannel, states: Sequence[tuple[str, np.ndarray]] | None = None,
                n_random: int = 4, seed: int = 0, epsilon: float = DEFAULT_EPSILON,
                strict: bool = True) -> list[SieveReport]:
    """Compare zero predictability loss with membership of ``|psi><psi|`` in pacc.

    ``strict`` raises :class:`ConsistencyError` on the first disagreement.
    """
    if ch.dim_s != ch.dim_t or ch.dim_f != ch.dim_g:
        raise DimensionError("the sieve needs dim S = dim T and dim F = dim G")
    pacc = pacc_algebra(ch)
    if states is None:
        states = state_samples(ch, n_random, seed, pacc)
    envs = environment_samples(ch.dim_f)
    reports = []
    for label, v in states:
        v = np.asarray(v, dtype=complex).reshape(-1)
        v = v / np.linalg.norm(v)
        p = projector(v)
        losses = tuple((name, predictability_loss(ch, rho_f, p)) for name, rho_f in envs)
        zero = all(loss <= LOSS_TOL for _, loss in losses)
        rep = SieveReport(label, v, losses, zero, pacc.contains(p), epsilon)
        if strict and not rep.agrees:
            raise ConsistencyError(
                f"state {label}: zero loss is {zero} but pacc membership is {rep.in_pacc}"
            )
        reports.append(rep)
    return reports
