"""Decoherence by a time-independent Hamiltonian on ``S ⊗ F``.

``pacc`` collects the system operators that stay local for all times, which is
the largest subspace of ``S ⊗ I`` invariant under ``X -> [H, X]``. ``rob``
collects those commuting with ``H``. The rotating-frame robust algebra is the
commutant of every ``H_I(t) = e^{-i H_S t} H_I e^{i H_S t}``; its span is the
Krylov span of ``ad_{H_S}^n (H_I)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import vnalgebra as va
from .errors import ConsistencyError, DimensionError
from .linops import (
    TAU_PHASE,
    TAU_RANK,
    TAU_RECON,
    check_hermitian,
    exp_i_hermitian,
    fix_phase,
    kernel_basis,
    kron,
    partial_trace,
    range_basis,
)


@dataclass(frozen=True, eq=False)
class HamiltonianModel:
    h: np.ndarray
    dim_s: int
    dim_f: int

    def __post_init__(self):
        h = check_hermitian(self.h, "hamiltonian")
        object.__setattr__(self, "dim_s", int(self.dim_s))
        object.__setattr__(self, "dim_f", int(self.dim_f))
        if h.shape[0] != self.dim_s * self.dim_f:
            raise DimensionError(f"hamiltonian of size {h.shape[0]} does not split as {self.dim_s}x{self.dim_f}")
        object.__setattr__(self, "h", 0.5 * (h + h.conj().T))

    @cached_property
    def h_local(self) -> np.ndarray:
        """``H_S = Tr_F(H) / d_F``."""
        return partial_trace(self.h, (self.dim_s, self.dim_f), [0]) / self.dim_f

    @cached_property
    def h_int(self) -> np.ndarray:
        """``H_I = H - H_S ⊗ I``, traceless over ``F``."""
        return self.h - kron(self.h_local, np.eye(self.dim_f))

    def evolution(self, t: float) -> np.ndarray:
        return exp_i_hermitian(self.h, t)

    def local_evolution(self, t: float) -> np.ndarray:
        return exp_i_hermitian(self.h_local, t)


@dataclass(frozen=True, eq=False)
class HamiltonianControlForm:
    """``H = sum_k |psi_k><psi_k| ⊗ H^(k)``; the basis is stored as columns."""

    control_basis: np.ndarray
    conditionals: np.ndarray

    def reassemble(self) -> np.ndarray:
        return sum(
            kron(np.outer(self.control_basis[:, k], np.conj(self.control_basis[:, k])), hk)
            for k, hk in enumerate(self.conditionals)
        )


def _lift(m: HamiltonianModel, w: np.ndarray) -> np.ndarray:
    """Operators ``M ⊗ I`` for the columns of ``w`` (vectorized system operators)."""
    ds, df = m.dim_s, m.dim_f
    ops = w.T.reshape(-1, ds, ds)
    return np.einsum("kab,ij->kaibj", ops, np.eye(df)).reshape(-1, ds * df, ds * df)


def pacc_h(m: HamiltonianModel) -> va.OperatorAlgebra:
    """Greatest fixed point of ``K -> {X in K : [H, X] in K}`` from ``K_0 = S ⊗ I``."""
    ds, df = m.dim_s, m.dim_f
    w = np.eye(ds * ds, dtype=complex)
    stable = 0
    for _ in range((ds * df) ** 4):
        if w.shape[1] == 0:
            break
        lifted = _lift(m, w)
        comm = np.einsum("ij,kjl->kil", m.h, lifted) - np.einsum("kij,jl->kil", lifted, m.h)
        vecs = comm.reshape(len(comm), -1).T
        span = _lift(m, w).reshape(w.shape[1], -1).T / np.sqrt(df)
        residual = vecs - span @ (span.conj().T @ vecs)
        kern = kernel_basis(residual, TAU_RANK)
        new = range_basis(w @ kern)
        stable = stable + 1 if new.shape[1] == w.shape[1] else 0
        w = new
        if stable >= 2:
            break
    basis = w.T.reshape(-1, ds, ds)
    return va.from_spanning_set(basis, (ds,))


def acc_h(m: HamiltonianModel) -> va.OperatorAlgebra:
    return va.commutant(pacc_h(m), within=va.full(m.dim_s))


def dec_h(m: HamiltonianModel, seed: int = 0) -> tuple[va.OperatorAlgebra, va.SubspaceDecomposition]:
    pacc = pacc_h(m)
    acc = va.commutant(pacc, within=va.full(m.dim_s))
    dec = va.intersect(acc, pacc)
    if not dec.is_commutative():
        raise ConsistencyError("decohered algebra of the hamiltonian is not commutative")
    return dec, va.block_structure(dec, seed).decomposition()


def robust_algebra(m: HamiltonianModel) -> va.OperatorAlgebra:
    """``{H}' ∩ S``."""
    return va.factor_commutant([m.h], (m.dim_s, m.dim_f), 0)


def interaction_krylov(m: HamiltonianModel) -> np.ndarray:
    """Orthonormal operator basis of ``span{ad_{H_S ⊗ I}^n (H_I) : n >= 0}`` (Arnoldi)."""
    dim = m.dim_s * m.dim_f
    hs = kron(m.h_local, np.eye(m.dim_f))
    basis: list[np.ndarray] = []

    def add(v: np.ndarray) -> bool:
        scale = max(1.0, float(np.linalg.norm(v)))
        for _ in range(2):
            for q in basis:
                v = v - np.vdot(q, v) * q
        nv = float(np.linalg.norm(v))
        if nv <= TAU_RANK * scale:
            return False
        basis.append(v / nv)
        return True

    if not add(m.h_int.reshape(-1)):
        return np.zeros((0, dim, dim), dtype=complex)
    for _ in range(dim * dim):
        q = basis[-1].reshape(dim, dim)
        if not add((hs @ q - q @ hs).reshape(-1)):
            break
    return np.array(basis).reshape(-1, dim, dim)


def rotating_frame_robust(m: HamiltonianModel) -> va.OperatorAlgebra:
    """``{H_I(t) : t}' ∩ S``."""
    return va.factor_commutant(list(interaction_krylov(m)), (m.dim_s, m.dim_f), 0)


def rotating_frame_evolution(m: HamiltonianModel, op_s: np.ndarray, t: float) -> np.ndarray:
    """``M^I(t) = e^{-i H_S t} e^{i H t} (M ⊗ I) e^{-i H t} e^{i H_S t}``."""
    u = m.evolution(t)
    us = kron(m.local_evolution(t), np.eye(m.dim_f))
    heis = u.conj().T @ kron(op_s, np.eye(m.dim_f)) @ u
    return us @ heis @ us.conj().T


def _proportional_to_identity(a: np.ndarray) -> bool:
    d = a.shape[0]
    off = a - np.trace(a) / d * np.eye(d)
    return bool(np.linalg.norm(off) <= TAU_PHASE * max(1.0, float(np.linalg.norm(a))))


def detect_control_form_h(m: HamiltonianModel, seed: int = 0) -> HamiltonianControlForm | None:
    """The control form ``H = sum_k |psi_k><psi_k| ⊗ H^(k)`` when ``H`` is maximally decohering."""
    dec, _ = dec_h(m, seed)
    if dec.dim != m.dim_s:
        return None
    blocks = va.block_structure(dec, seed).blocks
    basis = np.column_stack([fix_phase(b.isometry[:, 0]) for b in blocks])
    ds, df = m.dim_s, m.dim_f
    t = m.h.reshape(ds, df, ds, df)
    conds = np.einsum("ak,aibj,bk->kij", np.conj(basis), t, basis)
    form = HamiltonianControlForm(basis, conds)
    if np.linalg.norm(form.reassemble() - m.h) > TAU_RECON * max(1.0, float(np.linalg.norm(m.h))):
        raise ConsistencyError("hamiltonian does not reassemble from its control form")
    for k in range(ds):
        for l in range(k + 1, ds):
            if _proportional_to_identity(conds[k] - conds[l]):
                raise ConsistencyError(f"conditionals {k} and {l} differ by a multiple of the identity")
    return form


def check_splitting(m: HamiltonianModel) -> float:
    """Size of ``Tr_F H_I``, which vanishes by construction."""
    return float(np.linalg.norm(partial_trace(m.h_int, (m.dim_s, m.dim_f), [0])))

