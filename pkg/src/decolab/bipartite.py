"""Causal influence and decoherence of a single unitary ``U: S ⊗ F -> T ⊗ G``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import vnalgebra as va
from .errors import ConsistencyError, DimensionError, InputError
from .linops import (
    TAU_ALG,
    TAU_INF,
    TAU_PHASE,
    TAU_RECON,
    as_operator,
    check_state,
    check_unitary,
    dagger,
    fix_phase,
    hermitian_eig,
    kron,
    local_generators,
    matrix_units,
    partial_trace,
    stacked_kernel,
)


@dataclass(frozen=True, eq=False)
class UnitaryChannel:
    """A unitary ``u`` read as a map ``S ⊗ F -> T ⊗ G``."""

    u: np.ndarray
    in_split: tuple[int, int]
    out_split: tuple[int, int]

    def __post_init__(self):
        u = check_unitary(self.u, "channel unitary")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "in_split", tuple(int(x) for x in self.in_split))
        object.__setattr__(self, "out_split", tuple(int(x) for x in self.out_split))
        n = u.shape[0]
        if self.in_split[0] * self.in_split[1] != n or self.out_split[0] * self.out_split[1] != n:
            raise DimensionError(f"splits {self.in_split} -> {self.out_split} do not match a {n}x{n} unitary")

    @classmethod
    def square(cls, u, dim_s: int, dim_f: int | None = None) -> "UnitaryChannel":
        u = as_operator(u)
        dim_f = u.shape[0] // dim_s if dim_f is None else dim_f
        return cls(u, (dim_s, dim_f), (dim_s, dim_f))

    @property
    def dim_s(self) -> int:
        return self.in_split[0]

    @property
    def dim_f(self) -> int:
        return self.in_split[1]

    @property
    def dim_t(self) -> int:
        return self.out_split[0]

    @property
    def dim_g(self) -> int:
        return self.out_split[1]

    def inverse(self) -> "UnitaryChannel":
        return UnitaryChannel(dagger(self.u), self.out_split, self.in_split)

    def push(self, m: np.ndarray) -> np.ndarray:
        """Schrodinger-picture image ``U m U^dagger`` of an input operator."""
        return self.u @ m @ dagger(self.u)

    def pull(self, n: np.ndarray) -> np.ndarray:
        """Heisenberg pullback ``U^dagger n U`` of an output operator."""
        return dagger(self.u) @ n @ self.u


@dataclass(frozen=True, eq=False)
class BipartiteAnalysis:
    acc: va.OperatorAlgebra
    pacc: va.OperatorAlgebra
    dec: va.OperatorAlgebra
    decomposition: va.SubspaceDecomposition
    acc_blocks: va.BlockStructure
    pacc_blocks: va.BlockStructure


@dataclass(frozen=True, eq=False)
class ControlForm:
    """``U = sum_k |image_k><control_k| ⊗ V_k``; bases are stored as columns."""

    control_basis: np.ndarray
    image_basis: np.ndarray
    conditionals: np.ndarray

    def reassemble(self) -> np.ndarray:
        return sum(
            kron(np.outer(self.image_basis[:, k], np.conj(self.control_basis[:, k])), v)
            for k, v in enumerate(self.conditionals)
        )


def _relative_norm(c: np.ndarray, a: np.ndarray, b: np.ndarray) -> bool:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return False
    return bool(np.linalg.norm(c) > TAU_INF * na * nb)


def influences_op(m: np.ndarray, n: np.ndarray, ch: UnitaryChannel) -> bool:
    """Whether input operator ``m`` influences output operator ``n`` through ``ch``."""
    m, n = as_operator(m, "m"), as_operator(n, "n")
    if m.shape != ch.u.shape or n.shape != ch.u.shape:
        raise DimensionError(f"operators must be {ch.u.shape}, got {m.shape} and {n.shape}")
    pulled = ch.pull(n)
    return _relative_norm(pulled @ m - m @ pulled, m, n)


def _env_generators(ch: UnitaryChannel) -> list[np.ndarray]:
    return [ch.pull(kron(np.eye(ch.dim_t), g)) for g in local_generators(ch.dim_g)]


def _system_generators(ch: UnitaryChannel) -> list[np.ndarray]:
    return [kron(g, np.eye(ch.dim_f)) for g in local_generators(ch.dim_s)]


def influences_system(m: np.ndarray, ch: UnitaryChannel) -> bool:
    """Whether the system operator ``m`` influences the output environment ``G``."""
    m = as_operator(m, "m")
    if m.shape != (ch.dim_s, ch.dim_s):
        raise DimensionError(f"m must act on S (dim {ch.dim_s})")
    big = kron(m, np.eye(ch.dim_f))
    return any(_relative_norm(big @ g - g @ big, big, g) for g in _env_generators(ch))


def system_influences(n: np.ndarray, ch: UnitaryChannel) -> bool:
    """Whether the input system ``S`` influences the output operator ``n``."""
    n = as_operator(n, "n")
    if n.shape != ch.u.shape:
        raise DimensionError(f"n must act on the full output space {ch.u.shape}")
    pulled = ch.pull(n)
    return any(_relative_norm(s @ pulled - pulled @ s, s, pulled) for s in _system_generators(ch))


def system_influences_environment(ch: UnitaryChannel) -> bool:
    """Whether ``S`` influences ``G`` at all."""
    return any(
        _relative_norm(s @ g - g @ s, s, g) for s in _system_generators(ch) for g in _env_generators(ch)
    )


def _local_basis(kern: np.ndarray, d: int) -> va.OperatorAlgebra:
    return va.OperatorAlgebra(np.ascontiguousarray(kern.T.reshape(-1, d, d)), (d,))


def _pacc_by_commutant(ch: UnitaryChannel) -> va.OperatorAlgebra:
    ds, df = ch.dim_s, ch.dim_f
    units = np.array([kron(e, np.eye(df)) for e in matrix_units(ds)])
    blocks = (
        (np.einsum("kij,jl->kil", units, g) - np.einsum("ij,kjl->kil", g, units)).reshape(ds * ds, -1).T
        for g in _env_generators(ch)
    )
    return _local_basis(stacked_kernel(blocks, ds * ds), ds)


def _pacc_by_locality(ch: UnitaryChannel) -> va.OperatorAlgebra:
    ds, df, dt, dg = ch.dim_s, ch.dim_f, ch.dim_t, ch.dim_g
    cols = []
    for e in matrix_units(ds):
        x = ch.push(kron(e, np.eye(df)))
        local = partial_trace(x, (dt, dg), [0]) / dg
        cols.append((x - kron(local, np.eye(dg))).reshape(-1))
    return _local_basis(stacked_kernel([np.array(cols).T], ds * ds), ds)


def pacc_algebra(ch: UnitaryChannel) -> va.OperatorAlgebra:
    """System operators that do not influence the environment output.

    Computed as a relative commutant and checked against the locality
    criterion ``U (M ⊗ I) U^dagger = K ⊗ I_G``.
    """
    by_commutant = _pacc_by_commutant(ch)
    by_locality = _pacc_by_locality(ch)
    if not va.equals(by_commutant, by_locality):
        raise ConsistencyError(
            f"commutant route (dim {by_commutant.dim}) and locality route (dim {by_locality.dim}) disagree"
        )
    return by_commutant


def acc_algebra(ch: UnitaryChannel) -> va.OperatorAlgebra:
    return va.commutant(pacc_algebra(ch), within=va.full(ch.dim_s))


def _assert_structure(acc, pacc, dec) -> None:
    full = va.full(acc.ambient_dim)
    checks = {
        "pacc = acc' within S": va.equals(va.commutant(acc, within=full), pacc),
        "dec = center(acc)": va.equals(va.center(acc), dec),
        "dec = center(pacc)": va.equals(va.center(pacc), dec),
        "dec commutative": dec.is_commutative(),
    }
    failed = [k for k, ok in checks.items() if not ok]
    if failed:
        raise ConsistencyError("structure identities failed: " + ", ".join(failed))


def analyze(ch: UnitaryChannel, seed: int = 0) -> BipartiteAnalysis:
    """Accessible, potentially accessible and decohered algebras on ``S``."""
    pacc = pacc_algebra(ch)
    acc = va.commutant(pacc, within=va.full(ch.dim_s))
    dec = va.intersect(acc, pacc)
    _assert_structure(acc, pacc, dec)
    dec_blocks = va.block_structure(dec, seed)
    return BipartiteAnalysis(
        acc=acc,
        pacc=pacc,
        dec=dec,
        decomposition=dec_blocks.decomposition(),
        acc_blocks=va.block_structure(acc, seed),
        pacc_blocks=va.block_structure(pacc, seed),
    )


def dual_analyze(ch: UnitaryChannel, seed: int = 0) -> BipartiteAnalysis:
    """Decoherence of the inverse channel, reported on ``T`` relative to ``F``."""
    return analyze(ch.inverse(), seed)


def push_algebra(ch: UnitaryChannel, alg: va.OperatorAlgebra) -> va.OperatorAlgebra:
    """Image on ``T`` of a potentially accessible algebra on ``S``."""
    if alg.ambient_dim != ch.dim_s:
        raise DimensionError("algebra must live on S")
    images = []
    for m in alg.basis:
        x = ch.push(kron(m, np.eye(ch.dim_f)))
        local = partial_trace(x, (ch.dim_t, ch.dim_g), [0]) / ch.dim_g
        if np.linalg.norm(x - kron(local, np.eye(ch.dim_g))) > TAU_ALG * max(1.0, np.linalg.norm(x)):
            raise InputError("algebra element does not evolve to a local operator on T")
        images.append(local)
    return va.from_spanning_set(images)


def detect_control_form(ch: UnitaryChannel, seed: int = 0) -> ControlForm | None:
    """Coherent-control form of a maximally decohering unitary, else ``None``."""
    if ch.dim_s != ch.dim_t:
        raise DimensionError("control form requires dim S = dim T")
    if ch.dim_f != ch.dim_g:
        raise DimensionError("control form requires dim F = dim G")
    an = analyze(ch, seed)
    if an.dec.dim != ch.dim_s:
        return None
    ds, df = ch.dim_s, ch.dim_f
    u4 = ch.u.reshape(ds, df, ds, df)
    controls, images, conds = [], [], []
    for p in an.decomposition.projectors:
        _, vecs = hermitian_eig(p)
        psi = fix_phase(vecs[:, 0])
        x = ch.push(kron(np.outer(psi, np.conj(psi)), np.eye(df)))
        _, tvecs = hermitian_eig(partial_trace(x, (ds, df), [0]) / df)
        phi = fix_phase(tvecs[:, 0])
        controls.append(psi)
        images.append(phi)
        conds.append(np.einsum("t,tgsf,s->gf", np.conj(phi), u4, psi))
    form = ControlForm(np.array(controls).T, np.array(images).T, np.array(conds))
    if np.linalg.norm(form.reassemble() - ch.u) > TAU_RECON * max(1.0, np.sqrt(ds * df)):
        raise ConsistencyError("reassembled control form does not reproduce the unitary")
    for k in range(ds):
        for l in range(k + 1, ds):
            if abs(np.trace(dagger(conds[k]) @ conds[l])) >= df * (1 - TAU_PHASE):
                raise ConsistencyError(f"conditionals {k} and {l} are phase-equivalent despite maximal decoherence")
    return form


def suppression_factor(cf: ControlForm, rho_f: np.ndarray, k: int, l: int) -> float:
    """Magnitude of the factor multiplying the ``(k, l)`` coherence of ``S``."""
    rho_f = check_state(rho_f, "rho_f")
    v = cf.conditionals
    return float(abs(np.trace(dagger(v[l]) @ v[k] @ rho_f)))


def dephase(rho_s: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """Diagonal part of ``rho_s`` in the orthonormal column basis ``basis``."""
    projs = [np.outer(basis[:, k], np.conj(basis[:, k])) for k in range(basis.shape[1])]
    return sum(p @ rho_s @ p for p in projs)


def environment_marginal(ch: UnitaryChannel, rho_s: np.ndarray, rho_f: np.ndarray) -> np.ndarray:
    """``Tr_T U (rho_s ⊗ rho_f) U^dagger``."""
    return partial_trace(ch.push(kron(rho_s, rho_f)), ch.out_split, [1])


def system_marginal(ch: UnitaryChannel, rho_s: np.ndarray, rho_f: np.ndarray) -> np.ndarray:
    """``Tr_G U (rho_s ⊗ rho_f) U^dagger``."""
    return partial_trace(ch.push(kron(rho_s, rho_f)), ch.out_split, [0])
