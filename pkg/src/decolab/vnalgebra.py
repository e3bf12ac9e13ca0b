"""Finite-dimensional von Neumann algebras stored as orthonormal operator bases.

An :class:`OperatorAlgebra` is a *-closed, unital subspace of ``L(C^d)``
represented by a Hilbert-Schmidt orthonormal basis. Comparisons go through
span projectors, so two algebras built along different routes compare equal
regardless of the particular basis each route produced.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ClusteringAmbiguityError, ConsistencyError, DimensionError
from .linops import (
    TAU_ALG,
    TAU_GAP,
    TAU_RANK,
    as_operator,
    cluster_eigenvalues,
    dagger,
    embed,
    hermitian_eig,
    range_basis,
    stacked_kernel,
)

MAX_RESAMPLES = 5
DOUBLE_COMMUTANT_CHECK_DIM = 8


@dataclass(frozen=True, eq=False)
class OperatorAlgebra:
    """A unital *-subalgebra of ``L(C^d)``.

    ``basis`` has shape ``(k, d, d)`` and is orthonormal under
    ``<A, B> = Tr(A^dagger B)``. ``factors`` records the tensor factorization
    of ``C^d`` (informational; all operations act on the full space).
    """

    basis: np.ndarray
    factors: tuple[int, ...]

    @property
    def dim(self) -> int:
        return int(self.basis.shape[0])

    @property
    def ambient_dim(self) -> int:
        return int(self.basis.shape[1])

    @cached_property
    def _vecs(self) -> np.ndarray:
        return self.basis.reshape(self.dim, -1).T

    def coefficients(self, m: np.ndarray) -> np.ndarray:
        return dagger(self._vecs) @ np.asarray(m, dtype=complex).reshape(-1)

    def project(self, m: np.ndarray) -> np.ndarray:
        """Hilbert-Schmidt orthogonal projection of ``m`` onto the span."""
        return (self._vecs @ self.coefficients(m)).reshape(self.ambient_dim, self.ambient_dim)

    def residual(self, m: np.ndarray) -> float:
        return float(np.linalg.norm(np.asarray(m) - self.project(m)))

    def contains(self, m: np.ndarray, tol: float = TAU_RANK) -> bool:
        m = as_operator(m)
        return self.residual(m) < tol * max(float(np.linalg.norm(m)), 1e-300)

    @cached_property
    def hermitian_basis(self) -> np.ndarray:
        """A real-linearly spanning set of Hermitian elements."""
        b = self.basis
        herm = np.concatenate([b + dagger(b), 1j * (b - dagger(b))]) / 2
        vecs = np.concatenate([herm.reshape(len(herm), -1).real, herm.reshape(len(herm), -1).imag], axis=1)
        keep = _independent_rows(vecs)
        return herm[keep]

    def is_trivial(self) -> bool:
        return self.dim == 1

    def is_full(self) -> bool:
        return self.dim == self.ambient_dim**2

    def is_commutative(self, tol: float = TAU_ALG) -> bool:
        b = self.basis
        comm = np.einsum("aij,bjk->abik", b, b) - np.einsum("bij,ajk->abik", b, b)
        return bool(np.max(np.abs(comm), initial=0.0) < tol)

    def __repr__(self) -> str:
        return f"OperatorAlgebra(dim={self.dim}, ambient_dim={self.ambient_dim}, factors={self.factors})"


def _independent_rows(vecs: np.ndarray, tol: float = TAU_RANK) -> list[int]:
    """Indices of a maximal linearly independent subset, greedily in order."""
    keep: list[int] = []
    q = np.zeros((0, vecs.shape[1]))
    for i, v in enumerate(vecs):
        r = v.copy()
        for _ in range(2):
            r = r - q.T @ (q @ r)
        nrm = np.linalg.norm(r)
        if nrm > tol * max(1.0, np.linalg.norm(v)):
            keep.append(i)
            q = np.vstack([q, r / nrm])
    return keep


def _factors(d: int, factors: Sequence[int] | None) -> tuple[int, ...]:
    if factors is None:
        return (d,)
    factors = tuple(int(f) for f in factors)
    if math.prod(factors) != d:
        raise DimensionError(f"factors {factors} do not multiply to ambient dimension {d}")
    return factors


def from_spanning_set(ops, factors: Sequence[int] | None = None, tol: float = TAU_RANK) -> OperatorAlgebra:
    """Orthonormalize ``ops`` into an algebra basis (closure is not enforced)."""
    ops = np.asarray(ops, dtype=complex)
    if ops.ndim != 3 or ops.shape[1] != ops.shape[2]:
        raise DimensionError(f"expected a stack of square operators, got shape {ops.shape}")
    d = ops.shape[1]
    q = range_basis(ops.reshape(len(ops), -1).T, tol)
    return OperatorAlgebra(np.ascontiguousarray(q.T.reshape(-1, d, d)), _factors(d, factors))


def trivial(d: int, factors: Sequence[int] | None = None) -> OperatorAlgebra:
    """The algebra ``C I`` on ``C^d``."""
    return OperatorAlgebra((np.eye(d, dtype=complex) / math.sqrt(d))[None], _factors(d, factors))


def full(d: int, factors: Sequence[int] | None = None) -> OperatorAlgebra:
    """All of ``L(C^d)``, with the matrix units as basis."""
    return OperatorAlgebra(np.eye(d * d, dtype=complex).reshape(d * d, d, d), _factors(d, factors))


def factor_algebra(dims: Sequence[int], k: int) -> OperatorAlgebra:
    """Full algebra of tensor factor ``k`` embedded as ``L(H_k) ⊗ I``."""
    dims = tuple(dims)
    dk = dims[k]
    rest = math.prod(dims) // dk
    units = np.eye(dk * dk, dtype=complex).reshape(dk * dk, dk, dk) / math.sqrt(rest)
    return OperatorAlgebra(np.array([embed(u, dims, [k]) for u in units]), dims)


def _seed_stack(seeds, d: int | None) -> tuple[np.ndarray, int]:
    seeds = [as_operator(s, "seed") for s in seeds]
    if not seeds:
        if d is None:
            raise DimensionError("ambient dimension required for an empty seed set")
        return np.zeros((0, d, d), dtype=complex), d
    arr = np.array(seeds)
    if arr.shape[1] != arr.shape[2] or (d is not None and arr.shape[1] != d):
        raise DimensionError(f"seed operators of shape {arr.shape[1:]} do not match ambient dimension {d}")
    return arr, arr.shape[1]


def generate(seeds, factors: Sequence[int] | None = None, d: int | None = None,
             check: bool | None = None) -> OperatorAlgebra:
    """Smallest *-algebra containing ``seeds`` and the identity.

    Words in the seeds and their adjoints are accumulated until the span
    stops growing. When ``check`` is true (default for ``d <= 8``) the result
    is compared against the double commutant of the seeds.
    """
    if d is None and factors is not None:
        d = math.prod(factors)
    gens, d = _seed_stack(seeds, d)
    factors = _factors(d, factors)
    if len(gens):
        gens = np.concatenate([gens, dagger(gens)])
    span = from_spanning_set([np.eye(d, dtype=complex)] + list(gens), factors)
    for _ in range(d * d):
        if not len(gens):
            break
        words = np.einsum("gij,kjl->gkil", gens, span.basis).reshape(-1, d, d)
        grown = from_spanning_set(np.concatenate([span.basis, words]), factors)
        if grown.dim == span.dim:
            break
        span = grown
    if check is None:
        check = d <= DOUBLE_COMMUTANT_CHECK_DIM
    if check and len(gens):
        other = commutant(commutant(list(gens), factors=factors, d=d))
        if not equals(span, other):
            raise ConsistencyError(
                f"generated algebra (dim {span.dim}) differs from the double commutant (dim {other.dim})"
            )
    return span


def _commutator_superop(g: np.ndarray) -> np.ndarray:
    """Matrix of ``X -> [X, g]`` on row-major vectorized ``X``."""
    d = g.shape[0]
    eye = np.eye(d)
    return np.kron(eye, g.T) - np.kron(g, eye)


def commutant(a, within: OperatorAlgebra | None = None, factors: Sequence[int] | None = None,
              d: int | None = None, hermitian_only: bool = False) -> OperatorAlgebra:
    """Commutant of an algebra or of a set of operators.

    With ``within`` given, returns ``a' ∩ within`` computed directly in the
    coordinates of ``within``. ``hermitian_only`` replaces every constraint
    operator by its Hermitian and anti-Hermitian parts.
    """
    if isinstance(a, OperatorAlgebra):
        ops, d = a.basis, a.ambient_dim
        factors = a.factors if factors is None else factors
    else:
        if d is None and within is not None:
            d = within.ambient_dim
        if d is None and factors is not None:
            d = math.prod(factors)
        ops, d = _seed_stack(a, d)
    if within is not None:
        if within.ambient_dim != d:
            raise DimensionError("commutant: ambient dimension mismatch")
        factors = within.factors if factors is None else factors
    factors = _factors(d, factors)
    if hermitian_only and len(ops):
        ops = np.concatenate([ops + dagger(ops), 1j * (ops - dagger(ops))])
    if within is None:
        kern = stacked_kernel((_commutator_superop(g) for g in ops), d * d)
        return OperatorAlgebra(np.ascontiguousarray(kern.T.reshape(-1, d, d)), factors)
    b = within.basis
    blocks = ((np.einsum("kij,jl->kil", b, g) - np.einsum("ij,kjl->kil", g, b)).reshape(len(b), -1).T for g in ops)
    kern = stacked_kernel(blocks, within.dim)
    return OperatorAlgebra(np.ascontiguousarray(np.einsum("kc,kij->cij", kern, b)), factors)


def factor_commutant(gens: Sequence[np.ndarray], dims: Sequence[int], k: int) -> OperatorAlgebra:
    """``{M on factor k : [M ⊗ I, g] = 0 for every g}`` as an algebra on that factor.

    ``M ⊗ I`` commutes with ``g`` exactly when ``M`` commutes with every
    ``dims[k]``-sized block ``g_rs`` of ``g``, so only the span of those blocks
    matters. It is compressed to at most ``dims[k]**2`` operators first.
    """
    dims = [int(x) for x in dims]
    dk = dims[k]
    rest = math.prod(dims) // dk
    n = len(dims)

    def blocks(g):
        t = np.asarray(g, dtype=complex).reshape(dims + dims)
        t = np.moveaxis(t, [k, n + k], [0, n]).reshape(dk, rest, dk, rest)
        return t.transpose(1, 3, 0, 2).reshape(-1, dk * dk)

    stack = [blocks(g) for g in gens]
    if not stack:
        return full(dk)
    span = np.linalg.qr(np.vstack(stack), mode="r").reshape(-1, dk, dk)
    kern = stacked_kernel((_commutator_superop(x) for x in span), dk * dk)
    return OperatorAlgebra(np.ascontiguousarray(kern.T.reshape(-1, dk, dk)), (dk,))


def _same_ambient(a: OperatorAlgebra, b: OperatorAlgebra) -> None:
    if a.ambient_dim != b.ambient_dim:
        raise DimensionError(f"ambient dimension mismatch: {a.ambient_dim} vs {b.ambient_dim}")


def center(a: OperatorAlgebra) -> OperatorAlgebra:
    """``a ∩ a'``."""
    return commutant(a, within=a)


def intersect(a: OperatorAlgebra, b: OperatorAlgebra) -> OperatorAlgebra:
    """Subspace intersection of two algebras on the same space."""
    _same_ambient(a, b)
    va, vb = a._vecs, b._vecs
    resid = va - vb @ (dagger(vb) @ va)
    kern = stacked_kernel([resid], a.dim)
    return OperatorAlgebra(np.ascontiguousarray(np.einsum("kc,kij->cij", kern, a.basis)), a.factors)


def join(a: OperatorAlgebra, b: OperatorAlgebra, check: bool | None = None) -> OperatorAlgebra:
    """The algebra generated by ``a`` and ``b`` together."""
    _same_ambient(a, b)
    return generate(np.concatenate([a.basis, b.basis]), a.factors, check=check)


def span_distance(a: OperatorAlgebra, b: OperatorAlgebra) -> float:
    """Frobenius distance between the span projectors of ``a`` and ``b``."""
    _same_ambient(a, b)
    va, vb = a._vecs, b._vecs
    rab = va - vb @ (dagger(vb) @ va)
    rba = vb - va @ (dagger(va) @ vb)
    return float(math.sqrt(np.linalg.norm(rab) ** 2 + np.linalg.norm(rba) ** 2))


def equals(a: OperatorAlgebra, b: OperatorAlgebra, tol: float = TAU_RANK) -> bool:
    return a.ambient_dim == b.ambient_dim and a.dim == b.dim and span_distance(a, b) < tol


def contains(a: OperatorAlgebra, m: np.ndarray, tol: float = TAU_RANK) -> bool:
    return a.contains(m, tol)


def check_closure(a: OperatorAlgebra, tol: float = TAU_ALG) -> list[str]:
    """List every algebra invariant violated by ``a`` (empty when valid)."""
    d = a.ambient_dim
    problems = []
    gram = np.einsum("aij,bij->ab", np.conj(a.basis), a.basis)
    if np.max(np.abs(gram - np.eye(a.dim)), initial=0.0) > 1e-8:
        problems.append("basis is not orthonormal")
    if not a.contains(np.eye(d)):
        problems.append("identity not in span")
    if any(a.residual(dagger(x)) > tol for x in a.basis):
        problems.append("span not closed under adjoint")
    prods = np.einsum("aij,bjk->abik", a.basis, a.basis).reshape(-1, d, d)
    if any(a.residual(p) > tol for p in prods):
        problems.append("span not closed under products")
    return problems


@dataclass(frozen=True, eq=False)
class SubspaceDecomposition:
    """A complete family of mutually orthogonal projectors with event labels."""

    projectors: np.ndarray
    labels: tuple[int, ...]

    @property
    def arity(self) -> int:
        return len(self.labels)

    def violations(self, tol: float = TAU_ALG) -> list[str]:
        p = self.projectors
        d = p.shape[1]
        out = []
        if np.max(np.abs(p - dagger(p)), initial=0.0) > tol:
            out.append("projector not Hermitian")
        prods = np.einsum("aij,bjk->abik", p, p)
        for i in range(len(p)):
            for j in range(len(p)):
                target = p[i] if i == j else 0.0
                if np.max(np.abs(prods[i, j] - target)) > tol:
                    out.append(f"projectors {i},{j} violate P_i P_j = delta_ij P_i")
        if np.max(np.abs(p.sum(axis=0) - np.eye(d))) > tol:
            out.append("projectors do not sum to identity")
        return out


@dataclass(frozen=True, eq=False)
class Block:
    """One Wedderburn block: the algebra restricted to ``range(projector)``
    is unitarily ``L(C^left_dim) ⊗ I_right_dim``; ``isometry`` has orthonormal
    columns indexed by ``(left, right)`` pairs in row-major order."""

    projector: np.ndarray
    left_dim: int
    right_dim: int
    isometry: np.ndarray


@dataclass(frozen=True, eq=False)
class BlockStructure:
    blocks: tuple[Block, ...]
    factors: tuple[int, ...]

    def decomposition(self) -> SubspaceDecomposition:
        return SubspaceDecomposition(np.array([b.projector for b in self.blocks]), tuple(range(len(self.blocks))))

    def dims(self) -> list[tuple[int, int]]:
        return [(b.left_dim, b.right_dim) for b in self.blocks]


def _block_key(p: np.ndarray) -> tuple:
    diag = np.real(np.diag(p))
    rank = int(round(float(np.sum(diag))))
    first = int(np.argmax(diag > 1e-8))
    flat = np.round(p.reshape(-1), 6)
    return (-rank, first, tuple(-flat.real), tuple(-flat.imag))


def _rng(seed: int, attempt: int) -> np.random.Generator:
    return np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, attempt])


def _central_projectors(a: OperatorAlgebra, seed: int) -> list[np.ndarray]:
    z = center(a)
    if z.dim == 1:
        return [np.eye(a.ambient_dim, dtype=complex)]
    herm = z.hermitian_basis
    for attempt in range(MAX_RESAMPLES):
        coeffs = _rng(seed, attempt).uniform(-1.0, 1.0, len(herm))
        h = np.einsum("k,kij->ij", coeffs, herm)
        w, v = hermitian_eig(h)
        try:
            groups = cluster_eigenvalues(w, TAU_GAP)
        except ClusteringAmbiguityError:
            continue
        if len(groups) != z.dim:
            continue
        projs = [v[:, g] @ dagger(v[:, g]) for g in groups]
        if all(z.contains(p, 1e-6) for p in projs):
            return projs
    raise ClusteringAmbiguityError(
        f"central projectors not resolved after {MAX_RESAMPLES} samples; review tau_gap"
    )


def _block_isometry(a: OperatorAlgebra, p: np.ndarray, left: int, seed: int) -> np.ndarray:
    w, v = hermitian_eig(p)
    frame = v[:, w > 0.5]
    m = frame.shape[1]
    if left == 1:
        return frame
    right = m // left
    sub = from_spanning_set(np.einsum("ai,kij,jb->kab", dagger(frame), a.basis, frame))
    herm = sub.hermitian_basis
    for attempt in range(MAX_RESAMPLES):
        rng = _rng(seed, 100 + attempt)
        h = np.einsum("k,kij->ij", rng.uniform(-1.0, 1.0, len(herm)), herm)
        hw, hv = hermitian_eig(h)
        try:
            groups = cluster_eigenvalues(hw, TAU_GAP)
        except ClusteringAmbiguityError:
            continue
        if len(groups) != left or any(len(g) != right for g in groups):
            continue
        e = [hv[:, g] for g in groups]
        x = np.einsum("k,kij->ij", rng.normal(size=sub.dim) + 1j * rng.normal(size=sub.dim), sub.basis)
        cols = []
        ok = True
        for j in range(left):
            for r in range(right):
                if j == 0:
                    cols.append(e[0][:, r])
                    continue
                wj = e[j] @ dagger(e[j]) @ x @ e[0][:, r]
                nrm = np.linalg.norm(wj)
                if nrm < 1e-6:
                    ok = False
                    break
                cols.append(wj / nrm)
            if not ok:
                break
        if not ok:
            continue
        iso = np.array(cols).T
        if np.max(np.abs(dagger(iso) @ iso - np.eye(m))) > 1e-7:
            continue
        return frame @ iso
    raise ClusteringAmbiguityError("block factorization not resolved; review tau_gap")


def block_structure(a: OperatorAlgebra, seed: int = 0) -> BlockStructure:
    """Wedderburn decomposition ``a = ⊕_i L(C^left_i) ⊗ I_right_i``.

    Blocks are ordered by descending subspace dimension, then by the first
    standard-basis index carrying projector weight, then by the projector
    entries themselves (descending) to break remaining ties.
    """
    projs = _central_projectors(a, seed)
    projs.sort(key=_block_key)
    blocks = []
    for p in projs:
        restricted = from_spanning_set(np.einsum("kij,jl->kil", a.basis, p))
        left = math.isqrt(restricted.dim)
        rank = int(round(float(np.real(np.trace(p)))))
        if left * left != restricted.dim or rank % left:
            raise ConsistencyError(
                f"block of rank {rank} carries an algebra of dimension {restricted.dim}, not a square divisor"
            )
        iso = _block_isometry(a, p, left, seed)
        blocks.append(Block(p, left, rank // left, iso))
    return BlockStructure(tuple(blocks), a.factors)


def decomposition_span(dec: SubspaceDecomposition, factors: Sequence[int] | None = None) -> OperatorAlgebra:
    """The commutative algebra spanned by the projectors of ``dec``."""
    return from_spanning_set(dec.projectors, factors)
