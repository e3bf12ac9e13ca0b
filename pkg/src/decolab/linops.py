"""Dense complex linear-algebra kernel.

Operators are plain 2-D complex ``numpy`` arrays. Tensor structure travels
alongside as an explicit tuple of factor dimensions (``dims``); the leftmost
factor is the most significant index everywhere in the package.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence

import numpy as np

from .errors import ClusteringAmbiguityError, DimensionError, ToleranceError

TAU_RANK = 1e-8
TAU_HERM = 1e-8
TAU_UNITARY = 1e-8
TAU_ORTH = 1e-8
TAU_RECON = 1e-9
TAU_ALG = 1e-7
TAU_GAP = 1e-7
TAU_INF = 1e-8
TAU_PHASE = 1e-7
TAU_PSD = 1e-9

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def as_operator(a, name: str = "operator") -> np.ndarray:
    """Return ``a`` as a finite complex 2-D array."""
    arr = np.asarray(a, dtype=complex)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ToleranceError(f"{name} has non-finite entries")
    return arr


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def _check_dims(n: int, dims: Sequence[int], what: str = "operator") -> tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if any(d < 1 for d in dims) or int(np.prod(dims, dtype=np.int64)) != n:
        raise DimensionError(f"factor dims {dims} do not multiply to the {what} size {n}")
    return dims


def kron(*ops: np.ndarray) -> np.ndarray:
    """Tensor product, left factor most significant."""
    if not ops:
        return np.eye(1, dtype=complex)
    out = np.asarray(ops[0], dtype=complex)
    for op in ops[1:]:
        out = np.kron(out, np.asarray(op, dtype=complex))
    return out


def embed(op: np.ndarray, dims: Sequence[int], targets: Sequence[int]) -> np.ndarray:
    """Place ``op`` on the factors ``targets`` (in that order), identity elsewhere."""
    dims = tuple(dims)
    targets = tuple(targets)
    if len(set(targets)) != len(targets) or any(t < 0 or t >= len(dims) for t in targets):
        raise DimensionError(f"invalid target factors {targets} for dims {dims}")
    sub = [dims[t] for t in targets]
    op = as_operator(op)
    if op.shape != (int(np.prod(sub)),) * 2:
        raise DimensionError(f"operator shape {op.shape} does not match target dims {sub}")
    rest = [i for i in range(len(dims)) if i not in targets]
    full = kron(op, np.eye(int(np.prod([dims[i] for i in rest], dtype=np.int64))))
    order = list(targets) + rest
    perm = [order.index(i) for i in range(len(dims))]
    return permute_subsystems(full, [dims[i] for i in order], perm)


def permute_subsystems(a: np.ndarray, dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors: factor ``i`` of the result is factor ``perm[i]`` of ``a``.

    Equivalent to conjugation by the corresponding permutation unitary.
    """
    a = as_operator(a)
    if a.shape[0] != a.shape[1]:
        raise DimensionError("permute_subsystems needs a square operator")
    dims = _check_dims(a.shape[0], dims)
    perm = tuple(int(p) for p in perm)
    if sorted(perm) != list(range(len(dims))):
        raise DimensionError(f"{perm} is not a permutation of {len(dims)} factors")
    n = len(dims)
    t = a.reshape(dims + dims)
    t = t.transpose(list(perm) + [n + p for p in perm])
    return t.reshape(a.shape)


def partial_trace(a: np.ndarray, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Trace out every factor not in ``keep``; kept factors retain their order.

    An empty ``keep`` gives the full trace as a 1x1 array.
    """
    a = as_operator(a)
    dims = _check_dims(a.shape[0], dims)
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= len(dims) for k in keep):
        raise DimensionError(f"kept factors {keep} out of range for dims {dims}")
    n = len(dims)
    t = a.reshape(dims + dims)
    letters = "abcdefghijklmnopqrstuvwxyz"
    rows = [letters[i] for i in range(n)]
    cols = [letters[i].upper() if i in keep else letters[i] for i in range(n)]
    out = "".join(letters[i] for i in keep) + "".join(letters[i].upper() for i in keep)
    res = np.einsum("".join(rows) + "".join(cols) + "->" + out, t)
    d = int(np.prod([dims[i] for i in keep], dtype=np.int64)) if keep else 1
    return res.reshape(d, d)


def hermitian_defect(a: np.ndarray) -> float:
    return float(np.linalg.norm(a - dagger(a)))


def check_hermitian(a, name: str = "operator", tol: float = TAU_HERM) -> np.ndarray:
    a = as_operator(a, name)
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"{name} must be square, got {a.shape}")
    scale = max(1.0, float(np.linalg.norm(a)))
    if hermitian_defect(a) > tol * scale:
        raise ToleranceError(f"{name} is not Hermitian within tau_herm={tol:g}")
    return a


def is_unitary(u: np.ndarray, tol: float = TAU_UNITARY) -> bool:
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return bool(np.linalg.norm(dagger(u) @ u - np.eye(u.shape[0])) <= tol)


def check_unitary(u, name: str = "operator", tol: float = TAU_UNITARY) -> np.ndarray:
    u = as_operator(u, name)
    if u.shape[0] != u.shape[1]:
        raise DimensionError(f"{name} must be square, got {u.shape}")
    if not is_unitary(u, tol):
        raise ToleranceError(f"{name} is not unitary within tau_unitary={tol:g}")
    return u


def hermitian_eig(a, tol: float = TAU_HERM) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian operator.

    Returns eigenvalues in descending order and the matching orthonormal
    eigenvectors as columns.
    """
    a = check_hermitian(a, tol=tol)
    w, v = np.linalg.eigh(0.5 * (a + dagger(a)))
    return w[::-1].copy(), v[:, ::-1].copy()


def cluster_eigenvalues(w: np.ndarray, rel_gap: float = TAU_GAP) -> list[np.ndarray]:
    """Group sorted eigenvalues whose neighbours lie within ``rel_gap``.

    The absolute gap is ``rel_gap * max(1, max|w|)``. A neighbour spacing in
    the open band between the gap and ten times the gap is ambiguous and
    raises :class:`ClusteringAmbiguityError`.
    """
    w = np.asarray(w, dtype=float)
    if w.size == 0:
        return []
    gap = rel_gap * max(1.0, float(np.max(np.abs(w))))
    order = np.argsort(-w, kind="stable")
    groups = [[order[0]]]
    for prev, cur in zip(order[:-1], order[1:]):
        spacing = w[prev] - w[cur]
        if spacing <= gap:
            groups[-1].append(cur)
        elif spacing <= 10 * gap:
            raise ClusteringAmbiguityError(
                f"eigenvalue spacing {spacing:.3e} lies within ten times tau_gap={gap:.3e}"
            )
        else:
            groups.append([cur])
    return [np.array(g) for g in groups]


def _cutoff(s: np.ndarray, tol: float) -> float:
    smax = float(s[0]) if s.size else 0.0
    return tol * max(1.0, smax)


def kernel_basis(m, tol: float = TAU_RANK) -> np.ndarray:
    """Orthonormal basis (columns) of the numerical null space of ``m``.

    Right singular vectors with ``sigma <= tol * max(1, sigma_max)``.
    """
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2:
        raise DimensionError(f"kernel_basis needs a matrix, got shape {m.shape}")
    n = m.shape[1]
    if m.shape[0] == 0:
        return np.eye(n, dtype=complex)
    _, s, vh = np.linalg.svd(m, full_matrices=True)
    full = np.zeros(n)
    full[: s.size] = s
    null = full <= _cutoff(s, tol)
    return dagger(vh)[:, null]


def range_basis(m, tol: float = TAU_RANK) -> np.ndarray:
    """Orthonormal basis (columns) of the numerical column space of ``m``."""
    m = np.asarray(m, dtype=complex)
    if m.size == 0:
        return np.zeros((m.shape[0], 0), dtype=complex)
    u, s, _ = np.linalg.svd(m, full_matrices=False)
    return u[:, s > _cutoff(s, tol)]


def stacked_kernel(blocks: Iterable[np.ndarray], ncols: int, tol: float = TAU_RANK) -> np.ndarray:
    """Null space of the vertical stack of ``blocks`` without forming it.

    Each block is folded into a running triangular factor, so tall constraint
    systems never need to be held at once. The singular values of the stacked
    matrix equal those of the stacked triangular factors.
    """
    r = np.zeros((0, ncols), dtype=complex)
    for block in blocks:
        block = np.asarray(block, dtype=complex).reshape(-1, ncols)
        if block.shape[0] == 0:
            continue
        r = np.linalg.qr(np.vstack([r, block]), mode="r")
    return kernel_basis(r, tol)


def exp_i_hermitian(h, t: float) -> np.ndarray:
    """``exp(-i h t)`` through the eigendecomposition of ``h``."""
    w, v = hermitian_eig(h)
    return (v * np.exp(-1j * w * t)) @ dagger(v)


def clock(d: int) -> np.ndarray:
    """Generalized Pauli Z on ``C^d``."""
    return np.diag(np.exp(2j * np.pi * np.arange(d) / d))


def shift(d: int) -> np.ndarray:
    """Generalized Pauli X on ``C^d``: ``|k> -> |k+1 mod d>``."""
    return np.roll(np.eye(d, dtype=complex), 1, axis=0)


def local_generators(d: int) -> list[np.ndarray]:
    """Two operators generating the full matrix algebra on ``C^d``."""
    if d == 1:
        return []
    if d == 2:
        return [PAULI["X"], PAULI["Z"]]
    return [shift(d), clock(d)]


def matrix_units(d: int) -> np.ndarray:
    """The ``d*d`` matrix units ``E_ij`` as an array of shape ``(d*d, d, d)``."""
    return np.eye(d * d, dtype=complex).reshape(d * d, d, d)


def fix_phase(v: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Rescale a vector so that its first non-negligible amplitude is real positive."""
    v = np.asarray(v, dtype=complex)
    scale = max(float(np.max(np.abs(v))), tol) if v.size else 1.0
    idx = int(np.argmax(np.abs(v) > 1e-8 * scale))
    a = v[idx]
    return v * (np.conj(a) / abs(a)) if abs(a) > 0 else v


def check_state(rho, name: str = "state", tol: float = TAU_PSD) -> np.ndarray:
    """Validate a density operator: Hermitian, PSD within ``tol``, unit trace within 1e-9."""
    rho = check_hermitian(rho, name)
    w = np.linalg.eigvalsh(0.5 * (rho + dagger(rho)))
    if w.size and w[0] < -tol:
        raise ToleranceError(f"{name} is not positive semidefinite within tau_psd={tol:g}")
    if abs(np.trace(rho) - 1) > 1e-9:
        raise ToleranceError(f"{name} does not have unit trace within 1e-9")
    return rho


def projector(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex).reshape(-1)
    return np.outer(v, np.conj(v))
