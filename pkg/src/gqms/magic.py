"""Quantum magic squares: verification, classification, generation, averaging.

A square is an n x n grid of s x s Hermitian blocks, stored as a complex
array of shape (n, n, s, s).  Its "full" form is the ns x ns matrix with
block (i, j) in rows i*s:(i+1)*s, columns j*s:(j+1)*s, so graph
commutation reads ``(A (x) I_s) X = X (A (x) I_s)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import permutations as _perms

import numpy as np

from .graphs import Graph, connected_components
from .linalg import matrix_from_json, matrix_to_json

DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class BlockMatrix:
    blocks: np.ndarray = field(repr=False)
    deviation: float = 0.0

    def __post_init__(self):
        B = np.array(self.blocks, dtype=complex)
        if B.ndim != 4 or B.shape[0] != B.shape[1] or B.shape[2] != B.shape[3]:
            raise ValueError(f"blocks must have shape (n, n, s, s), got {B.shape}")
        if not np.all(np.isfinite(B)):
            raise ValueError("blocks have non-finite entries")
        Bh = np.conj(np.swapaxes(B, 2, 3))
        dev = float(np.max(np.abs(B - Bh))) if B.size else 0.0
        B = (B + Bh) / 2
        B.setflags(write=False)
        object.__setattr__(self, "blocks", B)
        object.__setattr__(self, "deviation", max(dev, self.deviation))

    @property
    def n(self) -> int:
        return self.blocks.shape[0]

    @property
    def s(self) -> int:
        return self.blocks.shape[2]

    def __getitem__(self, ij):
        return self.blocks[ij]

    def full(self) -> np.ndarray:
        n, s = self.n, self.s
        return self.blocks.transpose(0, 2, 1, 3).reshape(n * s, n * s)

    @classmethod
    def from_full(cls, M, n: int) -> "BlockMatrix":
        M = np.asarray(M)
        s = M.shape[0] // n
        return cls(M.reshape(n, s, n, s).transpose(0, 2, 1, 3))

    def row_sums(self) -> np.ndarray:
        return self.blocks.sum(axis=1)

    def col_sums(self) -> np.ndarray:
        return self.blocks.sum(axis=0)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "s": self.s,
            "blocks": [[matrix_to_json(self.blocks[i, j]) for j in range(self.n)] for i in range(self.n)],
        }

    @classmethod
    def from_json(cls, obj) -> "BlockMatrix":
        try:
            n, s, rows = int(obj["n"]), int(obj["s"]), obj["blocks"]
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed block-matrix JSON: {exc}") from exc
        if len(rows) != n or any(len(r) != n for r in rows):
            raise ValueError("block grid does not match n")
        B = np.zeros((n, n, s, s), dtype=complex)
        for i in range(n):
            for j in range(n):
                blk = matrix_from_json(rows[i][j])
                if blk.shape != (s, s):
                    raise ValueError(f"block ({i},{j}) has shape {blk.shape}, expected {(s, s)}")
                B[i, j] = blk
        return cls(B)


def _block_min_eigs(X: BlockMatrix) -> np.ndarray:
    return np.linalg.eigvalsh(X.blocks)[..., 0]


@dataclass
class MagicReport:
    block_min_eigs: np.ndarray
    row_residuals: np.ndarray
    col_residuals: np.ndarray
    tol: float

    @property
    def is_psd(self) -> np.ndarray:
        return self.block_min_eigs >= -self.tol

    @property
    def magic_residual(self) -> float:
        return float(max(self.row_residuals.max(), self.col_residuals.max()))

    @property
    def overall(self) -> bool:
        return bool(np.all(self.is_psd) and self.magic_residual <= self.tol)

    def to_json(self) -> dict:
        return {
            "overall": self.overall,
            "tol": self.tol,
            "min_block_eig": float(self.block_min_eigs.min()),
            "block_min_eigs": self.block_min_eigs.tolist(),
            "row_residuals": self.row_residuals.tolist(),
            "col_residuals": self.col_residuals.tolist(),
        }


def verify_magic(X: BlockMatrix, tol: float = DEFAULT_TOL) -> MagicReport:
    I = np.eye(X.s)
    rows = np.linalg.norm(X.row_sums() - I, axis=(1, 2))
    cols = np.linalg.norm(X.col_sums() - I, axis=(1, 2))
    return MagicReport(_block_min_eigs(X), rows, cols, tol)


def magic_residual(X: BlockMatrix) -> float:
    return verify_magic(X).magic_residual


@dataclass
class ClassFlags:
    in_M: bool
    in_P: bool
    in_C: bool
    projection_residuals: np.ndarray
    commutator_residual: float

    def to_json(self) -> dict:
        return {
            "in_M": self.in_M,
            "in_P": self.in_P,
            "in_C": self.in_C,
            "max_projection_residual": float(self.projection_residuals.max()),
            "commutator_residual": self.commutator_residual,
        }


def classify(X: BlockMatrix, tol: float = DEFAULT_TOL) -> ClassFlags:
    B = X.blocks
    in_M = verify_magic(X, tol).overall
    proj = np.linalg.norm(B @ B - B, axis=(2, 3))
    flat = B.reshape(-1, X.s, X.s)
    comm = flat[:, None] @ flat[None, :] - flat[None, :] @ flat[:, None]
    comm_res = float(np.linalg.norm(comm, axis=(2, 3)).max()) if flat.size else 0.0
    in_P = in_M and bool(np.all(proj <= tol))
    in_C = in_P and comm_res <= tol
    return ClassFlags(in_M, in_P, in_C, proj, comm_res)


def _check_perm(perm, n=None):
    perm = [int(p) for p in perm]
    if sorted(perm) != list(range(len(perm))) or (n is not None and len(perm) != n):
        raise ValueError(f"not a permutation of {n or len(perm)} points: {perm}")
    return perm


def from_permutation(perm, s: int) -> BlockMatrix:
    """Blocks ``delta_{perm(i), j} I_s``."""
    perm = _check_perm(perm)
    n = len(perm)
    B = np.zeros((n, n, s, s), dtype=complex)
    for i, j in enumerate(perm):
        B[i, j] = np.eye(s)
    return BlockMatrix(B)


def uniform_square(n: int, s: int) -> BlockMatrix:
    B = np.zeros((n, n, s, s), dtype=complex)
    B[:, :] = np.eye(s) / n
    return BlockMatrix(B)


class SinkhornError(RuntimeError):
    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


def _inv_sqrt(R):
    w, U = np.linalg.eigh(R)
    return (U / np.sqrt(w)) @ U.conj().T


def sinkhorn_sweep(B: np.ndarray) -> np.ndarray:
    """One row pass then one column pass of symmetric operator scaling."""
    B = B.copy()
    n = B.shape[0]
    for i in range(n):
        T = _inv_sqrt(B[i].sum(axis=0))
        B[i] = T @ B[i] @ T
    for j in range(n):
        T = _inv_sqrt(B[:, j].sum(axis=0))
        B[:, j] = T @ B[:, j] @ T
    return (B + np.conj(np.swapaxes(B, 2, 3))) / 2


def operator_sinkhorn(B0, target: float = 1e-10, max_sweeps: int = 10_000) -> np.ndarray:
    """Scale positive definite blocks until rows and columns sum to I."""
    B = np.asarray(B0, dtype=complex)
    s = B.shape[2]
    I = np.eye(s)
    res = np.inf
    for _ in range(max_sweeps):
        B = sinkhorn_sweep(B)
        res = max(np.linalg.norm(B.sum(axis=1) - I, axis=(1, 2)).max(),
                  np.linalg.norm(B.sum(axis=0) - I, axis=(1, 2)).max())
        if res <= target:
            return B
    raise SinkhornError(f"operator Sinkhorn did not reach {target} in {max_sweeps} sweeps", res)


def random_qms(n: int, s: int, seed, rank: int | None = None) -> BlockMatrix:
    """Random quantum magic square via operator Sinkhorn on Gaussian Gram blocks.

    ``rank`` limits the Gram factor width (default ``s``, i.e. full rank).
    """
    if n < 1 or s < 1:
        raise ValueError("need n >= 1 and s >= 1")
    if n == 1:
        return BlockMatrix(np.eye(s, dtype=complex)[None, None])
    rng = np.random.default_rng(seed)
    r = s if rank is None else rank
    G = rng.standard_normal((n, n, s, r)) + 1j * rng.standard_normal((n, n, s, r))
    B = G @ np.conj(np.swapaxes(G, 2, 3))
    return BlockMatrix(operator_sinkhorn(B))


def matrix_convex_combine(squares, isometries, tol: float = 1e-10) -> BlockMatrix:
    """Blocks ``sum_i V_i* A^(i)_kl V_i`` for ``sum_i V_i* V_i = I_t``."""
    squares = list(squares)
    Vs = [np.asarray(V, dtype=complex) for V in isometries]
    if not squares or len(squares) != len(Vs):
        raise ValueError("need one isometry per square")
    n = squares[0].n
    t = Vs[0].shape[1]
    total = np.zeros((t, t), dtype=complex)
    for A, V in zip(squares, Vs):
        if A.n != n or V.shape != (A.s, t):
            raise ValueError(f"isometry shape {V.shape} does not match square (s={A.s}, t={t})")
        total += V.conj().T @ V
    dev = float(np.linalg.norm(total - np.eye(t)))
    if dev > tol:
        raise ValueError(f"sum V_i* V_i deviates from identity by {dev:.3e}")
    out = np.zeros((n, n, t, t), dtype=complex)
    for A, V in zip(squares, Vs):
        out += V.conj().T @ A.blocks @ V
    return BlockMatrix(out)


def random_isometries(sizes, t: int, rng) -> list[np.ndarray]:
    """Random V_i (s_i x t) with ``sum V_i* V_i = I_t`` (requires sum s_i >= t)."""
    total = sum(sizes)
    if total < t:
        raise ValueError("stacked isometry needs sum(sizes) >= t")
    G = rng.standard_normal((total, t)) + 1j * rng.standard_normal((total, t))
    Q, _ = np.linalg.qr(G)
    out, k = [], 0
    for s in sizes:
        out.append(Q[k:k + s])
        k += s
    return out


def graph_commutation_residual(X: BlockMatrix, G: Graph) -> float:
    """max_(i,j) || sum_{k~j} X_ik - sum_{k~i} X_kj ||_F."""
    if X.n != G.n:
        raise ValueError(f"square has n={X.n} but graph has {G.n} vertices")
    A = G.adjacency.astype(float)
    # (X A)_ij = sum_k X_ik A_kj ; (A X)_ij = sum_k A_ik X_kj
    XA = np.einsum("ikab,kj->ijab", X.blocks, A)
    AX = np.einsum("ik,kjab->ijab", A, X.blocks)
    return float(np.linalg.norm(XA - AX, axis=(2, 3)).max())


def graph_commutes(X: BlockMatrix, G: Graph, tol: float = DEFAULT_TOL):
    res = graph_commutation_residual(X, G)
    return res <= tol, res


def group_average(X: BlockMatrix, perms) -> BlockMatrix:
    """Blockwise ``(1/|perms|) sum_g X_{g(i), g(j)}``."""
    perms = [_check_perm(p, X.n) for p in perms]
    if not perms:
        raise ValueError("need at least one permutation")
    out = np.zeros_like(X.blocks)
    for g in perms:
        idx = np.asarray(g)
        out += X.blocks[np.ix_(idx, idx)]
    return BlockMatrix(out / len(perms))


def cyclic_group(n: int) -> list[list[int]]:
    """Powers of the rotation i -> i+1 (mod n)."""
    return [[(i + k) % n for i in range(n)] for k in range(n)]


def dihedral_group(n: int) -> list[list[int]]:
    """The 2n automorphisms of the n-cycle: rotations then reflections."""
    rots = cyclic_group(n)
    refl = [[(k - i) % n for i in range(n)] for k in range(n)]
    return rots + refl


def automorphisms(G: Graph) -> list[list[int]]:
    """Brute-force automorphism list (small graphs only)."""
    if G.n > 8:
        raise ValueError("brute-force automorphism search limited to n <= 8")
    A = G.adjacency
    return [list(p) for p in _perms(range(G.n)) if np.array_equal(A[np.ix_(p, p)], A)]


@dataclass
class ComponentSums:
    row_sums: list[np.ndarray]
    col_sums: list[np.ndarray]
    deviation: float


def componentwise_sums(B: BlockMatrix, G: Graph) -> ComponentSums:
    if B.n != G.n:
        raise ValueError(f"square has n={B.n} but graph has {G.n} vertices")
    comps = connected_components(G)
    rows, cols = B.row_sums(), B.col_sums()
    Lr, Lc, dev = [], [], 0.0
    for t in range(comps.count):
        vs = comps.vertices(t)
        lr = rows[vs].mean(axis=0)
        lc = cols[vs].mean(axis=0)
        dev = max(dev, float(np.linalg.norm(rows[vs] - lr, axis=(1, 2)).max()),
                  float(np.linalg.norm(cols[vs] - lc, axis=(1, 2)).max()))
        Lr.append(lr)
        Lc.append(lc)
    return ComponentSums(Lr, Lc, dev)
