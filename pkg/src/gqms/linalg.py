"""Dense complex/Hermitian helpers shared by every other module.

Matrices are plain numpy arrays.  Hermitian inputs are symmetrised on the
way in (``hermitian``) and the pre-symmetrisation deviation is reported
rather than treated as an error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

RANK_TOL = 1e-10
CLUSTER_TOL = 1e-8


class EigenError(RuntimeError):
    """Eigensolver failed to converge."""


def hermitian(H, return_deviation: bool = False):
    """Return ``(H + H*)/2`` (optionally with ``max|H - H*|``)."""
    H = np.asarray(H, dtype=complex)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {H.shape}")
    if not np.all(np.isfinite(H)):
        raise ValueError("matrix has non-finite entries")
    Hs = (H + H.conj().T) / 2
    if return_deviation:
        dev = float(np.max(np.abs(H - H.conj().T))) if H.size else 0.0
        return Hs, dev
    return Hs


def kron(A, B):
    return np.kron(np.asarray(A), np.asarray(B))


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    multiplicities: tuple[int, ...]
    cluster_values: tuple[float, ...]
    cluster_tolerance: float = CLUSTER_TOL

    @property
    def dim(self) -> int:
        return int(self.eigenvalues.size)


def cluster(eigenvalues, tol: float = CLUSTER_TOL):
    """Group sorted eigenvalues; a new cluster starts when the gap exceeds ``tol``."""
    ev = np.sort(np.asarray(eigenvalues, dtype=float))
    if ev.size == 0:
        return (), ()
    mults, values = [], []
    start = 0
    for k in range(1, ev.size + 1):
        if k == ev.size or ev[k] - ev[k - 1] > tol:
            mults.append(k - start)
            values.append(float(ev[start:k].mean()))
            start = k
    return tuple(mults), tuple(values)


def eig_herm(H, cluster_tol: float = CLUSTER_TOL):
    """Eigen-decomposition of a Hermitian matrix.

    Returns ``(Spectrum, U)`` with ascending eigenvalues and ``H = U diag(w) U*``.
    """
    H = hermitian(H)
    try:
        w, U = np.linalg.eigh(H)
    except np.linalg.LinAlgError as exc:
        raise EigenError(str(exc)) from exc
    mults, values = cluster(w, cluster_tol)
    return Spectrum(w, mults, values, cluster_tol), U


def min_eig(H) -> float:
    H = hermitian(H)
    if H.size == 0:
        return np.inf
    try:
        return float(np.linalg.eigvalsh(H)[0])
    except np.linalg.LinAlgError as exc:
        raise EigenError(str(exc)) from exc


def psd_check(H, tol: float = 0.0) -> bool:
    return min_eig(H) >= -tol


def real_embed(H):
    """``[[Re H, -Im H], [Im H, Re H]]``; doubles traces and inner products."""
    H = np.asarray(H, dtype=complex)
    return np.block([[H.real, -H.imag], [H.imag, H.real]])


def real_unembed(R):
    """Inverse of ``real_embed`` after projecting onto embedded matrices."""
    R = np.asarray(R, dtype=float)
    m = R.shape[0] // 2
    re = (R[:m, :m] + R[m:, m:]) / 2
    im = (R[m:, :m] - R[:m, m:]) / 2
    return re + 1j * im


def nullspace(M, rank_tol: float = RANK_TOL):
    """Orthonormal kernel basis (as columns) via SVD.

    Singular values at or below ``rank_tol * sigma_max`` count as zero.
    """
    M = np.atleast_2d(np.asarray(M))
    cols = M.shape[1]
    if M.size == 0:
        return np.eye(cols, dtype=M.dtype)
    _, sv, Vh = np.linalg.svd(M, full_matrices=True)
    smax = sv[0] if sv.size else 0.0
    if smax == 0.0:
        rank = 0
    else:
        rank = int(np.sum(sv > rank_tol * smax))
    return Vh[rank:].conj().T


def hermitize_pair(B):
    """``(C, D) = (B + B*, i(B - B*))``, both Hermitian, with ``B = (C - iD)/2``."""
    B = np.asarray(B, dtype=complex)
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {B.shape}")
    Bh = B.conj().T
    return B + Bh, 1j * (B - Bh)


def her_basis(s: int) -> list[np.ndarray]:
    """Trace-orthogonal basis of s x s Hermitian matrices (s**2 elements).

    Order: for each i, ``E_ii`` then for each j > i the pair
    ``E_ij + E_ji`` and ``-i(E_ij - E_ji)``.  For s = 2 this is
    ``diag(1,0), sigma_x, sigma_y, diag(0,1)``.
    """
    if s < 1:
        raise ValueError("s must be >= 1")
    out = []
    for i in range(s):
        E = np.zeros((s, s), dtype=complex)
        E[i, i] = 1
        out.append(E)
        for j in range(i + 1, s):
            Sy = np.zeros((s, s), dtype=complex)
            Sy[i, j] = Sy[j, i] = 1
            out.append(Sy)
            An = np.zeros((s, s), dtype=complex)
            An[i, j], An[j, i] = -1j, 1j
            out.append(An)
    return out


def her_coordinates(H, basis=None):
    """Real coordinates of Hermitian ``H`` in an orthogonal Hermitian basis."""
    H = np.asarray(H, dtype=complex)
    basis = her_basis(H.shape[0]) if basis is None else basis
    return np.array([np.real(np.trace(B.conj().T @ H)) / np.real(np.trace(B.conj().T @ B))
                     for B in basis])


def from_her_coordinates(coords, basis):
    return sum((c * B for c, B in zip(coords, basis)), np.zeros_like(basis[0]))


# JSON matrix encoding: {"rows", "cols", "data": [[re, im], ...]} row-major

def matrix_to_json(M) -> dict:
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2:
        raise ValueError("matrix_to_json expects a 2-D array")
    return {
        "rows": int(M.shape[0]),
        "cols": int(M.shape[1]),
        "data": [[float(z.real), float(z.imag)] for z in M.ravel()],
    }


def matrix_from_json(obj) -> np.ndarray:
    try:
        rows, cols, data = int(obj["rows"]), int(obj["cols"]), obj["data"]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed matrix JSON: {exc}") from exc
    if len(data) != rows * cols:
        raise ValueError(f"matrix JSON has {len(data)} entries, expected {rows * cols}")
    arr = np.array([complex(float(re), float(im)) for re, im in data], dtype=complex)
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix JSON has non-finite entries")
    return arr.reshape(rows, cols)
