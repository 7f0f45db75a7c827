"""Separation operators for matrix convex hulls of quantum permutation squares.

For a square A (n x n grid of s x s blocks) the operator

    M(A) = phi(A) + psi(A),   phi(A) = diag(A) - col(A) col(A)*

acts on C^n (x) C^n (x) C^s, with index ``(i*n + j)*s + a``.  If A lies in
the matrix convex hull of the quantum permutation squares, some X in the
real subspace S = (Z_e (x) Z_e (x) Mat_s)_her makes M(A) + X positive
semidefinite.  A positive semidefinite, trace-one Y orthogonal to S with
Tr(Y M(A)) < 0 rules that out.
"""

from __future__ import annotations

import enum
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import jsonio, sdp
from .graphs import cycle
from .linalg import her_basis, matrix_from_json, matrix_to_json, min_eig, nullspace
from .magic import (BlockMatrix, cyclic_group, graph_commutation_residual, group_average,
                    random_qms, sinkhorn_sweep, verify_magic)

ACCEPT_THRESHOLD = -1e-6
CERT_TOL = 1e-9


class Variant(str, enum.Enum):
    ROW_ONLY = "row_only"          # diag Z = 0, Z 1 = 0
    ROW_AND_COL = "row_and_col"    # additionally Z* 1 = 0


def _variant(v) -> Variant:
    return v if isinstance(v, Variant) else Variant(str(v))


class SpanMismatchError(RuntimeError):
    pass


# hard-coded basis of {diag Z = 0, Z 1 = 0, Z* 1 = 0} at n = 4
_Z4 = [
    [[0, 1, 0, -1], [1, 0, -1, 0], [0, -1, 0, 1], [-1, 0, 1, 0]],
    [[0, 1j, 0, -1j], [-1j, 0, 0, 1j], [0, 0, 0, 0], [1j, -1j, 0, 0]],
    [[0, 0, 1, -1], [0, 0, -1, 1], [1, -1, 0, 0], [-1, 1, 0, 0]],
    [[0, 0, 1j, -1j], [0, 0, 0, 0], [-1j, 0, 0, 1j], [1j, 0, -1j, 0]],
    [[0, 0, 0, 0], [0, 0, 1j, -1j], [0, -1j, 0, 1j], [0, 1j, -1j, 0]],
]


def hardcoded_z4() -> list[np.ndarray]:
    return [np.array(z, dtype=complex) for z in _Z4]


@dataclass
class ZeBasis:
    n: int
    variant: Variant
    basis: list[np.ndarray]
    source: str = "nullspace"

    @property
    def dimension(self) -> int:
        return len(self.basis)


def ze_constraints(n: int, variant) -> np.ndarray:
    variant = _variant(variant)
    rows = []
    for i in range(n):
        v = np.zeros((n, n))
        v[i, i] = 1
        rows.append(v.ravel())
        v = np.zeros((n, n))
        v[i, :] = 1
        rows.append(v.ravel())
        if variant is Variant.ROW_AND_COL:
            v = np.zeros((n, n))
            v[:, i] = 1
            rows.append(v.ravel())
    return np.array(rows)


def span_residual(U: list[np.ndarray], V: list[np.ndarray]) -> float:
    """max over u in U of the distance from u/|u| to span V (complex span)."""
    if not U:
        return 0.0
    if not V:
        return 1.0
    Q, _ = np.linalg.qr(np.array([v.ravel() for v in V]).T)
    worst = 0.0
    for u in U:
        x = u.ravel() / np.linalg.norm(u)
        worst = max(worst, float(np.linalg.norm(x - Q @ (Q.conj().T @ x))))
    return worst


def ze_basis(n: int, variant=Variant.ROW_ONLY) -> ZeBasis:
    if n < 3:
        raise ValueError("need n >= 3")
    variant = _variant(variant)
    K = nullspace(ze_constraints(n, variant))
    computed = [K[:, a].reshape(n, n).astype(complex) for a in range(K.shape[1])]
    if n == 4 and variant is Variant.ROW_AND_COL:
        hard = hardcoded_z4()
        res = max(span_residual(hard, computed), span_residual(computed, hard))
        if len(hard) != len(computed) or res > 1e-10:
            raise SpanMismatchError(f"hard-coded basis does not span the constraint space (residual {res:.2e})")
        return ZeBasis(n, variant, hard, "hard-coded")
    return ZeBasis(n, variant, computed, "nullspace")


@dataclass
class SeparationSubspaceBasis:
    n: int
    s: int
    variant: Variant
    elements: list[np.ndarray] = field(repr=False)
    labels: list[tuple[int, int, int, str]]
    dropped: list[tuple[int, int, int, str]]

    def __len__(self):
        return len(self.elements)

    def orthonormal(self, rank_tol: float = 1e-10) -> list[np.ndarray]:
        """Trace-orthonormal Hermitian basis of the real span of the family."""
        if not self.elements:
            return []
        V = np.array([np.concatenate([F.real.ravel(), F.imag.ravel()]) for F in self.elements])
        _, sv, Wt = np.linalg.svd(V, full_matrices=False)
        r = int(np.sum(sv > rank_tol * sv[0]))
        N = self.elements[0].shape[0]
        out = []
        for k in range(r):
            F = (Wt[k, :N * N] + 1j * Wt[k, N * N:]).reshape(N, N)
            out.append((F + F.conj().T) / 2)
        return out


def subspace_basis(n: int, s: int, variant=Variant.ROW_ONLY, zero_tol: float = 1e-14) -> SeparationSubspaceBasis:
    variant = _variant(variant)
    Z = ze_basis(n, variant).basis
    H = her_basis(s)
    elems, labels, dropped = [], [], []
    for a, za in enumerate(Z):
        for b, zb in enumerate(Z):
            zz = np.kron(za, zb)
            for j, S in enumerate(H):
                Yv = np.kron(zz, S)
                Yh = Yv.conj().T
                for kind, F in (("C", Yv + Yh), ("D", 1j * (Yv - Yh))):
                    if np.max(np.abs(F)) <= zero_tol:
                        dropped.append((a, b, j, kind))
                    else:
                        elems.append(F)
                        labels.append((a, b, j, kind))
    return SeparationSubspaceBasis(n, s, variant, elems, labels, dropped)


# the operators

def coefficients(n: int) -> tuple[Fraction, Fraction, Fraction]:
    """(alpha, beta, gamma) for size n >= 3."""
    if n < 3:
        raise ValueError("separation coefficients need n >= 3")
    return (Fraction(1, (n - 1) * (n - 2)), Fraction(n - 1, n * (n - 2)), Fraction(1, n * (n - 2)))


def col_map(A: BlockMatrix) -> np.ndarray:
    """Blocks stacked as s-column strips in (i, j) lexicographic order."""
    return A.blocks.reshape(A.n * A.n * A.s, A.s)


def diag_map(A: BlockMatrix) -> np.ndarray:
    n, s = A.n, A.s
    D = np.zeros((n * n * s, n * n * s), dtype=complex)
    for p in range(n * n):
        D[p * s:(p + 1) * s, p * s:(p + 1) * s] = A.blocks[p // n, p % n]
    return D


def phi(A: BlockMatrix) -> np.ndarray:
    c = col_map(A)
    return diag_map(A) - c @ c.conj().T


def psi(A: BlockMatrix) -> np.ndarray:
    """Block at row (i, k), column (j, l), for i != j and k != l:
    -alpha I + beta A_ik + beta A_jl + gamma A_il + gamma A_jk."""
    n, s = A.n, A.s
    al, be, ga = (float(c) for c in coefficients(n))
    B = A.blocks
    # T[i, k, j, l] indexed as (i, k, j, l, a, b)
    T = (be * B[:, :, None, None] + be * B[None, None, :, :]
         + ga * B[:, None, None, :] + ga * B.transpose(1, 0, 2, 3)[None, :, :, None])
    T = T - al * np.eye(s)
    mask = (~np.eye(n, dtype=bool))[:, None, :, None] & (~np.eye(n, dtype=bool))[None, :, None, :]
    T = T * mask[..., None, None]
    return T.transpose(0, 1, 4, 2, 3, 5).reshape(n * n * s, n * n * s)


@dataclass
class SeparationOperator:
    M: np.ndarray
    phi: np.ndarray
    psi: np.ndarray
    alpha: Fraction
    beta: Fraction
    gamma: Fraction


def separation_operator(A: BlockMatrix) -> SeparationOperator:
    al, be, ga = coefficients(A.n)
    P, Q = phi(A), psi(A)
    M = P + Q
    return SeparationOperator((M + M.conj().T) / 2, P, Q, al, be, ga)


# primal feasibility (standard-form route)

@dataclass
class FeasibilityResult:
    status: str                 # "feasible", "infeasible" (certified), "undetermined"
    depth: float                # largest t with M + X - t I >= 0 found by the solver
    X: np.ndarray | None = field(default=None, repr=False)
    min_eig: float = float("nan")
    solver_status: str = ""
    certificate: "DualCertificate | None" = field(default=None, repr=False)

    @property
    def feasible(self) -> bool:
        return self.status == "feasible"


def _her_unit_basis(N: int) -> np.ndarray:
    """Trace-orthonormal basis of Her_N as an (N^2, N, N) array."""
    out = []
    r2 = 1 / np.sqrt(2)
    for i in range(N):
        E = np.zeros((N, N), dtype=complex)
        E[i, i] = 1
        out.append(E)
        for j in range(i + 1, N):
            E = np.zeros((N, N), dtype=complex)
            E[i, j] = E[j, i] = r2
            out.append(E)
            E = np.zeros((N, N), dtype=complex)
            E[i, j], E[j, i] = -1j * r2, 1j * r2
            out.append(E)
    return np.array(out)


def _orth_complement(F: list[np.ndarray], N: int) -> list[np.ndarray]:
    """Trace-orthonormal Hermitian basis of the complement of span F in Her_N."""
    Bs = _her_unit_basis(N)
    Bm = Bs.reshape(N * N, -1)
    if not F:
        return list(Bs)
    V = np.real(np.array([f.ravel() for f in F]) @ Bm.conj().T)
    K = nullspace(V, 1e-10)
    return list(np.tensordot(K.T, Bs, axes=1))


@lru_cache(maxsize=8)
def separation_context(n: int, s: int, variant) -> "SeparationContext":
    return SeparationContext(n, s, _variant(variant))


class SeparationContext:
    """Spanning family, orthonormal basis and complement for one (n, s, variant)."""

    def __init__(self, n, s, variant):
        self.n, self.s, self.variant = n, s, variant
        self.family = subspace_basis(n, s, variant)
        self.orthonormal = self.family.orthonormal()
        self._complement = None

    @property
    def complement(self):
        if self._complement is None:
            self._complement = _orth_complement(self.orthonormal, self.n * self.n * self.s)
        return self._complement


def primal_feasibility(A: BlockMatrix, variant=Variant.ROW_ONLY, tol: float = 1e-7,
                       family: SeparationSubspaceBasis | None = None) -> FeasibilityResult:
    """Search Z = M(A) + X >= 0 with X in S, as deep inside the cone as possible.

    Z is the SDP variable; membership of Z - M(A) in S is imposed through an
    orthonormal basis of the orthogonal complement of S.  Infeasibility is
    only reported when a validated dual certificate backs it.
    """
    variant = _variant(variant)
    ctx = separation_context(A.n, A.s, variant)
    fam = family or ctx.family
    F = ctx.orthonormal if family is None else fam.orthonormal()
    M = separation_operator(A).M
    N = M.shape[0]
    G = ctx.complement if family is None else _orth_complement(F, N)
    rhs = [float(np.real(np.vdot(g, M))) for g in G]
    P = sdp.embed_problem(np.zeros((N, N)), G, rhs)
    sol = sdp.feasibility(P)
    depth = sol.depth
    if sol.status in (sdp.SdpStatus.OPTIMAL, sdp.SdpStatus.INFEASIBLE) and np.isfinite(depth):
        Z = sdp.unembed_blocks(sol.X, None, N)
        X = Z - M
        X = sum((np.real(np.vdot(f, X)) * f for f in F), np.zeros_like(X))   # exact projection onto S
        lam = min_eig(M + X)
        # the verdict rests on the recomputed eigenvalue; at members the optimal
        # depth is exactly 0, where the engine's own sign test is too tight
        if lam >= -tol:
            return FeasibilityResult("feasible", depth, X, lam, sol.status.value)
    else:
        X, lam = None, float("nan")
    cert = dual_certificate(A, variant, family=fam)
    if cert.validated and cert.objective <= ACCEPT_THRESHOLD:
        return FeasibilityResult("infeasible", depth, X, lam, sol.status.value, cert)
    return FeasibilityResult("undetermined", depth, X, lam, sol.status.value, cert)


# dual certificates

@dataclass
class DualCertificate:
    Y: np.ndarray = field(repr=False)
    objective: float
    solver_objective: float
    min_eig: float
    trace: float
    residual: float
    validated: bool
    variant: Variant
    depth: float = float("nan")       # dual value: max t with M + X - t I >= 0
    witness: np.ndarray | None = field(default=None, repr=False)
    solver_status: str = ""
    message: str = ""

    @property
    def separates(self) -> bool:
        return self.validated and self.objective <= ACCEPT_THRESHOLD

    def residuals(self) -> dict:
        return {"max_orthogonality": self.residual, "min_eig": self.min_eig,
                "trace_error": abs(self.trace - 1.0)}


def _polish(Y, F):
    """Project onto the complement of S, restore PSD by mixing in I/N, renormalise."""
    N = Y.shape[0]
    Y = (Y + Y.conj().T) / 2
    for _ in range(2):
        Y = Y - sum((np.real(np.vdot(f, Y)) * f for f in F), np.zeros_like(Y))
    Y = (Y + Y.conj().T) / 2
    lam = np.linalg.eigvalsh(Y)[0]
    tr = np.real(np.trace(Y))
    if lam < 0:
        # I is orthogonal to S (every element has zero diagonal blocks in the outer factors)
        eps = -lam / (tr / N - lam) * (1 + 1e-6)
        Y = (1 - eps) * Y + eps * tr / N * np.eye(N)
    return Y / np.real(np.trace(Y))


@dataclass
class ValidationReport:
    objective: float
    min_eig: float
    trace: float
    residual: float
    ok: bool
    reasons: list[str]


def validate_certificate(B: BlockMatrix, Y, variant=Variant.ROW_ONLY, claimed_objective: float | None = None,
                         tol: float = CERT_TOL, family: SeparationSubspaceBasis | None = None) -> ValidationReport:
    """Recheck a certificate with direct arithmetic only (no solver)."""
    variant = _variant(variant)
    Y = np.asarray(Y, dtype=complex)
    fam = family or separation_context(B.n, B.s, variant).family
    M = separation_operator(B).M
    reasons = []
    if Y.shape != M.shape:
        return ValidationReport(np.nan, np.nan, np.nan, np.inf, False, [f"Y has shape {Y.shape}, expected {M.shape}"])
    herm = float(np.max(np.abs(Y - Y.conj().T)))
    if herm > tol:
        reasons.append(f"Y not Hermitian ({herm:.2e})")
    Yh = (Y + Y.conj().T) / 2
    lam = min_eig(Yh)
    tr = float(np.real(np.trace(Yh)))
    # Tr(Y Z) = sum_ab Y_ab Z_ba; Z Hermitian so this is vdot(Z, Y)
    res = max((abs(np.vdot(Z, Yh)) for Z in fam.elements), default=0.0)
    obj = float(np.real(np.sum(Yh.T * M)))
    if lam < -tol:
        reasons.append(f"Y not PSD (min eig {lam:.2e})")
    if abs(tr - 1) > tol:
        reasons.append(f"trace {tr!r} != 1")
    if res > tol:
        reasons.append(f"orthogonality residual {res:.2e}")
    if claimed_objective is not None and not (abs(obj - claimed_objective) <= 1e-8):
        reasons.append(f"objective {obj!r} does not match claimed {claimed_objective!r}")
    return ValidationReport(obj, lam, tr, float(res), not reasons, reasons)


def dual_certificate(A: BlockMatrix, variant=Variant.ROW_ONLY, family: SeparationSubspaceBasis | None = None,
                     orthonormal: list[np.ndarray] | None = None, solver_tol: float = 1e-9,
                     max_iter: int = 150) -> DualCertificate:
    """min Tr(Y M(A)) over Y >= 0, Tr Y = 1, Tr(Y Z) = 0 for Z in S."""
    variant = _variant(variant)
    if family is None:
        ctx = separation_context(A.n, A.s, variant)
        family, orthonormal = ctx.family, ctx.orthonormal
    fam = family
    F = orthonormal if orthonormal is not None else fam.orthonormal()
    M = separation_operator(A).M
    N = M.shape[0]
    res = sdp.solve_hermitian(M, [np.eye(N)] + F, [1.0] + [0.0] * len(F), feas_tol=solver_tol, gap_tol=solver_tol,
                              max_iter=max_iter)
    if res.status not in (sdp.SdpStatus.OPTIMAL, sdp.SdpStatus.ITERATION_LIMIT):
        return DualCertificate(np.eye(N) / N, np.nan, res.objective, np.nan, np.nan, np.inf, False, variant,
                               solver_status=res.status.value, message=res.real.message)
    Y = _polish(res.Z, F)
    rep = validate_certificate(A, Y, variant, res.objective, family=fam)
    witness = -sum((yk * f for yk, f in zip(res.y[1:], F)), np.zeros((N, N), dtype=complex))
    return DualCertificate(Y, rep.objective, res.objective, rep.min_eig, rep.trace, rep.residual,
                           rep.ok and res.optimal, variant, float(res.y[0]), witness, res.status.value,
                           "; ".join(rep.reasons))


# certificate files

def certificate_to_json(B: BlockMatrix, cert: DualCertificate, seed=None, index=None) -> dict:
    return {
        "B": B.to_json(),
        "Y": matrix_to_json(cert.Y),
        "objective": cert.objective,
        "residuals": cert.residuals(),
        "variant": cert.variant.value,
        "seed": seed,
        "candidate_index": index,
    }


def check_certificate_json(obj, tol: float = CERT_TOL) -> ValidationReport:
    """Solver-free re-validation of a certificate file's contents."""
    try:
        B = BlockMatrix.from_json(obj["B"])
        Y = matrix_from_json(obj["Y"])
        claimed = float(obj["objective"])
        variant = Variant(obj.get("variant", Variant.ROW_ONLY.value))
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed certificate: {exc}") from exc
    rep = validate_certificate(B, Y, variant, claimed, tol)
    if B.n == 4:
        mres = verify_magic(B).magic_residual
        gres = graph_commutation_residual(B, cycle(4))
        if mres > tol:
            rep.reasons.append(f"B magic residual {mres:.2e}")
        if gres > tol:
            rep.reasons.append(f"B commutation residual {gres:.2e}")
    if rep.objective > ACCEPT_THRESHOLD:
        rep.reasons.append(f"objective {rep.objective!r} is above the acceptance threshold {ACCEPT_THRESHOLD}")
    rep.ok = not rep.reasons
    return rep


# counterexample search

@dataclass
class SearchConfig:
    budget: int = 2000
    seed: int = 42
    s: int = 2
    variant: Variant = Variant.ROW_ONLY
    screen: bool = True            # cheap pass with the smaller subspace first
    refine_steps: int = 0
    refine_scale: float = 0.05
    jobs: int = 1
    time_limit: float | None = None


@dataclass
class SearchReport:
    found: bool
    B: BlockMatrix | None
    certificate: DualCertificate | None
    evaluated: int
    best_objective: float
    best_index: int | None
    best_seed: int | None
    seeds: list[int]
    elapsed: float
    index: int | None = None
    seed: int | None = None


def candidate_seed(master: int, index: int) -> int:
    return int(np.random.SeedSequence([master, index]).generate_state(1, dtype=np.uint32)[0])


def make_candidate(seed: int, s: int = 2) -> BlockMatrix:
    """Random square made to commute with the 4-cycle by averaging over rotations."""
    return group_average(random_qms(4, s, seed), cyclic_group(4))


def _refine(B: BlockMatrix, rng, scale: float) -> BlockMatrix:
    """Perturb, clip blocks to PSD, one Sinkhorn sweep, average again."""
    from .pencil import gqms_affine
    par = gqms_affine(cycle(4), B.s)
    F = par.free_blocks(B)
    G = rng.standard_normal(F.shape) + 1j * rng.standard_normal(F.shape)
    F = F + scale * (G + np.conj(np.swapaxes(G, 1, 2))) / 2
    X = par.evaluate(F).blocks.copy()
    w, U = np.linalg.eigh(X)
    X = (U * np.clip(w, 1e-9, None)[..., None, :]) @ np.conj(np.swapaxes(U, -1, -2))
    X = sinkhorn_sweep(X)
    return group_average(BlockMatrix(X), cyclic_group(4))


class _Evaluator:
    """Per-process cache of subspace bases (built once, reused per candidate)."""

    def __init__(self, s, variant, screen):
        self.s, self.variant, self.screen = s, variant, screen
        self.fam = subspace_basis(4, s, variant)
        self.F = self.fam.orthonormal()
        if screen and variant is Variant.ROW_ONLY:
            self.sfam = subspace_basis(4, s, Variant.ROW_AND_COL)
            self.sF = self.sfam.orthonormal()
        else:
            self.sfam = None

    def __call__(self, B: BlockMatrix):
        """(objective, certificate or None).  The screen uses a subspace of S,
        whose optimum is a lower bound: if it does not separate, S cannot."""
        if self.sfam is not None:
            scr = dual_certificate(B, Variant.ROW_AND_COL, self.sfam, self.sF, solver_tol=1e-7)
            # half the threshold leaves room for the loose screening tolerance
            if scr.solver_status == "Optimal" and scr.solver_objective > ACCEPT_THRESHOLD / 2:
                return scr.solver_objective, None
        cert = dual_certificate(B, self.variant, self.fam, self.F)
        return cert.objective, cert


_WORKER = None


def _worker_init(s, variant, screen):
    global _WORKER
    _WORKER = _Evaluator(s, variant, screen)


def _evaluate_index(args):
    master, index, s, refine_steps, refine_scale = args
    seed = candidate_seed(master, index)
    B = make_candidate(seed, s)
    rep = verify_magic(B)
    if not rep.overall or graph_commutation_residual(B, cycle(4)) > 1e-9:
        return index, seed, np.inf, None, None
    obj, cert = _WORKER(B)
    if refine_steps:
        rng = np.random.default_rng(seed)
        for _ in range(refine_steps):
            if cert is not None and cert.separates:
                break
            B2 = _refine(B, rng, refine_scale)
            if not verify_magic(B2).overall:
                continue
            o2, c2 = _WORKER(B2)
            if o2 < obj:
                B, obj, cert = B2, o2, c2
    return index, seed, obj, B, cert


def counterexample_search(cfg: SearchConfig = SearchConfig(), progress=None) -> SearchReport:
    """Sample averaged squares until a validated certificate separates one.

    On exhaustion the report carries the best objective and every seed used.
    """
    if cfg.budget < 1:
        raise ValueError("budget must be >= 1")
    variant = _variant(cfg.variant)
    t0 = time.monotonic()
    seeds, best = [], (np.inf, None, None)
    args = [(cfg.seed, k, cfg.s, cfg.refine_steps, cfg.refine_scale) for k in range(cfg.budget)]

    def handle(out):
        nonlocal best
        index, seed, obj, B, cert = out
        seeds.append(seed)
        if obj < best[0]:
            best = (obj, index, seed)
        if progress:
            progress(index, obj)
        if cert is not None and cert.separates:
            return SearchReport(True, B, cert, len(seeds), obj, index, seed, seeds,
                                time.monotonic() - t0, index, seed)
        return None

    def timed_out():
        return cfg.time_limit is not None and time.monotonic() - t0 > cfg.time_limit

    if cfg.jobs <= 1:
        _worker_init(cfg.s, variant, cfg.screen)
        for a in args:
            rep = handle(_evaluate_index(a))
            if rep is not None:
                return rep
            if timed_out():
                break
    else:
        with ProcessPoolExecutor(cfg.jobs, initializer=_worker_init,
                                 initargs=(cfg.s, variant, cfg.screen)) as ex:
            # results are consumed in index order so the outcome does not depend on scheduling
            for out in ex.map(_evaluate_index, args, chunksize=4):
                rep = handle(out)
                if rep is not None:
                    ex.shutdown(cancel_futures=True)
                    return rep
                if timed_out():
                    ex.shutdown(cancel_futures=True)
                    break
    return SearchReport(False, None, None, len(seeds), float(best[0]), best[1], best[2], seeds,
                        time.monotonic() - t0)


def search_report_json(rep: SearchReport, cfg: SearchConfig) -> dict:
    return {
        "found": rep.found,
        "evaluated": rep.evaluated,
        "budget": cfg.budget,
        "master_seed": cfg.seed,
        "variant": _variant(cfg.variant).value,
        "best_objective": rep.best_objective,
        "best_candidate_index": rep.best_index,
        "best_seed": rep.best_seed,
        "seeds": rep.seeds,
        "elapsed_seconds": rep.elapsed,
    }


def save_certificate(path, B: BlockMatrix, cert: DualCertificate, seed=None, index=None):
    jsonio.dump(certificate_to_json(B, cert, seed, index), path)


# -- why the 4-cycle search comes back empty ---------------------------------

@dataclass
class CycleDilation:
    U: BlockMatrix          # quantum permutation square commuting with the 4-cycle
    V: np.ndarray           # isometry C^s -> C^(4s)
    compression_error: float
    projection_error: float


def _psd_sqrt(H):
    w, Q = np.linalg.eigh(H)
    return (Q * np.sqrt(np.clip(w, 0, None))) @ Q.conj().T


def _conjugate_pinv_sqrt(H, Lam, tol=1e-10):
    """Lam^{-1/2} H Lam^{-1/2} on the range of Lam, zero elsewhere."""
    w, Q = np.linalg.eigh(Lam)
    inv = np.where(w > tol, 1 / np.sqrt(np.where(w > tol, w, 1)), 0.0)
    R = (Q * inv) @ Q.conj().T
    return R @ H @ R


def _halmos(E):
    """Projection on C^s (+) C^s whose top-left corner is the effect E."""
    E = (E + E.conj().T) / 2
    off = _psd_sqrt(E - E @ E)
    return np.block([[E, off], [off, np.eye(len(E)) - E]])


def c4_dilation(B: BlockMatrix) -> CycleDilation:
    """Write a square commuting with the 4-cycle as V* U V with U a projection square.

    Commutation forces the parity pattern: the blocks on {0,2}x{0,2} are
    [[P, L-P], [L-P, P]] with L the row sum over even columns of row 0, and
    likewise for the other three parity classes with L or I-L.  Dilating
    {L, I-L} first and then each corner inside its range gives U.
    """
    if B.n != 4:
        raise ValueError("needs a 4 x 4 square")
    s, X = B.s, B.blocks
    I = np.eye(s)
    L = X[0, 0] + X[0, 2]
    halves = [L, I - L]
    # corner block and which half it lives under, per parity class (row, col)
    corner = {(0, 0): 0, (0, 1): 1, (1, 0): 1, (1, 1): 0}
    zero = np.zeros((2 * s, 2 * s))
    lift = {}
    for (pr, pc), h in corner.items():
        E = _conjugate_pinv_sqrt(X[pr, pc], halves[h])
        proj = _halmos(E)
        lift[pr, pc] = (np.block([[proj, zero], [zero, zero]]) if h == 0
                        else np.block([[zero, zero], [zero, proj]]))
    Lt = np.zeros((4 * s, 4 * s), dtype=complex)
    Lt[: 2 * s, : 2 * s] = np.eye(2 * s)
    Ht = [Lt, np.eye(4 * s) - Lt]
    U = np.zeros((4, 4, 4 * s, 4 * s), dtype=complex)
    # place complements: inside each class, (i, j) and (i+2, j+2) share the
    # corner, (i, j+2) and (i+2, j) carry half - corner
    for i in range(4):
        for j in range(4):
            key = (i % 2, j % 2)
            same = (i // 2) == (j // 2)
            P = lift[key]
            U[i, j] = P if same else Ht[corner[key]] - P
    V = np.zeros((4 * s, s), dtype=complex)
    V[:s] = _psd_sqrt(L)
    V[2 * s: 3 * s] = _psd_sqrt(I - L)
    Ub = BlockMatrix(U)
    comp = np.einsum("xa,ijxy,yb->ijab", V.conj(), U, V)
    err = float(np.abs(comp - X).max())
    perr = float(max(np.abs(U[i, j] @ U[i, j] - U[i, j]).max() for i in range(4) for j in range(4)))
    return CycleDilation(Ub, V, err, perr)
