"""Dense primal-dual interior point solver for small real SDPs.

Standard form::

    minimize    <C, X>
    subject to  <A_i, X> = b_i,   i = 1..m
                X >= 0 (positive semidefinite)

with dual ``maximize b.y  s.t.  S = C - sum_i y_i A_i >= 0``.

Search directions use Nesterov-Todd scaling with a Mehrotra
predictor-corrector step; the Schur complement is factored densely.
Complex Hermitian problems must be real-embedded by the caller.
"""

from __future__ import annotations

import enum
import logging
import re
from dataclasses import dataclass, field
from functools import partial

import numpy as np
import scipy.linalg as sla

log = logging.getLogger(__name__)


class SdpStatus(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    ITERATION_LIMIT = "IterationLimit"
    NUMERICAL_FAILURE = "NumericalFailure"


@dataclass
class SdpProblem:
    C: np.ndarray
    A: list[np.ndarray] = field(default_factory=list)
    b: np.ndarray | list[float] = field(default_factory=list)
    blocks: list[int] | None = None

    def __post_init__(self):
        self.C = np.asarray(self.C, dtype=float)
        self.A = [np.asarray(a, dtype=float) for a in self.A]
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        m = self.C.shape[0]
        if self.C.shape != (m, m):
            raise ValueError("objective matrix must be square")
        if len(self.A) != self.b.size:
            raise ValueError(f"{len(self.A)} constraint matrices but {self.b.size} right-hand sides")
        for a in self.A:
            if a.shape != (m, m):
                raise ValueError(f"constraint matrix shape {a.shape} != {(m, m)}")
        if self.blocks is not None:
            self.blocks = [int(k) for k in self.blocks]
            if any(k < 1 for k in self.blocks) or sum(self.blocks) != m:
                raise ValueError(f"block sizes {self.blocks} do not partition dimension {m}")

    @property
    def block_sizes(self) -> list[int]:
        return self.blocks if self.blocks is not None else [self.dim]

    def block_mask(self) -> np.ndarray:
        mask = np.zeros((self.dim, self.dim), dtype=bool)
        k = 0
        for size in self.block_sizes:
            mask[k:k + size, k:k + size] = True
            k += size
        return mask

    @property
    def dim(self) -> int:
        return self.C.shape[0]

    @property
    def n_constraints(self) -> int:
        return len(self.A)

    def constraint_matrix(self) -> np.ndarray:
        """Constraints as rows of vectorised (symmetrised) matrices."""
        if not self.A:
            return np.zeros((0, self.dim * self.dim))
        M = np.stack([(a + a.T).ravel() / 2 for a in self.A])
        if self.blocks is not None:
            M = M * self.block_mask().ravel()
        return M


@dataclass
class SdpSolution:
    status: SdpStatus
    X: np.ndarray
    y: np.ndarray
    S: np.ndarray
    objective: float
    dual_objective: float
    residual: float
    min_eig: float
    iterations: int
    message: str = ""
    depth: float = float("nan")

    @property
    def optimal(self) -> bool:
        return self.status is SdpStatus.OPTIMAL


def _sym(M):
    return (M + M.T) / 2


def _max_step(L, D):
    """Largest alpha in (0, inf] with L L^T + alpha D >= 0 (L lower Cholesky factor)."""
    Li = sla.solve_triangular(L, np.eye(L.shape[0]), lower=True)
    lam = np.linalg.eigvalsh(_sym(Li @ D @ Li.T))[0]
    return np.inf if lam >= 0 else -1.0 / lam


def _presolve(P: SdpProblem, rank_tol: float = 1e-12):
    """Drop linearly dependent constraints; detect inconsistent ones.

    Returns (kept_indices, consistent).
    """
    m = P.n_constraints
    if m == 0:
        return np.arange(0), True
    M = P.constraint_matrix()
    # pivoted QR of the transposed constraint matrix picks a maximal independent row set
    _, R, piv = sla.qr(M.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    if diag.size == 0 or diag[0] == 0:
        rank = 0
    else:
        rank = int(np.sum(diag > rank_tol * diag[0]))
    keep = np.sort(piv[:rank])
    if rank == m:
        return keep, True
    # dependent rows must be consistent with the kept ones
    Mk = M[keep]
    coef, *_ = np.linalg.lstsq(Mk.T, M.T, rcond=None)
    b_pred = coef.T @ P.b[keep]
    consistent = bool(np.all(np.abs(b_pred - P.b) <= 1e-9 * (1 + np.abs(P.b))))
    if consistent:
        log.info("presolve dropped %d dependent constraints", m - rank)
    return keep, consistent


def _slices(P: SdpProblem):
    out, k = [], 0
    for size in P.block_sizes:
        out.append(slice(k, k + size))
        k += size
    return out


def solve(P: SdpProblem, feas_tol: float = 1e-8, gap_tol: float = 1e-7,
          max_iter: int = 500) -> SdpSolution:
    """Solve ``P`` to the given tolerances.

    Tolerances are relative: primal residual against ``1 + |b|``, dual
    residual against ``1 + |C|``, gap against ``1 + |pobj| + |dobj|``.
    Block-diagonal structure (``P.blocks``) is exploited; entries of the
    data outside the diagonal blocks are ignored.
    """
    n = P.dim
    sl = _slices(P)
    keep, consistent = _presolve(P)
    if not consistent:
        return SdpSolution(SdpStatus.INFEASIBLE, np.zeros((n, n)), np.zeros(P.n_constraints),
                           _sym(P.C), np.nan, np.nan, np.inf, np.nan, 0,
                           "inconsistent linear constraints")
    m = len(keep)
    b = P.b[keep]
    Cb = [_sym(P.C[s, s]) for s in sl]
    Ab = [np.stack([_sym(P.A[i][s, s]) for i in keep]) if m else np.zeros((0, s.stop - s.start, s.stop - s.start))
          for s in sl]
    Avb = [a.reshape(m, -1) for a in Ab]
    sizes = [s.stop - s.start for s in sl]
    ntot = sum(sizes)

    def inner(Xs, Ys):
        return float(sum(np.sum(x * y) for x, y in zip(Xs, Ys)))

    def Aop(Xs):
        return sum((av @ x.ravel() for av, x in zip(Avb, Xs)), np.zeros(m))

    def Atop(y):
        return [(av.T @ y).reshape(k, k) for av, k in zip(Avb, sizes)]

    def nrm(Xs):
        return np.sqrt(inner(Xs, Xs))

    normb = 1 + np.linalg.norm(b)
    normC = 1 + nrm(Cb)
    Anorms = [np.sqrt(sum(np.sum(a[i] ** 2) for a in Ab)) for i in range(m)]
    # standard SDPT3-style starting point scale
    scale_x = max(10.0, np.sqrt(ntot), max([ntot * (1 + abs(b[i])) / (1 + Anorms[i]) for i in range(m)],
                                           default=0.0))
    scale_s = max(10.0, np.sqrt(ntot), nrm(Cb), max(Anorms, default=0.0))
    X = [scale_x * np.eye(k) for k in sizes]
    S = [scale_s * np.eye(k) for k in sizes]
    y = np.zeros(m)

    status = SdpStatus.ITERATION_LIMIT
    message = ""
    within = None
    it = 0
    for it in range(1, max_iter + 1):
        rp = b - Aop(X)
        AtY = Atop(y)
        Rd = [c - s_ - a for c, s_, a in zip(Cb, S, AtY)]
        pobj = inner(Cb, X)
        dobj = float(b @ y)
        mu = inner(X, S) / ntot
        pinf = np.linalg.norm(rp) / normb
        dinf = nrm(Rd) / normC
        gap = abs(pobj - dobj) / (1 + abs(pobj) + abs(dobj))
        # aim an order of magnitude inside the contract so reported values have slack
        if pinf <= 0.1 * feas_tol and dinf <= 0.1 * feas_tol and gap <= 0.1 * gap_tol:
            status = SdpStatus.OPTIMAL
            break
        if pinf <= feas_tol and dinf <= feas_tol and gap <= gap_tol:
            within = (list(X), y.copy(), list(S))
        # infeasibility rays
        if m and dobj > 0 and dinf < 1e-3 and dobj > 1e8 * normC:
            ray = [-a / dobj for a in AtY]
            rn = 1 + nrm(ray)
            if min(np.linalg.eigvalsh(_sym(r))[0] for r in ray) >= -1e-8 * rn:
                status, message = SdpStatus.INFEASIBLE, "dual improving ray (Farkas certificate)"
                break
        if pobj < 0 and pinf < 1e-3 and -pobj > 1e8 * normb:
            if np.linalg.norm(Aop(X)) / nrm(X) < 1e-8:
                status, message = SdpStatus.UNBOUNDED, "primal improving ray"
                break

        try:
            LX = [np.linalg.cholesky(x) for x in X]
            LS = [np.linalg.cholesky(s_) for s_ in S]
        except np.linalg.LinAlgError:
            status, message = SdpStatus.NUMERICAL_FAILURE, "iterate lost positive definiteness"
            break
        # Nesterov-Todd scaling: W = G G^T with G^T S G = G^{-1} X G^{-T} = diag(d)
        G, Ginv, W, D = [], [], [], []
        for lx, ls in zip(LX, LS):
            U, d, Qt = np.linalg.svd(ls.T @ lx)
            if d[-1] <= 0:
                break
            g = lx @ Qt.T / np.sqrt(d)
            G.append(g)
            Ginv.append((U.T / np.sqrt(d)[:, None]) @ ls.T)
            W.append(g @ g.T)
            D.append(d)
        if len(D) != len(sizes):
            status, message = SdpStatus.NUMERICAL_FAILURE, "degenerate scaling"
            break

        H = np.zeros((m, m))
        for w, a, av in zip(W, Ab, Avb):
            H += av @ (w @ a @ w).reshape(m, -1).T
        H = _sym(H)
        try:
            cf = sla.cho_factor(H, lower=True)
            schur_solve = partial(sla.cho_solve, cf)
        except (np.linalg.LinAlgError, ValueError):
            # near the optimum of degenerate problems rounding can make H look
            # indefinite; a pivoted LU of the lightly regularised matrix still
            # gives a usable Newton direction
            Hr = H + 1e-14 * np.trace(H) / max(m, 1) * np.eye(m)
            lu = sla.lu_factor(Hr, check_finite=False)
            if not np.all(np.isfinite(lu[0])) or np.min(np.abs(np.diag(lu[0]))) == 0:
                status, message = SdpStatus.NUMERICAL_FAILURE, "Schur complement singular"
                break
            schur_solve = partial(sla.lu_solve, lu)

        WRdW = [w @ r @ w for w, r in zip(W, Rd)]
        dsum = [d[:, None] + d[None, :] for d in D]

        def direction(Rc):
            # Rc lives in the scaled space; L_V^{-1} for diagonal V = diag(d)
            R = [g @ (2 * rc / ds) @ g.T for g, rc, ds in zip(G, Rc, dsum)]
            rhs = rp - Aop([r - wr for r, wr in zip(R, WRdW)])
            dy = schur_solve(rhs) if m else np.zeros(0)
            AtdY = Atop(dy)
            dS = [_sym(r - a) for r, a in zip(Rd, AtdY)]
            dX = [_sym(r - w @ ds_ @ w) for r, w, ds_ in zip(R, W, dS)]
            return dX, dy, dS

        def max_step(L, Dl):
            return min(_max_step(l, dd) for l, dd in zip(L, Dl))

        # predictor
        dXp, dyp, dSp = direction([-np.diag(d ** 2) for d in D])
        ap = min(1.0, max_step(LX, dXp))
        ad = min(1.0, max_step(LS, dSp))
        mu_aff = inner([x + ap * dx for x, dx in zip(X, dXp)], [s_ + ad * ds_ for s_, ds_ in zip(S, dSp)]) / ntot
        sigma = min(1.0, (mu_aff / mu) ** 3) if mu > 0 else 0.0
        # corrector with second-order term in the scaled space
        Rc = []
        for g, gi, d, dx, ds_ in zip(G, Ginv, D, dXp, dSp):
            cross = (gi @ dx @ gi.T) @ (g.T @ ds_ @ g)
            Rc.append(sigma * mu * np.eye(d.size) - np.diag(d ** 2) - (cross + cross.T) / 2)
        dX, dy, dS = direction(Rc)

        ap = min(1.0, 0.98 * max_step(LX, dX))
        ad = min(1.0, 0.98 * max_step(LS, dS))
        X = [_sym(x + ap * dx) for x, dx in zip(X, dX)]
        y = y + ad * dy
        S = [_sym(s_ + ad * ds_) for s_, ds_ in zip(S, dS)]
        if max(ap, ad) < 1e-12:
            status, message = SdpStatus.NUMERICAL_FAILURE, "step length collapsed"
            break
    else:
        message = f"no convergence in {max_iter} iterations"
    if status is not SdpStatus.OPTIMAL and within is not None:
        # stalled after reaching the contract tolerances: fall back to that iterate
        X, y, S = within
        status, message = SdpStatus.OPTIMAL, f"converged within tolerance ({message})"

    y_full = np.zeros(P.n_constraints)
    y_full[keep] = y
    return _finish(P, status, sla.block_diag(*X), y_full, sla.block_diag(*S), it, message)


def _finish(P, status, X, y, S, it, message):
    X = _sym(X)
    residual = _residual(P, X)
    return SdpSolution(
        status=status,
        X=X,
        y=y,
        S=S,
        objective=float(np.sum(P.C * X)),
        dual_objective=float(P.b @ y) if P.n_constraints else 0.0,
        residual=residual,
        min_eig=float(np.linalg.eigvalsh(X)[0]),
        iterations=it,
        message=message,
    )


def _residual(P, X):
    if not P.n_constraints:
        return 0.0
    return float(np.max(np.abs(P.constraint_matrix() @ X.ravel() - P.b)))


def feasibility(P: SdpProblem, feas_tol: float = 1e-8, gap_tol: float = 1e-7,
                max_iter: int = 500, depth_floor: float = 10.0) -> SdpSolution:
    """Find X >= 0 in the affine slice, as deep inside the cone as possible.

    Solves ``max t  s.t.  X = X' + t I, X' >= 0, <A_i, X> = b_i, t <= 1``.
    The free variable t is split into two nonnegative parts whose sum is
    capped at ``depth_floor`` (otherwise both parts drift off together and
    the Newton systems degenerate); the cap t <= 1 keeps the problem bounded
    when the slice contains a ray of the cone.  The returned solution
    carries ``X = X' + t I`` and ``depth = t``; status is Infeasible when
    the optimal t is below ``-feas_tol``.
    """
    n = P.dim
    big = n + 4
    traceI = [np.trace(_sym(a)) for a in P.A]

    def lift(a, tp=0.0, tm=0.0, u=0.0, w=0.0):
        out = np.zeros((big, big))
        out[:n, :n] = a
        out[n, n], out[n + 1, n + 1], out[n + 2, n + 2], out[n + 3, n + 3] = tp, tm, u, w
        return out

    A = [lift(_sym(a), ti, -ti) for a, ti in zip(P.A, traceI)]
    A.append(lift(np.zeros((n, n)), 1.0, -1.0, 1.0))
    A.append(lift(np.zeros((n, n)), 1.0, 1.0, 0.0, 1.0))
    b = np.append(P.b, [1.0, depth_floor])
    lifted = SdpProblem(lift(np.zeros((n, n)), -1.0, 1.0), A, b, P.block_sizes + [1, 1, 1, 1])
    sol = solve(lifted, feas_tol, gap_tol, max_iter)
    Xp = sol.X[:n, :n]
    t = sol.X[n, n] - sol.X[n + 1, n + 1]
    X = _sym(Xp + t * np.eye(n))
    status = sol.status
    message = sol.message
    if status is SdpStatus.OPTIMAL and t < -feas_tol:
        status, message = SdpStatus.INFEASIBLE, f"best depth t = {t:.3e} < 0"
    m = P.n_constraints
    S = P.C - sum((yi * _sym(a) for yi, a in zip(sol.y[:m], P.A)), np.zeros((n, n)))
    out = _finish(P, status, X, sol.y[:m], S, sol.iterations, message)
    out.depth = float(t)
    return out


def validate(P: SdpProblem, sol: SdpSolution, feas_tol: float = 1e-8, gap_tol: float = 1e-7) -> bool:
    """Recompute residual, min eigenvalue and objective from raw data.

    True iff the recomputed values match those stored in ``sol`` within 10x
    the tolerances and, for an Optimal status, satisfy them.
    """
    X = np.asarray(sol.X, dtype=float)
    if X.shape != (P.dim, P.dim) or not np.all(np.isfinite(X)):
        return False
    asym = np.max(np.abs(X - X.T)) if X.size else 0.0
    if asym > 10 * feas_tol:
        return False
    resid = _residual(P, X)
    lam = float(np.linalg.eigvalsh(_sym(X))[0])
    obj = float(np.sum(P.C * X))
    tol_r = 10 * feas_tol * (1 + np.linalg.norm(P.b))
    tol_o = 10 * gap_tol * (1 + abs(obj))
    if abs(resid - sol.residual) > tol_r or abs(lam - sol.min_eig) > 10 * feas_tol:
        return False
    if abs(obj - sol.objective) > tol_o:
        return False
    if sol.status is SdpStatus.OPTIMAL:
        if resid > tol_r or lam < -10 * feas_tol:
            return False
    return True


# Hermitian problems through the real embedding.
#
# With A' = embed(A)/2 one has <A', embed(Z)> = Re Tr(A Z) for Hermitian A, Z,
# so objectives, right-hand sides and dual variables keep their Hermitian
# meaning.  The embedded problem is invariant under the symmetry that fixes
# embedded matrices and the central path is unique, so the returned real
# iterate is (numerically) an embedding and is unembedded by averaging.

def _embed_half(H):
    H = np.asarray(H, dtype=complex)
    return np.block([[H.real, -H.imag], [H.imag, H.real]]) / 2


def hermitian_functional(K) -> np.ndarray:
    """Hermitian H with ``Tr(H Z) = Re Tr(K* Z)`` for every Hermitian Z."""
    K = np.asarray(K, dtype=complex)
    return (K + K.conj().T) / 2


@dataclass
class HermitianSdpResult:
    status: SdpStatus
    Z: np.ndarray
    y: np.ndarray
    objective: float
    dual_objective: float
    real: SdpSolution = field(repr=False)

    @property
    def optimal(self) -> bool:
        return self.status is SdpStatus.OPTIMAL


def _cslices(blocks, dim):
    sizes = blocks if blocks is not None else [dim]
    out, k = [], 0
    for size in sizes:
        out.append(slice(k, k + size))
        k += size
    if k != dim:
        raise ValueError(f"block sizes {sizes} do not partition dimension {dim}")
    return out


def _embed_blocks(H, sl):
    return sla.block_diag(*[_embed_half(np.asarray(H)[s, s]) for s in sl])


def embed_problem(C, A, b, blocks=None) -> SdpProblem:
    """Real problem whose blocks are the halved embeddings of each complex block."""
    C = np.asarray(C, dtype=complex)
    sl = _cslices(blocks, C.shape[0])
    return SdpProblem(_embed_blocks(C, sl), [_embed_blocks(a, sl) for a in A], b,
                      [2 * (s.stop - s.start) for s in sl])


def _unembed(R):
    m = R.shape[0] // 2
    re = (R[:m, :m] + R[m:, m:]) / 2
    im = (R[m:, :m] - R[:m, m:]) / 2
    Z = re + 1j * im
    return (Z + Z.conj().T) / 2


def unembed_blocks(R, blocks, dim):
    sl = _cslices(blocks, dim)
    Z = np.zeros((dim, dim), dtype=complex)
    k = 0
    for s in sl:
        size = 2 * (s.stop - s.start)
        Z[s, s] = _unembed(R[k:k + size, k:k + size])
        k += size
    return Z


def solve_hermitian(C, A, b, blocks=None, feas_tol: float = 1e-8, gap_tol: float = 1e-7,
                    max_iter: int = 500) -> HermitianSdpResult:
    """minimize Re Tr(C Z) s.t. Re Tr(A_i Z) = b_i, Z >= 0 (Z Hermitian).

    ``blocks`` lists complex block sizes when Z is block diagonal.
    """
    C = np.asarray(C, dtype=complex)
    P = embed_problem(C, A, b, blocks)
    sol = solve(P, feas_tol, gap_tol, max_iter)
    Z = unembed_blocks(sol.X, blocks, C.shape[0])
    return HermitianSdpResult(sol.status, Z, sol.y, sol.objective, sol.dual_objective, sol)


# SDPA sparse format (.dat-s).  SDPA's primal is
#   minimize c.x  s.t.  sum_i x_i F_i - F_0 >= 0
# and its dual is maximize <F_0, Y> s.t. <F_i, Y> = c_i, Y >= 0.
# An SdpProblem (min <C, X>, <A_i, X> = b_i) is that dual with
# F_0 = -C, F_i = A_i, c = b.

def write_sdpa_matrices(path, c, mats, comment: str = "", block_sizes=None):
    """Write SDPA sparse data.  ``mats[0]`` is F_0; each entry is one block
    matrix (single block) or a list of per-block matrices."""
    def blocks_of(M):
        return M if isinstance(M, (list, tuple)) else [M]

    first = blocks_of(mats[0])
    sizes = block_sizes or [b.shape[0] for b in first]
    lines = []
    if comment:
        lines.extend(("*" + ln) if not ln.startswith(("*", '"')) else ln for ln in comment.splitlines())
    lines.append(f"{len(mats) - 1} = mDIM")
    lines.append(f"{len(sizes)} = nBLOCK")
    lines.append(" ".join(str(int(s)) for s in sizes) + " = bLOCKsTRUCT")
    lines.append(" ".join(_num(v) for v in c) if len(c) else "0")
    for k, M in enumerate(mats):
        for bno, B in enumerate(blocks_of(M), start=1):
            B = np.asarray(B, dtype=float)
            rows, cols = np.nonzero(np.triu(B))
            for i, j in zip(rows, cols):
                lines.append(f"{k} {bno} {i + 1} {j + 1} {_num(B[i, j])}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _num(x) -> str:
    x = float(x)
    return str(int(x)) if x.is_integer() and abs(x) < 1e15 else format(x, ".17g")


def read_sdpa(path):
    """Parse SDPA sparse data into (c, mats, block_sizes, comments).

    ``mats[k]`` is a list of dense per-block matrices for F_k.
    """
    comments, body = [], []
    with open(path) as fh:
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            if line[0] in '*"':
                comments.append(line)
                continue
            body.append(line)
    if len(body) < 4:
        raise ValueError("truncated SDPA file")

    def nums(line):
        return [float(t) for t in re.split(r"[\s,{}()=]+", line) if t and _isnum(t)]

    m = int(nums(body[0])[0])
    nb = int(nums(body[1])[0])
    sizes = [abs(int(v)) for v in nums(body[2])[:nb]]
    c = np.array(nums(body[3])[:m]) if m else np.zeros(0)
    if c.size != m:
        raise ValueError(f"objective vector has {c.size} entries, expected {m}")
    mats = [[np.zeros((s, s)) for s in sizes] for _ in range(m + 1)]
    for line in body[4:]:
        v = nums(line)
        if len(v) != 5:
            raise ValueError(f"bad SDPA entry line: {line!r}")
        k, bno, i, j = (int(t) for t in v[:4])
        if not (0 <= k <= m and 1 <= bno <= nb):
            raise ValueError(f"SDPA entry out of range: {line!r}")
        B = mats[k][bno - 1]
        B[i - 1, j - 1] = B[j - 1, i - 1] = v[4]
    return c, mats, sizes, comments


def _isnum(t):
    try:
        float(t)
        return True
    except ValueError:
        return False


def _block_diag(blocks):
    return sla.block_diag(*blocks) if blocks else np.zeros((0, 0))


def write_sdpa(P: SdpProblem, path, comment: str = ""):
    sl = _slices(P)

    def split(M):
        return [M[s, s] for s in sl]

    write_sdpa_matrices(path, P.b, [split(-_sym(P.C))] + [split(_sym(a)) for a in P.A], comment,
                        P.block_sizes)


def read_sdpa_problem(path) -> SdpProblem:
    """Read SDPA data as an SdpProblem (blocks assembled block-diagonally)."""
    c, mats, sizes, _ = read_sdpa(path)
    F = [_block_diag(blks) for blks in mats]
    return SdpProblem(-F[0], F[1:], c, sizes if len(sizes) > 1 else None)
