"""Affine parametrizations and monic linear pencils for (graph) magic squares.

Block structure is uniform: every linear constraint on the grid acts on
whole blocks with scalar coefficients, so all elimination happens on an
n x n scalar grid in exact rational arithmetic.  Grid positions are
numbered row-major, ``p = i*n + j`` (0-based).

A parametrization writes every block as

    X_kl = const_kl I_s + sum_p coeff[kl, p] X_p,     p in the free positions,

and after the shift ``X_p = (1/n)(I_s + Y_p)`` the blocks become
``X_kl = (1/n)(I_s + sum_p coeff[kl, p] Y_p)``, so the monic pencil is the
block diagonal ``I + sum_p diag(coeff[:, p]) (x) Y_p``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .graphs import (Graph, commutant_dimension_spectral,
                     connected_components, is_k_regular)
from .linalg import her_basis, her_coordinates
from .magic import BlockMatrix, graph_commutation_residual, verify_magic
from . import jsonio
from . import sdp

ZERO, ONE = Fraction(0), Fraction(1)


# exact rational linear algebra

def rref(rows):
    """Reduced row echelon form over Q.  Returns (R, pivot_columns)."""
    R = [[Fraction(v) for v in r] for r in rows]
    if not R:
        return R, []
    ncols = len(R[0])
    pivots = []
    r = 0
    for c in range(ncols):
        pr = next((k for k in range(r, len(R)) if R[k][c] != 0), None)
        if pr is None:
            continue
        R[r], R[pr] = R[pr], R[r]
        inv = 1 / R[r][c]
        R[r] = [v * inv for v in R[r]]
        for k in range(len(R)):
            if k != r and R[k][c] != 0:
                f = R[k][c]
                R[k] = [a - f * b for a, b in zip(R[k], R[r])]
        pivots.append(c)
        r += 1
        if r == len(R):
            break
    return R[:r], pivots


def nullspace_exact(rows, ncols):
    """Basis of {x : rows x = 0} over Q, one vector per free column."""
    R, piv = rref(rows) if rows else ([], [])
    free = [c for c in range(ncols) if c not in piv]
    basis = []
    for f in free:
        v = [ZERO] * ncols
        v[f] = ONE
        for row, pc in zip(R, piv):
            v[pc] = -row[f]
        basis.append(v)
    return basis


def _transpose(M):
    return [list(col) for col in zip(*M)] if M else []


def greedy_coordinates(direction_basis, npos):
    """Free positions and coefficients for the space spanned by ``direction_basis``.

    Positions are taken greedily in row-major order: a position is free when
    its value is not determined by the previously chosen ones.  Returns
    (free_positions, coeff) with ``coeff`` an npos x f list so that
    ``v = coeff @ v[free]`` for every v in the span.
    """
    if not direction_basis:
        return [], [[] for _ in range(npos)]
    R, piv = rref(direction_basis)
    # rows of R span the same space and R[:, piv] = I, so v = R^T v[piv]
    return piv, _transpose(R)


# magic-square constraint rows on the scalar grid

def _row_sum_rows(n):
    return [[ONE if p // n == i else ZERO for p in range(n * n)] for i in range(n)]


def _col_sum_rows(n):
    return [[ONE if p % n == j else ZERO for p in range(n * n)] for j in range(n)]


def _commutation_rows(A):
    """Rows of (A X - X A)_ij = sum_k A_ik X_kj - X_ik A_kj."""
    n = A.shape[0]
    rows = []
    for i in range(n):
        for j in range(n):
            r = [ZERO] * (n * n)
            for k in range(n):
                if A[i, k]:
                    r[k * n + j] += int(A[i, k])
                if A[k, j]:
                    r[i * n + k] -= int(A[k, j])
            rows.append(r)
    return rows


class Provenance(str, enum.Enum):
    PLAIN_QMS = "plain-qms"
    GRAPH_JOINT = "graph-joint-nullspace"
    GRAPH_COMPOSITION = "graph-composition"


class ParametrizationError(RuntimeError):
    pass


@dataclass
class AffineBlockParametrization:
    n: int
    s: int
    independent: list[tuple[int, int]]
    dependent: list[tuple[int, int]]
    constant: list[Fraction]
    coeff: list[list[Fraction]] = field(repr=False)
    provenance: Provenance
    graph_name: str = ""
    claimed_removed: int | None = None
    measured_removed: int | None = None
    commutant_dimension: int | None = None

    @property
    def n_params(self) -> int:
        return len(self.independent)

    @property
    def n_scalar_vars(self) -> int:
        return self.n_params * self.s * self.s

    def coeff_array(self) -> np.ndarray:
        return np.array([[float(v) for v in row] for row in self.coeff]).reshape(self.n * self.n, self.n_params)

    def constant_array(self) -> np.ndarray:
        return np.array([float(v) for v in self.constant])

    def shifted_coefficients(self) -> list[list[Fraction]]:
        """d with ``X_kl = (1/n) I + sum_p d[kl, p] Y_p`` under ``Y_p = n X_p - I``.

        Equal to coeff / n; the monic pencil uses n * d = coeff.
        """
        return [[v / self.n for v in row] for row in self.coeff]

    def monic_identity_holds(self) -> bool:
        """const_kl + (1/n) sum_p coeff[kl, p] == 1/n exactly, for every kl."""
        inv = Fraction(1, self.n)
        return all(c + inv * sum(row, ZERO) == inv for c, row in zip(self.constant, self.coeff))

    def evaluate(self, free_blocks) -> BlockMatrix:
        """Grid from the blocks at the free positions (array (f, s, s))."""
        F = np.asarray(free_blocks, dtype=complex).reshape(self.n_params, self.s, self.s)
        out = np.einsum("pf,fab->pab", self.coeff_array(), F) if self.n_params else \
            np.zeros((self.n * self.n, self.s, self.s), dtype=complex)
        out = out + self.constant_array()[:, None, None] * np.eye(self.s)
        return BlockMatrix(out.reshape(self.n, self.n, self.s, self.s))

    def evaluate_shifted(self, Y) -> BlockMatrix:
        Y = np.asarray(Y, dtype=complex).reshape(self.n_params, self.s, self.s)
        return self.evaluate((np.eye(self.s) + Y) / self.n)

    def free_blocks(self, X: BlockMatrix) -> np.ndarray:
        return np.array([X.blocks[i, j] for i, j in self.independent]).reshape(self.n_params, self.s, self.s)

    def shift_inverse(self, X: BlockMatrix) -> np.ndarray:
        """Y_p = n X_p - I at the free positions."""
        return self.n * self.free_blocks(X) - np.eye(self.s)

    def affine_residual(self, X: BlockMatrix) -> float:
        """Distance between X and the point of the affine family with the same free blocks."""
        if X.n != self.n or X.s != self.s:
            raise ValueError("square does not match the parametrization size")
        return float(np.linalg.norm(X.blocks - self.evaluate(self.free_blocks(X)).blocks))


def qms_affine(n: int, s: int) -> AffineBlockParametrization:
    """Elimination of the last row and column through the magic relations."""
    if n < 2:
        raise ValueError("need n >= 2")
    m = n - 1
    free = [(i, j) for i in range(m) for j in range(m)]
    fidx = {p: k for k, p in enumerate(free)}
    const, coeff = [], []
    for k in range(n):
        for l in range(n):
            row = [ZERO] * len(free)
            if k < m and l < m:
                a = ZERO
                row[fidx[k, l]] = ONE
            elif k < m:                       # X_k,last = I - sum_j X_kj
                a = ONE
                for j in range(m):
                    row[fidx[k, j]] = -ONE
            elif l < m:                       # X_last,l = I - sum_i X_il
                a = ONE
                for i in range(m):
                    row[fidx[i, l]] = -ONE
            else:                             # X_last,last = (2-n) I + sum X_ij
                a = Fraction(2 - n)
                row = [ONE] * len(free)
            const.append(a)
            coeff.append(row)
    dependent = [(i, j) for i in range(n) for j in range(n) if i == m or j == m]
    return AffineBlockParametrization(n, s, free, dependent, const, coeff, Provenance.PLAIN_QMS,
                                      claimed_removed=2 * n - 1, measured_removed=2 * n - 1)


def _affine_from_directions(n, directions):
    """Free positions / coefficients / constant for (1/n)J + span(directions)."""
    free, coeff = greedy_coordinates(directions, n * n)
    inv = Fraction(1, n)
    const = [inv * (1 - sum(row, ZERO)) for row in coeff]
    return free, coeff, const


def _joint(G: Graph):
    n = G.n
    rows = _row_sum_rows(n) + _col_sum_rows(n) + _commutation_rows(G.adjacency)
    return _affine_from_directions(n, nullspace_exact(rows, n * n))


def _composition(G: Graph):
    """Commutant parametrization composed with the plain magic-square expansion.

    Returns (free, coeff, const, commutant_positions, removed_count).
    """
    n = G.n
    comm = nullspace_exact(_commutation_rows(G.adjacency), n * n)
    I_pos, r = greedy_coordinates(comm, n * n)           # x = r x_I on the commutant
    plain = qms_affine(n, 1)
    pidx = {p: k for k, p in enumerate(plain.independent)}
    dI = len(I_pos)
    # plain expansion composed with r: X_kl = alpha_kl + sum_I (sum_ij c_kl^ij r^ij_I) x_I
    composed = []
    for kl in range(n * n):
        row = [ZERO] * dI
        for (i, j), k in pidx.items():
            c = plain.coeff[kl][k]
            if c:
                rr = r[i * n + j]
                row = [a + c * b for a, b in zip(row, rr)]
        composed.append(row)
    # consistency with the commutant values: (composed - r) x_I = -alpha
    eqs = [[a - b for a, b in zip(composed[kl], r[kl])] + [-plain.constant[kl]] for kl in range(n * n)]
    # eliminate from the end so the dependent set K holds the latest positions
    rev = [list(reversed(e[:-1])) + [e[-1]] for e in eqs]
    R, piv = rref(rev)
    if any(p == dI for p in piv):
        raise ParametrizationError("composition system is inconsistent")
    K = sorted(dI - 1 - p for p in piv)
    ind = [q for q in range(dI) if q not in K]
    # x_K = b - sum_{ind} R x_ind  (in reversed coordinates)
    express = {}
    for row, p in zip(R, piv):
        q = dI - 1 - p
        lin = {q2: -row[dI - 1 - q2] for q2 in ind}
        express[q] = (row[-1], lin)
    sub = []                                              # x_I as affine map of x_ind
    for q in range(dI):
        if q in express:
            sub.append(express[q])
        else:
            sub.append((ZERO, {q2: (ONE if q2 == q else ZERO) for q2 in ind}))
    coeff, const = [], []
    for kl in range(n * n):
        c0 = plain.constant[kl]
        row = [ZERO] * len(ind)
        for q in range(dI):
            w = composed[kl][q]
            if w:
                b0, lin = sub[q]
                c0 += w * b0
                for t, q2 in enumerate(ind):
                    row[t] += w * lin[q2]
        coeff.append(row)
        const.append(c0)
    free = [I_pos[q] for q in ind]
    return free, coeff, const, I_pos, len(K)


def _same_affine_space(n, a, b) -> tuple[bool, str]:
    """Exact comparison of two (free, coeff, const) parametrizations of subsets of Q^(n^2)."""
    fa, ca, ka = a
    fb, cb, kb = b
    dirs_a, dirs_b = _transpose(ca), _transpose(cb)
    ra = len(rref(dirs_a)[1]) if dirs_a else 0
    rb = len(rref(dirs_b)[1]) if dirs_b else 0
    rab = len(rref(dirs_a + dirs_b)[1]) if dirs_a or dirs_b else 0
    if not (ra == rb == rab):
        return False, f"direction ranks differ: {ra}, {rb}, joint {rab}"
    diff = [x - y for x, y in zip(ka, kb)]
    if any(diff):
        rd = len(rref(dirs_a + [diff])[1])
        if rd != ra:
            return False, "particular points differ by a vector outside the direction space"
    return True, ""


def gqms_affine(G: Graph, s: int) -> AffineBlockParametrization:
    """Affine parametrization of the magic squares commuting with the adjacency.

    The joint exact nullspace of {row sums, column sums, commutation} is
    authoritative; the composed commutant-then-magic parametrization is
    computed as a cross-check and must describe the same affine space.
    """
    k = is_k_regular(G)
    if k is None:
        raise ParametrizationError(f"graph {G.name or G.n} is not regular")
    n = G.n
    joint = _joint(G)
    comp_free, comp_coeff, comp_const, I_pos, removed = _composition(G)
    ok, why = _same_affine_space(n, joint, (comp_free, comp_coeff, comp_const))
    if not ok:
        raise ParametrizationError(f"joint and composed parametrizations disagree: {why}")
    free, coeff, const = joint
    free_pos = [(p // n, p % n) for p in free]
    d_comm = len(I_pos)
    if d_comm != commutant_dimension_spectral(G):
        raise ParametrizationError("exact commutant dimension disagrees with the spectral count")
    dependent = [(p // n, p % n) for p in I_pos if p not in free]
    return AffineBlockParametrization(
        n, s, free_pos, dependent, const, coeff, Provenance.GRAPH_JOINT, G.name,
        claimed_removed=connected_components(G).count,
        measured_removed=d_comm - len(free),
        commutant_dimension=d_comm,
    )


def gqms_affine_composed(G: Graph, s: int) -> AffineBlockParametrization:
    """The composition route on its own (free positions may differ from the joint route)."""
    if is_k_regular(G) is None:
        raise ParametrizationError(f"graph {G.name or G.n} is not regular")
    n = G.n
    free, coeff, const, I_pos, removed = _composition(G)
    return AffineBlockParametrization(
        n, s, [(p // n, p % n) for p in free], [(p // n, p % n) for p in I_pos if p not in free],
        const, coeff, Provenance.GRAPH_COMPOSITION, G.name,
        claimed_removed=connected_components(G).count, measured_removed=removed,
        commutant_dimension=len(I_pos),
    )


# monic pencils

@dataclass
class PencilVar:
    label: tuple[int, int, int]       # (i, j, hermitian basis index)
    diag: np.ndarray                  # outer diagonal, length n^2


@dataclass
class MonicPencil:
    """I_{n^2} (x) I_s + sum_v diag(v.diag) (x) H_{v.label[2]} * y_v."""

    n: int
    s: int
    vars: list[PencilVar]
    graph: str = ""
    exact_diags: list[list[Fraction]] | None = field(default=None, repr=False)
    unshifted: tuple | None = field(default=None, repr=False)

    @property
    def outer(self) -> int:
        return self.n * self.n

    @property
    def n_vars(self) -> int:
        return len(self.vars)

    def coefficient(self, v: int) -> np.ndarray:
        """Full (n^2 s) coefficient matrix of variable v."""
        var = self.vars[v]
        return np.kron(np.diag(var.diag), her_basis(self.s)[var.label[2]])

    def monic_check(self) -> bool:
        return np.allclose(evaluate_pencil(self, np.zeros(self.n_vars))[0], np.eye(self.outer * self.s),
                           atol=0, rtol=0)

    def to_json(self) -> dict:
        return {
            "outer": self.outer,
            "n": self.n,
            "s": self.s,
            "graph": self.graph,
            "vars": [{"label": list(v.label), "diag": [float(x) for x in v.diag]} for v in self.vars],
        }

    @classmethod
    def from_json(cls, obj) -> "MonicPencil":
        try:
            outer = int(obj["outer"])
            n = int(obj.get("n", round(np.sqrt(outer))))
            s = int(obj.get("s", 1))
            vs = [PencilVar(tuple(int(t) for t in v["label"]), np.array(v["diag"], dtype=float))
                  for v in obj["vars"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed pencil JSON: {exc}") from exc
        if n * n != outer or any(v.diag.shape != (outer,) for v in vs):
            raise ValueError("pencil JSON dimensions are inconsistent")
        return cls(n, s, vs, obj.get("graph", ""))


def pencil_from_affine(par: AffineBlockParametrization) -> MonicPencil:
    ns2 = par.s * par.s
    vars_, exact = [], []
    for p, (i, j) in enumerate(par.independent):
        col = [row[p] for row in par.coeff]
        for k in range(ns2):
            vars_.append(PencilVar((i, j, k), np.array([float(v) for v in col])))
        exact.append(col)
    unshifted = (par.constant, [[row[p] for row in par.coeff] for p in range(par.n_params)])
    return MonicPencil(par.n, par.s, vars_, par.graph_name, exact, unshifted)


def monic_identity_exact(P: MonicPencil) -> bool:
    """A_0 + (1/n) sum_p A_p == (1/n) I exactly (A_0 = diag(const), A_p = diag(coeff[:, p]))."""
    if P.unshifted is None:
        raise ValueError("pencil carries no exact data")
    const, cols = P.unshifted
    inv = Fraction(1, P.n)
    for kl in range(P.outer):
        if const[kl] + inv * sum((c[kl] for c in cols), ZERO) != inv:
            return False
    return True


def monic_qms_pencil(n: int, s: int) -> MonicPencil:
    return pencil_from_affine(qms_affine(n, s))


def monic_gqms_pencil(G: Graph, s: int) -> MonicPencil:
    return pencil_from_affine(gqms_affine(G, s))


def _as_coordinates(P: MonicPencil, y) -> np.ndarray:
    y = np.asarray(y)
    if y.ndim == 1:
        if y.size != P.n_vars:
            raise ValueError(f"pencil has {P.n_vars} variables, got {y.size}")
        return y.astype(float)
    f = P.n_vars // (P.s * P.s)
    if y.shape != (f, P.s, P.s):
        raise ValueError(f"expected {f} Hermitian blocks of size {P.s}, got shape {y.shape}")
    basis = her_basis(P.s)
    return np.concatenate([her_coordinates(Y, basis) for Y in y])


def evaluate_pencil(P: MonicPencil, y):
    """Assemble I + sum_v y_v B_v (y a coordinate vector or Hermitian blocks).

    Returns (matrix, min_eig).
    """
    coords = _as_coordinates(P, y)
    s = P.s
    basis = her_basis(s)
    blocks = np.zeros((P.outer, s, s), dtype=complex)
    blocks[:] = np.eye(s)
    for c, var in zip(coords, P.vars):
        if c:
            blocks += c * var.diag[:, None, None] * basis[var.label[2]]
    M = np.zeros((P.outer * s, P.outer * s), dtype=complex)
    for kl in range(P.outer):
        M[kl * s:(kl + 1) * s, kl * s:(kl + 1) * s] = blocks[kl]
    lam = float(np.linalg.eigvalsh(blocks)[:, 0].min()) if P.outer else np.inf
    return M, lam


# membership: direct route vs pencil route

@dataclass
class MembershipResult:
    direct: bool
    pencil: bool
    affine_residual: float
    pencil_min_eig: float
    magic_residual: float
    graph_residual: float | None
    note: str = ""

    @property
    def agree(self) -> bool:
        return self.pencil == self.direct


def membership_test(X: BlockMatrix, G: Graph | None = None, tol: float = 1e-8,
                    par: AffineBlockParametrization | None = None) -> MembershipResult:
    rep = verify_magic(X, tol)
    gres = None
    direct = rep.overall
    if G is not None:
        gres = graph_commutation_residual(X, G)
        direct = direct and gres <= tol
    if par is None:
        par = qms_affine(X.n, X.s) if G is None else gqms_affine(G, X.s)
    ares = par.affine_residual(X)
    if ares > tol:
        # the pencil describes slice-intersect-cone, so leaving the slice is a verdict
        return MembershipResult(direct, False, ares, np.nan, rep.magic_residual, gres,
                                "outside the affine slice")
    P = pencil_from_affine(par)
    Y = par.shift_inverse(X)
    _, lam = evaluate_pencil(P, Y)
    # the pencil is n * diag(X_kl), so its PSD tolerance scales with n
    return MembershipResult(direct, bool(lam >= -X.n * tol), ares, lam, rep.magic_residual, gres)


# Arveson dilation probe (one-row dilations)

@dataclass
class DilationProbeResult:
    directions: int
    max_beta_norm: float
    statuses: list[str]
    dilation: BlockMatrix | None = None
    dilation_beta_norm: float = 0.0


def _range_basis(H, tol=1e-9):
    w, U = np.linalg.eigh(H)
    keep = w > tol * max(1.0, w[-1])
    return U[:, keep], w[keep]


def _probe_problem(X: BlockMatrix, G: Graph | None):
    """Constraint data of the one-row dilation SDP.

    Variable: block diagonal Z with one complex block per grid position,
    Z_ij = [[Lam_ij, b_ij], [b_ij*, g_ij]] where Lam_ij is the nonzero
    spectrum of X_ij (fixed) and beta_ij = U_ij b_ij.  Restricting beta to
    the range of X_ij is forced by PSD-ness of the dilated block.
    """
    n, s = X.n, X.s
    U, Lam, sizes, offs = [], [], [], []
    off = 0
    for i in range(n):
        for j in range(n):
            u, w = _range_basis(X.blocks[i, j])
            U.append(u)
            Lam.append(w)
            sizes.append(u.shape[1] + 1)
            offs.append(off)
            off += u.shape[1] + 1
    dim = off
    A, b = [], []

    def unit(p, a, c, val):
        K = np.zeros((dim, dim), dtype=complex)
        K[offs[p] + a, offs[p] + c] = val
        return K

    # fixed top-left blocks (Hermitian entries, real and imaginary parts)
    for p in range(n * n):
        r = sizes[p] - 1
        for a in range(r):
            for c in range(a, r):
                target = Lam[p][a] if a == c else 0.0
                A.append(sdp.hermitian_functional(unit(p, a, c, 1.0)))
                b.append(target)
                if c > a:
                    A.append(sdp.hermitian_functional(unit(p, a, c, 1j)))
                    b.append(0.0)

    def beta_functional(p, E):
        """K with Re Tr(K* Z) = Re <E, beta_p> for an s-vector E."""
        r = sizes[p] - 1
        K = np.zeros((dim, dim), dtype=complex)
        if r:
            K[offs[p]:offs[p] + r, offs[p] + r] = U[p].conj().T @ E
        return K

    def gamma_functional(p):
        return unit(p, sizes[p] - 1, sizes[p] - 1, 1.0)

    # linear relations: rows, columns and (optionally) commutation
    relations = [[(i * n + j, 1.0) for j in range(n)] for i in range(n)]
    relations += [[(i * n + j, 1.0) for i in range(n)] for j in range(n)]
    if G is not None:
        Adj = G.adjacency
        for i in range(n):
            for j in range(n):
                rel = {}
                for k in range(n):
                    if Adj[k, j]:
                        rel[i * n + k] = rel.get(i * n + k, 0.0) + 1.0
                    if Adj[i, k]:
                        rel[k * n + j] = rel.get(k * n + j, 0.0) - 1.0
                rel = [(p, c) for p, c in rel.items() if c]
                if rel:
                    relations.append(rel)
    eye_s = np.eye(s)
    for k_rel, rel in enumerate(relations):
        is_sum = k_rel < 2 * n
        for a in range(s):
            for phase in (1.0, 1j):
                K = sum((c * beta_functional(p, phase * eye_s[:, a]) for p, c in rel),
                        np.zeros((dim, dim), dtype=complex))
                A.append(sdp.hermitian_functional(K))
                b.append(0.0)
        K = sum((c * gamma_functional(p) for p, c in rel), np.zeros((dim, dim), dtype=complex))
        A.append(sdp.hermitian_functional(K))
        b.append(1.0 if is_sum else 0.0)
    return dim, sizes, offs, U, A, b, beta_functional


def arveson_dilation_probe(X: BlockMatrix, G: Graph | None = None, directions: int = 20,
                           seed=0, tol: float = 1e-8) -> DilationProbeResult:
    """Maximise Re <E, beta> over one-row dilations for random directions E.

    Returns the largest ||beta||_F found and, when it is nonzero, a dilated
    square (scaled by 1/2 toward the trivial dilation so that it is strictly
    inside the cone) for independent re-verification.
    """
    mem = membership_test(X, G, tol)
    if not mem.direct:
        raise ValueError("dilation probe needs a member of the set")
    if directions <= 0:
        return DilationProbeResult(0, 0.0, [])
    n, s = X.n, X.s
    dim, sizes, offs, U, A, b, beta_functional = _probe_problem(X, G)
    rng = np.random.default_rng(seed)
    best, best_Z = 0.0, None
    statuses = []
    for _ in range(directions):
        E = rng.standard_normal((n * n, s)) + 1j * rng.standard_normal((n * n, s))
        C = -sum((sdp.hermitian_functional(beta_functional(p, E[p])) for p in range(n * n)),
                 np.zeros((dim, dim), dtype=complex))
        res = sdp.solve_hermitian(C, A, b, blocks=sizes)
        statuses.append(res.status.value)
        if not res.optimal:
            continue
        beta = _extract_beta(res.Z, sizes, offs, U, s)
        norm = float(np.linalg.norm(beta))
        if norm > best:
            best, best_Z = norm, res.Z
    out = DilationProbeResult(directions, best, statuses)
    if best_Z is not None and best > 0:
        D = _dilated_square(X, best_Z, sizes, offs, U, scale=0.5)
        out.dilation = D
        out.dilation_beta_norm = float(np.linalg.norm(D.blocks[:, :, :s, s]))
    return out


def _extract_beta(Z, sizes, offs, U, s):
    beta = np.zeros((len(sizes), s), dtype=complex)
    for p, (r1, o) in enumerate(zip(sizes, offs)):
        r = r1 - 1
        if r:
            beta[p] = U[p] @ Z[o:o + r, o + r]
    return beta


def _dilated_square(X, Z, sizes, offs, U, scale=1.0) -> BlockMatrix:
    n, s = X.n, X.s
    beta = _extract_beta(Z, sizes, offs, U, s) * scale
    D = np.zeros((n, n, s + 1, s + 1), dtype=complex)
    for p in range(n * n):
        i, j = divmod(p, n)
        r = sizes[p] - 1
        D[i, j, :s, :s] = X.blocks[i, j]
        D[i, j, :s, s] = beta[p]
        D[i, j, s, :s] = beta[p].conj()
        D[i, j, s, s] = Z[offs[p] + r, offs[p] + r].real
    return BlockMatrix(D)


# export

def export_json(P: MonicPencil, path):
    jsonio.dump(P.to_json(), path)


def load_json(path) -> MonicPencil:
    return MonicPencil.from_json(jsonio.load(path))


def export_sdpa(P: MonicPencil, path):
    """SDPA sparse data for the feasibility problem ``L(y) >= 0``.

    SDPA's primal constraint is ``sum_i y_i F_i - F_0 >= 0``, so the
    identity term enters as ``F_0 = -I``.  For s >= 2 the Hermitian
    coefficients are real-embedded and the block size doubles.
    """
    complex_ = P.s >= 2
    dim = P.outer * P.s * (2 if complex_ else 1)

    def real(M):
        return np.block([[M.real, -M.imag], [M.imag, M.real]]) if complex_ else M.real

    mats = [-np.eye(dim)] + [real(P.coefficient(v)) for v in range(P.n_vars)]
    comment = f"*gqms-spectra pencil n={P.n} s={P.s} graph={P.graph or 'none'}"
    if complex_:
        comment += f"\n*complex pencil real-embedded: block size {dim} = 2 * {P.outer * P.s}"
    sdp.write_sdpa_matrices(path, np.zeros(P.n_vars), mats, comment)
