"""Simple undirected graphs, regularity/components, and adjacency commutants."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .linalg import CLUSTER_TOL, RANK_TOL, eig_herm, nullspace


@dataclass(frozen=True)
class Graph:
    n: int
    adjacency: np.ndarray = field(repr=False)
    name: str = ""

    def __post_init__(self):
        A = np.asarray(self.adjacency, dtype=int)
        if A.shape != (self.n, self.n):
            raise ValueError(f"adjacency shape {A.shape} does not match n={self.n}")
        if not np.array_equal(A, A.T):
            raise ValueError("adjacency must be symmetric")
        if np.any(np.diag(A) != 0):
            raise ValueError("loops are not allowed")
        if not np.all((A == 0) | (A == 1)):
            raise ValueError("adjacency entries must be 0/1")
        A.setflags(write=False)
        object.__setattr__(self, "adjacency", A)

    @property
    def edges(self) -> list[tuple[int, int]]:
        return [(i, j) for i in range(self.n) for j in range(i + 1, self.n) if self.adjacency[i, j]]

    def degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=1)

    def neighbours(self, i: int) -> list[int]:
        return [int(k) for k in np.flatnonzero(self.adjacency[i])]

    def to_json(self) -> dict:
        return {"n": self.n, "edges": [list(e) for e in self.edges]}


def from_edge_list(n: int, edges, name: str = "") -> Graph:
    if n < 1:
        raise ValueError("a graph needs at least one vertex")
    A = np.zeros((n, n), dtype=int)
    for e in edges:
        i, j = (int(v) for v in e)
        if not (0 <= i < n and 0 <= j < n):
            raise ValueError(f"edge {(i, j)} out of range for n={n}")
        if i == j:
            raise ValueError(f"loop at vertex {i}")
        A[i, j] = A[j, i] = 1
    return Graph(n, A, name)


def graph_from_json(obj) -> Graph:
    try:
        return from_edge_list(int(obj["n"]), obj["edges"])
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed graph JSON: {exc}") from exc


def cycle(n: int) -> Graph:
    if n < 3:
        raise ValueError("cycle needs n >= 3")
    return from_edge_list(n, [(i, (i + 1) % n) for i in range(n)], f"cycle:{n}")


def complete(n: int) -> Graph:
    if n < 2:
        raise ValueError("complete graph needs n >= 2")
    return Graph(n, np.ones((n, n), dtype=int) - np.eye(n, dtype=int), f"complete:{n}")


def path(n: int) -> Graph:
    if n < 1:
        raise ValueError("path needs n >= 1")
    return from_edge_list(n, [(i, i + 1) for i in range(n - 1)], f"path:{n}")


def disjoint_union(G1: Graph, G2: Graph) -> Graph:
    n = G1.n + G2.n
    A = np.zeros((n, n), dtype=int)
    A[: G1.n, : G1.n] = G1.adjacency
    A[G1.n:, G1.n:] = G2.adjacency
    name = f"union:{G1.name}+{G2.name}" if G1.name and G2.name else ""
    return Graph(n, A, name)


def parse_graph(spec: str) -> Graph:
    """Parse ``cycle:N``, ``complete:N``, ``path:N`` or ``union:<g>+<g>``."""
    spec = spec.strip()
    if spec.startswith("union:"):
        parts = spec[len("union:"):].split("+")
        if len(parts) < 2:
            raise ValueError(f"union needs at least two graphs: {spec!r}")
        G = parse_graph(parts[0])
        for p in parts[1:]:
            G = disjoint_union(G, parse_graph(p))
        return Graph(G.n, G.adjacency, spec)
    try:
        family, n = spec.split(":")
        n = int(n)
    except ValueError as exc:
        raise ValueError(f"cannot parse graph spec {spec!r}") from exc
    builders = {"cycle": cycle, "complete": complete, "path": path}
    if family not in builders:
        raise ValueError(f"unknown graph family {family!r}")
    return builders[family](n)


def is_k_regular(G: Graph) -> int | None:
    deg = G.degrees()
    return int(deg[0]) if deg.size and np.all(deg == deg[0]) else None


@dataclass(frozen=True)
class ComponentDecomposition:
    count: int
    labels: np.ndarray

    def indicator(self, t: int) -> np.ndarray:
        return (self.labels == t).astype(float)

    def vertices(self, t: int) -> list[int]:
        return [int(v) for v in np.flatnonzero(self.labels == t)]


def connected_components(G: Graph) -> ComponentDecomposition:
    labels = -np.ones(G.n, dtype=int)
    t = 0
    for root in range(G.n):
        if labels[root] >= 0:
            continue
        labels[root] = t
        queue = deque([root])
        while queue:
            v = queue.popleft()
            for w in G.neighbours(v):
                if labels[w] < 0:
                    labels[w] = t
                    queue.append(w)
        t += 1
    return ComponentDecomposition(t, labels)


def commutant_dimension_spectral(G: Graph, cluster_tol: float = CLUSTER_TOL) -> int:
    """dim Comm(A) = sum of squared eigenvalue multiplicities (A is diagonalisable)."""
    spec, _ = eig_herm(G.adjacency.astype(float), cluster_tol)
    return int(sum(m * m for m in spec.multiplicities))


def cycle_commutant_dim_formula(n: int) -> int:
    if n < 3:
        raise ValueError("cycle needs n >= 3")
    return 2 * n - 1 if n % 2 else 2 * n - 2


class CommutantError(RuntimeError):
    pass


@dataclass(frozen=True)
class CommutantBasis:
    dimension: int
    basis: list[np.ndarray]
    source: str = "nullspace"


def commutator_operator(A) -> np.ndarray:
    """Matrix of X -> A X - X A acting on row-major vec(X)."""
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    I = np.eye(n)
    # row-major vec: vec(A X) = (A (x) I) vec X, vec(X A) = (I (x) A^T) vec X
    return np.kron(A, I) - np.kron(I, A.T)


def commutant_basis(G: Graph, rank_tol: float = RANK_TOL) -> CommutantBasis:
    """Trace-orthonormal basis of {X : A X = X A} from the commutator kernel.

    Cross-checked against the spectral count; a mismatch raises.
    """
    K = nullspace(commutator_operator(G.adjacency), rank_tol)
    basis = [K[:, k].reshape(G.n, G.n).astype(complex) for k in range(K.shape[1])]
    d_spec = commutant_dimension_spectral(G)
    if len(basis) != d_spec:
        raise CommutantError(f"nullspace dimension {len(basis)} != spectral dimension {d_spec}")
    return CommutantBasis(len(basis), basis, "nullspace")
