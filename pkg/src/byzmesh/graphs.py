"""Worker graphs, mixing matrices, and their spectral diagnostics.

Workers are numbered ``0 .. n_honest + n_byzantine - 1`` with the
Byzantine ids always occupying the trailing range, so honest-only
submatrices are contiguous slices.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .rng import DOMAIN_GRAPH, stream

ROW_SUM_TOL = 1e-12


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class Topology:
    """Undirected graph over honest + Byzantine worker ids.

    ``adjacency`` is a symmetric boolean matrix with a zero diagonal
    (edges carry no self-links).  Honest ids are ``0 .. n_honest-1``,
    Byzantine ids are the trailing ``n_byzantine`` ids.
    """

    n_honest: int
    n_byzantine: int
    adjacency: np.ndarray = field(repr=False)

    def __post_init__(self):
        adj = np.asarray(self.adjacency, dtype=bool)
        size = self.n_honest + self.n_byzantine
        if self.n_honest < 1:
            raise GraphError("need at least one honest worker")
        if adj.shape != (size, size):
            raise GraphError(f"adjacency shape {adj.shape} != ({size}, {size})")
        if not np.array_equal(adj, adj.T):
            raise GraphError("adjacency must be symmetric")
        if adj.diagonal().any():
            raise GraphError("self-links are not allowed")
        adj.setflags(write=False)
        object.__setattr__(self, "adjacency", adj)

    @property
    def size(self) -> int:
        return self.n_honest + self.n_byzantine

    @property
    def honest_ids(self) -> range:
        return range(self.n_honest)

    @property
    def byzantine_ids(self) -> range:
        return range(self.n_honest, self.size)

    def neighbors(self, n: int) -> np.ndarray:
        return np.flatnonzero(self.adjacency[n])

    def honest_neighbors(self, n: int) -> np.ndarray:
        return np.flatnonzero(self.adjacency[n, : self.n_honest])

    def byzantine_neighbors(self, n: int) -> np.ndarray:
        return self.n_honest + np.flatnonzero(self.adjacency[n, self.n_honest :])

    def degree(self, n: int) -> int:
        return int(self.adjacency[n].sum())

    def edges(self) -> list[tuple[int, int]]:
        """Sorted edge list (i < j), lexicographic."""
        i, j = np.nonzero(np.triu(self.adjacency, k=1))
        return [(int(a), int(b)) for a, b in zip(i, j)]


@dataclass(frozen=True)
class MixingMatrix:
    """Row-stochastic nonnegative weight matrix over worker ids."""

    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        w = np.ascontiguousarray(np.asarray(self.weights, dtype=np.float64))
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise GraphError("weights must be a square matrix")
        if (w < -ROW_SUM_TOL).any() or (w > 1 + ROW_SUM_TOL).any():
            raise GraphError("weights must lie in [0, 1]")
        if np.abs(w.sum(axis=1) - 1.0).max() > ROW_SUM_TOL:
            raise GraphError("every row must sum to 1")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def size(self) -> int:
        return self.weights.shape[0]

    def row(self, n: int) -> np.ndarray:
        return self.weights[n]

    def is_symmetric(self, tol: float = ROW_SUM_TOL) -> bool:
        return bool(np.abs(self.weights - self.weights.T).max() <= tol)

    def is_doubly_stochastic(self, tol: float = ROW_SUM_TOL) -> bool:
        return bool(np.abs(self.weights.sum(axis=0) - 1.0).max() <= tol)

    def restrict(self, ids: Sequence[int]) -> np.ndarray:
        """Plain submatrix over ``ids`` (not renormalized)."""
        idx = np.asarray(ids, dtype=int)
        return self.weights[np.ix_(idx, idx)].copy()


# ----------------------------- generators ----------------------------- #


def _topology_from_edges(n_honest: int, n_byzantine: int, edges) -> Topology:
    size = n_honest + n_byzantine
    adj = np.zeros((size, size), dtype=bool)
    for i, j in edges:
        if i == j:
            raise GraphError(f"self-link ({i},{j})")
        adj[i, j] = adj[j, i] = True
    return Topology(n_honest=n_honest, n_byzantine=n_byzantine, adjacency=adj)


def gen_erdos_renyi(n_honest: int, n_byzantine: int, p: float, seed: int) -> Topology:
    """Erdos-Renyi graph over all n_honest + n_byzantine ids.

    Draw order is documented and replayable: unordered pairs (i, j) with
    i < j are visited in lexicographic order and each consumes exactly
    one uniform [0, 1) draw; the edge exists iff the draw is < p.
    Disconnected output is legal; the spectral diagnostic flags it.
    """
    if not 0.0 <= p <= 1.0:
        raise GraphError(f"p={p} outside [0, 1]")
    if n_honest < 1:
        raise GraphError("need at least one honest worker")
    size = n_honest + n_byzantine
    rng = stream(seed, DOMAIN_GRAPH)
    edges = []
    for i in range(size):
        for j in range(i + 1, size):
            if rng.uniform() < p:
                edges.append((i, j))
    return _topology_from_edges(n_honest, n_byzantine, edges)


def gen_two_castle(castle_size: int, byzantine_per_castle: int = 0) -> Topology:
    """Two cliques of ``castle_size`` honest workers, cross-linked by a
    non-matching: honest worker i of castle A connects to every worker
    of castle B except its opposite number c + i (and symmetrically).

    Each optional Byzantine worker attaches to all honest workers of its
    castle.  Deterministic, seed-free.
    """
    c = castle_size
    if c < 2:
        raise GraphError("castle_size must be >= 2")
    b = byzantine_per_castle
    n_honest = 2 * c
    edges = []
    for i in range(c):
        for j in range(i + 1, c):
            edges.append((i, j))  # castle A clique
            edges.append((c + i, c + j))  # castle B clique
    for i in range(c):
        for j in range(c):
            if j != i:
                edges.append((i, c + j))  # cross links skip the partner
    for k in range(b):
        byz_a = n_honest + k
        byz_b = n_honest + b + k
        for i in range(c):
            edges.append((i, byz_a))
            edges.append((c + i, byz_b))
    return _topology_from_edges(n_honest, 2 * b, edges)


def gen_octopus(
    head_size: int,
    n_legs: int = 0,
    leg_length: int = 0,
    byz_placement: Sequence[int] = (),
) -> Topology:
    """Clique head with path legs hanging off distinct head nodes.

    Honest ids: head 0..head_size-1, then leg nodes in leg order.  Each
    entry of ``byz_placement`` spawns one Byzantine worker attached to
    that honest id (repeats allowed).  This is a parametric stand-in for
    the hand-drawn graph it mimics; the exact published edge set was
    never listed, so the generator is documented rather than guessed.
    """
    if head_size < 1:
        raise GraphError("head_size must be >= 1")
    if n_legs > head_size:
        raise GraphError("each leg needs a distinct head node")
    n_honest = head_size + n_legs * leg_length
    edges = []
    for i in range(head_size):
        for j in range(i + 1, head_size):
            edges.append((i, j))
    node = head_size
    for leg in range(n_legs):
        prev = leg  # attachment point on the head
        for _ in range(leg_length):
            edges.append((prev, node))
            prev = node
            node += 1
    for k, target in enumerate(byz_placement):
        if not 0 <= target < n_honest:
            raise GraphError(f"byz_placement id {target} out of range")
        edges.append((int(target), n_honest + k))
    return _topology_from_edges(n_honest, len(byz_placement), edges)


# ------------------------------ weights ------------------------------ #


def metropolis_weights(t: Topology) -> MixingMatrix:
    """Metropolis-Hastings weights: w'_nm = min(1/(deg_n+1), 1/(deg_m+1))
    on edges, diagonal fills the row to 1.  Symmetric and doubly
    stochastic by construction.
    """
    size = t.size
    deg = t.adjacency.sum(axis=1).astype(np.float64)
    w = np.zeros((size, size))
    inv = 1.0 / (deg + 1.0)
    for n in range(size):
        for m in t.neighbors(n):
            w[n, m] = min(inv[n], inv[m])
    np.fill_diagonal(w, 1.0 - w.sum(axis=1))
    return MixingMatrix(w)


def equal_neighbor_weights(t: Topology) -> MixingMatrix:
    """Equal local weights w'_nm = 1/(deg_n + 1) over the closed
    neighborhood.  Row stochastic but not doubly stochastic on graphs
    with heterogeneous degrees.
    """
    size = t.size
    w = np.zeros((size, size))
    for n in range(size):
        share = 1.0 / (t.degree(n) + 1.0)
        w[n, t.adjacency[n]] = share
        w[n, n] = share
    # Guard against accumulated rounding: rebalance the diagonal.
    np.fill_diagonal(w, 0.0)
    np.fill_diagonal(w, 1.0 - w.sum(axis=1))
    return MixingMatrix(w)


WEIGHT_RULES = {
    "metropolis": metropolis_weights,
    "equal": equal_neighbor_weights,
}


# ---------------------------- diagnostics ----------------------------- #


def spectral_gap(w: np.ndarray | MixingMatrix, tol: float = 1e-12, max_iter: int = 1000) -> float:
    """1 - ||(I - (1/N) 1 1^T) W||^2 of an honest-only mixing matrix.

    The squared spectral norm comes from power iteration on M^T M with a
    fixed deterministic start vector; matrices here are tiny so
    robustness beats speed.  A value <= 0 signals a disconnected mixing
    graph; it is returned as a diagnostic, never raised.
    """
    mat = w.weights if isinstance(w, MixingMatrix) else np.asarray(w, dtype=np.float64)
    n = mat.shape[0]
    if n == 1:
        return 1.0
    m = mat - np.full((n, n), 1.0 / n) @ mat
    mtm = m.T @ m
    v = stream(0, DOMAIN_GRAPH, 1).standard_normal(n)
    v /= np.linalg.norm(v)
    sigma_sq = 0.0
    for _ in range(max_iter):
        u = mtm @ v
        norm = np.linalg.norm(u)
        if norm == 0.0:
            return 1.0  # M = 0: W already averages exactly
        u /= norm
        new_sigma_sq = float(u @ mtm @ u)
        if abs(new_sigma_sq - sigma_sq) <= tol * max(new_sigma_sq, 1.0):
            v = u
            sigma_sq = new_sigma_sq
            break
        v = u
        sigma_sq = new_sigma_sq
    return 1.0 - sigma_sq


def chi_squared(w: np.ndarray | MixingMatrix) -> float:
    """(1/N) ||W^T 1 - 1||^2: zero iff W is doubly stochastic."""
    mat = w.weights if isinstance(w, MixingMatrix) else np.asarray(w, dtype=np.float64)
    n = mat.shape[0]
    col = mat.sum(axis=0) - 1.0
    return float(col @ col) / n


def ios_virtual_matrix(wprime: MixingMatrix, t: Topology, tol: float = 1e-9) -> MixingMatrix:
    """Honest-only virtual mixing matrix of the iterative outlier
    scissor: Byzantine weights fold onto the diagonal
    (w_nn = w'_nn + sum_b w'_nb), other entries carry over.

    Requires a symmetric doubly stochastic ``wprime``; the result is then
    doubly stochastic as well.
    """
    if wprime.size != t.size:
        raise GraphError("mixing matrix size does not match topology")
    if not wprime.is_symmetric(tol):
        raise GraphError("ios_virtual_matrix requires a symmetric mixing matrix")
    n = t.n_honest
    full = wprime.weights
    w = full[:n, :n].copy()
    byz_mass = full[:n, n:].sum(axis=1)
    w[np.diag_indices(n)] += byz_mass
    return MixingMatrix(w)


# --------------------------- serialization ---------------------------- #


def to_json_doc(t: Topology, w: MixingMatrix | None = None) -> str:
    """Byte-stable JSON for a topology and (optionally) its weights."""
    doc = {
        "n_honest": t.n_honest,
        "n_byzantine": t.n_byzantine,
        "edges": [list(e) for e in t.edges()],
    }
    if w is not None:
        if w.size != t.size:
            raise GraphError("mixing matrix size does not match topology")
        doc["weights"] = [float(x) for x in w.weights.ravel()]
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def from_json_doc(s: str) -> tuple[Topology, MixingMatrix | None]:
    doc = json.loads(s)
    t = _topology_from_edges(doc["n_honest"], doc["n_byzantine"], doc["edges"])
    w = None
    if doc.get("weights") is not None:
        size = t.size
        w = MixingMatrix(np.asarray(doc["weights"], dtype=np.float64).reshape(size, size))
    return t, w
