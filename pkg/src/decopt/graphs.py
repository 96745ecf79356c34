"""Network topologies and gossip mixing matrices.

Undirected connected graphs model the communication network; every graph
carries 0-based vertex labels and is validated (simple, connected) when
built. Mixing matrices follow the Metropolis rule, which is symmetric and
doubly stochastic by construction, so a single eigendecomposition gives the
spectral gap that the convergence theory depends on.

All randomness goes through ``numpy.random.default_rng`` (PCG64) with an
explicit integer seed, so any graph here is reproducible from its seed alone.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "Graph",
    "MixingMatrix",
    "gen_erdos_renyi",
    "gen_ring",
    "gen_complete",
    "metropolis_weights",
    "spectral_gap",
    "write_edge_list",
    "read_edge_list",
]

_EIG_TOL = 1e-12


class GraphError(ValueError):
    """Raised for invalid graph construction or serialization input."""


@dataclass(frozen=True)
class Graph:
    """Simple connected undirected graph on vertices 0..n-1.

    Parameters
    ----------
    n : int
        Vertex count, positive. A single vertex with no edges is the valid
        degenerate one-agent network.
    edges : tuple of (int, int)
        Unordered pairs stored as (i, j) with i < j, sorted lexicographically.

    Construction validates simplicity (no self-loops, no duplicates), label
    range, and connectivity; an invalid graph cannot exist.
    """

    n: int
    edges: tuple[tuple[int, int], ...]
    _adj: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.n < 1:
            raise GraphError(f"need a positive vertex count, got n={self.n}")
        canon = []
        for e in self.edges:
            i, j = e
            if i == j:
                raise GraphError(f"self-loop at vertex {i}")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise GraphError(f"edge {e} out of range for n={self.n}")
            canon.append((min(i, j), max(i, j)))
        canon.sort()
        if len(set(canon)) != len(canon):
            raise GraphError("duplicate edge")
        object.__setattr__(self, "edges", tuple(canon))

        adj: list[list[int]] = [[] for _ in range(self.n)]
        for i, j in self.edges:
            adj[i].append(j)
            adj[j].append(i)
        object.__setattr__(self, "_adj", tuple(tuple(sorted(a)) for a in adj))

        if not self._connected():
            raise GraphError("graph is not connected")

    def _connected(self) -> bool:
        seen = [False] * self.n
        stack = [0]
        seen[0] = True
        count = 1
        while stack:
            v = stack.pop()
            for u in self._adj[v]:
                if not seen[u]:
                    seen[u] = True
                    count += 1
                    stack.append(u)
        return count == self.n

    def neighbors(self, i: int) -> tuple[int, ...]:
        """Sorted neighbor labels of vertex i."""
        return self._adj[i]

    def degree(self, i: int) -> int:
        return len(self._adj[i])

    @property
    def n_edges(self) -> int:
        return len(self.edges)


@dataclass(frozen=True)
class MixingMatrix:
    """Dense symmetric doubly stochastic weight matrix tied to its graph.

    Invariants checked at construction: exact symmetry, row sums within
    1e-12 of one, positive entries exactly on the diagonal and the edge
    positions, all eigenvalues in (-1, 1] with the eigenvalue 1 simple.
    """

    w: np.ndarray
    graph: Graph

    def __post_init__(self) -> None:
        w, g = self.w, self.graph
        if w.shape != (g.n, g.n):
            raise GraphError(f"matrix shape {w.shape} does not match n={g.n}")
        if not np.array_equal(w, w.T):
            raise GraphError("mixing matrix is not exactly symmetric")
        rs = w.sum(axis=1)
        if np.max(np.abs(rs - 1.0)) > 1e-12:
            raise GraphError("row sums deviate from 1 beyond 1e-12")
        edge_set = set(g.edges)
        for i in range(g.n):
            if w[i, i] <= 0.0:
                raise GraphError(f"nonpositive diagonal at {i}")
            for j in range(i + 1, g.n):
                on_edge = (i, j) in edge_set
                if on_edge and w[i, j] <= 0.0:
                    raise GraphError(f"nonpositive weight on edge ({i},{j})")
                if not on_edge and w[i, j] != 0.0:
                    raise GraphError(f"nonzero weight off edge ({i},{j})")
        lam = np.linalg.eigvalsh(w)
        if lam[0] <= -1.0 + _EIG_TOL:
            raise GraphError("eigenvalue at or below -1")
        if abs(lam[-1] - 1.0) > 1e-10:
            raise GraphError("largest eigenvalue is not 1")
        if g.n > 1 and lam[-2] >= 1.0 - _EIG_TOL:
            raise GraphError("eigenvalue 1 is not simple (graph disconnected?)")

    @property
    def n(self) -> int:
        return self.graph.n


def gen_erdos_renyi(n: int, p: float, seed: int) -> Graph:
    """Sample a connected G(n, p) graph.

    Each of the n(n-1)/2 candidate edges is included independently with
    probability p, drawing uniforms in lexicographic pair order from
    ``default_rng(seed)``. A disconnected sample is rejected and the whole
    draw repeats with seed+1; after 1000 rejected attempts this errors out
    rather than repairing the sample, so the per-seed distribution stays a
    plain conditioned G(n, p).
    """
    if n < 2:
        raise GraphError(f"need n >= 2, got {n}")
    if not (0.0 < p <= 1.0):
        raise GraphError(f"edge probability must be in (0, 1], got {p}")
    for attempt in range(1000):
        rng = np.random.default_rng(seed + attempt)
        draws = rng.random(n * (n - 1) // 2)
        edges = []
        k = 0
        for i in range(n):
            for j in range(i + 1, n):
                if draws[k] < p:
                    edges.append((i, j))
                k += 1
        try:
            return Graph(n, tuple(edges))
        except GraphError:
            continue
    raise GraphError(
        f"no connected sample in 1000 attempts from seed {seed} (n={n}, p={p})"
    )


def gen_ring(n: int) -> Graph:
    """Cycle graph: edges {i, (i+1) mod n}. For n = 3 this is K3."""
    if n < 3:
        raise GraphError(f"ring needs n >= 3, got {n}")
    return Graph(n, tuple((i, (i + 1) % n) for i in range(n)))


def gen_complete(n: int) -> Graph:
    """Complete graph on n vertices."""
    if n < 2:
        raise GraphError(f"need n >= 2, got {n}")
    return Graph(n, tuple((i, j) for i in range(n) for j in range(i + 1, n)))


def metropolis_weights(g: Graph) -> MixingMatrix:
    """Metropolis-Hastings weights: W_ij = 1/(1 + max{d_i, d_j}) on edges.

    The diagonal absorbs the slack, W_ii = 1 - sum of the row's off-diagonal
    weights, which makes W symmetric and doubly stochastic; connectivity of g
    makes the eigenvalue 1 simple, and a Gershgorin argument keeps every
    eigenvalue strictly above -1.
    """
    w = np.zeros((g.n, g.n))
    for i, j in g.edges:
        wij = 1.0 / (1.0 + max(g.degree(i), g.degree(j)))
        w[i, j] = wij
        w[j, i] = wij
    for i in range(g.n):
        w[i, i] = 1.0 - w[i].sum()
    return MixingMatrix(w, g)


def spectral_gap(mix: MixingMatrix | np.ndarray) -> float:
    """Spectral gap rho = 1 - max{|lambda_2|, |lambda_n|} of a mixing matrix.

    Eigenvalues are sorted descending; the gap is what enters the linear-rate
    constants. Errors if the computed gap is <= 1e-12, which would mean the
    matrix is numerically disconnected.
    """
    w = mix.w if isinstance(mix, MixingMatrix) else np.asarray(mix)
    if w.shape == (1, 1):
        return 1.0  # no second mode on a one-vertex network
    lam = np.linalg.eigvalsh(w)[::-1]
    rho = 1.0 - max(abs(lam[1]), abs(lam[-1]))
    if rho <= _EIG_TOL:
        raise GraphError(f"spectral gap {rho:.3e} is numerically zero")
    return float(rho)


def write_edge_list(g: Graph, path: str | Path) -> None:
    """Write the graph as text: header line ``n <count>``, then one ``i j`` line per edge."""
    lines = [f"n {g.n}"]
    lines += [f"{i} {j}" for i, j in g.edges]
    Path(path).write_text("\n".join(lines) + "\n")


def read_edge_list(path: str | Path) -> Graph:
    """Inverse of :func:`write_edge_list`; validates like any other Graph."""
    raw = Path(path).read_text().strip().splitlines()
    if not raw:
        raise GraphError(f"empty edge-list file {path}")
    head = raw[0].split()
    if len(head) != 2 or head[0] != "n":
        raise GraphError(f"bad header {raw[0]!r}, expected 'n <count>'")
    n = int(head[1])
    edges = []
    for line in raw[1:]:
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 2:
            raise GraphError(f"bad edge line {line!r}")
        edges.append((int(parts[0]), int(parts[1])))
    return Graph(n, tuple(edges))
