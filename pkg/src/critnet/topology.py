"""Scale-free graphs, edge betweenness and relative link loads.

The load of a link is its betweenness (the number of node pairs routed
through it, split evenly over equal-length shortest paths) relative to the
mean over links.
"""
import csv
from dataclasses import dataclass, field
import io
import math

import numba
import numpy as np

from .errors import InsufficientDataError, ParameterError
from .rng import derive_stream


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph on nodes ``0..n-1``; edges stored as sorted ``(u < v)`` rows."""

    n: int
    edges: np.ndarray
    indptr: np.ndarray = field(repr=False)
    indices: np.ndarray = field(repr=False)
    edge_ids: np.ndarray = field(repr=False)

    @classmethod
    def from_edges(cls, n, edges):
        e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if e.size and (e.min() < 0 or e.max() >= n):
            raise ParameterError("edges", f"node ids must lie in [0, {n})")
        if np.any(e[:, 0] == e[:, 1]):
            raise ParameterError("edges", "self-loops are not allowed")
        e = np.sort(e, axis=1)
        e = np.unique(e, axis=0)
        m = len(e)
        src = np.concatenate([e[:, 0], e[:, 1]])
        dst = np.concatenate([e[:, 1], e[:, 0]])
        eid = np.concatenate([np.arange(m), np.arange(m)])
        order = np.lexsort((dst, src))
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(indptr, src + 1, 1)
        return cls(int(n), e, np.cumsum(indptr), dst[order], eid[order])

    @property
    def m(self):
        return len(self.edges)

    def degrees(self):
        return np.diff(self.indptr)

    def edge_index(self, u, v):
        u, v = min(u, v), max(u, v)
        lo, hi = self.indptr[u], self.indptr[u + 1]
        k = np.searchsorted(self.indices[lo:hi], v)
        if k < hi - lo and self.indices[lo + k] == v:
            return int(self.edge_ids[lo + k])
        raise ParameterError("edge", f"({u}, {v}) is not an edge")

    def components(self):
        return _components(self.n, self.indptr, self.indices)

    def is_connected(self):
        return self.n <= 1 or bool(np.all(self.components() == 0))

    def largest_component(self):
        """Induced subgraph on the largest component, nodes relabelled in order."""
        lab = self.components()
        big = np.argmax(np.bincount(lab))
        keep = np.flatnonzero(lab == big)
        new = -np.ones(self.n, dtype=np.int64)
        new[keep] = np.arange(keep.size)
        e = self.edges[(lab[self.edges[:, 0]] == big)]
        return Graph.from_edges(keep.size, new[e])


# ----------------------------------------------------------------- generation


def generate_sf_graph(n, m, seed=0):
    """Preferential-attachment graph: each new node links to ``m`` distinct nodes chosen by degree.

    Growth starts from the complete graph on ``m + 1`` nodes.
    """
    if not (isinstance(m, (int, np.integer)) and m >= 1):
        raise ParameterError("m", f"must be a positive integer, got {m}")
    if not n > m:
        raise ParameterError("n", f"must exceed m={m}, got {n}")
    rng = derive_stream(seed, 0)
    edges = [(i, j) for i in range(m + 1) for j in range(i + 1, m + 1)]
    # Each node appears in the urn once per incident edge end.
    urn = np.empty(2 * (len(edges) + (n - m - 1) * m), dtype=np.int64)
    k = 0
    for u, v in edges:
        urn[k], urn[k + 1] = u, v
        k += 2
    for new in range(m + 1, n):
        targets = set()
        while len(targets) < m:
            targets.add(int(urn[rng.integers(0, k)]))
        for t in sorted(targets):
            edges.append((t, new))
            urn[k], urn[k + 1] = t, new
            k += 2
    return Graph.from_edges(n, edges)


def ring_graph(n):
    return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


# ---------------------------------------------------------------- betweenness


@numba.njit(cache=True)
def _components(n, indptr, indices):
    lab = -np.ones(n, dtype=np.int64)
    stack = np.empty(n, dtype=np.int64)
    c = 0
    for s in range(n):
        if lab[s] >= 0:
            continue
        lab[s] = c
        top = 0
        stack[0] = s
        while top >= 0:
            v = stack[top]
            top -= 1
            for k in range(indptr[v], indptr[v + 1]):
                w = indices[k]
                if lab[w] < 0:
                    lab[w] = c
                    top += 1
                    stack[top] = w
        c += 1
    return lab


@numba.njit(cache=True)
def _bfs(s, n, indptr, indices, dist, order):
    for i in range(n):
        dist[i] = -1
    dist[s] = 0
    order[0] = s
    head, tail = 0, 1
    while head < tail:
        v = order[head]
        head += 1
        for k in range(indptr[v], indptr[v + 1]):
            w = indices[k]
            if dist[w] < 0:
                dist[w] = dist[v] + 1
                order[tail] = w
                tail += 1
    return tail


@numba.njit(cache=True)
def _brandes(n, m, indptr, indices, eids):
    bc = np.zeros(m)
    dist = np.empty(n, dtype=np.int64)
    order = np.empty(n, dtype=np.int64)
    sigma = np.empty(n)
    delta = np.empty(n)
    for s in range(n):
        reached = _bfs(s, n, indptr, indices, dist, order)
        for i in range(n):
            sigma[i] = 0.0
            delta[i] = 0.0
        sigma[s] = 1.0
        for i in range(reached):
            v = order[i]
            for k in range(indptr[v], indptr[v + 1]):
                w = indices[k]
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
        for i in range(reached - 1, 0, -1):
            w = order[i]
            for k in range(indptr[w], indptr[w + 1]):
                v = indices[k]
                if dist[v] == dist[w] - 1:
                    c = sigma[v] / sigma[w] * (1.0 + delta[w])
                    bc[eids[k]] += c
                    delta[v] += c
    return 0.5 * bc


def edge_betweenness(g):
    """Betweenness of every edge, indexed like ``g.edges``.

    Each unordered pair ``{s, t}`` contributes total weight one, shared
    equally among its shortest paths.
    """
    if not g.is_connected():
        raise ParameterError("graph", "edge betweenness needs a connected graph")
    return _brandes(g.n, g.m, g.indptr, g.indices, g.edge_ids)


def relative_loads(g, betweenness=None):
    """``ell_i = B_i / mean(B)``."""
    b = edge_betweenness(g) if betweenness is None else np.asarray(betweenness, dtype=float)
    return b / b.mean()


def pair_distance_sum(g):
    """``sum_{s<t} d(s, t)`` (the betweenness sum rule)."""
    dist = np.empty(g.n, dtype=np.int64)
    order = np.empty(g.n, dtype=np.int64)
    total = 0
    for s in range(g.n):
        _bfs(s, g.n, g.indptr, g.indices, dist, order)
        total += int(dist[dist > 0].sum())
    return total // 2


# ------------------------------------------------------------ load exponent


@dataclass(frozen=True)
class PowerLawFit:
    exponent: float
    stderr: float
    xmin: float
    n_tail: int
    ks: float


def _hill(x, xmin):
    tail = x[x >= xmin]
    s = np.log(tail / xmin).sum()
    alpha = 1.0 + tail.size / s
    return alpha, tail


def fit_load_exponent(loads, min_samples=1000, min_tail=50):
    """Maximum-likelihood exponent of the density tail ``~ ell^-(2 + delta)``.

    The lower cutoff minimizes the Kolmogorov-Smirnov distance between the
    tail sample and the fitted power law.
    """
    x = np.sort(np.asarray(loads, dtype=float))
    if x.size < min_samples:
        raise InsufficientDataError(f"need at least {min_samples} loads, got {x.size}")
    cands = np.unique(x)[:-1]
    if cands.size == 0:
        raise InsufficientDataError("all loads are equal; no tail to fit")
    # Limit candidates so at least min_tail points remain above the cutoff.
    cands = cands[np.searchsorted(x, cands, side="left") <= x.size - min_tail]
    if cands.size > 400:
        cands = np.unique(np.quantile(cands, np.linspace(0, 1, 400), method="nearest"))
    best = None
    for xmin in cands:
        alpha, tail = _hill(x, xmin)
        if not np.isfinite(alpha):
            continue
        emp = np.arange(1, tail.size + 1) / tail.size
        model = 1.0 - (tail / xmin) ** (1.0 - alpha)
        d = float(np.max(np.abs(emp - model)))
        if best is None or d < best[0]:
            best = (d, xmin, alpha, tail.size)
    if best is None:
        raise InsufficientDataError("no usable power-law tail")
    d, xmin, alpha, k = best
    return PowerLawFit(float(alpha), float((alpha - 1.0) / math.sqrt(k)), float(xmin), int(k), d)


# --------------------------------------------------------- affected pairs


@numba.njit(cache=True)
def _affected_pairs(n, indptr, indices, du, dv):
    dist = np.empty(n, dtype=np.int64)
    order = np.empty(n, dtype=np.int64)
    count = 0
    for s in range(n):
        _bfs(s, n, indptr, indices, dist, order)
        for t in range(s + 1, n):
            d = dist[t]
            if du[s] + 1 + dv[t] == d or dv[s] + 1 + du[t] == d:
                count += 1
    return count


def affected_paths_fraction(g, edge):
    """Fraction of unordered node pairs with at least one shortest path through ``edge``."""
    u, v = (int(edge[0]), int(edge[1])) if not np.isscalar(edge) else tuple(g.edges[int(edge)])
    g.edge_index(u, v)
    if not g.is_connected():
        raise ParameterError("graph", "affected-path fractions need a connected graph")
    du = np.empty(g.n, dtype=np.int64)
    dv = np.empty(g.n, dtype=np.int64)
    order = np.empty(g.n, dtype=np.int64)
    _bfs(u, g.n, g.indptr, g.indices, du, order)
    _bfs(v, g.n, g.indptr, g.indices, dv, order)
    count = _affected_pairs(g.n, g.indptr, g.indices, du, dv)
    return count / (g.n * (g.n - 1) / 2)


# ------------------------------------------------------------------------ I/O


def read_edge_list(path):
    """Whitespace-separated ``u v`` pairs, 0-based; ``#`` starts a comment."""
    rows = []
    with open(path) as fh:
        for ln, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ParameterError("edge_list", f"line {ln}: expected 'u v'")
            rows.append((int(parts[0]), int(parts[1])))
    n = 1 + max(max(r) for r in rows) if rows else 0
    return Graph.from_edges(n, rows)


def write_edge_list(g, path):
    with open(path, "w") as fh:
        for u, v in g.edges:
            fh.write(f"{u} {v}\n")


def loads_csv(g, betweenness, path=None):
    """CSV rows ``u, v, B, ell`` for every edge."""
    ell = relative_loads(g, betweenness)
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["u", "v", "B", "ell"])
    for (u, v), b, l in zip(g.edges, betweenness, ell):
        wr.writerow([int(u), int(v), repr(float(b)), repr(float(l))])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text
