"""Graph and point-cloud inputs: deterministic generators plus clique machinery.

Vertices are labeled 0..n-1 and vertex subsets are encoded as Python int bit
masks (bit v set <=> vertex v in the subset).  Everything here is pure: the
random generator takes an explicit seed and uses NumPy's PCG64 stream, so
Erdos-Renyi graphs are bit-reproducible across platforms.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations

import numpy as np

from .errors import DeskScaleError

# Bit-mask encodings cap the exact/simulation paths; the resource estimator
# works from plain counts and has no such limit.
MAX_VERTICES = 64


def bit_indices(mask: int) -> list[int]:
    """Vertices of a bit mask in ascending order."""
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph on vertices 0..n-1.

    ``edges`` is kept as a sorted tuple of (i, j) pairs with i < j; this is
    the canonical form used for hashing, JSON output, and reproducibility.
    """

    n: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("vertex count must be nonnegative")
        if self.n > MAX_VERTICES:
            raise DeskScaleError(
                f"graph has n={self.n} vertices; bit-mask paths support at most {MAX_VERTICES}"
            )
        canon = tuple(sorted(tuple(e) for e in self.edges))
        seen = set()
        for i, j in canon:
            if not (0 <= i < j < self.n):
                raise ValueError(f"edge ({i},{j}) invalid for n={self.n}")
            if (i, j) in seen:
                raise ValueError(f"duplicate edge ({i},{j})")
            seen.add((i, j))
        object.__setattr__(self, "edges", canon)

    @classmethod
    def from_edges(cls, n: int, pairs) -> "Graph":
        return cls(n, tuple((min(i, j), max(i, j)) for i, j in pairs))

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @cached_property
    def adjacency(self) -> tuple[int, ...]:
        """Neighbor bit mask per vertex."""
        adj = [0] * self.n
        for i, j in self.edges:
            adj[i] |= 1 << j
            adj[j] |= 1 << i
        return tuple(adj)

    def has_edge(self, i: int, j: int) -> bool:
        if i == j:
            return False
        return bool(self.adjacency[i] >> j & 1)


@dataclass(frozen=True)
class PointCloud:
    """Finite 2-D point set."""

    points: tuple[tuple[float, float], ...]

    def __post_init__(self):
        for x, y in self.points:
            if not (math.isfinite(x) and math.isfinite(y)):
                raise ValueError("point coordinates must be finite")

    @property
    def n(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class CliqueComplex:
    """Per-size sorted clique lists of a graph (the chain bases).

    ``cliques[s]`` holds every s-vertex clique as a bit mask, in strictly
    increasing mask order, for s = 1 .. k_max + 1.  Downward closure holds by
    construction: every (s-1)-subset of a listed s-clique is itself a clique.
    """

    n: int
    k_max: int
    cliques: dict[int, tuple[int, ...]] = field(repr=False)

    def basis(self, size: int) -> tuple[int, ...]:
        """Sorted clique list for a given clique size (empty if none)."""
        return self.cliques.get(size, ())

    def count(self, size: int) -> int:
        return len(self.basis(size))


# ---------------------------------------------------------------------------
# generators


def gen_kpartite(m: int, k: int) -> Graph:
    """Complete k-partite graph K(m,k): k clusters of m vertices each.

    Vertices i and j are adjacent iff they sit in different clusters
    (i//m != j//m), giving C(k,2)*m^2 edges on n = m*k vertices.
    """
    if m < 1 or k < 1:
        raise ValueError("cluster size and cluster count must both be >= 1")
    n = m * k
    if n > MAX_VERTICES:
        raise DeskScaleError(f"K({m},{k}) needs n={n} vertices; limit is {MAX_VERTICES}")
    edges = [(i, j) for i in range(n) for j in range(i + 1, n) if i // m != j // m]
    return Graph(n, tuple(edges))


def gen_erdos_renyi(n: int, p: float, seed: int) -> Graph:
    """G(n, p): each of the C(n,2) edges present independently with probability p.

    Deterministic given ``seed``: pairs are visited in lexicographic order and
    compared against a NumPy PCG64 uniform stream.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"edge probability {p} outside [0, 1]")
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    rng = np.random.default_rng(seed)
    draws = rng.random(len(pairs))
    edges = tuple(pair for pair, u in zip(pairs, draws) if u < p)
    return Graph(n, edges)


def gen_rips_points(n: int, k: int) -> PointCloud:
    """Rotated two-column point set with large clique-complex Betti number.

    With m = n/(2k), theta = pi/k and offset delta = n^-4, the base sector
    holds columns x = +1/2 and x = -1/2 with points at heights i*delta for
    i = 1..m; sectors j = 1..k-1 are copies rotated by j*theta about the
    origin.  The loop bound for point indices is m (the per-column count),
    not k.
    """
    if n < 2 or k < 1:
        raise ValueError("need n >= 2 points and k >= 1 sectors")
    if n % (2 * k) != 0:
        raise ValueError(f"2k = {2 * k} must divide n = {n}")
    m = n // (2 * k)
    theta = math.pi / k
    delta = float(n) ** -4
    base = [(0.5, i * delta) for i in range(1, m + 1)]
    base += [(-0.5, i * delta) for i in range(1, m + 1)]
    pts: list[tuple[float, float]] = []
    for j in range(k):
        c, s = math.cos(j * theta), math.sin(j * theta)
        pts.extend((c * x - s * y, s * x + c * y) for x, y in base)
    return PointCloud(tuple(pts))


def rips_graph(points: PointCloud, threshold: float) -> Graph:
    """Distance graph: edge iff Euclidean distance <= threshold (closed).

    The comparison is done on squared distances in double precision with no
    tolerance, so a pair at distance exactly equal to the threshold gets an
    edge.
    """
    if threshold < 0:
        raise ValueError("threshold must be nonnegative")
    pts = points.points
    n = len(pts)
    if n > MAX_VERTICES:
        raise DeskScaleError(f"point cloud has {n} points; limit is {MAX_VERTICES}")
    t2 = threshold * threshold
    edges = []
    for i in range(n):
        xi, yi = pts[i]
        for j in range(i + 1, n):
            dx = pts[j][0] - xi
            dy = pts[j][1] - yi
            if dx * dx + dy * dy <= t2:
                edges.append((i, j))
    return Graph(n, tuple(edges))


# ---------------------------------------------------------------------------
# cliques


def is_clique(g: Graph, subset: int) -> bool:
    """True iff every pair inside the subset is an edge (singletons/empty: True)."""
    if subset >> g.n:
        raise ValueError("subset mask has bits outside 0..n-1")
    adj = g.adjacency
    rest = subset
    while rest:
        low = rest & -rest
        v = low.bit_length() - 1
        rest ^= low
        # every remaining member must neighbor v
        if rest & ~adj[v]:
            return False
    return True


def enumerate_cliques(g: Graph, s: int) -> list[int]:
    """All s-vertex cliques of g as bit masks, in strictly increasing order.

    Recursive extension over sorted candidate sets: each clique is grown only
    by vertices larger than its current maximum, so every clique is produced
    exactly once and the output order is deterministic.
    """
    if s < 1:
        raise ValueError("clique size must be >= 1")
    if s > g.n:
        return []
    adj = g.adjacency
    out: list[int] = []
    above = [~((1 << (v + 1)) - 1) for v in range(g.n)]

    def extend(mask: int, cand: int, size: int) -> None:
        if size == s:
            out.append(mask)
            return
        rest = cand
        while rest:
            low = rest & -rest
            v = low.bit_length() - 1
            rest ^= low
            extend(mask | low, cand & adj[v] & above[v], size + 1)

    for v in range(g.n):
        extend(1 << v, adj[v] & above[v], 1)
    out.sort()
    return out


def build_clique_complex(g: Graph, k_max: int) -> CliqueComplex:
    """Clique lists for sizes 1..k_max+1 (simplices of dimension <= k_max)."""
    if k_max < 0:
        raise ValueError("k_max must be nonnegative")
    cliques = {}
    for s in range(1, k_max + 2):
        cl = enumerate_cliques(g, s)
        cliques[s] = tuple(cl)
        if not cl:
            # no larger cliques can exist either; record empty levels anyway
            for t in range(s + 1, k_max + 2):
                cliques[t] = ()
            break
    return CliqueComplex(g.n, k_max, cliques)


def brute_force_cliques(g: Graph, s: int) -> list[int]:
    """Subset-filter oracle for enumerate_cliques (n <= 12 scale)."""
    masks = []
    for combo in combinations(range(g.n), s):
        mask = 0
        for v in combo:
            mask |= 1 << v
        if is_clique(g, mask):
            masks.append(mask)
    masks.sort()
    return masks


# ---------------------------------------------------------------------------
# canonical JSON form (CLI contract)


def graph_to_json(g: Graph) -> str:
    """Canonical graph JSON: {"n": int, "edges": [[i,j],...]}, edges sorted."""
    payload = {"n": g.n, "edges": [[i, j] for i, j in g.edges]}
    return json.dumps(payload, sort_keys=True, separators=(", ", ": "))


def graph_from_json(text: str) -> Graph:
    data = json.loads(text)
    try:
        n = int(data["n"])
        edges = tuple((int(i), int(j)) for i, j in data["edges"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed graph JSON: {exc}") from exc
    return Graph.from_edges(n, edges)
