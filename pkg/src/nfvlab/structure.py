"""Dependency graph of a linear code and exact/bounded chromatic numbers.

Two generator columns are adjacent when they share a supporting row, in
which case the corresponding servers see statistically dependent noise.
The chromatic number of this graph enters the exponent of the
dependency-graph tail bounds, so small instances are colored exactly
(DSATUR-ordered branch and bound); anything larger falls back to the
analytic upper bounds.
"""

from __future__ import annotations

from dataclasses import dataclass

from .gf2 import BitMatrix

# Exact coloring is exponential; refuse graphs beyond this many vertices.
MAX_EXACT_VERTICES = 24


@dataclass(frozen=True)
class DependencyGraph:
    """Columns of a generator matrix as vertices (0-based), shared-row pairs as edges."""

    vertex_count: int
    edges: frozenset  # frozenset of (i, j) tuples with i < j

    def __post_init__(self):
        for i, j in self.edges:
            if not (0 <= i < j < self.vertex_count):
                raise ValueError(f"edge ({i},{j}) out of range or self-loop")

    def adjacency(self) -> list[set]:
        adj = [set() for _ in range(self.vertex_count)]
        for i, j in self.edges:
            adj[i].add(j)
            adj[j].add(i)
        return adj

    def max_degree(self) -> int:
        if self.vertex_count == 0:
            return 0
        return max(len(a) for a in self.adjacency())

    def induced(self, vertices) -> "DependencyGraph":
        """Induced subgraph, relabeled to 0..len(vertices)-1 in sorted order."""
        vs = sorted(vertices)
        index = {v: i for i, v in enumerate(vs)}
        edges = frozenset(
            (index[i], index[j]) for i, j in self.edges if i in index and j in index
        )
        return DependencyGraph(len(vs), edges)

    def to_edge_list(self) -> str:
        """Edge list export, one 'i j' pair per line, 1-based, sorted."""
        lines = [f"{i + 1} {j + 1}" for i, j in sorted(self.edges)]
        return "\n".join(lines) + ("\n" if lines else "")


def dependency_graph(G: BitMatrix) -> DependencyGraph:
    """Graph on the columns of G with edges between columns sharing a 1-row."""
    cols = [G.column_int(j) for j in range(G.cols)]
    edges = set()
    for i in range(G.cols):
        for j in range(i + 1, G.cols):
            if cols[i] & cols[j]:
                edges.add((i, j))
    return DependencyGraph(G.cols, frozenset(edges))


@dataclass(frozen=True)
class ColoringResult:
    chromatic_number: int
    coloring: tuple  # color of each vertex, 0-based colors
    method: str  # "exact" or "greedy-upper-bound"

    def __post_init__(self):
        if self.coloring and len(set(self.coloring)) != self.chromatic_number \
                and self.method == "exact":
            raise ValueError("exact coloring must use exactly chromatic_number colors")


def _greedy_dsatur(adj, n):
    """Greedy DSATUR coloring; returns list of colors (a valid upper bound)."""
    colors = [-1] * n
    saturation = [set() for _ in range(n)]
    for _ in range(n):
        # Max saturation, ties broken by lowest vertex index.
        best, best_sat = -1, -1
        for v in range(n):
            if colors[v] < 0 and len(saturation[v]) > best_sat:
                best, best_sat = v, len(saturation[v])
        c = 0
        while c in saturation[best]:
            c += 1
        colors[best] = c
        for u in adj[best]:
            saturation[u].add(c)
    return colors


def _greedy_clique(adj, n):
    """A (not necessarily maximum) clique found greedily; lower-bounds chi."""
    order = sorted(range(n), key=lambda v: (-len(adj[v]), v))
    clique = []
    for v in order:
        if all(v in adj[u] for u in clique):
            clique.append(v)
    return clique


def chromatic_number(graph: DependencyGraph, mode: str = "exact") -> ColoringResult:
    """Color the graph.

    mode="exact": true chromatic number by DSATUR-ordered branch and bound,
    seeded with a greedy upper bound and a greedy-clique lower bound.
    Vertex budget MAX_EXACT_VERTICES.
    mode="upper": the greedy DSATUR coloring only.
    """
    if mode not in ("exact", "upper"):
        raise ValueError(f"mode must be 'exact' or 'upper', got {mode!r}")
    n = graph.vertex_count
    adj = graph.adjacency()
    greedy = _greedy_dsatur(adj, n)
    if mode == "upper":
        k = max(greedy) + 1 if greedy else 0
        return ColoringResult(k, tuple(greedy), "greedy-upper-bound")
    if n > MAX_EXACT_VERTICES:
        raise ValueError(
            f"exact coloring limited to {MAX_EXACT_VERTICES} vertices, got {n}"
        )

    best_k = max(greedy) + 1 if greedy else 0
    best_coloring = list(greedy)
    lower = len(_greedy_clique(adj, n))

    colors = [-1] * n

    def extend(colored, used):
        nonlocal best_k, best_coloring
        if used >= best_k:
            return
        if colored == n:
            best_k = used
            best_coloring = list(colors)
            return
        # DSATUR choice: max saturation, ties by lowest vertex index.
        best_v, best_sat = -1, -1
        for v in range(n):
            if colors[v] < 0:
                sat = len({colors[u] for u in adj[v] if colors[u] >= 0})
                if sat > best_sat:
                    best_v, best_sat = v, sat
        v = best_v
        forbidden = {colors[u] for u in adj[v] if colors[u] >= 0}
        for c in range(used):
            if c not in forbidden:
                colors[v] = c
                extend(colored + 1, used)
                colors[v] = -1
                if best_k == lower:
                    return
        if used + 1 < best_k:
            colors[v] = used
            extend(colored + 1, used + 1)
            colors[v] = -1

    if best_k > lower:
        extend(0, 0)
    return ColoringResult(best_k, tuple(best_coloring), "exact")


@dataclass(frozen=True)
class ChromaticBounds:
    """Analytic upper bounds on the chromatic number of a code's dependency graph."""

    brooks: int  # max degree + 1
    weight_bound: int  # min{N, alpha_c * (alpha_r - 1) + 1} from row/column weights


def chromatic_bounds(G: BitMatrix) -> ChromaticBounds:
    """Degree bound and row/column-weight bound, both valid upper bounds on chi.

    A column of weight alpha_c meets at most alpha_c * (alpha_r - 1) other
    columns through its supporting rows, which bounds the maximum degree.
    """
    graph = dependency_graph(G)
    alpha_r = max(G.row_weights())
    alpha_c = max(G.column_weights())
    weight_bound = min(G.cols, alpha_c * (alpha_r - 1) + 1)
    return ChromaticBounds(brooks=graph.max_degree() + 1, weight_bound=weight_bound)


def resolve_chromatic_number(G: BitMatrix) -> tuple[int, str]:
    """Best available upper bound on chi: exact when feasible, else min of bounds.

    Returns (value, source) with source in {"exact", "bound"}.  Any valid
    upper bound keeps the tail bounds valid because their exponents are
    monotone in chi.
    """
    graph = dependency_graph(G)
    if graph.vertex_count <= MAX_EXACT_VERTICES:
        return chromatic_number(graph, "exact").chromatic_number, "exact"
    b = chromatic_bounds(G)
    return min(b.brooks, b.weight_bound), "bound"
