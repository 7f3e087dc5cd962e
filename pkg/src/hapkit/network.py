"""Same-practice graph: construction, pruning, communities, degree metrics.

Same verdicts become edges of a simple graph.  Because the decision stage
errs toward spurious "same" edges rather than missed ones, a fixed
fraction of edges is trimmed by uniqueness: an edge scores high when both
endpoints connect to few other nodes, so low-uniqueness edges (between
promiscuous nodes) go first, ties included.  Louvain then finds the
maximum-modularity partition of the survivors, and per-community degree
metrics quantify cohesion within and similarity between communities.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from xml.sax.saxutils import escape, quoteattr

import numpy as np

from .decision import SAME, PairVerdict

Edge = tuple[str, str]


@dataclass(frozen=True, eq=False)
class PracticeGraph:
    """Simple undirected graph over region ids, unit edge weights."""

    nodes: tuple[str, ...]
    edges: tuple[Edge, ...]
    uniqueness: dict[Edge, float] | None = field(default=None)

    def __post_init__(self):
        for a, b in self.edges:
            if a == b:
                raise ValueError(f"self-loop on {a}")
            if a > b:
                raise ValueError(f"edge ({a}, {b}) not in canonical order")

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def degrees(self) -> dict[str, int]:
        deg = {n: 0 for n in self.nodes}
        for a, b in self.edges:
            deg[a] += 1
            deg[b] += 1
        return deg


@dataclass(frozen=True)
class Partition:
    """Community assignment with its modularity at a given resolution."""

    assignment: dict[str, int]
    modularity_q: float
    resolution: float = 1.0

    @property
    def n_communities(self) -> int:
        return len(set(self.assignment.values()))

    def communities(self) -> dict[int, list[str]]:
        out: dict[int, list[str]] = {}
        for node in sorted(self.assignment):
            out.setdefault(self.assignment[node], []).append(node)
        return out


@dataclass(frozen=True)
class DegreeReport:
    """Normalized community degree metrics (unit edge weights).

    ``k_int[c]`` is the intra-community edge density (undefined for
    singleton communities); ``k_ext_pair[(c, c')]`` the cross density
    between two communities; ``k_ext_total[c]`` the density between the
    community and everything outside it.
    """

    k_int: dict[int, float | None]
    k_ext_pair: dict[tuple[int, int], float]
    k_ext_total: dict[int, float | None]


def edge_key(a: str, b: str) -> Edge:
    return (a, b) if a <= b else (b, a)


# ---------------------------------------------------------------------------
# construction and pruning


def build_graph(verdicts: list[PairVerdict]) -> PracticeGraph:
    """Edges for Same verdicts; all regions kept as nodes, isolated or not."""
    nodes: set[str] = set()
    seen: dict[Edge, str] = {}
    edges: set[Edge] = set()
    for v in verdicts:
        nodes.add(v.region_a)
        nodes.add(v.region_b)
        key = edge_key(v.region_a, v.region_b)
        if key in seen and seen[key] != v.verdict:
            raise ValueError(f"conflicting verdicts for pair {v.pair_id}")
        seen[key] = v.verdict
        if v.verdict == SAME:
            edges.add(key)
    return PracticeGraph(nodes=tuple(sorted(nodes)), edges=tuple(sorted(edges)))


def compute_uniqueness(g: PracticeGraph) -> dict[Edge, float]:
    """W per edge: mean over both endpoints of (max - degree) / max."""
    max_deg = g.n_nodes - 1
    if max_deg <= 0:
        return {}
    deg = g.degrees()
    return {
        (a, b): 0.5 * ((max_deg - deg[a]) / max_deg + (max_deg - deg[b]) / max_deg)
        for a, b in g.edges
    }


def prune_edges(g: PracticeGraph, fraction: float = 0.09) -> PracticeGraph:
    """Remove the lowest-uniqueness fraction of edges, ties included.

    Uniqueness is computed on the pre-pruning graph.  With c =
    ceil(fraction * |E|), every edge whose W is <= the c-th smallest W is
    dropped.  If the tie rule would take more than half the edges, exactly
    the c lowest (ties broken by edge id) are dropped instead, with a
    warning; survivors keep equal weight.
    """
    if not 0.0 <= fraction < 1.0:
        raise ValueError(f"fraction must be in [0, 1), got {fraction}")
    if g.n_edges == 0:
        return PracticeGraph(nodes=g.nodes, edges=(), uniqueness={})
    w = compute_uniqueness(g)
    cut = math.ceil(fraction * g.n_edges)
    threshold = sorted(w.values())[cut - 1]
    doomed = {e for e, val in w.items() if val <= threshold}
    if 2 * len(doomed) > g.n_edges:
        warnings.warn(
            f"uniqueness ties would remove {len(doomed)}/{g.n_edges} edges; "
            f"falling back to exactly {cut} lowest by edge id",
            stacklevel=2,
        )
        doomed = set(sorted(w, key=lambda e: (w[e], e))[:cut])
    survivors = tuple(e for e in g.edges if e not in doomed)
    return PracticeGraph(nodes=g.nodes, edges=survivors, uniqueness=w)


# ---------------------------------------------------------------------------
# modularity


def modularity(
    g: PracticeGraph, partition: Partition | dict[str, int], resolution: float = 1.0
) -> float | None:
    """Newman-Girvan Q with a resolution factor on the null term.

    Returns None for a graph with no edges (undefined: a completely
    disconnected network has no internal/expected edge fractions).
    """
    assignment = partition.assignment if isinstance(partition, Partition) else partition
    missing = set(g.nodes) - set(assignment)
    if missing:
        raise ValueError(f"partition misses nodes: {sorted(missing)[:5]}")
    m = g.n_edges
    if m == 0:
        return None
    deg = g.degrees()
    intra: dict[int, int] = {}
    dsum: dict[int, int] = {}
    for node in g.nodes:
        c = assignment[node]
        dsum[c] = dsum.get(c, 0) + deg[node]
    for a, b in g.edges:
        if assignment[a] == assignment[b]:
            c = assignment[a]
            intra[c] = intra.get(c, 0) + 1
    q = 0.0
    for c, d in dsum.items():
        q += intra.get(c, 0) / m - resolution * (d / (2.0 * m)) ** 2
    return q


# ---------------------------------------------------------------------------
# Louvain


#: Independent Louvain runs per call; the best-Q result is kept.  Greedy
#: local moves can stall in a local optimum, and restarting from different
#: visit orders is the standard mitigation.  Cheap at the graph sizes this
#: toolkit sees (tens of nodes).
LOUVAIN_RESTARTS = 16


def louvain_partition(
    g: PracticeGraph,
    resolution: float = 1.0,
    seed: int = 0,
    restarts: int = LOUVAIN_RESTARTS,
) -> Partition:
    """Two-phase Louvain maximization of modularity, deterministic by seed.

    Each run sweeps the nodes in a seed-shuffled order (reshuffled per
    sweep) until no single-node move improves Q, ties resolved toward the
    lowest community id, then collapses communities into supernodes and
    repeats.  Several restarts with distinct orders run and the highest-Q
    partition wins (first found on exact ties).  Final communities are
    renumbered by their smallest member region id.
    """
    if g.n_edges == 0:
        raise ValueError("community detection is undefined on a zero-edge graph")
    if restarts < 1:
        raise ValueError("restarts must be >= 1")

    index = {node: i for i, node in enumerate(g.nodes)}
    n = g.n_nodes
    base_adj: list[dict[int, float]] = [dict() for _ in range(n)]
    for a, b in g.edges:
        ia, ib = index[a], index[b]
        base_adj[ia][ib] = base_adj[ia].get(ib, 0.0) + 1.0
        base_adj[ib][ia] = base_adj[ib].get(ia, 0.0) + 1.0
    two_m = 2.0 * g.n_edges

    best_membership: list[int] | None = None
    best_q = -np.inf
    for restart in range(restarts):
        rng = np.random.default_rng(np.random.SeedSequence([seed, restart]))
        adj = [dict(nb) for nb in base_adj]
        membership = list(range(n))
        while True:
            improved, labels = _local_moves(adj, two_m, resolution, rng)
            membership = [labels[c] for c in membership]
            if not improved:
                break
            adj = _aggregate(adj, labels)
        q = modularity(g, dict(zip(g.nodes, membership)), resolution)
        if q > best_q:
            best_q, best_membership = q, membership

    # renumber by smallest member region id
    by_comm: dict[int, str] = {}
    for node, c in zip(g.nodes, best_membership):
        if c not in by_comm or node < by_comm[c]:
            by_comm[c] = node
    order = sorted(by_comm, key=lambda c: by_comm[c])
    renumber = {c: i for i, c in enumerate(order)}
    assignment = {node: renumber[c] for node, c in zip(g.nodes, best_membership)}
    return Partition(
        assignment=assignment,
        modularity_q=modularity(g, assignment, resolution),
        resolution=resolution,
    )


def _local_moves(
    adj: list[dict[int, float]],
    two_m: float,
    resolution: float,
    rng: np.random.Generator,
) -> tuple[bool, list[int]]:
    """Phase one: greedy single-node moves until none improves Q.

    Returns (any_move_happened, community label per node).  Labels are
    community ids in 0..n-1 space, compacted before return.
    """
    n = len(adj)
    comm = list(range(n))
    # self-loop weight counts twice toward a node's degree
    k = []
    for i, nb in enumerate(adj):
        k.append(sum(w * (2.0 if j == i else 1.0) for j, w in nb.items()))
    sigma_tot = k[:]  # total degree per community

    moved_any = False
    tol = 1e-12
    while True:
        moved = 0
        for i in rng.permutation(n):
            ci = comm[i]
            links: dict[int, float] = {}
            for j, w in adj[i].items():
                if j != i:
                    links[comm[j]] = links.get(comm[j], 0.0) + w
            # gains are evaluated with i detached from its community
            sigma_tot[ci] -= k[i]
            base = links.get(ci, 0.0) - resolution * k[i] * sigma_tot[ci] / two_m
            best_c, best_gain = ci, tol
            # ascending community ids: the lowest id wins gain ties
            for c in sorted(links):
                if c == ci:
                    continue
                gain = links[c] - resolution * k[i] * sigma_tot[c] / two_m - base
                if gain > best_gain:
                    best_c, best_gain = c, gain
            comm[i] = best_c
            sigma_tot[best_c] += k[i]
            if best_c != ci:
                moved += 1
        if moved == 0:
            break
        moved_any = True

    compact = {c: idx for idx, c in enumerate(sorted(set(comm)))}
    return moved_any, [compact[c] for c in comm]


def _aggregate(adj: list[dict[int, float]], labels: list[int]) -> list[dict[int, float]]:
    """Phase two: collapse communities into supernodes (weights summed)."""
    n_new = max(labels) + 1
    out: list[dict[int, float]] = [dict() for _ in range(n_new)]
    for i, nb in enumerate(adj):
        ci = labels[i]
        for j, w in nb.items():
            cj = labels[j]
            if i == j:
                out[ci][ci] = out[ci].get(ci, 0.0) + w
            elif i < j:
                out[ci][cj] = out[ci].get(cj, 0.0) + w
                if ci != cj:
                    out[cj][ci] = out[cj].get(ci, 0.0) + w
            # i > j handled when visited from the smaller index
        # self-loops within a community from distinct i, j accumulate on (ci, ci)
    return out


# ---------------------------------------------------------------------------
# degree metrics


def degree_report(g: PracticeGraph, partition: Partition) -> DegreeReport:
    """Normalized internal, pairwise-external and total-external degrees."""
    assignment = partition.assignment
    members: dict[int, list[str]] = {}
    for node in g.nodes:
        members.setdefault(assignment[node], []).append(node)
    comms = sorted(members)

    intra: dict[int, int] = {c: 0 for c in comms}
    cross: dict[tuple[int, int], int] = {}
    for a, b in g.edges:
        ca, cb = assignment[a], assignment[b]
        if ca == cb:
            intra[ca] += 1
        else:
            key = (min(ca, cb), max(ca, cb))
            cross[key] = cross.get(key, 0) + 1

    k_int: dict[int, float | None] = {}
    for c in comms:
        size = len(members[c])
        k_int[c] = None if size < 2 else 2.0 * intra[c] / (size * (size - 1))

    k_ext_pair: dict[tuple[int, int], float] = {}
    for i, c in enumerate(comms):
        for c2 in comms[i + 1 :]:
            k_ext_pair[(c, c2)] = cross.get((c, c2), 0) / (
                len(members[c]) * len(members[c2])
            )

    k_ext_total: dict[int, float | None] = {}
    total_nodes = g.n_nodes
    for c in comms:
        size = len(members[c])
        outside = total_nodes - size
        if outside == 0:
            k_ext_total[c] = None
            continue
        crossing = sum(
            w for (c1, c2), w in cross.items() if c1 == c or c2 == c
        )
        k_ext_total[c] = crossing / (size * outside)

    return DegreeReport(k_int=k_int, k_ext_pair=k_ext_pair, k_ext_total=k_ext_total)


# ---------------------------------------------------------------------------
# export


def to_graphml(
    g: PracticeGraph, path: str | Path, partition: Partition | None = None
) -> None:
    """GraphML with community as a node attribute and W as an edge attribute."""
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<graphml xmlns="http://graphml.graphdrawing.org/xmlns">',
        '  <key id="community" for="node" attr.name="community" attr.type="int"/>',
        '  <key id="W" for="edge" attr.name="uniqueness" attr.type="double"/>',
        '  <graph edgedefault="undirected">',
    ]
    for node in g.nodes:
        if partition is not None:
            lines.append(f"    <node id={quoteattr(node)}>")
            lines.append(
                f'      <data key="community">{partition.assignment[node]}</data>'
            )
            lines.append("    </node>")
        else:
            lines.append(f"    <node id={quoteattr(node)}/>")
    for a, b in g.edges:
        w = None if g.uniqueness is None else g.uniqueness.get((a, b))
        if w is None:
            lines.append(f"    <edge source={quoteattr(a)} target={quoteattr(b)}/>")
        else:
            lines.append(f"    <edge source={quoteattr(a)} target={quoteattr(b)}>")
            lines.append(f'      <data key="W">{w!r}</data>')
            lines.append("    </edge>")
    lines += ["  </graph>", "</graphml>", ""]
    Path(path).write_text("\n".join(lines))


def to_dot(
    g: PracticeGraph, path: str | Path, partition: Partition | None = None
) -> None:
    """DOT with the same attributes as the GraphML export."""

    def q(s: str) -> str:
        return '"' + s.replace('"', '\\"') + '"'

    lines = ["graph practice {"]
    for node in g.nodes:
        attrs = ""
        if partition is not None:
            attrs = f" [community={partition.assignment[node]}]"
        lines.append(f"  {q(node)}{attrs};")
    for a, b in g.edges:
        w = None if g.uniqueness is None else g.uniqueness.get((a, b))
        attrs = "" if w is None else f" [W={w!r}]"
        lines.append(f"  {q(a)} -- {q(b)}{attrs};")
    lines += ["}", ""]
    Path(path).write_text("\n".join(lines))
