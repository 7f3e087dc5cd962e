"""Shared test oracles: exhaustive modularity search and graph generators."""

import numpy as np

from hapkit.network import PracticeGraph


def max_q_exhaustive(g: PracticeGraph, resolution: float = 1.0) -> float:
    """Maximum modularity over all set partitions, by direct enumeration.

    Recursion over restricted growth strings with incremental community
    statistics; independent of the Louvain implementation it checks.
    """
    nodes = list(g.nodes)
    n = len(nodes)
    m = g.n_edges
    if m == 0:
        raise ValueError("undefined on zero-edge graphs")
    index = {node: i for i, node in enumerate(nodes)}
    adj = [[] for _ in range(n)]
    deg = [0] * n
    for a, b in g.edges:
        ia, ib = index[a], index[b]
        adj[ia].append(ib)
        adj[ib].append(ia)
        deg[ia] += 1
        deg[ib] += 1

    labels = [0] * n
    dsum = [0.0] * n  # per-community degree sums
    intra = [0.0] * n  # per-community internal edge counts
    best = -2.0
    two_m = 2.0 * m

    def rec(i: int, used: int) -> None:
        nonlocal best
        if i == n:
            q = 0.0
            for c in range(used):
                q += intra[c] / m - resolution * (dsum[c] / two_m) ** 2
            if q > best:
                best = q
            return
        for c in range(used + 1):
            gained = sum(1 for j in adj[i] if j < i and labels[j] == c)
            labels[i] = c
            dsum[c] += deg[i]
            intra[c] += gained
            rec(i + 1, max(used, c + 1))
            dsum[c] -= deg[i]
            intra[c] -= gained
        labels[i] = -1

    rec(0, 0)
    return best


def er_graph(n: int, p: float, seed: int) -> PracticeGraph:
    rng = np.random.default_rng(seed)
    nodes = tuple(f"n{i:02d}" for i in range(n))
    edges = tuple(
        (nodes[i], nodes[j])
        for i in range(n)
        for j in range(i + 1, n)
        if rng.random() < p
    )
    return PracticeGraph(nodes=nodes, edges=edges)


def planted_graph(n: int, k: int, seed: int) -> PracticeGraph:
    rng = np.random.default_rng(seed)
    nodes = tuple(f"n{i:02d}" for i in range(n))
    lab = [i % k for i in range(n)]
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            p = 0.85 if lab[i] == lab[j] else 0.15
            if rng.random() < p:
                edges.append((nodes[i], nodes[j]))
    return PracticeGraph(nodes=nodes, edges=tuple(edges))


def random_graph_batch(master_seed: int, count: int = 50) -> list[PracticeGraph]:
    """Mixed random graphs (ER at several densities plus planted), 4-10 nodes."""
    rng = np.random.default_rng(master_seed)
    out = []
    while len(out) < count:
        sub = int(rng.integers(0, 2**31))
        kind = len(out) % 4
        n = 4 + len(out) % 7
        if kind == 0:
            g = er_graph(n, 0.3, sub)
        elif kind == 1:
            g = er_graph(n, 0.45, sub)
        elif kind == 2:
            g = er_graph(n, 0.6, sub)
        else:
            g = planted_graph(max(n, 6), 2 + n % 2, sub)
        if g.n_edges > 0:
            out.append(g)
    return out
