"""Hot numeric kernels (numba when available, interpreted otherwise)."""

from __future__ import annotations

import heapq

import numpy as np

from ._accel import NUMBA_ENABLED, maybe_njit

__all__ = ["NUMBA_ENABLED", "pairwise_distances", "dijkstra_csr"]


@maybe_njit
def pairwise_distances(points):
    """Euclidean distance matrix for an (n, 3) array."""
    n = points.shape[0]
    out = np.zeros((n, n), dtype=np.float64)
    for i in range(n):
        for j in range(i + 1, n):
            dx = points[i, 0] - points[j, 0]
            dy = points[i, 1] - points[j, 1]
            dz = points[i, 2] - points[j, 2]
            d = np.sqrt(dx * dx + dy * dy + dz * dz)
            out[i, j] = d
            out[j, i] = d
    return out


@maybe_njit
def dijkstra_csr(indptr, adj_links, link_to, weights, edge_ok, vertex_ok, sources, source_dist):
    """Multi-source Dijkstra over a CSR link index.

    Vertex indices must already be ordered by the tie-break key; on equal
    distance the vertex with the smaller index is settled first and a vertex
    keeps the first predecessor that reached it.  Returns ``(dist, pred_link)``
    with ``inf`` / ``-1`` for unreachable vertices.
    """
    nv = indptr.shape[0] - 1
    dist = np.full(nv, np.inf)
    pred = np.full(nv, -1, dtype=np.int64)
    done = np.zeros(nv, dtype=np.bool_)
    heap = [(0.0, np.int64(0))]
    heap.pop()
    for i in range(sources.shape[0]):
        s = sources[i]
        if vertex_ok[s] and source_dist[i] < dist[s]:
            dist[s] = source_dist[i]
            heapq.heappush(heap, (source_dist[i], np.int64(s)))
    while len(heap) > 0:
        d, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        for p in range(indptr[u], indptr[u + 1]):
            e = adj_links[p]
            if not edge_ok[e]:
                continue
            v = link_to[e]
            if done[v] or not vertex_ok[v]:
                continue
            nd = d + weights[e]
            if nd < dist[v]:
                dist[v] = nd
                pred[v] = e
                heapq.heappush(heap, (nd, np.int64(v)))
    return dist, pred
