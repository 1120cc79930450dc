"""Uniform-grid nearest-neighbour index over the unit square."""

import math

import numba
import numpy as np


@numba.njit(cache=True)
def _build(points, G):
    n = points.shape[0]
    cell = np.empty(n, dtype=np.int64)
    for i in range(n):
        cx = min(int(points[i, 0] * G), G - 1)
        cy = min(int(points[i, 1] * G), G - 1)
        cx = max(cx, 0)
        cy = max(cy, 0)
        cell[i] = cx * G + cy
    start = np.zeros(G * G + 1, dtype=np.int64)
    for i in range(n):
        start[cell[i] + 1] += 1
    for c in range(G * G):
        start[c + 1] += start[c]
    fill = start[:-1].copy()
    order = np.empty(n, dtype=np.int64)
    # points are visited in index order, so each bucket lists ids ascending
    for i in range(n):
        order[fill[cell[i]]] = i
        fill[cell[i]] += 1
    return start, order


@numba.njit(cache=True)
def _query(points, start, order, G, queries):
    q = queries.shape[0]
    best_idx = np.full(q, -1, dtype=np.int64)
    best_d2 = np.full(q, np.inf)
    g = 1.0 / G
    for a in range(q):
        x = queries[a, 0]
        y = queries[a, 1]
        cx = max(min(int(x * G), G - 1), 0)
        cy = max(min(int(y * G), G - 1), 0)
        bd = np.inf
        bi = -1
        r = 0
        while r <= G:
            for ix in range(cx - r, cx + r + 1):
                if ix < 0 or ix >= G:
                    continue
                edge_x = ix == cx - r or ix == cx + r
                for iy in range(cy - r, cy + r + 1):
                    if iy < 0 or iy >= G:
                        continue
                    if not edge_x and iy != cy - r and iy != cy + r:
                        continue
                    c = ix * G + iy
                    for p in range(start[c], start[c + 1]):
                        j = order[p]
                        dx = points[j, 0] - x
                        dy = points[j, 1] - y
                        d2 = dx * dx + dy * dy
                        if d2 < bd or (d2 == bd and j < bi):
                            bd = d2
                            bi = j
            # any point beyond ring r is at least r*g away
            if bi >= 0 and bd <= (r * g) * (r * g):
                break
            r += 1
        best_idx[a] = bi
        best_d2[a] = bd
    return best_idx, best_d2


class GridIndex:
    """Points bucketed into a G x G grid; ``nearest`` does an expanding-ring search.

    Ties in distance go to the lower point index. ``cell_side`` defaults to
    about one point per cell.
    """

    def __init__(self, points, cell_side=None):
        self.points = np.ascontiguousarray(points, dtype=np.float64)
        n = len(self.points)
        if cell_side is None:
            G = max(1, int(math.sqrt(n)))
        else:
            G = max(1, int(math.ceil(1.0 / cell_side)))
        self.G = G
        self.start, self.order = _build(self.points, G)

    def nearest(self, queries):
        """``(index, distance)`` of the nearest indexed point for each query row."""
        queries = np.ascontiguousarray(queries, dtype=np.float64).reshape(-1, 2)
        if len(self.points) == 0:
            return np.full(len(queries), -1, dtype=np.int64), np.full(len(queries), np.inf)
        idx, d2 = _query(self.points, self.start, self.order, self.G, queries)
        return idx, np.sqrt(d2)


class NeighborTable:
    """For fixed positions, each point's ``K`` nearest other points in (distance, id) order.

    Used for static networks, where the nearest receiver of a sender is the
    first entry of its row that is not itself a sender.
    """

    def __init__(self, points, K=24):
        from scipy.spatial import cKDTree

        self.points = np.ascontiguousarray(points, dtype=np.float64)
        n = len(self.points)
        K = min(K, n - 1)
        self.K = K
        if K <= 0:
            self.nbr = np.zeros((n, 0), dtype=np.int64)
            self.dist = np.zeros((n, 0))
            return
        # one extra candidate so exact ties at the K-th distance are still ordered by id
        d, idx = cKDTree(self.points).query(self.points, k=min(K + 2, n))
        self_hit = idx == np.arange(n)[:, None]
        self_hit[~self_hit.any(axis=1), -1] = True
        d = d[~self_hit].reshape(n, -1)
        idx = idx[~self_hit].reshape(n, -1)
        order = _row_lexsort(d, idx)
        rows = np.arange(n)[:, None]
        self.nbr = idx[rows, order][:, :K]
        self.dist = d[rows, order][:, :K]


def _row_lexsort(d, idx):
    out = np.empty_like(idx)
    for i in range(len(d)):
        out[i] = np.lexsort((idx[i], d[i]))
    return out
