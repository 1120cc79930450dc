"""Monte Carlo and exact oracles for the walk, placement and graph quantities
behind the spreading-time bounds."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .mobility import MoveKernel, tv_to_uniform

# Calibrated so that P(relative walk hits the boundary before m/(c_h log n)) <= 0.01
# at s=32, n=1024 with 1e5 trials; see calibrate_hitting_constant.
HIT_CONSTANT = 8.0

# per-coordinate step of the relative walk: difference of two uniform{-1,0,1} draws,
# indexed by a uniform draw in 0..8
_DIFF_TABLE = np.array([-2, -1, -1, 0, 0, 0, 1, 1, 2], dtype=np.int64)


class Estimate(NamedTuple):
    mean: float
    stderr: float
    trials: int


def relative_step_pmf():
    """Exact 5x5 pmf of the difference of two independent 9-point moves.

    Entry ``[a + 2, b + 2]`` is P(step = (a, b)).
    """
    one = np.zeros(5)
    for x in (-1, 0, 1):
        for y in (-1, 0, 1):
            one[x - y + 2] += 1.0 / 9.0
    return np.outer(one, one)


def _relative_steps(rng, trials):
    return _DIFF_TABLE[rng.integers(0, 9, size=(2, trials))]


def hitting_time_mc(s, horizon, trials, rng):
    """Estimate P(T_hit < horizon) for the relative walk started at the origin.

    The walk runs on the unbounded lattice and counts as hitting the boundary
    once either coordinate reaches +-s/2 in absolute value.
    """
    half = s / 2.0
    x = np.zeros(trials, dtype=np.int64)
    y = np.zeros(trials, dtype=np.int64)
    hit = np.zeros(trials, dtype=bool)
    for _ in range(1, int(horizon)):
        dx, dy = _relative_steps(rng, trials)
        x += dx
        y += dy
        hit |= (np.abs(x) >= half) | (np.abs(y) >= half)
    p = hit.mean()
    return Estimate(float(p), float(math.sqrt(p * (1 - p) / trials)), trials)


def hitting_horizon(s, n, c_h=HIT_CONSTANT):
    """Slot horizon m / (c_h log n) for an s x s grid."""
    return max(1, int(s * s / (c_h * math.log(n))))


def calibrate_hitting_constant(s, n, trials, rng, target=0.01, grid=None):
    """Smallest c_h on ``grid`` whose hitting estimate is <= ``target``."""
    grid = grid or [1, 1.5, 2, 3, 4, 5, 6, 8, 10, 12, 16, 24, 32]
    for c in grid:
        est = hitting_time_mc(s, hitting_horizon(s, n, c), trials, rng)
        if est.mean <= target:
            return c, est
    raise RuntimeError("no constant on the grid met the target")


def return_count_curve(horizons, trials, rng):
    """Mean number of returns to the origin by each horizon, from shared sample paths."""
    horizons = sorted(int(h) for h in horizons)
    x = np.zeros(trials, dtype=np.int64)
    y = np.zeros(trials, dtype=np.int64)
    returns = np.zeros(trials, dtype=np.int64)
    out = {}
    step = 0
    for h in horizons:
        while step < h:
            dx, dy = _relative_steps(rng, trials)
            x += dx
            y += dy
            returns += (x == 0) & (y == 0)
            step += 1
        out[h] = Estimate(float(returns.mean()), float(returns.std(ddof=1) / math.sqrt(trials)), trials)
    return out


def return_count_mc(horizon, trials, rng):
    """Estimate E[# returns of the relative walk to (0,0) within ``horizon`` steps]."""
    return return_count_curve([horizon], trials, rng)[int(horizon)]


@dataclass
class ConcentrationResult:
    lower: float
    upper: float
    min_count: int
    max_count: int
    violations: int
    trials: int


def concentration_check(b, m, trials, rng, probs=None, n=None):
    """Throw ``b`` balls into ``m`` bins ``trials`` times and count bins outside [b/6m, 7b/3m].

    ``probs`` must stay within 1/(3m) of uniform. When ``n`` is given and
    b <= 32 m log n a warning is issued, since the envelope is then not guaranteed.
    """
    probs = np.full(m, 1.0 / m) if probs is None else np.asarray(probs, dtype=float)
    if len(probs) != m or not math.isclose(probs.sum(), 1.0, rel_tol=1e-9):
        raise ValueError("bin probabilities must be a length-m distribution")
    if (np.abs(probs - 1.0 / m) > 1.0 / (3 * m) + 1e-12).any():
        raise ValueError("bin probabilities stray more than 1/(3m) from uniform")
    if n is not None and b <= 32 * m * math.log(n):
        warnings.warn(f"b={b} <= 32 m log n; the envelope is not guaranteed", stacklevel=2)
    counts = rng.multinomial(b, probs, size=trials)
    lo, hi = b / (6 * m), 7 * b / (3 * m)
    bad = int(((counts < lo) | (counts > hi)).sum())
    return ConcentrationResult(lo, hi, int(counts.min()), int(counts.max()), bad, trials)


@dataclass
class RggGraph:
    """Undirected graph with the degree-normalized walk P_ij = 1/d_i on edges."""

    adjacency: np.ndarray
    positions: np.ndarray = None
    radius: float = None

    @classmethod
    def from_positions(cls, positions, radius):
        positions = np.asarray(positions, dtype=float)
        d = np.sqrt(((positions[:, None] - positions[None]) ** 2).sum(-1))
        adj = (d <= radius) & ~np.eye(len(positions), dtype=bool)
        return cls(adj, positions, radius)

    @classmethod
    def from_edges(cls, n, edges):
        adj = np.zeros((n, n), dtype=bool)
        for i, j in edges:
            adj[i, j] = adj[j, i] = True
        return cls(adj)

    @property
    def n(self):
        return len(self.adjacency)

    @property
    def degrees(self):
        return self.adjacency.sum(axis=1)

    def transition(self):
        deg = self.degrees
        P = self.adjacency.astype(float)
        nz = deg > 0
        P[nz] /= deg[nz, None]
        return P

    def is_connected(self):
        if self.n == 0:
            return True
        seen = np.zeros(self.n, dtype=bool)
        stack = [0]
        seen[0] = True
        while stack:
            i = stack.pop()
            for j in np.flatnonzero(self.adjacency[i] & ~seen):
                seen[j] = True
                stack.append(j)
        return bool(seen.all())


def cycle_graph(n):
    return RggGraph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def complete_graph(n):
    return RggGraph(~np.eye(n, dtype=bool))


def conductance_exact(graph, max_nodes=20, chunk=1 << 16):
    """min over nonempty B with |B| <= n/2 of sum_{i in B, j not in B} P_ij / |B|, by enumeration."""
    n = graph.n
    if n > max_nodes:
        raise ValueError(f"exhaustive conductance limited to {max_nodes} nodes, got {n}")
    if n < 2:
        return 0.0
    P = graph.transition()
    row = P.sum(axis=1)
    bits = 1 << np.arange(n)
    best = math.inf
    for lo in range(1, 1 << n, chunk):
        masks = np.arange(lo, min(lo + chunk, 1 << n))
        X = (masks[:, None] & bits) > 0
        size = X.sum(axis=1)
        keep = size <= n / 2
        if not keep.any():
            continue
        X, size = X[keep].astype(float), size[keep]
        # flow out of B = sum_{i in B} (row_i - sum_{j in B} P_ij)
        inner = ((X @ P) * X).sum(axis=1)
        flow = X @ row - inner
        best = min(best, float((flow / size).min()))
    return max(best, 0.0)


def rgg_radius(n):
    return math.sqrt(32.0 * math.log(n) / n)


def rgg_conductance_scaling(n_values, seeds, radius=rgg_radius):
    """Conductance of uniform random geometric graphs; one row per (n, seed)."""
    from .core import derive_stream

    rows = []
    for n in n_values:
        for seed in seeds:
            pts = derive_stream(seed, f"rgg.{n}").random((n, 2))
            r = radius(n)
            g = RggGraph.from_positions(pts, r)
            connected = g.is_connected()
            phi = conductance_exact(g)
            rows.append({"n": n, "seed": seed, "r": r, "connected": connected,
                         "phi": phi, "phi_over_r": phi / r})
    return rows


def _max_tv(M, metric):
    if metric == "tv":
        return float(tv_to_uniform(M).max())
    return float(np.abs(M - 1.0 / M.shape[1]).max())


def mixing_by_iteration(P, eps, t_max=10 ** 7, metric="tv"):
    """Smallest t with worst-start distance <= eps, stepping every start's distribution one slot at a time."""
    D = np.eye(len(P))
    t = 0
    while _max_tv(D, metric) > eps:
        if t >= t_max:
            raise RuntimeError("mixing time exceeds t_max")
        D = D @ P
        t += 1
    return t


def mixing_by_doubling(P, eps, t_max=10 ** 7, metric="tv"):
    """Same quantity via repeated squaring and a binary search over bits.

    Relies on the worst-start distance being non-increasing in t.
    """
    if _max_tv(np.eye(len(P)), metric) <= eps:
        return 0
    powers = [P]
    while _max_tv(powers[-1], metric) > eps:
        if (1 << len(powers)) > t_max:
            raise RuntimeError("mixing time exceeds t_max")
        powers.append(powers[-1] @ powers[-1])
    # largest t with distance > eps, built greedily from the high bits
    t = 0
    A = np.eye(len(P))
    for j in range(len(powers) - 2, -1, -1):
        B = A @ powers[j]
        if _max_tv(B, metric) > eps:
            A, t = B, t + (1 << j)
    return t + 1


def exact_mixing(s, boundary="torus_wrap", eps=0.25, method="doubling", metric="tv"):
    """Exact mixing time of the subsquare walk on an s x s grid.

    ``metric="tv"`` uses worst-start total variation; ``"sup"`` uses the
    largest per-cell deviation |pi_i(t) - 1/m|.
    """
    if s > 64:
        raise ValueError("exact mixing is limited to s <= 64")
    P = MoveKernel(s, boundary).matrix()
    if method == "doubling":
        return mixing_by_doubling(P, eps, metric=metric)
    if method == "iterate":
        return mixing_by_iteration(P, eps, metric=metric)
    raise ValueError(f"unknown method {method!r}")


def exact_tv_curve(s, boundary, t_max):
    """Worst-start TV distance to uniform for t = 0..t_max."""
    P = MoveKernel(s, boundary).matrix()
    D = np.eye(len(P))
    out = [_max_tv(D, "tv")]
    for _ in range(t_max):
        D = D @ P
        out.append(_max_tv(D, "tv"))
    return np.array(out)


def precision_eps(n, floor=1e-12):
    """Stand-in for eps = n^-10, floored where double precision stops resolving TV."""
    return max(float(n) ** -10, floor)
