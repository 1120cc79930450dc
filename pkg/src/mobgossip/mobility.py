"""Subsquare random-walk mobility on an s x s grid over the unit square."""

from dataclasses import dataclass

import numpy as np

# the nine moves: stay plus the eight neighbouring subsquares
MOVES = np.array([(dx, dy) for dx in (-1, 0, 1) for dy in (-1, 0, 1)], dtype=np.int64)


@dataclass(frozen=True)
class MoveKernel:
    s: int
    boundary: str = "edge_stay"

    def __post_init__(self):
        if self.s < 1:
            raise ValueError(f"grid side must be >= 1, got {self.s}")
        if self.boundary not in ("edge_stay", "torus_wrap", "static"):
            raise ValueError(f"unknown boundary behaviour {self.boundary!r}")

    @property
    def m(self):
        return self.s * self.s

    def move_probs(self, cell):
        """Distribution of the next cell from ``cell`` as a dict ``{cell: prob}``."""
        x, y = cell
        if self.boundary == "static":
            return {(x, y): 1.0}
        out = {}
        for dx, dy in MOVES:
            nx, ny = x + dx, y + dy
            if self.boundary == "torus_wrap":
                nx, ny = nx % self.s, ny % self.s
            elif not (0 <= nx < self.s and 0 <= ny < self.s):
                nx, ny = x, y
            key = (int(nx), int(ny))
            out[key] = out.get(key, 0.0) + 1.0 / 9.0
        return out

    def matrix(self):
        """Exact m x m transition matrix; cell (x, y) has index x * s + y."""
        s = self.s
        P = np.zeros((self.m, self.m))
        for x in range(s):
            for y in range(s):
                for (nx, ny), p in self.move_probs((x, y)).items():
                    P[x * s + y, nx * s + ny] += p
        return P

    def step(self, cells, rng):
        """One independent kernel draw per row of ``cells`` (shape (n, 2))."""
        if self.boundary == "static" or len(cells) == 0:
            return cells.copy()
        new = cells + MOVES[rng.integers(0, 9, size=len(cells))]
        if self.boundary == "torus_wrap":
            return new % self.s
        inside = ((new >= 0) & (new < self.s)).all(axis=1)
        return np.where(inside[:, None], new, cells)


def positions_in_cells(cells, s, rng):
    """Uniform position inside each cell (cell side 1/s)."""
    return (cells + rng.random(cells.shape)) / s


def step_all(cells, pos, kernel: MoveKernel, rng):
    """Advance every node one slot; returns new ``(cells, pos)``.

    Positions are redrawn uniformly inside the (possibly unchanged) cell even
    when a node stays. Static kernels leave both arrays untouched.
    """
    if kernel.boundary == "static":
        return cells, pos
    cells = kernel.step(cells, rng)
    return cells, positions_in_cells(cells, kernel.s, rng)


def tv_to_uniform(dist):
    dist = np.asarray(dist, dtype=float)
    return 0.5 * np.abs(dist - 1.0 / dist.shape[-1]).sum(axis=-1)


def empirical_tv_to_uniform(kernel: MoveKernel, t, trials, rng, start=(0, 0)):
    """TV distance between the empirical cell law of ``trials`` walks after ``t`` slots and uniform."""
    if t < 0 or trials < 1:
        raise ValueError("need t >= 0 and trials >= 1")
    cells = np.tile(np.asarray(start, dtype=np.int64), (trials, 1))
    for _ in range(t):
        cells = kernel.step(cells, rng)
    counts = np.bincount(cells[:, 0] * kernel.s + cells[:, 1], minlength=kernel.m)
    return float(tv_to_uniform(counts / trials))
