"""UNICAST physical layer: sender designation, nearest-receiver pairing and
reception under SINR or a constant success probability."""

from dataclasses import dataclass
from typing import NamedTuple

import numba
import numpy as np

from .mobility import MoveKernel, positions_in_cells, step_all
from .spatial import GridIndex

# distances are floored here before evaluating r ** -alpha
MIN_DISTANCE = 1e-6


@dataclass(frozen=True)
class PhyParams:
    P: float = 1.0
    eta: float = 1.0
    alpha: float = 4.0
    beta: float = 2.0
    c_success: float = 0.5
    phy_mode: str = "sinr"

    @classmethod
    def from_config(cls, config):
        return cls(P=config.P, eta=config.eta, alpha=config.alpha, beta=config.beta,
                   c_success=config.c_success, phy_mode=config.phy_mode)


@dataclass
class Pairings:
    """Parallel arrays, one entry per sender, ordered by sender id."""

    sender: np.ndarray
    receiver: np.ndarray
    dist: np.ndarray

    def __len__(self):
        return len(self.sender)

    @classmethod
    def empty(cls):
        z = np.zeros(0, dtype=np.int64)
        return cls(z, z.copy(), np.zeros(0))

    def subset(self, mask):
        return Pairings(self.sender[mask], self.receiver[mask], self.dist[mask])


def designate(n, theta, rng):
    """Boolean mask of senders; each node is a sender independently w.p. ``theta``."""
    if not 0 <= theta < 1:
        raise ValueError(f"theta must lie in [0, 1), got {theta}")
    return rng.random(n) < theta


def pair_nearest(is_sender, positions, neighbors=None):
    """Pair each sender with its nearest receiver (ties go to the lower receiver id).

    ``neighbors`` is an optional :class:`NeighborTable` for fixed positions;
    senders whose precomputed list holds no receiver fall back to a grid search.
    """
    is_sender = np.asarray(is_sender, dtype=bool)
    senders = np.flatnonzero(is_sender)
    receivers = np.flatnonzero(~is_sender)
    if len(senders) == 0 or len(receivers) == 0:
        return Pairings.empty()
    if neighbors is None or neighbors.K == 0:
        idx, d = GridIndex(positions[receivers]).nearest(positions[senders])
        return Pairings(senders, receivers[idx], d)
    cand = neighbors.nbr[senders]
    ok = ~is_sender[cand]
    first = ok.argmax(axis=1)
    rows = np.arange(len(senders))
    rec = cand[rows, first]
    dist = neighbors.dist[senders, first]
    miss = np.flatnonzero(~ok[rows, first])
    if len(miss):
        idx, d = GridIndex(positions[receivers]).nearest(positions[senders[miss]])
        rec[miss] = receivers[idx]
        dist[miss] = d
    return Pairings(senders, rec, dist)


@numba.njit(cache=True)
def _keep_one_per_receiver(receiver, ok, key):
    """Among ``ok`` entries sharing a receiver keep only the one with the smallest key.

    Exact key ties go to the earlier entry.
    """
    out = ok.copy()
    best = {}
    for j in range(len(receiver)):
        if not ok[j]:
            continue
        r = receiver[j]
        if r in best:
            b = best[r]
            if key[j] < key[b]:
                out[b] = False
                best[r] = j
            else:
                out[j] = False
        else:
            best[r] = j
    return out


def sinr_values(pairings: Pairings, positions, params: PhyParams):
    """SINR at each pairing's receiver with every paired sender interfering."""
    if len(pairings) == 0:
        return np.zeros(0)
    tx = positions[pairings.sender]
    rx = positions[pairings.receiver]
    d = np.sqrt(((rx[:, None, :] - tx[None, :, :]) ** 2).sum(axis=2))
    gain = params.P * np.maximum(d, MIN_DISTANCE) ** (-params.alpha)
    signal = np.diagonal(gain).copy()
    interference = gain.sum(axis=1) - signal
    return signal / (params.eta + np.maximum(interference, 0.0))


def resolve_sinr(pairings: Pairings, positions, params: PhyParams):
    """Success flags: SINR >= beta, then the strongest sender wins each receiver."""
    sinr = sinr_values(pairings, positions, params)
    ok = sinr >= params.beta
    # highest SINR first, ties by lower sender id (pairings are sender-ordered)
    return _keep_one_per_receiver(pairings.receiver, ok, -sinr)


def resolve_bernoulli(pairings: Pairings, params: PhyParams, rng):
    """Each pairing succeeds w.p. ``c_success``; one uniform winner per receiver."""
    n = len(pairings)
    ok = rng.random(n) < params.c_success
    return _keep_one_per_receiver(pairings.receiver, ok, rng.random(n))


class SuccessEstimate(NamedTuple):
    rate: float
    successes: int
    attempts: int


def estimate_success_constant(config, slots, rng):
    """Empirical per-pair SINR success probability over ``slots`` slots.

    Every sender is assumed to carry a message, and nodes move under the
    config's mobility model. Useful for picking ``c_success`` so the
    Bernoulli abstraction matches the SINR model.
    """
    params = PhyParams.from_config(config)
    kernel = MoveKernel(config.s, config.mobility)
    cells = rng.integers(0, config.s, size=(config.n, 2))
    pos = positions_in_cells(cells, config.s, rng)
    wins = tries = 0
    for _ in range(slots):
        cells, pos = step_all(cells, pos, kernel, rng)
        pairs = pair_nearest(designate(config.n, config.theta, rng), pos)
        wins += int(resolve_sinr(pairs, pos, params).sum())
        tries += len(pairs)
    return SuccessEstimate(wins / tries if tries else 0.0, wins, tries)
