"""Discrete-time slot loop: move, designate, pair, select, resolve, deliver."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import fastpath
from .core import NodeState, SimConfig, derive_stream, validate
from .mobility import MoveKernel, positions_in_cells, step_all
from .phy import PhyParams, pair_nearest, designate, resolve_bernoulli, resolve_sinr
from .spatial import NeighborTable
from .protocol import NO_MESSAGE, Inventory, select_messages

STREAMS = ("placement", "mobility", "designate", "select", "phy")


@dataclass(frozen=True)
class StopCondition:
    """``all_complete`` or ``message_complete`` (with ``index``); the slot budget always applies."""

    kind: str = "all_complete"
    index: int = 0

    def satisfied(self, world):
        if self.kind == "all_complete":
            return bool((world.completion >= 0).all())
        if self.kind == "message_complete":
            return bool(world.completion[self.index] >= 0)
        if self.kind == "slot_budget":
            return False
        raise ValueError(f"unknown stop condition {self.kind!r}")


@dataclass
class SlotOutcome:
    slot: int
    senders: np.ndarray
    pair_sender: np.ndarray
    pair_receiver: np.ndarray
    pair_dist: np.ndarray
    message: np.ndarray      # per pairing, -1 when the sender had nothing to send
    success: np.ndarray      # per pairing, after one-winner-per-receiver
    novel: np.ndarray        # per pairing, success and receiver lacked the message
    delta_counts: np.ndarray  # per message, growth of N_i in this slot
    delta_wasted: np.ndarray  # per message, non-novel deliveries in this slot

    @property
    def delivered(self):
        return int(self.success.sum())

    @property
    def wasted(self):
        return int(self.delta_wasted.sum())


def strip_width(n):
    return math.sqrt(32.0 * math.log(n) / n) if n > 1 else 1.0


@dataclass
class World:
    config: SimConfig
    kernel: MoveKernel
    rngs: dict
    cells: np.ndarray
    pos: np.ndarray
    sources: np.ndarray
    inventory: Inventory
    neighbors: object
    counts: np.ndarray
    inject_time: np.ndarray
    completion: np.ndarray
    wasted: np.ndarray
    source_wasted: np.ndarray
    t: int = 0

    @property
    def n(self):
        return self.config.n

    @property
    def k(self):
        return self.config.k

    @property
    def has(self):
        return self.inventory.has

    @property
    def own(self):
        return self.inventory.own

    @property
    def probe(self):
        """Message tracked by strip profiles: M* under late injection, else message 0."""
        return self.k - 1 if self.config.injection.kind == "late" else 0

    def node(self, i) -> NodeState:
        own = int(self.own[i])
        return NodeState(id=int(i), cell=tuple(int(c) for c in self.cells[i]),
                         pos=tuple(float(p) for p in self.pos[i]),
                         own_msg=own if own >= 0 else None,
                         msgs=set(np.flatnonzero(self.has[i]).tolist()))

    def inject(self, i):
        self.inventory.add_source(self.sources[i], i)
        self.counts[i] = 1
        self.inject_time[i] = self.t
        if self.n == 1:
            self.completion[i] = 0

    def apply_schedule(self):
        """Inject any message whose schedule condition holds at the current time."""
        inj = self.config.injection
        if inj.kind == "simultaneous":
            if self.t == 0:
                for i in range(self.k):
                    self.inject(i)
            return
        if self.t == 0:
            for i in range(self.k - 1):
                self.inject(i)
        star = self.k - 1
        if self.inject_time[star] < 0:
            # before M* exists, a node's message count is its count of early messages
            if self.inventory.count.min() >= inj.w:
                self.inject(star)


def init_world(config: SimConfig) -> World:
    config = validate(config)
    rngs = {name: derive_stream(config.seed, name) for name in STREAMS}
    n, k, s = config.n, config.k, config.s
    placement = rngs["placement"]
    cells = placement.integers(0, s, size=(n, 2))
    pos = positions_in_cells(cells, s, placement)
    sources = np.sort(placement.choice(n, size=k, replace=False)).astype(np.int64)
    world = World(
        config=config,
        kernel=MoveKernel(s, config.mobility),
        rngs=rngs,
        cells=cells,
        pos=pos,
        sources=sources,
        inventory=Inventory(n, k),
        neighbors=NeighborTable(pos) if config.mobility == "static" else None,
        counts=np.zeros(k, dtype=np.int64),
        inject_time=np.full(k, -1, dtype=np.int64),
        completion=np.full(k, -1, dtype=np.int64),
        wasted=np.zeros(k, dtype=np.int64),
        source_wasted=np.zeros(k, dtype=np.int64),
    )
    world.apply_schedule()
    return world


def run_slot(world: World, slot_index: Optional[int] = None) -> SlotOutcome:
    """Advance ``world`` by one slot in place and return what happened."""
    slot = world.t + 1 if slot_index is None else slot_index
    if slot != world.t + 1:
        raise ValueError(f"expected slot {world.t + 1}, got {slot}")
    cfg, rngs = world.config, world.rngs
    n, k = cfg.n, cfg.k

    world.cells, world.pos = step_all(world.cells, world.pos, world.kernel, rngs["mobility"])
    is_sender = designate(n, cfg.theta, rngs["designate"])
    pairs = pair_nearest(is_sender, world.pos, world.neighbors)
    msg = select_messages(cfg.protocol, world.inventory, pairs.sender, slot, rngs["select"])

    active = msg != NO_MESSAGE
    live = pairs.subset(active)
    params = PhyParams.from_config(cfg)
    if cfg.phy_mode == "sinr":
        ok_live = resolve_sinr(live, world.pos, params)
    else:
        ok_live = resolve_bernoulli(live, params, rngs["phy"])
    success = np.zeros(len(pairs), dtype=bool)
    success[np.flatnonzero(active)] = ok_live

    rec = pairs.receiver[success]
    m = msg[success]
    fresh = world.inventory.add(rec, m)
    novel = np.zeros(len(pairs), dtype=bool)
    novel[np.flatnonzero(success)] = fresh

    d_counts = np.bincount(m[fresh], minlength=k)
    d_wasted = np.bincount(m[~fresh], minlength=k)
    world.counts += d_counts
    world.wasted += d_wasted
    from_source = pairs.sender[success] == world.sources[m]
    world.source_wasted += np.bincount(m[~fresh & from_source], minlength=k)

    world.t = slot
    done = (world.counts == n) & (world.completion < 0) & (world.inject_time >= 0)
    world.completion[done] = slot - world.inject_time[done]
    world.apply_schedule()

    return SlotOutcome(slot=slot, senders=np.flatnonzero(is_sender), pair_sender=pairs.sender,
                       pair_receiver=pairs.receiver, pair_dist=pairs.dist, message=msg,
                       success=success, novel=novel, delta_counts=d_counts, delta_wasted=d_wasted)


def strip_profile(world: World, message: Optional[int] = None):
    """Holders of ``message`` per vertical strip, folded around the source's strip.

    Strips have width sqrt(32 log n / n); entry 0 is the source strip (l=1),
    entry l-1 counts strips l-1 steps away on either side. Static mode only.
    """
    if world.config.mobility != "static":
        raise ValueError("strip profiles are only defined for static networks")
    message = world.probe if message is None else message
    width = strip_width(world.n)
    n_strips = int(math.ceil(1.0 / width))
    idx = np.minimum((world.pos[:, 0] / width).astype(np.int64), n_strips - 1)
    src_idx = idx[world.sources[message]]
    level = np.abs(idx - src_idx)
    return np.bincount(level[world.has[:, message]], minlength=n_strips)


@dataclass
class MetricsSeries:
    config: dict
    sample_slots: list
    counts: np.ndarray          # (samples, k) N_i(t)
    wasted_series: np.ndarray   # (samples, k) cumulative F_i(t)
    inject_time: np.ndarray
    completion: np.ndarray      # T(i) measured from injection; -1 if unfinished
    wasted: np.ndarray
    source_wasted: np.ndarray
    throughput: np.ndarray      # successful deliveries per slot
    strip_slots: list = field(default_factory=list)
    strips: list = field(default_factory=list)
    subsquare_counts: Optional[np.ndarray] = None  # (samples, k, m)
    slots_run: int = 0
    incomplete: bool = False

    def to_dict(self):
        def conv(x):
            return x.tolist() if isinstance(x, np.ndarray) else x
        d = {name: conv(getattr(self, name)) for name in self.__dataclass_fields__}
        d["strips"] = [conv(s) for s in self.strips]
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def to_bytes(self):
        return self.to_json().encode("utf-8")

    def strip_profile_at(self, slot):
        """Recorded strip profile at the recorded slot nearest ``slot``."""
        if not self.strip_slots:
            raise ValueError("no strip profiles recorded (static mode only)")
        i = int(np.argmin(np.abs(np.asarray(self.strip_slots) - slot)))
        return self.strip_slots[i], np.asarray(self.strips[i])


def default_stride(max_slots):
    return max(1, max_slots // 2048)


def run(config: SimConfig, stop: Optional[StopCondition] = None, on_slot=None) -> MetricsSeries:
    """Run until ``stop`` holds or the slot budget is spent.

    ``on_slot(world, outcome)`` is called after every slot if given.
    Static Bernoulli runs waiting on a late message use the compiled loop in
    :mod:`mobgossip.fastpath`, which gives identical results.
    """
    stop = stop or StopCondition()
    world = init_world(config)
    cfg = world.config
    stride = cfg.sample_stride or default_stride(cfg.max_slots)
    static = cfg.mobility == "static"

    sample_slots, counts, wasted = [], [], []
    subsq = [] if cfg.record_subsquares else None
    strip_slots, strips = [], []
    throughput = []

    def sample():
        sample_slots.append(world.t)
        counts.append(world.counts.astype(np.int32))
        wasted.append(world.wasted.astype(np.int32))
        if subsq is not None:
            cell_idx = world.cells[:, 0] * cfg.s + world.cells[:, 1]
            onehot = np.zeros((cfg.n, cfg.m), dtype=np.int32)
            onehot[np.arange(cfg.n), cell_idx] = 1
            subsq.append(world.has.T.astype(np.int32) @ onehot)

    def record_strip():
        if static and world.inject_time[world.probe] >= 0:
            strip_slots.append(world.t)
            strips.append(strip_profile(world).astype(np.int32))

    fast = (on_slot is None and subsq is None and cfg.injection.kind == "late"
            and fastpath.eligible(world))

    sample()
    record_strip()
    while not stop.satisfied(world) and world.t < cfg.max_slots:
        if fast and world.inject_time[world.probe] < 0:
            nxt = min((world.t // stride + 1) * stride, cfg.max_slots)
            throughput.extend(fastpath.fast_forward(world, nxt).tolist())
        else:
            outcome = run_slot(world)
            throughput.append(outcome.delivered)
            if on_slot is not None:
                on_slot(world, outcome)
        if world.t % stride == 0:
            sample()
        record_strip()
    if sample_slots[-1] != world.t:
        sample()

    k, m = cfg.k, cfg.m
    return MetricsSeries(
        config=cfg.to_dict(),
        sample_slots=sample_slots,
        counts=np.array(counts, dtype=np.int32).reshape(-1, k),
        wasted_series=np.array(wasted, dtype=np.int32).reshape(-1, k),
        inject_time=world.inject_time.copy(),
        completion=world.completion.copy(),
        wasted=world.wasted.copy(),
        source_wasted=world.source_wasted.copy(),
        throughput=np.array(throughput, dtype=np.int32),
        strip_slots=strip_slots,
        strips=strips,
        subsquare_counts=None if subsq is None else np.array(subsq, dtype=np.int32).reshape(-1, k, m),
        slots_run=world.t,
        incomplete=not stop.satisfied(world),
    )
