"""One-sided push message selection (RANDOM PUSH, MOBILE PUSH) and delivery.

Selection only ever looks at the sender's own state and the slot parity.
Slots are numbered from 1, so slot 1 is odd (self-promotion for MOBILE PUSH).
"""

import numpy as np

from .core import NodeState

NO_MESSAGE = -1


def is_odd(slot):
    return slot % 2 == 1


def select_random_push(node: NodeState, rng):
    """Uniform message from ``node.msgs``, or ``None`` if it holds nothing."""
    if not node.msgs:
        return None
    msgs = sorted(node.msgs)
    return msgs[rng.integers(len(msgs))]


def select_mobile_push(node: NodeState, odd: bool, rng):
    if odd:
        if node.own_msg is not None:
            return node.own_msg
        return select_random_push(node, rng)
    received = sorted(node.msgs - {node.own_msg})
    if received:
        return received[rng.integers(len(received))]
    # a source holding only its own message keeps transmitting it
    return node.own_msg if node.own_msg in node.msgs else None


def deliver(node: NodeState, msg):
    """Add ``msg`` to the receiver; returns ``(node, was_new)``."""
    was_new = msg not in node.msgs
    node.msgs.add(msg)
    return node, was_new


class Inventory:
    """Message possession for all nodes.

    ``has`` is the (n, k) membership matrix; ``held[i, :count[i]]`` lists
    node i's messages in arrival order so a uniform pick is O(1) per sender.
    ``own_pos[i]`` is the position of node i's own message in that list.
    """

    def __init__(self, n, k):
        self.has = np.zeros((n, k), dtype=bool)
        self.held = np.zeros((n, k), dtype=np.int32)
        self.count = np.zeros(n, dtype=np.int64)
        self.own = np.full(n, NO_MESSAGE, dtype=np.int64)
        self.own_pos = np.full(n, -1, dtype=np.int64)

    def add_source(self, node, msg):
        self.own[node] = msg
        self.own_pos[node] = self.count[node]
        self.add(np.array([node]), np.array([msg]))

    def add(self, receivers, msgs):
        """Deliver ``msgs[j]`` to ``receivers[j]`` (receivers distinct); returns was_new flags."""
        fresh = ~self.has[receivers, msgs]
        r, m = receivers[fresh], msgs[fresh]
        self.has[r, m] = True
        self.held[r, self.count[r]] = m
        self.count[r] += 1
        return fresh

    def select(self, protocol, senders, slot, rng):
        """One message index per sender (-1 for silence); reads sender rows only."""
        cnt = self.count[senders]
        u = rng.random(len(senders))
        out = np.full(len(senders), NO_MESSAGE, dtype=np.int64)
        if protocol == "random_push" or (protocol == "mobile_push" and is_odd(slot)):
            nz = np.flatnonzero(cnt > 0)
            out[nz] = self.held[senders[nz], (u[nz] * cnt[nz]).astype(np.int64)]
            if protocol == "mobile_push":
                src = self.own[senders] >= 0
                out[src] = self.own[senders[src]]
            return out
        if protocol != "mobile_push":
            raise ValueError(f"unknown protocol {protocol!r}")
        # even slot: uniform over received messages, own message excluded
        opos = self.own_pos[senders]
        is_src = opos >= 0
        n_recv = cnt - is_src
        nz = np.flatnonzero(n_recv > 0)
        j = (u[nz] * n_recv[nz]).astype(np.int64)
        j += (is_src[nz] & (j >= opos[nz]))
        out[nz] = self.held[senders[nz], j]
        lone = np.flatnonzero((n_recv == 0) & is_src)
        out[lone] = self.own[senders[lone]]
        return out


def select_messages(protocol, inventory, senders, slot, rng):
    """Vectorized selection used by the engine; see :meth:`Inventory.select`."""
    return inventory.select(protocol, senders, slot, rng)
