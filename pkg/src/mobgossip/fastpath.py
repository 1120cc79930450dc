"""Compiled slot loop for static Bernoulli worlds.

Long static runs spend most of their slots before the late message appears.
This loop reproduces :func:`mobgossip.engine.run_slot` draw for draw (same
streams, same order), without building per-slot outcome records.
"""

import numba
import numpy as np


@numba.njit(cache=True)
def _nearest_receiver(i, is_sender, nbr, pos):
    for c in range(nbr.shape[1]):
        j = nbr[i, c]
        if not is_sender[j]:
            return j
    # every tabulated neighbour is a sender: exhaustive search, ties to the lower id
    best, best_d = -1, np.inf
    for j in range(len(is_sender)):
        if is_sender[j]:
            continue
        dx = pos[j, 0] - pos[i, 0]
        dy = pos[j, 1] - pos[i, 1]
        d = dx * dx + dy * dy
        if d < best_d:
            best, best_d = j, d
    return best


@numba.njit(cache=True)
def _run(rng_d, rng_s, rng_p, theta, c_success, mobile, nbr, pos,
         has, held, count, own, own_pos, sources, counts, inject_time, completion,
         wasted, source_wasted, t, t_end, w, star, throughput):
    n = len(count)
    k = len(counts)
    is_sender = np.zeros(n, dtype=np.bool_)
    winner = np.full(n, -1, dtype=np.int64)
    senders = np.empty(n, dtype=np.int64)
    receiver = np.empty(n, dtype=np.int64)
    msg = np.empty(n, dtype=np.int64)
    while t < t_end:
        slot = t + 1
        u = rng_d.random(n)
        ns = 0
        for i in range(n):
            is_sender[i] = u[i] < theta
            if is_sender[i]:
                senders[ns] = i
                ns += 1
        if ns == n:
            ns = 0  # no receivers, so no pairings
        for a in range(ns):
            receiver[a] = _nearest_receiver(senders[a], is_sender, nbr, pos)

        # message selection, one uniform draw per sender
        us = rng_s.random(ns)
        odd = slot % 2 == 1
        for a in range(ns):
            s = senders[a]
            cnt = count[s]
            m = -1
            if not mobile or odd:
                if cnt > 0:
                    m = held[s, np.int64(us[a] * cnt)]
                if mobile and own[s] >= 0:
                    m = own[s]
            else:
                is_src = own_pos[s] >= 0
                n_recv = cnt - (1 if is_src else 0)
                if n_recv > 0:
                    j = np.int64(us[a] * n_recv)
                    if is_src and j >= own_pos[s]:
                        j += 1
                    m = held[s, j]
                elif is_src:
                    m = own[s]
            msg[a] = m

        nl = 0
        for a in range(ns):
            if msg[a] >= 0:
                nl += 1
        ok = rng_p.random(nl) < c_success
        key = rng_p.random(nl)
        # keep the smallest key per receiver, exact ties to the earlier pairing
        b = 0
        for a in range(ns):
            if msg[a] < 0:
                continue
            if ok[b]:
                r = receiver[a]
                cur = winner[r]
                if cur < 0 or key[b] < key[cur]:
                    winner[r] = b
            b += 1
        delivered = 0
        b = 0
        for a in range(ns):
            if msg[a] < 0:
                continue
            r = receiver[a]
            if ok[b] and winner[r] == b:
                m = msg[a]
                delivered += 1
                if has[r, m]:
                    wasted[m] += 1
                    if senders[a] == sources[m]:
                        source_wasted[m] += 1
                else:
                    has[r, m] = True
                    held[r, count[r]] = m
                    count[r] += 1
                    counts[m] += 1
            b += 1
        for a in range(ns):
            winner[receiver[a]] = -1
        throughput[slot - 1] = delivered

        t = slot
        newly_done = False
        for i in range(k):
            if counts[i] == n and completion[i] < 0 and inject_time[i] >= 0:
                completion[i] = slot - inject_time[i]
                newly_done = True
        if w > 0 and inject_time[star] < 0 and count.min() >= w:
            node = sources[star]
            own[node] = star
            own_pos[node] = count[node]
            has[node, star] = True
            held[node, count[node]] = star
            count[node] += 1
            counts[star] = 1
            inject_time[star] = t
            if n == 1:
                completion[star] = 0
            return t
        if newly_done:
            return t
    return t


def eligible(world):
    cfg = world.config
    return (cfg.mobility == "static" and cfg.phy_mode == "bernoulli"
            and world.neighbors is not None and world.neighbors.K > 0)


def fast_forward(world, until, throughput=None):
    """Run slots in compiled code until slot ``until``, a late injection or a new completion.

    Returns the per-slot delivered counts for the slots that ran.
    """
    if not eligible(world):
        raise ValueError("fast path needs a static world in bernoulli mode")
    cfg, inv = world.config, world.inventory
    start = world.t
    if until <= start:
        return np.zeros(0, dtype=np.int64)
    buf = np.zeros(until, dtype=np.int64)
    w = cfg.injection.w if cfg.injection.kind == "late" else 0
    t = _run(world.rngs["designate"], world.rngs["select"], world.rngs["phy"], cfg.theta, cfg.c_success,
             cfg.protocol == "mobile_push", world.neighbors.nbr, world.pos,
             inv.has, inv.held, inv.count, inv.own, inv.own_pos, world.sources, world.counts,
             world.inject_time, world.completion, world.wasted, world.source_wasted,
             start, until, w, world.k - 1, buf)
    world.t = int(t)
    return buf[start:t]
