"""Store-carry-forward epidemic messaging over users and UAVs.

The world ticks on a 1 s grid.  Each tick: expire old messages, detect
contacts (distance <= dtn_range), then serve contact pairs in fixed
lowest-index order.  A pair exchanges the messages the peer lacks,
oldest-created first, within a per-pair bandwidth budget; transfers too
large for one tick carry over while the contact persists.  Replication
decisions see buffer contents as of the tick start: completed arrivals
are applied after all pairs are served, so a message advances at most one
hop per tick.

Full buffers evict the oldest-created message to make room; an incoming
message is dropped only when it is itself the oldest.  Delivery stamps
the first arrival at the destination and never removes copies.
"""

from __future__ import annotations

import heapq
from bisect import bisect_left
from dataclasses import dataclass

import numpy as np


@dataclass
class Message:
    id: int
    source: int
    destination: int
    created_at: int
    size: int
    ttl: int
    delivered_at: int | None = None


class NodeBuffer:
    """Message ids held by one node, with oldest-id lookup and usage."""

    __slots__ = ("held", "used_bytes", "version", "_heap")

    def __init__(self):
        self.held: set[int] = set()
        self.used_bytes = 0
        self.version = 0
        self._heap: list[int] = []

    def add(self, mid: int, size: int) -> None:
        self.held.add(mid)
        heapq.heappush(self._heap, mid)
        self.used_bytes += size
        self.version += 1

    def remove(self, mid: int, size: int) -> None:
        self.held.remove(mid)
        self.used_bytes -= size
        self.version += 1

    def oldest(self) -> int | None:
        # ids are assigned in creation order, so min id = oldest message
        heap = self._heap
        while heap and heap[0] not in self.held:
            heapq.heappop(heap)
        return heap[0] if heap else None

    def purge_older_than(self, first_alive: int, sizes: list[int]) -> None:
        heap = self._heap
        while heap and heap[0] < first_alive:
            mid = heapq.heappop(heap)
            if mid in self.held:
                self.held.remove(mid)
                self.used_bytes -= sizes[mid]
                self.version += 1


class DtnWorld:
    """All node buffers, in-flight transfers, and the message ledger.

    Node indexing: ground users are 0..n_users-1, UAVs follow.  Only
    users source or sink messages; UAVs are pure carriers.
    """

    def __init__(self, n_users: int, n_uavs: int, dtn_range: float,
                 dtn_speed: int, dtn_buffer: int, dtn_msg_size: int,
                 dtn_ttl: int):
        self.n_users = n_users
        self.n_uavs = n_uavs
        self.n_nodes = n_users + n_uavs
        self.range = float(dtn_range)
        self.speed = int(dtn_speed)
        self.buffer_cap = int(dtn_buffer)
        self.msg_size = int(dtn_msg_size)
        self.ttl = int(dtn_ttl)
        self.buffers = [NodeBuffer() for _ in range(self.n_nodes)]
        self.delivered_count = 0
        self.messages: list[Message] = []
        self.sizes: list[int] = []
        self.created_times: list[int] = []
        self.undelivered_to: dict[int, set[int]] = {}
        # in-flight partial transfers: (a,b) -> [mid, receiver, bytes_left]
        self.transfers: dict[tuple[int, int], list] = {}
        self._pair_cache: dict[tuple[int, int], tuple[int, int]] = {}
        self._sync_cache: dict[int, tuple] = {}
        self._iu = np.triu_indices(self.n_nodes, k=1)
        self._first_alive = 0

    # -- lifecycle ---------------------------------------------------------

    def spawn_message(self, now: int, rng: np.random.Generator) -> Message:
        """One new message at a random user, to a distinct random user."""
        m = self.n_users
        if m < 2:
            raise ValueError("need at least two users to exchange messages")
        src = int(rng.integers(m))
        dst = int(rng.integers(m - 1))
        if dst >= src:
            dst += 1
        msg = Message(id=len(self.messages), source=src, destination=dst,
                      created_at=now, size=self.msg_size, ttl=self.ttl)
        self.messages.append(msg)
        self.sizes.append(msg.size)
        self.created_times.append(now)
        self.undelivered_to.setdefault(dst, set()).add(msg.id)
        self._receive(src, msg.id, now)
        return msg

    def _expire(self, now: int) -> None:
        cutoff = now - self.ttl
        first_alive = bisect_left(self.created_times, cutoff)
        if first_alive == self._first_alive:
            return
        self._first_alive = first_alive
        for buf in self.buffers:
            buf.purge_older_than(first_alive, self.sizes)
        for key in [k for k, tr in self.transfers.items() if tr[0] < first_alive]:
            del self.transfers[key]

    def _receive(self, node: int, mid: int, now: int) -> None:
        buf = self.buffers[node]
        if mid in buf.held or mid < self._first_alive:
            return
        msg = self.messages[mid]
        if node == msg.destination and msg.delivered_at is None:
            msg.delivered_at = now
            self.delivered_count += 1
            pend = self.undelivered_to.get(msg.destination)
            if pend is not None:
                pend.discard(mid)
        size = self.sizes[mid]
        if size > self.buffer_cap:
            return
        while buf.used_bytes + size > self.buffer_cap:
            oldest = buf.oldest()
            if oldest is None or mid < oldest:
                return  # incoming is the oldest: drop it instead
            buf.remove(oldest, self.sizes[oldest])
        buf.add(mid, size)

    # -- per-tick advance ----------------------------------------------------

    def _contacts(self, positions: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        i, j = self._iu
        dx = positions[i, 0] - positions[j, 0]
        dy = positions[i, 1] - positions[j, 1]
        near = (dx * dx + dy * dy) <= self.range * self.range
        return i[near], j[near]

    def step(self, positions, now: int, dt: int = 1) -> None:
        """Advance one contact/transfer tick at time `now`."""
        positions = np.asarray(positions, dtype=float)
        if len(positions) != self.n_nodes:
            raise ValueError("positions must cover every node")
        self._expire(now)
        ci, cj = self._contacts(positions)

        if self.transfers:
            live = set(zip(ci.tolist(), cj.tolist()))
            for key in [k for k in self.transfers if k not in live]:
                del self.transfers[key]

        arrivals: list[tuple[int, int]] = []
        buffers = self.buffers
        for a, b in zip(ci.tolist(), cj.tolist()):
            budget = self.speed * dt
            key = (a, b)
            finished = -1
            tr = self.transfers.get(key)
            if tr is not None:
                mid, recv, left = tr
                sender = a if recv == b else b
                if mid not in buffers[sender].held or mid in buffers[recv].held:
                    del self.transfers[key]
                else:
                    take = min(budget, left)
                    left -= take
                    budget -= take
                    if left == 0:
                        arrivals.append((recv, mid))
                        del self.transfers[key]
                        finished = mid
                    else:
                        tr[2] = left
                        continue
            held_a, held_b = buffers[a].held, buffers[b].held
            cached = self._pair_cache.get(key)
            state = (buffers[a].version, buffers[b].version)
            if cached == state:
                continue
            candidates = sorted(held_a.symmetric_difference(held_b))
            complete = True
            for mid in candidates:
                if mid == finished:
                    continue
                recv = b if mid in held_a else a
                size = self.sizes[mid]
                if budget >= size:
                    arrivals.append((recv, mid))
                    budget -= size
                else:
                    if budget > 0:
                        self.transfers[key] = [mid, recv, size - budget]
                    complete = False
                    break
            if complete:
                self._pair_cache[key] = state
        for node, mid in arrivals:
            self._receive(node, mid, now)

    def idealized_sync(self, groups: list[list[int]], now: int) -> None:
        """Instant full sharing inside each group, ignoring bandwidth/caps.

        Groups are node-id lists (a cluster's users plus its UAV when close
        enough).  TTL still applies; buffer capacity does not.
        """
        buffers = self.buffers
        for gi, members in enumerate(groups):
            key = tuple(members)
            vers = tuple(buffers[m].version for m in members)
            cached = self._sync_cache.get(gi)
            if cached == (key, vers):
                continue
            union = set()
            for m in members:
                union |= buffers[m].held
            for m in members:
                if m < self.n_users:
                    pend = self.undelivered_to.get(m)
                    if pend:
                        for mid in sorted(pend & union):
                            msg = self.messages[mid]
                            if msg.delivered_at is None:
                                msg.delivered_at = now
                                self.delivered_count += 1
                            pend.discard(mid)
            for m in members:
                buf = buffers[m]
                missing = union - buf.held
                for mid in sorted(missing):
                    buf.add(mid, self.sizes[mid])
            self._sync_cache[gi] = (key, tuple(buffers[m].version for m in members))

    # -- metrics -------------------------------------------------------------

    def created_count(self) -> int:
        return len(self.messages)

    def delivered(self) -> list[Message]:
        return [m for m in self.messages if m.delivered_at is not None]

    def ttds(self) -> np.ndarray:
        return np.array([m.delivered_at - m.created_at for m in self.delivered()],
                        dtype=float)
