"""In-memory datagram network with seeded loss, latency and jitter."""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

DELIVERY_EPS = 1e-9


@dataclass(frozen=True)
class NetConfig:
    latency: float = 0.0  # s
    jitter: float = 0.0  # s, standard deviation
    loss: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.loss <= 1.0:
            raise ValueError("loss probability must lie in [0, 1]")
        if self.latency < 0 or self.jitter < 0:
            raise ValueError("latency and jitter must be non-negative")


@dataclass(order=True)
class Datagram:
    due: float
    order: int
    src: object = field(compare=False)
    dst: object = field(compare=False)
    data: bytes = field(compare=False)


def net_delay(config: NetConfig, rng):
    """Delivery delay for one datagram, or None if it is lost.

    Always consumes exactly two draws so that the random stream does not
    depend on which messages happen to be dropped.
    """
    u = rng.random()
    z = rng.standard_normal()
    if u < config.loss:
        return None
    return max(0.0, config.latency + config.jitter * float(z))


class SimNetwork:
    """Priority queue of in-flight datagrams ordered by due time, then send order."""

    def __init__(self, config: NetConfig, rng):
        self.config = config
        self.rng = rng
        self._queue: list[Datagram] = []
        self._order = 0
        self.sent = 0
        self.lost = 0
        self.delivered = 0

    def send(self, src, dst, data: bytes, now: float) -> bool:
        self.sent += 1
        delay = net_delay(self.config, self.rng)
        if delay is None:
            self.lost += 1
            return False
        heapq.heappush(self._queue, Datagram(now + delay, self._order, src, dst, data))
        self._order += 1
        return True

    def deliver(self, now: float) -> list[Datagram]:
        """Pop every datagram due at or before ``now``."""
        out = []
        while self._queue and self._queue[0].due <= now + DELIVERY_EPS:
            out.append(heapq.heappop(self._queue))
        self.delivered += len(out)
        return out

    @property
    def in_flight(self) -> int:
        return len(self._queue)


def net_deliver(messages, config: NetConfig, rng, now: float = 0.0):
    """Push ``messages`` ((src, dst, data) triples) through a fresh network and
    return everything that arrives, in arrival order."""
    net = SimNetwork(config, rng)
    for src, dst, data in messages:
        net.send(src, dst, data, now)
    return net.deliver(float("inf"))
