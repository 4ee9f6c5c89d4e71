"""Minimal deterministic discrete-event scheduler."""

from __future__ import annotations

import heapq

# Tie-break classes for events at the same instant.
DELIVERY = 0
TIMER = 1
MEASUREMENT = 2
FLUSH = 3


class Scheduler:
    """Priority-queue event loop.

    Events are ordered by (time, class, insertion sequence), which gives a
    total order and therefore bit-exact replays.
    """

    __slots__ = ("now", "_queue", "_seq", "processed")

    def __init__(self, start: float = 0.0):
        self.now = start
        self._queue = []
        self._seq = 0
        self.processed = 0

    def schedule(self, time: float, priority: int, callback, *args) -> None:
        heapq.heappush(self._queue, (time, priority, self._seq, callback, args))
        self._seq += 1

    def __len__(self) -> int:
        return len(self._queue)

    def run(self) -> None:
        queue = self._queue
        pop = heapq.heappop
        n = 0
        while queue:
            time, _, _, callback, args = pop(queue)
            self.now = time
            callback(*args)
            n += 1
        self.processed += n
