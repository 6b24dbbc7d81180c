# -*- coding = utf-8 -*-
# @Time: 2026-08-26 20:14:52
# @Author: xchain-sync developers
# @Site:
# @File: network.py
"""Deterministic discrete-event network connecting nodes and native chains."""
from __future__ import annotations

import heapq
import itertools
import random
from typing import Any, Callable, Dict, List, Protocol, Set, Tuple

from xchain_sync.common.enums import TraceKind
from xchain_sync.common.logger import logger
from xchain_sync.schema.net_model import TraceEvent

MAX_DELAY = 3
MAX_EVENTS = 200_000


class Actor(Protocol):
    def on_message(self, net: "SimNetwork", src: str, message: Any) -> None: ...


class SimNetwork:
    """Seeded message scheduler; each (src, dst) channel delivers in FIFO order."""

    def __init__(self, seed: int = 0, max_delay: int = MAX_DELAY):
        if max_delay < 1:
            raise ValueError("max_delay must be positive")
        self.now = 0
        self.max_delay = max_delay
        self.actors: Dict[str, Actor] = {}
        self.crashed: Set[str] = set()
        self.trace: List[TraceEvent] = []
        self.delivered = 0
        self._rng = random.Random(seed)
        self._seq = itertools.count()
        self._queue: List[Tuple[int, int, str, str, Any]] = []
        self._channel_clock: Dict[Tuple[str, str], int] = {}
        self._cancelled: Set[int] = set()

    def register(self, actor_id: str, actor: Actor) -> None:
        self.actors[actor_id] = actor

    def _push(self, at: int, src: str, dst: str, message: Any) -> int:
        seq = next(self._seq)
        heapq.heappush(self._queue, (at, seq, dst, src, message))
        return seq

    def send(self, src: str, dst: str, message: Any, delay: int | None = None) -> None:
        if delay is None:
            delay = self._rng.randint(1, self.max_delay)
        channel = (src, dst)
        at = max(self.now + delay, self._channel_clock.get(channel, 0))
        self._channel_clock[channel] = at
        self._push(at, src, dst, message)

    def broadcast(self, src: str, destinations: List[str], message: Any) -> None:
        for dst in destinations:
            self.send(src, dst, message)

    def set_timer(self, actor_id: str, delay: int, message: Any) -> int:
        return self._push(self.now + max(delay, 0), actor_id, actor_id, message)

    def cancel(self, timer_id: int) -> None:
        self._cancelled.add(timer_id)

    def crash(self, actor_id: str) -> None:
        if actor_id in self.crashed:
            return
        self.crashed.add(actor_id)
        self.record(actor_id, TraceKind.CRASHED)
        logger.info("{} crashed at t={}", actor_id, self.now)

    def is_crashed(self, actor_id: str) -> bool:
        return actor_id in self.crashed

    def record(self, actor: str, kind: TraceKind, round_id: int | None = None, digest: str = "", **detail) -> TraceEvent:
        event = TraceEvent(
            time=self.now,
            seq=len(self.trace),
            actor=actor,
            kind=kind,
            round=round_id,
            digest=digest,
            detail=detail,
        )
        self.trace.append(event)
        return event

    @property
    def pending(self) -> int:
        return len(self._queue)

    def next_time(self) -> int | None:
        return self._queue[0][0] if self._queue else None

    def step(self) -> bool:
        """Deliver the next message; False once the queue is empty."""
        while self._queue:
            at, seq, dst, src, message = heapq.heappop(self._queue)
            self.now = max(self.now, at)
            if seq in self._cancelled:
                self._cancelled.discard(seq)
                continue
            if dst in self.crashed or dst not in self.actors:
                continue
            self.delivered += 1
            self.actors[dst].on_message(self, src, message)
            return True
        return False

    def run_until(self, done: Callable[[], bool], max_events: int = MAX_EVENTS) -> bool:
        for _ in range(max_events):
            if done():
                return True
            if not self.step():
                return done()
        logger.warning("network gave up after {} events at t={}", max_events, self.now)
        return done()

    def run_until_quiescent(self, max_events: int = MAX_EVENTS) -> int:
        before = self.delivered
        self.run_until(lambda: not self._queue, max_events)
        return self.delivered - before

    def advance(self, ticks: int) -> None:
        """Deliver everything due within ``ticks`` and move the clock forward."""
        horizon = self.now + ticks
        while self._queue and self._queue[0][0] <= horizon:
            self.step()
        self.now = max(self.now, horizon)
