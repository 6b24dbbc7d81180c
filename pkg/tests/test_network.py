from __future__ import annotations

import unittest
from typing import Any, List, Tuple

from xchain_sync.common.enums import TraceKind
from xchain_sync.network import SimNetwork


class Recorder:
    def __init__(self):
        self.received: List[Tuple[int, str, Any]] = []

    def on_message(self, net: SimNetwork, src: str, message: Any) -> None:
        self.received.append((net.now, src, message))


def build_network(seed: int = 0, max_delay: int = 3) -> Tuple[SimNetwork, Recorder]:
    net = SimNetwork(seed=seed, max_delay=max_delay)
    recorder = Recorder()
    net.register("dst", recorder)
    return net, recorder


class SimNetworkTests(unittest.TestCase):
    def test_channel_is_fifo_and_delay_bounded(self):
        net, recorder = build_network(seed=5)
        for index in range(50):
            net.send("src", "dst", index)
        net.run_until_quiescent()
        self.assertEqual([message for _, _, message in recorder.received], list(range(50)))
        self.assertTrue(all(1 <= at <= 3 for at, _, _ in recorder.received))

    def test_same_seed_same_schedule(self):
        schedules = []
        for _ in range(2):
            net, recorder = build_network(seed=9)
            for index in range(20):
                net.send(f"s{index % 4}", "dst", index)
            net.run_until_quiescent()
            schedules.append(recorder.received)
        self.assertEqual(schedules[0], schedules[1])

    def test_crashed_actor_receives_nothing(self):
        net, recorder = build_network()
        net.send("src", "dst", "before")
        net.crash("dst")
        net.crash("dst")
        net.run_until_quiescent()
        self.assertEqual(recorder.received, [])
        self.assertTrue(net.is_crashed("dst"))
        self.assertEqual([event.kind for event in net.trace], [TraceKind.CRASHED])

    def test_cancelled_timer_never_fires(self):
        net, recorder = build_network()
        kept = net.set_timer("dst", 4, "kept")
        dropped = net.set_timer("dst", 2, "dropped")
        net.cancel(dropped)
        net.run_until_quiescent()
        self.assertNotEqual(kept, dropped)
        self.assertEqual(recorder.received, [(4, "dst", "kept")])

    def test_advance_moves_clock_and_delivers_due_messages(self):
        net, recorder = build_network()
        net.send("src", "dst", "soon", delay=2)
        net.send("other", "dst", "late", delay=10)
        net.advance(5)
        self.assertEqual(net.now, 5)
        self.assertEqual([message for _, _, message in recorder.received], ["soon"])
        self.assertEqual(net.pending, 1)
        self.assertEqual(net.next_time(), 10)

    def test_record_numbers_trace_events(self):
        net, _ = build_network()
        first = net.record("n0", TraceKind.ROUND_BEGIN, 0)
        second = net.record("n0", TraceKind.ROUND_END, 0, detail_key="x")
        self.assertEqual((first.seq, second.seq), (0, 1))
        self.assertEqual(second.detail, {"detail_key": "x"})

    def test_invalid_delay_bound(self):
        with self.assertRaises(ValueError):
            SimNetwork(max_delay=0)


if __name__ == "__main__":
    unittest.main()
