from __future__ import annotations

import json
import random
import tempfile
import unittest
from pathlib import Path

from xchain_sync.common.enums import CrashStage, FaultKind, PropertyName, RoundStatus, TraceKind, Verdict
from xchain_sync.common.errors import BoundExceeded, ConfigError
from xchain_sync.native_chain import CUSTODY
from xchain_sync.schema.sim_model import (
    ChainConfig,
    ExploreConfig,
    FaultSpec,
    GeneratorConfig,
    NodeConfig,
    ScenarioConfig,
    WorkloadItem,
)
from xchain_sync.sim_harness import (
    Simulator,
    enumerate_interleavings,
    load_scenario,
    run_scenario,
    write_trace,
)

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"
STAGES = [CrashStage.CONSENSUS, CrashStage.SIMULATION, CrashStage.PROVING, CrashStage.FINALIZE, CrashStage.BROADCAST]


def build_chains():
    return [
        ChainConfig(id="A", wallets={"alice": 10}, custody=100, accounts={"alice": 10, "amy": 5, "lp": 100}),
        ChainConfig(id="B", wallets={"bob": 0}, custody=100, accounts={"bob": 0, "ben": 5, "lp": 100}),
    ]


def build_transfer(round_id: int = 0, amount: int = 3) -> WorkloadItem:
    return WorkloadItem(round=round_id, kind="transfer", chain="A", sender="alice", recipient="B/bob", amount=amount)


def build_config(**overrides) -> ScenarioConfig:
    values = dict(name="harness", seed=4, chains=build_chains(), workload=[build_transfer()])
    values.update(overrides)
    return ScenarioConfig(**values)


def build_random_faulty_config(seed: int) -> ScenarioConfig:
    """Two chains, four nodes, a random pure workload plus one transfer, at most one fault."""
    rng = random.Random(seed)
    faults = []
    choice = rng.choice(["none", "crash", "partial", "stale", "dishonest"])
    fault_round = rng.randint(0, 1)
    transfer_round = rng.randint(0, 1)
    if choice == "crash":
        faults.append(FaultSpec(kind=FaultKind.CRASH, node="@leader", round=fault_round, stage=rng.choice(STAGES)))
    elif choice == "partial":
        reached = rng.choice(["A", "B"]) if transfer_round != fault_round else "A"
        faults.append(FaultSpec(kind=FaultKind.PARTIAL_BROADCAST, round=fault_round, subset=[reached]))
    elif choice == "stale":
        faults.append(FaultSpec(kind=FaultKind.STALE_ROOT_VOTER, node=f"n{rng.randint(0, 3)}", round=fault_round))
    elif choice == "dishonest":
        faults.append(FaultSpec(kind=FaultKind.DISHONEST_RELAYER, node="@leader", round=0))
    return build_config(
        name=f"random-{seed}",
        seed=seed,
        generator=GeneratorConfig(seed=seed, rounds=2, txs_per_round=4, max_amount=6),
        workload=[build_transfer(transfer_round, rng.randint(1, 10))],
        faults=faults,
    )


class ScenarioLoadingTests(unittest.TestCase):
    def test_every_shipped_scenario_loads(self):
        files = sorted(SCENARIOS.glob("*.toml"))
        self.assertGreaterEqual(len(files), 10)
        for path in files:
            with self.subTest(scenario=path.name):
                cfg = load_scenario(path)
                self.assertEqual(cfg.name, path.stem)

    def test_missing_file_is_config_error(self):
        with self.assertRaises(ConfigError):
            load_scenario(SCENARIOS / "missing.toml")

    def test_bad_toml_and_bad_fields_are_config_errors(self):
        with tempfile.TemporaryDirectory() as tmp:
            broken = Path(tmp) / "broken.toml"
            broken.write_text("name = [", encoding="utf-8")
            with self.assertRaises(ConfigError):
                load_scenario(broken)
            invalid = Path(tmp) / "invalid.toml"
            invalid.write_text('vote_timeout = 30\n[[chains]]\nid = "A"\n', encoding="utf-8")
            with self.assertRaises(ConfigError):
                load_scenario(invalid)

    def test_unknown_targets_are_refused(self):
        with self.assertRaises(ConfigError):
            Simulator(build_config(workload=[build_transfer().model_copy(update={"chain": "Z"})]))
        with self.assertRaises(ConfigError):
            Simulator(build_config(faults=[FaultSpec(kind=FaultKind.CRASH, node="n9", stage=CrashStage.PROVING)]))
        with self.assertRaises(ConfigError):
            Simulator(build_config(explore=ExploreConfig(broadcast_subset=["Z"])))
        with self.assertRaises(ConfigError):
            Simulator(build_config(nodes=NodeConfig(count=2, joiners=["n1"])))

    def test_partial_broadcast_must_reach_the_invoke_origin(self):
        partial = FaultSpec(kind=FaultKind.PARTIAL_BROADCAST, round=0, subset=["B"])
        with self.assertRaises(ConfigError):
            Simulator(build_config(faults=[partial]))
        Simulator(build_config(faults=[partial.model_copy(update={"subset": ["A"]})]))
        Simulator(build_config(faults=[partial.model_copy(update={"round": 1})]))

    def test_round_count_follows_workload_and_faults(self):
        cfg = build_config(
            workload=[build_transfer(2)],
            faults=[FaultSpec(kind=FaultKind.CRASH, node="@leader", round=0, stage=CrashStage.PROVING)],
        )
        self.assertEqual(cfg.total_rounds, 6)
        self.assertEqual(build_config(rounds=2).total_rounds, 2)


class RunTests(unittest.TestCase):
    def test_baseline_transfer_settles_on_both_chains(self):
        simulator = Simulator(load_scenario(SCENARIOS / "baseline_transfer.toml"))
        run = simulator.run()
        report = simulator.report(run)
        self.assertTrue(report.passed)
        self.assertEqual(simulator.chains["A"].state.ledger, {"alice": 7, CUSTODY: 103})
        self.assertEqual(simulator.chains["B"].state.ledger, {"bob": 3, CUSTODY: 97})
        replica = run.replicas["n0"]
        self.assertEqual(
            {account: replica.balance(account) for account in ("A/alice", "A/lp", "B/bob", "B/lp")},
            {"A/alice": 7, "A/lp": 103, "B/bob": 3, "B/lp": 97},
        )
        self.assertEqual(report.rounds[0].outcome, "finalized")
        self.assertEqual(len(set(report.final_roots.values())), 1)

    def test_every_shipped_scenario_passes(self):
        for path in sorted(SCENARIOS.glob("*.toml")):
            with self.subTest(scenario=path.name):
                _, report = run_scenario(load_scenario(path))
                self.assertTrue(report.passed, {name: v.detail for name, v in report.verdicts.items()})

    def test_crashed_leader_round_is_skipped_then_continued(self):
        simulator = Simulator(load_scenario(SCENARIOS / "crash_proving.toml"))
        run = simulator.run()
        self.assertEqual(simulator.rounds[0].outcome, "skipped")
        self.assertEqual(simulator.rounds[1].outcome, "finalized")
        self.assertEqual(simulator.report(run).verdict_of(PropertyName.LIVENESS), Verdict.PASS)
        self.assertEqual(simulator.chains["B"].state.ledger["bob"], 4)

    def test_dishonest_relay_ends_in_revoke(self):
        simulator = Simulator(load_scenario(SCENARIOS / "dishonest_relayer_revoked.toml"))
        run = simulator.run()
        report = simulator.report(run)
        self.assertTrue(report.passed, {name: v.detail for name, v in report.verdicts.items()})
        self.assertNotEqual(simulator.rounds[0].outcome, "finalized")
        finalized = [tx.id for call in simulator.chains["A"].state.finalized_log for tx in call.tx_data.txs]
        self.assertIn("revoke:A:0", finalized)
        self.assertNotIn("invoke:A:0", finalized)
        self.assertEqual(simulator.chains["A"].state.ledger, {"alice": 10, CUSTODY: 100})
        self.assertEqual(simulator.chains["A"].state.pending, {})
        self.assertEqual(simulator.chains["B"].state.ledger, {"bob": 0, CUSTODY: 100})

    def test_joiner_votes_after_registration(self):
        simulator = Simulator(load_scenario(SCENARIOS / "join.toml"))
        run = simulator.run()
        self.assertEqual(simulator.report(run).verdict_of(PropertyName.PERMISSIONLESS), Verdict.PASS)
        for proxy in run.proxies.values():
            self.assertEqual(proxy.voter_count, 5)
        producers = {summary.round: summary.producer for summary in simulator.report(run).rounds}
        self.assertEqual(producers[8], "j0")

    def test_permissionless_is_skipped_without_joiners(self):
        _, report = run_scenario(build_config())
        self.assertEqual(report.verdict_of(PropertyName.PERMISSIONLESS), Verdict.SKIPPED)

    def test_random_faulty_runs_stay_safe(self):
        for seed in range(50):
            with self.subTest(seed=seed):
                _, report = run_scenario(build_random_faulty_config(seed))
                self.assertEqual(report.verdict_of(PropertyName.SAFETY), Verdict.PASS, report.verdicts[PropertyName.SAFETY].detail)
                self.assertEqual(report.verdict_of(PropertyName.LINEARIZABILITY), Verdict.PASS)

    def test_liveness_within_fault_bound(self):
        four = build_config(
            faults=[FaultSpec(kind=FaultKind.CRASH, node="@leader", round=0, stage=CrashStage.PROVING)],
        )
        seven = build_config(
            nodes=NodeConfig(count=7),
            faults=[
                FaultSpec(kind=FaultKind.CRASH, node="@leader", round=0, stage=CrashStage.PROVING),
                FaultSpec(kind=FaultKind.CRASH, node="@leader", round=1, stage=CrashStage.PROVING),
            ],
        )
        for cfg in (four, seven):
            with self.subTest(nodes=cfg.nodes.count):
                simulator = Simulator(cfg)
                report = simulator.report(simulator.run())
                self.assertEqual(report.verdict_of(PropertyName.LIVENESS), Verdict.PASS)
                self.assertEqual(report.verdict_of(PropertyName.SAFETY), Verdict.PASS)
                self.assertEqual(simulator.chains["B"].state.ledger["bob"], 3)

    def test_same_seed_same_trace(self):
        with tempfile.TemporaryDirectory() as tmp:
            outputs = []
            for index in range(2):
                events, _ = run_scenario(load_scenario(SCENARIOS / "random_workload.toml"))
                path = Path(tmp) / f"trace{index}.jsonl"
                write_trace(events, path)
                outputs.append(path.read_bytes())
            self.assertEqual(outputs[0], outputs[1])
            first = json.loads(outputs[0].decode("utf-8").splitlines()[0])
            self.assertEqual(first["kind"], TraceKind.ROUND_BEGIN.value)
            self.assertEqual(list(first), sorted(first))

    def test_round_status_reflects_chain_records(self):
        simulator = Simulator(build_config())
        summary = simulator.play_round(0)
        self.assertEqual(summary.outcome, "finalized")
        self.assertEqual(simulator.round_status(0), {"A": RoundStatus.FINALIZED, "B": RoundStatus.FINALIZED})
        self.assertEqual(simulator.round_status(1), {"A": RoundStatus.OPEN, "B": RoundStatus.OPEN})


class ExploreTests(unittest.TestCase):
    def test_race_converges_with_revoke_skip(self):
        report = enumerate_interleavings(load_scenario(SCENARIOS / "race.toml"))
        self.assertEqual(report.checks["convergence"].verdict, Verdict.PASS, report.checks["convergence"].detail)
        self.assertLessEqual(report.explored_states, 10_000)
        self.assertGreater(report.terminal_branches, 1)
        self.assertTrue(report.passed)

    def test_race_diverges_without_revoke_skip(self):
        report = enumerate_interleavings(load_scenario(SCENARIOS / "race.toml"), honor_revoke_skip=False)
        self.assertEqual(report.checks["convergence"].verdict, Verdict.FAIL)
        self.assertFalse(report.passed)

    def test_single_chain_without_race_has_one_ordering(self):
        cfg = ScenarioConfig(
            name="single",
            seed=6,
            chains=[ChainConfig(id="A", accounts={"alice": 10, "amy": 0})],
            workload=[WorkloadItem(round=0, kind="pure_transfer", src="A/alice", dst="A/amy", amount=4)],
            explore=ExploreConfig(race=False),
        )
        report = enumerate_interleavings(cfg)
        self.assertEqual(report.terminal_branches, 1)
        self.assertEqual(report.checks["convergence"].verdict, Verdict.PASS)
        _, run_report = run_scenario(cfg)
        self.assertEqual(report.final_roots, run_report.final_roots)

    def test_bound_is_enforced(self):
        with self.assertRaises(BoundExceeded):
            enumerate_interleavings(load_scenario(SCENARIOS / "race.toml"), bound=2)


if __name__ == "__main__":
    unittest.main()
