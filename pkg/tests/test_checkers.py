from __future__ import annotations

import random
import unittest
from pathlib import Path
from typing import List, Tuple

from xchain_sync.checkers import (
    RunArtifacts,
    check_atomicity,
    check_custody,
    check_linearizability,
    check_liveness,
    check_permissionless,
    check_projection,
    check_replica_convergence,
    check_revoke_exclusivity,
    check_safety,
    deadline_violations,
    safety_checks,
)
from xchain_sync.common.crypto import NodeSigner
from xchain_sync.common.enums import SideEffectKind, Verdict
from xchain_sync.consensus import VoterRegistry, cast_vote, produce_block
from xchain_sync.merkle_state import GlobalState, StateLayout
from xchain_sync.native_chain import CUSTODY
from xchain_sync.proof_engine import prove_consensus
from xchain_sync.schema.chain_model import FinalizeCall, SideEffectReceipt
from xchain_sync.schema.sim_model import ChainConfig, ExecutionTrace, ScenarioConfig, Submission, WorkloadItem
from xchain_sync.sim_harness import Simulator, load_scenario
from xchain_sync.tx_registry import build_pure_transfer

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"
ACCOUNTS = {"A": ["alice", "amy", "lp"], "B": ["bob", "lp"], "C": ["carol", "lp"]}


def build_baseline_config() -> ScenarioConfig:
    return ScenarioConfig(
        name="checker-baseline",
        seed=1,
        chains=[
            ChainConfig(id="A", wallets={"alice": 10}, custody=100, accounts={"alice": 10, "lp": 100}),
            ChainConfig(id="B", wallets={"bob": 0}, custody=100, accounts={"bob": 0, "lp": 100}),
        ],
        workload=[WorkloadItem(round=0, kind="transfer", chain="A", sender="alice", recipient="B/bob", amount=3)],
    )


def build_run() -> RunArtifacts:
    return Simulator(build_baseline_config()).run()


def build_random_trace(seed: int) -> Tuple[GlobalState, ExecutionTrace]:
    """A few blocks of random pure transfers produced by a single voter."""
    rng = random.Random(seed)
    layout = StateLayout(chains=list(ACCOUNTS), accounts=ACCOUNTS, depth=8)
    signer = NodeSigner.from_name("n0")
    registry = VoterRegistry.genesis(layout, [("n0", signer.public_key)])
    names = layout.account_names()
    genesis = GlobalState.genesis(
        layout, {name: rng.randint(0, 20) for name in names}, voter_keys=[signer.public_key]
    )
    state = genesis
    calls: List[FinalizeCall] = []
    for round_id in range(rng.randint(1, 4)):
        txs = []
        for index in range(rng.randint(0, 5)):
            src, dst = rng.sample(names, 2)
            txs.append(build_pure_transfer(f"pure:{round_id}:{index}", src, dst, rng.randint(1, 10)))
        election = prove_consensus(round_id, registry.root, [cast_vote("n0", signer, round_id, registry)], 1)
        production = produce_block("n0", election, txs, state)
        block = production.block
        calls.append(
            FinalizeCall(l2account=0, tx_data=block.txs, verify_data=block.proof, vid="n0", nonce=round_id, rid=round_id)
        )
        state = production.state_after
    final = {chain: state.root.hex() for chain in layout.chains}
    return genesis, ExecutionTrace(finalized=calls, final_roots=final)


class SafetyCheckTests(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.artifacts = build_run()

    def test_honest_run_passes_every_check(self):
        checks = safety_checks(self.artifacts)
        for name, verdict in checks.items():
            with self.subTest(check=name):
                self.assertEqual(verdict.verdict, Verdict.PASS, verdict.detail)
        self.assertEqual(check_safety(checks).verdict, Verdict.PASS)

    def test_diverging_logs_break_atomicity(self):
        proxies = dict(self.artifacts.proxies)
        proxies["B"] = proxies["B"].model_copy(update={"finalized_log": proxies["B"].finalized_log[:-1]})
        tampered = RunArtifacts(**{**self.artifacts.__dict__, "proxies": proxies})
        verdict = check_atomicity(tampered)
        self.assertEqual(verdict.verdict, Verdict.FAIL)
        self.assertLessEqual(len(verdict.counterexample), 20)
        self.assertEqual(check_safety(safety_checks(tampered)).verdict, Verdict.FAIL)

    def test_minted_funds_break_custody(self):
        proxies = dict(self.artifacts.proxies)
        ledger = dict(proxies["B"].ledger)
        ledger["bob"] += 1
        proxies["B"] = proxies["B"].model_copy(update={"ledger": ledger})
        tampered = RunArtifacts(**{**self.artifacts.__dict__, "proxies": proxies})
        self.assertEqual(check_custody(tampered).verdict, Verdict.FAIL)

    def test_negative_custody_is_reported(self):
        proxies = dict(self.artifacts.proxies)
        ledger = dict(proxies["A"].ledger)
        ledger["alice"] += ledger[CUSTODY] + 1
        ledger[CUSTODY] = -1
        proxies["A"] = proxies["A"].model_copy(update={"ledger": ledger})
        tampered = RunArtifacts(**{**self.artifacts.__dict__, "proxies": proxies})
        self.assertEqual(check_custody(tampered).verdict, Verdict.FAIL)

    def test_disagreeing_replica_is_reported(self):
        replicas = dict(self.artifacts.replicas)
        replicas["n0"] = self.artifacts.genesis
        tampered = RunArtifacts(**{**self.artifacts.__dict__, "replicas": replicas})
        self.assertEqual(check_replica_convergence(tampered).verdict, Verdict.FAIL)

    def test_projection_mismatch_is_reported(self):
        proxies = dict(self.artifacts.proxies)
        proxies["A"] = proxies["A"].model_copy(update={"partial_leaves": {}})
        tampered = RunArtifacts(**{**self.artifacts.__dict__, "proxies": proxies})
        self.assertEqual(check_projection(tampered).verdict, Verdict.FAIL)

    def test_refund_of_continued_invocation_is_reported(self):
        proxies = dict(self.artifacts.proxies)
        receipts = list(proxies["A"].receipts)
        index = next(i for i, r in enumerate(receipts) if r.kind == SideEffectKind.REMOVE_PENDING_INVOCATION)
        self.assertFalse(receipts[index].args["refunded"])
        receipts[index] = receipts[index].model_copy(update={"args": {**receipts[index].args, "refunded": True}})
        proxies["A"] = proxies["A"].model_copy(update={"receipts": receipts})
        tampered = RunArtifacts(**{**self.artifacts.__dict__, "proxies": proxies})
        self.assertEqual(check_revoke_exclusivity(tampered).verdict, Verdict.FAIL)


class LivenessCheckTests(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.artifacts = build_run()

    def test_baseline_transfer_is_live(self):
        self.assertEqual(check_liveness(self.artifacts).verdict, Verdict.PASS)

    def test_unresolved_submission_fails(self):
        submissions = self.artifacts.submissions + [Submission(key="pure:9:9", round=0)]
        tampered = RunArtifacts(**{**self.artifacts.__dict__, "submissions": submissions})
        self.assertEqual(check_liveness(tampered).verdict, Verdict.FAIL)

    def test_slow_resolution_fails_bound(self):
        late = [submission.model_copy(update={"round": -5}) for submission in self.artifacts.submissions]
        tampered = RunArtifacts(**{**self.artifacts.__dict__, "submissions": late})
        self.assertEqual(check_liveness(tampered).verdict, Verdict.FAIL)

    def test_permissionless_skipped_without_joiners(self):
        self.assertEqual(check_permissionless(self.artifacts).verdict, Verdict.SKIPPED)
        tampered = RunArtifacts(**{**self.artifacts.__dict__, "joiners": ["j0"]})
        self.assertEqual(check_permissionless(tampered).verdict, Verdict.FAIL)

    def test_deadline_report_lists_late_removals(self):
        def removal(invocation_id: int, finalized_height: int) -> SideEffectReceipt:
            return SideEffectReceipt(
                kind=SideEffectKind.REMOVE_PENDING_INVOCATION,
                chain="A",
                round=0,
                tx_id=f"invoke:A:{invocation_id}",
                l2account=0,
                args={"invocation_id": invocation_id, "recorded_height": 3, "finalized_height": finalized_height},
            )

        proxy = self.artifacts.proxies["A"].model_copy(update={"receipts": [removal(0, 13), removal(1, 14)]})
        self.assertEqual(deadline_violations({"A": proxy}, 20, 10), ["A:1 finalized after 11 blocks"])


class PermissionlessCheckTests(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.artifacts = Simulator(load_scenario(SCENARIOS / "join.toml")).run()

    def test_joiner_votes_and_is_elected(self):
        verdict = check_permissionless(self.artifacts)
        self.assertEqual(verdict.verdict, Verdict.PASS, verdict.detail)
        self.assertIn("j0", [call.vid for call in self.artifacts.finalized_order()])

    def test_joiner_that_never_wins_fails(self):
        events = [event for event in self.artifacts.events if event.detail.get("candidate") != "j0"]
        proxies = {
            chain: proxy.model_copy(update={"finalized_log": [call for call in proxy.finalized_log if call.vid != "j0"]})
            for chain, proxy in self.artifacts.proxies.items()
        }
        tampered = RunArtifacts(**{**self.artifacts.__dict__, "events": events, "proxies": proxies})
        verdict = check_permissionless(tampered)
        self.assertEqual(verdict.verdict, Verdict.FAIL)
        self.assertIn("never elected", verdict.detail)


class LinearizabilityTests(unittest.TestCase):
    def test_random_workloads_linearize(self):
        for seed in range(100):
            with self.subTest(seed=seed):
                genesis, trace = build_random_trace(seed)
                self.assertEqual(check_linearizability(trace, genesis).verdict, Verdict.PASS)

    def test_corrupted_final_root_fails(self):
        genesis, trace = build_random_trace(7)
        forged = trace.model_copy(update={"final_roots": {**trace.final_roots, "B": "00" * 32}})
        self.assertEqual(check_linearizability(forged, genesis).verdict, Verdict.FAIL)

    def test_reordered_blocks_fail(self):
        for seed in range(100):
            genesis, trace = build_random_trace(seed)
            if len(trace.finalized) >= 2 and any(call.tx_data.txs for call in trace.finalized):
                break
        forged = trace.model_copy(update={"finalized": list(reversed(trace.finalized))})
        self.assertEqual(check_linearizability(forged, genesis).verdict, Verdict.FAIL)

    def test_simulated_run_linearizes(self):
        run = build_run()
        self.assertEqual(check_linearizability(run.trace(), run.genesis).verdict, Verdict.PASS)


if __name__ == "__main__":
    unittest.main()
