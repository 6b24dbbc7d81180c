from __future__ import annotations

import unittest

from xchain_sync.common.crypto import NodeSigner
from xchain_sync.common.enums import RoundPhase, TicketKind
from xchain_sync.common.errors import DuplicateVoter, PhaseError, RevokeSkipPrecondition, UnregisteredVoter
from xchain_sync.consensus import (
    RoundState,
    VoterRegistry,
    canonical_candidate,
    cast_vote,
    collect_and_elect,
    deregister_voter,
    initiate_skip,
    produce_block,
    register_voter,
    revoke_skip,
    select_batch,
)
from xchain_sync.merkle_state import GlobalState, StateLayout
from xchain_sync.proof_engine import verify_aggregated, verify_consensus
from xchain_sync.schema.chain_model import BlockObservedOnChain, FinalizeCall
from xchain_sync.tx_registry import build_pure_transfer, build_transfer_continuation


def build_layout() -> StateLayout:
    return StateLayout(
        chains=["A", "B", "C"],
        accounts={"A": ["alice", "lp"], "B": ["bob", "lp"], "C": ["carol", "lp"]},
        depth=8,
    )


def build_voters(count: int = 4):
    signers = {f"n{index}": NodeSigner.from_name(f"n{index}") for index in range(count)}
    registry = VoterRegistry.genesis(build_layout(), [(node, signer.public_key) for node, signer in signers.items()])
    return signers, registry


def build_round(registry: VoterRegistry, round_id: int = 0) -> RoundState:
    return RoundState(round=round_id, voter_root=registry.root, n_voters=registry.n_active)


def build_elected(round_id: int = 0):
    signers, registry = build_voters()
    round_state = build_round(registry, round_id)
    tickets = [cast_vote(node, signers[node], round_id, registry) for node in signers]
    proof = collect_and_elect(round_state, tickets)
    return signers, registry, round_state, proof


class VoterRegistryTests(unittest.TestCase):
    def test_register_and_quit(self):
        signers, registry = build_voters()
        joiner = NodeSigner.from_name("j0")
        grown = register_voter(registry, "j0", joiner.public_key)
        self.assertEqual(grown.n_active, 5)
        self.assertNotEqual(grown.root, registry.root)
        self.assertEqual(grown.slots["j0"], 4)
        with self.assertRaises(DuplicateVoter):
            register_voter(grown, "j0", joiner.public_key)
        shrunk = deregister_voter(grown, "n1")
        self.assertFalse(shrunk.is_active("n1"))
        self.assertEqual(shrunk.n_active, 4)
        with self.assertRaises(UnregisteredVoter):
            shrunk.membership("n1")
        with self.assertRaises(DuplicateVoter):
            register_voter(shrunk, "n9", joiner.public_key, slot=1)

    def test_root_without_matches_pre_registration_root(self):
        _, registry = build_voters()
        grown = register_voter(registry, "j0", NodeSigner.from_name("j0").public_key)
        self.assertEqual(grown.root_without("j0"), registry.root)

    def test_unregistered_node_cannot_vote(self):
        signers, registry = build_voters()
        with self.assertRaises(UnregisteredVoter):
            cast_vote("j0", NodeSigner.from_name("j0"), 0, registry)
        with self.assertRaises(UnregisteredVoter):
            cast_vote("n0", signers["n1"], 0, registry)


class ElectionTests(unittest.TestCase):
    def test_canonical_candidate_is_deterministic_and_respects_exclusion(self):
        _, registry = build_voters()
        first = canonical_candidate(registry, 5)
        self.assertEqual(first, canonical_candidate(registry, 5))
        second = canonical_candidate(registry, 5, excluded=[first])
        self.assertNotEqual(first, second)
        self.assertEqual(canonical_candidate(registry, 5, excluded=registry.active_nodes()), first)

    def test_election_needs_two_thirds(self):
        signers, registry = build_voters()
        round_state = build_round(registry)
        tickets = [cast_vote(node, signers[node], 0, registry) for node in ["n0", "n1"]]
        self.assertIsNone(collect_and_elect(round_state, tickets))
        proof = collect_and_elect(round_state, [cast_vote("n2", signers["n2"], 0, registry)])
        self.assertIsNotNone(proof)
        self.assertEqual(proof.winner, canonical_candidate(registry, 0))
        self.assertTrue(verify_consensus(proof, registry.root, 0, 4))

    def test_phase_transitions(self):
        _, registry = build_voters()
        round_state = build_round(registry)
        round_state.advance(RoundPhase.PRODUCING)
        round_state.advance(RoundPhase.BROADCASTING)
        round_state.advance(RoundPhase.SKIP_VOTING)
        round_state.advance(RoundPhase.REVOKE_SKIP_VOTING)
        round_state.advance(RoundPhase.FINALIZED)
        self.assertTrue(round_state.terminal)
        with self.assertRaises(PhaseError):
            round_state.advance(RoundPhase.VOTING)


class BlockProductionTests(unittest.TestCase):
    def test_batch_holds_invocations_from_one_origin(self):
        mempool = [
            build_transfer_continuation("A", 0, "alice", "B/bob", 1),
            build_transfer_continuation("B", 0, "bob", "A/alice", 1),
            build_pure_transfer("pure:0", "C/carol", "A/alice", 1),
            build_transfer_continuation("A", 1, "alice", "C/carol", 1),
        ]
        picked = select_batch(mempool)
        self.assertEqual([tx.id for tx in picked], ["invoke:A:0", "pure:0", "invoke:A:1"])
        self.assertEqual(len(select_batch(mempool, max_batch=2)), 2)

    def test_produced_block_verifies_and_drops_failures(self):
        _, registry, _, proof = build_elected()
        state = GlobalState.genesis(build_layout(), {"A/alice": 10, "A/lp": 100, "B/lp": 100})
        mempool = [
            build_transfer_continuation("A", 0, "alice", "B/bob", 3),
            build_pure_transfer("pure:0", "A/alice", "C/carol", 50),
        ]
        production = produce_block(proof.winner, proof, mempool, state)
        block = production.block
        self.assertTrue(block.check_invariants())
        self.assertEqual([tx.id for tx in block.txs.txs], ["invoke:A:0"])
        self.assertEqual([item.tx.id for item in production.dropped], ["pure:0"])
        self.assertEqual(production.state_after.balance("B/bob"), 3)
        self.assertTrue(verify_aggregated(block.proof, block.txs.txs, registry.root, 0, 4, state.layout))

    def test_round_record_is_prepended(self):
        _, _, _, proof = build_elected(round_id=2)
        state = GlobalState.genesis(build_layout(), {"A/alice": 10})
        block = produce_block(proof.winner, proof, [], state, record_round=True).block
        self.assertEqual([tx.id for tx in block.txs.txs], ["round:2"])
        self.assertNotEqual(block.post_root, block.pre_root)

    def test_only_the_elected_node_produces(self):
        _, _, _, proof = build_elected()
        other = next(node for node in ["n0", "n1", "n2", "n3"] if node != proof.winner)
        with self.assertRaises(PhaseError):
            produce_block(other, proof, [], GlobalState.genesis(build_layout()))


class SkipTests(unittest.TestCase):
    def test_skip_signal_needs_quorum(self):
        signers, registry = build_voters()
        round_state = build_round(registry, 1)
        votes = [cast_vote(node, signers[node], 1, registry, kind=TicketKind.SKIP) for node in signers]
        self.assertIsNone(initiate_skip(round_state, votes[:2]))
        signal = initiate_skip(round_state, votes[2:3])
        self.assertIsNotNone(signal)
        self.assertTrue(verify_consensus(signal.proof, registry.root, 1, 4, kind=TicketKind.SKIP))

    def test_revoke_skip_requires_recorded_block(self):
        signers, registry, round_state, proof = build_elected()
        votes = [cast_vote(node, signers[node], 0, registry, kind=TicketKind.REVOKE_SKIP) for node in signers]
        with self.assertRaises(RevokeSkipPrecondition):
            revoke_skip(round_state, None, votes)
        block = produce_block(proof.winner, proof, [], GlobalState.genesis(build_layout())).block
        call = FinalizeCall(l2account=0, tx_data=block.txs, verify_data=block.proof, vid=block.producer, nonce=0, rid=0)
        evidence = BlockObservedOnChain(chain="A", round=0, call=call)
        signal = revoke_skip(round_state, evidence, votes)
        self.assertIsNotNone(signal)
        self.assertEqual(signal.evidence, call)
        late = build_round(registry, 1)
        with self.assertRaises(RevokeSkipPrecondition):
            revoke_skip(late, evidence, votes)


if __name__ == "__main__":
    unittest.main()
