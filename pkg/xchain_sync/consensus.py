# -*- coding = utf-8 -*-
# @Time: 2026/08/22 16:05
# @Author: xchain-sync developers
# @Site:
# @File: consensus.py
"""Voter registry, leader election with signed tickets, block production and
the skip / revoke-skip round machinery."""
from __future__ import annotations

from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

from pydantic import Field

from xchain_sync.common.crypto import NodeSigner, tagged_digest
from xchain_sync.common.enums import RoundPhase, TicketKind, TxSourceKind
from xchain_sync.common.errors import (
    DuplicateVoter,
    InsufficientVotes,
    MalformedTx,
    PhaseError,
    RevokeSkipPrecondition,
    SimFailure,
    UnregisteredVoter,
)
from xchain_sync.common.logger import logger
from xchain_sync.merkle_state import (
    ARITY,
    EMPTY_LEAF,
    TOMBSTONE,
    GlobalState,
    StateLayout,
    StateTree,
    to_digits,
    update_leaf,
)
from xchain_sync.proof_engine import aggregate, prove_consensus, prove_execution, ticket_message, verify_consensus
from xchain_sync.schema.base import PinnedHash, PrettyPrintBaseModel
from xchain_sync.schema.chain_model import Block, BlockObservedOnChain, RevokeSkipSignal, SkipSignal
from xchain_sync.schema.proof_model import ConsensusProof, VoteTicket
from xchain_sync.schema.state_model import MembershipProof
from xchain_sync.schema.tx_model import BundledTransaction, DroppedTx, TxBatch
from xchain_sync.tx_registry import build_round_record


class VoterRegistry:
    """Merkle tree of voter public keys; its root is the pinned voter root."""

    __slots__ = ("tree", "slots", "pubkeys", "active", "next_slot")

    def __init__(
        self,
        tree: StateTree,
        slots: Dict[str, int] | None = None,
        pubkeys: Dict[str, bytes] | None = None,
        active: Iterable[str] = (),
        next_slot: int = 0,
    ):
        self.tree = tree
        self.slots = dict(slots or {})
        self.pubkeys = dict(pubkeys or {})
        self.active = frozenset(active)
        self.next_slot = next_slot

    @classmethod
    def empty(cls, depth: int, arity: int = ARITY) -> "VoterRegistry":
        return cls(StateTree(depth, arity))

    @classmethod
    def genesis(cls, layout: StateLayout, voters: Sequence[Tuple[str, bytes]] = ()) -> "VoterRegistry":
        registry = cls.empty(layout.registry_depth, layout.arity)
        for node, pubkey in voters:
            registry = register_voter(registry, node, pubkey)
        return registry

    @property
    def root(self) -> bytes:
        return self.tree.root

    @property
    def n_active(self) -> int:
        return len(self.active)

    def slot_path(self, slot: int) -> Tuple[int, ...]:
        return to_digits(slot, self.tree.depth, self.tree.arity)

    def is_active(self, node: str) -> bool:
        return node in self.active

    def active_nodes(self) -> List[str]:
        return sorted(self.active, key=lambda node: self.slots[node])

    def pubkey_of(self, node: str) -> bytes:
        if node not in self.active:
            raise UnregisteredVoter(f"{node} is not an active voter")
        return self.pubkeys[node]

    def membership(self, node: str) -> MembershipProof:
        pubkey = self.pubkey_of(node)
        path = self.slot_path(self.slots[node])
        return MembershipProof(path=path, pubkey=pubkey, siblings=self.tree.siblings(path))

    def root_without(self, node: str) -> bytes:
        """Registry root as seen by a voter that never synced its own registration."""
        if node not in self.slots:
            return self.root
        tree, _ = update_leaf(self.tree, self.slot_path(self.slots[node]), EMPTY_LEAF)
        return tree.root

    def __repr__(self) -> str:
        return f"VoterRegistry(active={self.active_nodes()}, root={self.root.hex()[:16]})"


def register_voter(
    registry: VoterRegistry,
    node: str,
    pubkey: bytes,
    slot: int | None = None,
) -> VoterRegistry:
    if node in registry.active:
        raise DuplicateVoter(f"{node} is already registered")
    slot = registry.next_slot if slot is None else slot
    path = registry.slot_path(slot)
    if registry.tree.get(path) != EMPTY_LEAF:
        raise DuplicateVoter(f"voter slot {slot} is already used")
    tree, _ = update_leaf(registry.tree, path, bytes(pubkey))
    return VoterRegistry(
        tree,
        slots={**registry.slots, node: slot},
        pubkeys={**registry.pubkeys, node: bytes(pubkey)},
        active=registry.active | {node},
        next_slot=max(registry.next_slot, slot + 1),
    )


def deregister_voter(registry: VoterRegistry, node: str) -> VoterRegistry:
    """Voter quit: the leaf is tombstoned so other members keep their openings."""
    if node not in registry.active:
        raise UnregisteredVoter(f"{node} is not an active voter")
    tree, _ = update_leaf(registry.tree, registry.slot_path(registry.slots[node]), TOMBSTONE)
    return VoterRegistry(
        tree,
        slots=registry.slots,
        pubkeys=registry.pubkeys,
        active=registry.active - {node},
        next_slot=registry.next_slot,
    )


def canonical_candidate(registry: VoterRegistry, round_id: int, excluded: Iterable[str] = ()) -> str:
    """The node every honest voter endorses: argmin of H(round, pubkey)."""
    active = registry.active_nodes()
    if not active:
        raise UnregisteredVoter("registry has no active voters")
    excluded = set(excluded)
    pool = [node for node in active if node not in excluded] or active
    return min(pool, key=lambda node: (tagged_digest("candidate", round_id, registry.pubkeys[node]), node))


def cast_vote(
    node: str,
    signer: NodeSigner,
    round_id: int,
    registry: VoterRegistry,
    registry_root: bytes | None = None,
    kind: TicketKind = TicketKind.ELECT,
    excluded: Iterable[str] = (),
) -> VoteTicket:
    if not registry.is_active(node) or registry.pubkey_of(node) != signer.public_key:
        raise UnregisteredVoter(f"{node} cannot vote with this key")
    voter_root = registry.root if registry_root is None else bytes(registry_root)
    candidate = canonical_candidate(registry, round_id, excluded) if kind == TicketKind.ELECT else ""
    return VoteTicket(
        kind=kind,
        voter=node,
        candidate=candidate,
        round=round_id,
        voter_root=voter_root,
        signature=signer.sign(ticket_message(kind, round_id, voter_root, candidate, node)),
        membership=registry.membership(node),
    )


_TRANSITIONS: Dict[RoundPhase, frozenset] = {
    RoundPhase.VOTING: frozenset(
        {RoundPhase.PRODUCING, RoundPhase.BROADCASTING, RoundPhase.SKIP_VOTING, RoundPhase.FINALIZED, RoundPhase.SKIPPED}
    ),
    RoundPhase.PRODUCING: frozenset(
        {RoundPhase.BROADCASTING, RoundPhase.SKIP_VOTING, RoundPhase.FINALIZED, RoundPhase.SKIPPED}
    ),
    RoundPhase.BROADCASTING: frozenset(
        {RoundPhase.FINALIZED, RoundPhase.SKIP_VOTING, RoundPhase.REVOKE_SKIP_VOTING, RoundPhase.SKIPPED}
    ),
    RoundPhase.SKIP_VOTING: frozenset(
        {RoundPhase.BROADCASTING, RoundPhase.REVOKE_SKIP_VOTING, RoundPhase.FINALIZED, RoundPhase.SKIPPED}
    ),
    RoundPhase.REVOKE_SKIP_VOTING: frozenset({RoundPhase.BROADCASTING, RoundPhase.FINALIZED}),
    RoundPhase.FINALIZED: frozenset(),
    RoundPhase.SKIPPED: frozenset(),
}

TERMINAL_PHASES = frozenset({RoundPhase.FINALIZED, RoundPhase.SKIPPED})


class RoundState(PrettyPrintBaseModel):
    """One node's view of a round; single writer."""

    round: int
    voter_root: PinnedHash
    n_voters: int
    candidate: str = ""
    phase: RoundPhase = RoundPhase.VOTING
    tickets: List[VoteTicket] = Field(default_factory=list)
    skip_tickets: List[VoteTicket] = Field(default_factory=list)
    revoke_tickets: List[VoteTicket] = Field(default_factory=list)
    proof: Optional[ConsensusProof] = None
    skip_signal: Optional[SkipSignal] = None
    revoke_signal: Optional[RevokeSkipSignal] = None

    @property
    def terminal(self) -> bool:
        return self.phase in TERMINAL_PHASES

    def can_enter(self, phase: RoundPhase) -> bool:
        return phase == self.phase or phase in _TRANSITIONS[self.phase]

    def advance(self, phase: RoundPhase) -> None:
        if not self.can_enter(phase):
            raise PhaseError(f"round {self.round}: {self.phase.value} -> {phase.value} is not allowed")
        self.phase = phase


def _remember(bucket: List[VoteTicket], tickets: Iterable[VoteTicket]) -> None:
    seen = {(ticket.voter, ticket.signature) for ticket in bucket}
    for ticket in tickets:
        if (ticket.voter, ticket.signature) not in seen:
            bucket.append(ticket)
            seen.add((ticket.voter, ticket.signature))


def collect_and_elect(round_state: RoundState, tickets: Iterable[VoteTicket]) -> ConsensusProof | None:
    """Count the new tickets; the proof once a candidate reaches two thirds, else None."""
    _remember(round_state.tickets, tickets)
    if round_state.proof is not None:
        return round_state.proof
    try:
        proof = prove_consensus(round_state.round, round_state.voter_root, round_state.tickets, round_state.n_voters)
    except InsufficientVotes:
        return None
    round_state.proof = proof
    return proof


class BlockProduction(NamedTuple):
    block: Block
    state_after: GlobalState
    dropped: List[DroppedTx]


def select_batch(mempool: Sequence[BundledTransaction], max_batch: int | None = None) -> List[BundledTransaction]:
    """FIFO pick; invoke-headed txs come from the first origin chain seen only."""
    origin = None
    picked = []
    for tx in mempool:
        if tx.source.kind == TxSourceKind.INVOKE_HEADED:
            if origin is None:
                origin = tx.source.chain
            elif tx.source.chain != origin:
                continue
        picked.append(tx)
        if max_batch is not None and len(picked) >= max_batch:
            break
    return picked


def produce_block(
    winner: str,
    proof: ConsensusProof,
    mempool: Sequence[BundledTransaction],
    state: GlobalState,
    max_batch: int | None = None,
    record_round: bool = False,
) -> BlockProduction:
    if proof.kind != TicketKind.ELECT or proof.winner != winner:
        raise PhaseError(f"consensus proof does not elect {winner}")
    candidates = select_batch(mempool, max_batch)
    if record_round:
        candidates = [build_round_record(proof.round, winner)] + candidates
    cursor = state
    included = []
    transcripts = []
    dropped = []
    for tx in candidates:
        try:
            cursor, transcript = prove_execution(cursor, tx)
        except (SimFailure, MalformedTx) as exc:
            logger.warning("round {} drops {}: {}", proof.round, tx.id, exc)
            dropped.append(DroppedTx(tx=tx, reason=str(exc)))
            continue
        included.append(tx)
        transcripts.append(transcript)
    block = Block(
        round=proof.round,
        producer=winner,
        txs=TxBatch(txs=included, dropped=dropped),
        pre_root=state.root,
        post_root=cursor.root,
        proof=aggregate(proof, transcripts, batch_root_before=state.root),
    )
    return BlockProduction(block, cursor, dropped)


def initiate_skip(round_state: RoundState, tickets: Iterable[VoteTicket]) -> SkipSignal | None:
    _remember(round_state.skip_tickets, tickets)
    if round_state.skip_signal is not None:
        return round_state.skip_signal
    try:
        proof = prove_consensus(
            round_state.round,
            round_state.voter_root,
            round_state.skip_tickets,
            round_state.n_voters,
            kind=TicketKind.SKIP,
            winner="",
        )
    except InsufficientVotes:
        return None
    round_state.skip_signal = SkipSignal(round=round_state.round, proof=proof)
    return round_state.skip_signal


def revoke_skip(
    round_state: RoundState,
    evidence: BlockObservedOnChain | None,
    tickets: Iterable[VoteTicket],
) -> RevokeSkipSignal | None:
    """Revoke-skip needs a block some native chain already accepted for this round."""
    if evidence is None or evidence.round != round_state.round or evidence.call.rid != round_state.round:
        raise RevokeSkipPrecondition(f"no recorded block for round {round_state.round}")
    if not verify_consensus(
        evidence.call.verify_data.consensus, round_state.voter_root, round_state.round, round_state.n_voters
    ):
        raise RevokeSkipPrecondition(f"recorded block for round {round_state.round} carries no valid election")
    _remember(round_state.revoke_tickets, tickets)
    if round_state.revoke_signal is not None:
        return round_state.revoke_signal
    try:
        proof = prove_consensus(
            round_state.round,
            round_state.voter_root,
            round_state.revoke_tickets,
            round_state.n_voters,
            kind=TicketKind.REVOKE_SKIP,
            winner="",
        )
    except InsufficientVotes:
        return None
    round_state.revoke_signal = RevokeSkipSignal(round=round_state.round, proof=proof, evidence=evidence.call)
    return round_state.revoke_signal
