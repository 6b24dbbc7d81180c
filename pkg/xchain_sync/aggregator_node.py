# -*- coding = utf-8 -*-
# @Time: 2026/08/28 15:27
# @Author: xchain-sync developers
# @Site:
# @File: aggregator_node.py
"""One aggregator-chain node: relayer, mempool, round driver and finalizer."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Sequence, Set

from xchain_sync.codec import digest_call, digest_consensus
from xchain_sync.common.crypto import NodeSigner, sha256, tagged_digest, verify_signature
from xchain_sync.common.enums import (
    ChainEventKind,
    CrashStage,
    RoundOutcome,
    RoundPhase,
    RoundStatus,
    SchemaId,
    TicketKind,
    TimerKind,
    TraceKind,
    TxSourceKind,
)
from xchain_sync.common.errors import (
    BadRelayerSignature,
    DuplicateVoter,
    MalformedTx,
    RevokeSkipPrecondition,
    SyncError,
    UnregisteredVoter,
)
from xchain_sync.common.logger import logger
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
)
from xchain_sync.merkle_state import GlobalState, StateLayout
from xchain_sync.network import SimNetwork
from xchain_sync.proof_engine import prove_execution, verify_ticket
from xchain_sync.schema.chain_model import BlockObservedOnChain, ChainEvent, FinalizeCall
from xchain_sync.schema.net_model import (
    ChainEventMsg,
    ClientTxMsg,
    FinalizeMsg,
    RelayedEvent,
    RevokeSkipMsg,
    RevokeSkipVoteMsg,
    SkipMsg,
    SkipVoteMsg,
    TimerMsg,
    VoteMsg,
)
from xchain_sync.schema.proof_model import VoteTicket
from xchain_sync.schema.sim_model import NodeFaults, NodeSettings
from xchain_sync.schema.tx_model import BundledTransaction
from xchain_sync.tx_registry import build_revoke_record, build_transfer_continuation, validate_tx

REBROADCAST_LIMIT = 3


def l2account(node_id: str) -> int:
    return int.from_bytes(sha256(node_id.encode())[:8], "little")


def is_revoke_record(tx: BundledTransaction) -> bool:
    return tx.source.kind == TxSourceKind.INVOKE_HEADED and bool(tx.steps[0].args.get("revoked"))


def relay_message(event: ChainEvent, relayer: str) -> bytes:
    return tagged_digest("relay", relayer, event.model_dump_json())


def broadcast_queue(origins: List[str], chains: List[str], subset: Optional[List[str]] = None) -> List[str]:
    """
    Submission order of a finalize call: invoke origins first, then the rest.

    A partial broadcast reaches a prefix of the origin run: it stops at the first origin
    outside ``subset`` and then reaches no other chain at all.
    """
    rest = [chain for chain in chains if chain not in origins]
    if subset is None:
        return list(origins) + rest
    reached = []
    for chain in origins:
        if chain not in subset:
            return reached
        reached.append(chain)
    return reached + [chain for chain in rest if chain in subset]


class Mempool:
    """Arrival-ordered pending txs; at most one tx per invocation."""

    def __init__(self):
        self._txs: Dict[str, BundledTransaction] = {}
        self._by_invocation: Dict[str, str] = {}
        self.resolved: Set[str] = set()

    def __iter__(self) -> Iterator[BundledTransaction]:
        return iter(list(self._txs.values()))

    def __len__(self) -> int:
        return len(self._txs)

    def __contains__(self, tx_id: str) -> bool:
        return tx_id in self._txs

    def ids(self) -> List[str]:
        return list(self._txs)

    def add(self, tx: BundledTransaction) -> bool:
        if tx.id in self._txs:
            return False
        key = tx.invocation_key
        if key is not None:
            if key in self.resolved:
                return False
            existing = self._by_invocation.get(key)
            if existing is not None:
                # a revoke record supersedes the continuation, never the reverse
                if not is_revoke_record(tx) or is_revoke_record(self._txs[existing]):
                    return False
                self.discard(existing)
            self._by_invocation[key] = tx.id
        self._txs[tx.id] = tx
        return True

    def discard(self, tx_id: str) -> None:
        tx = self._txs.pop(tx_id, None)
        if tx is not None and tx.invocation_key is not None:
            if self._by_invocation.get(tx.invocation_key) == tx_id:
                del self._by_invocation[tx.invocation_key]

    def resolve(self, key: str) -> None:
        self.resolved.add(key)
        tx_id = self._by_invocation.get(key)
        if tx_id is not None:
            self.discard(tx_id)


@dataclass
class _Broadcast:
    round: int
    call: FinalizeCall
    queue: List[str]
    origin_count: int
    partial: bool = False
    sent: int = 0
    awaiting: Optional[str] = None


@dataclass
class _RoundBook:
    """Per-round bookkeeping next to the RoundState."""

    registry: VoterRegistry
    status: Dict[str, RoundStatus]
    skip_sent: bool = False
    revoke_voted: bool = False
    rebroadcasts: int = 0
    buffered_revokes: List[VoteTicket] = field(default_factory=list)
    outcome: Optional[RoundOutcome] = None


class AggregatorNode:
    def __init__(
        self,
        node_id: str,
        layout: StateLayout,
        state: GlobalState,
        registry: VoterRegistry,
        peers: Sequence[str],
        settings: NodeSettings | None = None,
        faults: NodeFaults | None = None,
    ):
        self.node_id = node_id
        self.signer = NodeSigner.from_name(node_id)
        self.layout = layout
        self.replica = state
        self.registry = registry
        self.chains = list(layout.chains)
        self.peers = list(peers)
        self.settings = settings or NodeSettings()
        self.faults = faults or NodeFaults()
        self.mempool = Mempool()
        self.excluded: Set[str] = set()
        self.rounds: Dict[int, RoundState] = {}
        self.books: Dict[int, _RoundBook] = {}
        self.evidence: Dict[int, BlockObservedOnChain] = {}
        self.blocks: List[FinalizeCall] = []
        self.produced: Set[int] = set()
        self.current: Optional[int] = None
        self._broadcast: Optional[_Broadcast] = None
        self._timers: Dict[tuple, int] = {}

    def __repr__(self) -> str:
        return f"AggregatorNode({self.node_id}, round={self.current}, mempool={len(self.mempool)})"

    # bookkeeping

    def _book(self, round_id: int) -> _RoundBook:
        book = self.books.get(round_id)
        if book is None:
            book = _RoundBook(registry=self.registry, status={chain: RoundStatus.OPEN for chain in self.chains})
            self.books[round_id] = book
        return book

    def _enter(self, round_id: int, phase: RoundPhase) -> None:
        state = self.rounds.get(round_id)
        if state is not None and state.can_enter(phase):
            state.advance(phase)

    def _set_timer(self, net: SimNetwork, kind: TimerKind, round_id: int, delay: int) -> None:
        self._timers[(kind, round_id)] = net.set_timer(self.node_id, delay, TimerMsg(kind=kind, round=round_id))

    def _cancel_timers(self, net: SimNetwork, round_id: int) -> None:
        for kind in (TimerKind.SKIP_TIMEOUT, TimerKind.REBROADCAST):
            timer_id = self._timers.pop((kind, round_id), None)
            if timer_id is not None:
                net.cancel(timer_id)

    def _crash_due(self, net: SimNetwork, round_id: int, stage: CrashStage) -> bool:
        if self.faults.crash_at.get(round_id) != stage:
            return False
        logger.warning("{} crashes at {} of round {}", self.node_id, stage.value, round_id)
        net.crash(self.node_id)
        return True

    def outcome_of(self, round_id: int) -> RoundOutcome | None:
        book = self.books.get(round_id)
        return None if book is None else book.outcome

    # round driver

    def begin_round(self, net: SimNetwork, round_id: int) -> None:
        if net.is_crashed(self.node_id):
            return
        self.current = round_id
        book = self._book(round_id)
        book.registry = self.registry
        state = RoundState(
            round=round_id,
            voter_root=self.registry.root,
            n_voters=self.registry.n_active,
            candidate=canonical_candidate(self.registry, round_id, self.excluded),
        )
        self.rounds[round_id] = state
        if self._crash_due(net, round_id, CrashStage.CONSENSUS):
            return
        if self.registry.is_active(self.node_id):
            stale = self.registry.root_without(self.node_id) if self.faults.stale_root else None
            ticket = cast_vote(self.node_id, self.signer, round_id, self.registry, stale, excluded=self.excluded)
            net.record(self.node_id, TraceKind.VOTE_CAST, round_id, candidate=ticket.candidate, stale=stale is not None)
            net.send(self.node_id, ticket.candidate, VoteMsg(ticket=ticket))
        self._set_timer(net, TimerKind.SKIP_TIMEOUT, round_id, self.settings.skip_timeout)

    def run_round(self, net: SimNetwork, round_id: int | None = None) -> RoundOutcome:
        """Begin a round on this node and drive the network until the node sees it end."""
        if round_id is None:
            round_id = max(self.rounds, default=-1) + 1
        self.begin_round(net, round_id)
        net.run_until(lambda: self.outcome_of(round_id) is not None or net.is_crashed(self.node_id))
        return self.outcome_of(round_id) or RoundOutcome.STALLED

    def on_message(self, net: SimNetwork, src: str, message) -> None:
        if isinstance(message, ChainEventMsg):
            try:
                self.on_native_event(net, self.relay(message.event, net.now))
            except BadRelayerSignature as exc:
                logger.error("{} dropped relayed event: {}", self.node_id, exc)
        elif isinstance(message, VoteMsg):
            self._on_vote(net, message.ticket)
        elif isinstance(message, SkipVoteMsg):
            self._on_skip_vote(net, message.ticket)
        elif isinstance(message, RevokeSkipVoteMsg):
            self._on_revoke_vote(net, message.ticket)
        elif isinstance(message, TimerMsg):
            self._on_timer(net, message)
        elif isinstance(message, ClientTxMsg):
            try:
                self.submit_pure_tx(message.tx)
            except SyncError as exc:
                logger.warning("{} rejected client tx {}: {}", self.node_id, message.tx.id, exc)
                net.record(self.node_id, TraceKind.TX_REJECTED, tx_id=message.tx.id, reason=str(exc))
                return
            net.record(self.node_id, TraceKind.TX_SUBMITTED, tx_id=message.tx.id)
        else:
            logger.debug("{} ignores {} from {}", self.node_id, type(message).__name__, src)

    # relayer and tx handler

    def relay(self, event: ChainEvent, observed_height: int) -> RelayedEvent:
        """Wrap a native event, signed with this node's consensus key."""
        if (
            self.faults.corruption
            and event.kind == ChainEventKind.INVOKE_RECORDED
            and event.invocation is not None
        ):
            invocation = event.invocation
            if self.faults.corruption == "sender":
                invocation = invocation.model_copy(update={"sender": invocation.sender + "x"})
            else:
                invocation = invocation.model_copy(update={"amount": invocation.amount + 1})
            event = event.model_copy(update={"invocation": invocation})
        return RelayedEvent(
            origin=event.chain,
            event=event,
            observed_height=observed_height,
            relayer=self.node_id,
            signature=self.signer.sign(relay_message(event, self.node_id)),
        )

    def submit_pure_tx(self, tx: BundledTransaction) -> bool:
        if tx.source.kind == TxSourceKind.INVOKE_HEADED:
            raise MalformedTx(f"{tx.id}: invoke-headed txs only arrive through relayers")
        validate_tx(tx, self.layout)
        return self.mempool.add(tx)

    def on_native_event(self, net: SimNetwork, relayed: RelayedEvent) -> None:
        if relayed.relayer != self.node_id or not verify_signature(
            self.signer.public_key, relay_message(relayed.event, relayed.relayer), relayed.signature
        ):
            raise BadRelayerSignature(f"{self.node_id} only accepts events from its own relayer")
        event = relayed.event
        kind = event.kind
        if kind in (ChainEventKind.INVOKE_RECORDED, ChainEventKind.INVOKE_FAILED, ChainEventKind.INVOCATION_REVOKED):
            self._on_invocation_event(net, event)
        elif kind == ChainEventKind.BLOCK_FINALIZED:
            self._on_block_finalized(net, event)
        elif kind == ChainEventKind.ROUND_SKIPPED:
            self._on_round_skipped(net, event)
        elif kind == ChainEventKind.ROUND_REOPENED:
            self._on_round_reopened(net, event)
        elif kind == ChainEventKind.CALL_REJECTED:
            self._on_call_rejected(net, event)

    def _on_invocation_event(self, net: SimNetwork, event: ChainEvent) -> None:
        record = event.invocation
        if event.kind == ChainEventKind.INVOKE_RECORDED:
            tx = build_transfer_continuation(
                record.chain, record.invocation_id, record.sender, record.recipient, record.amount
            )
        else:
            tx = build_revoke_record(record.chain, record.invocation_id, record.sender, record.amount)
        try:
            validate_tx(tx, self.layout)
        except MalformedTx as exc:
            # continuation to an unknown account: answer with a revoke record instead
            logger.warning("{} cannot continue {}: {}", self.node_id, tx.id, exc)
            tx = build_revoke_record(record.chain, record.invocation_id, record.sender, record.amount)
        queued = self.mempool.add(tx)
        net.record(
            self.node_id,
            TraceKind.EVENT_RELAYED,
            digest=tx.id,
            event=event.kind.value,
            chain=record.chain,
            invocation_id=record.invocation_id,
            amount=record.amount,
            queued=queued,
        )

    # consensus

    def _on_vote(self, net: SimNetwork, ticket: VoteTicket) -> None:
        state = self.rounds.get(ticket.round)
        if state is None or state.terminal:
            return
        if (
            ticket.kind == TicketKind.ELECT
            and ticket.voter_root == state.voter_root
            and verify_ticket(ticket)
        ):
            net.record(self.node_id, TraceKind.VOTE_COUNTED, ticket.round, voter=ticket.voter, candidate=ticket.candidate)
        proof = collect_and_elect(state, [ticket])
        if proof is not None and proof.winner == self.node_id and ticket.round not in self.produced:
            self._produce(net, ticket.round)

    def _produce(self, net: SimNetwork, round_id: int) -> None:
        state = self.rounds[round_id]
        self.produced.add(round_id)
        self._enter(round_id, RoundPhase.PRODUCING)
        net.record(self.node_id, TraceKind.ELECTED, round_id, digest_consensus(state.proof), tickets=len(state.proof.tickets))
        if self._crash_due(net, round_id, CrashStage.SIMULATION):
            return
        production = produce_block(
            self.node_id,
            state.proof,
            list(self.mempool),
            self.replica,
            max_batch=self.settings.max_batch,
            record_round=self.settings.record_rounds,
        )
        block = production.block
        for tx in block.txs.txs:
            net.record(self.node_id, TraceKind.SIMULATED, round_id, tx.id, tx_id=tx.id)
        for dropped in production.dropped:
            net.record(self.node_id, TraceKind.TX_DROPPED, round_id, dropped.tx.id, tx_id=dropped.tx.id, reason=dropped.reason)
        if self._crash_due(net, round_id, CrashStage.PROVING):
            return
        call = FinalizeCall(
            l2account=l2account(self.node_id),
            tx_data=block.txs,
            verify_data=block.proof,
            vid=self.node_id,
            nonce=round_id,
            rid=round_id,
        )
        net.record(self.node_id, TraceKind.PROVED, round_id, digest_call(call), txs=[tx.id for tx in block.txs.txs])
        if self._crash_due(net, round_id, CrashStage.FINALIZE):
            return
        origins = [tx.source.chain for tx in block.txs.txs if tx.source.kind == TxSourceKind.INVOKE_HEADED]
        origins = list(dict.fromkeys(origins))
        partial = self.faults.partial_at.get(round_id)
        queue = broadcast_queue(origins, self.chains, partial)
        self._broadcast = _Broadcast(
            round=round_id,
            call=call,
            queue=queue,
            origin_count=len([chain for chain in queue if chain in origins]),
            partial=partial is not None,
        )
        delay = self.faults.slow_at.get(round_id)
        if delay:
            net.set_timer(self.node_id, delay, TimerMsg(kind=TimerKind.BROADCAST_START, round=round_id))
        else:
            self._advance_broadcast(net)

    def _submit(self, net: SimNetwork, chain: str, call: FinalizeCall) -> None:
        net.record(self.node_id, TraceKind.CALL_SUBMITTED, call.rid, digest_call(call), chain=chain)
        net.send(self.node_id, chain, FinalizeMsg(call=call, submitter=self.node_id))

    def _advance_broadcast(self, net: SimNetwork) -> None:
        """Origin chains one at a time, each waiting for its ack; then the rest at once."""
        job = self._broadcast
        if job is None:
            return
        job.awaiting = None
        self._enter(job.round, RoundPhase.BROADCASTING)
        status = self._book(job.round).status
        while job.sent < len(job.queue):
            chain = job.queue[job.sent]
            job.sent += 1
            if status[chain] == RoundStatus.FINALIZED:
                continue
            self._submit(net, chain, job.call)
            if self._crash_due(net, job.round, CrashStage.BROADCAST):
                return
            if job.sent <= job.origin_count:
                job.awaiting = chain
                return
        self._broadcast = None
        if job.partial:
            logger.warning("{} stops after a partial broadcast of round {}", self.node_id, job.round)
            net.crash(self.node_id)

    def _abort_broadcast(self, net: SimNetwork, chain: str, reason: str) -> None:
        job = self._broadcast
        self._broadcast = None
        net.record(self.node_id, TraceKind.BROADCAST_ABORTED, job.round, chain=chain, reason=reason)
        logger.warning("{} aborts broadcast of round {}: {} refused it ({})", self.node_id, job.round, chain, reason)

    # native chain feedback

    def _on_block_finalized(self, net: SimNetwork, event: ChainEvent) -> None:
        round_id = event.round
        book = self._book(round_id)
        book.status[event.chain] = RoundStatus.FINALIZED
        first = round_id not in self.evidence
        if first:
            self.evidence[round_id] = BlockObservedOnChain(chain=event.chain, round=round_id, call=event.call)
            self._apply_block(net, event.call)
        job = self._broadcast
        if job is not None and job.round == round_id and job.awaiting == event.chain:
            self._advance_broadcast(net)
        self._enter(round_id, RoundPhase.BROADCASTING)
        if self._settle(net, round_id):
            return
        if any(status == RoundStatus.SKIPPED for status in book.status.values()):
            self.continue_broadcast(net, self.evidence[round_id])
        if first:
            self._set_timer(net, TimerKind.REBROADCAST, round_id, self.settings.rebroadcast_delay)

    def _on_round_skipped(self, net: SimNetwork, event: ChainEvent) -> None:
        round_id = event.round
        book = self._book(round_id)
        book.status[event.chain] = RoundStatus.SKIPPED
        if self._settle(net, round_id):
            return
        state = self.rounds.get(round_id)
        if state is not None and state.revoke_signal is not None:
            net.send(self.node_id, event.chain, RevokeSkipMsg(signal=state.revoke_signal, submitter=self.node_id))
        elif round_id in self.evidence:
            self._start_revoke_skip(net, round_id)

    def _on_round_reopened(self, net: SimNetwork, event: ChainEvent) -> None:
        round_id = event.round
        self._book(round_id).status[event.chain] = RoundStatus.OPEN
        evidence = self.evidence.get(round_id)
        if evidence is not None:
            self._submit(net, event.chain, evidence.call)

    def _on_call_rejected(self, net: SimNetwork, event: ChainEvent) -> None:
        job = self._broadcast
        if (
            job is not None
            and event.submitter == self.node_id
            and job.round == event.round
            and job.awaiting == event.chain
        ):
            self._abort_broadcast(net, event.chain, event.reason)

    def _settle(self, net: SimNetwork, round_id: int) -> bool:
        """Close the round once every chain agrees on its terminal status."""
        book = self._book(round_id)
        if book.outcome is not None:
            return True
        statuses = set(book.status.values())
        if statuses == {RoundStatus.FINALIZED}:
            self._enter(round_id, RoundPhase.FINALIZED)
            producer = self.evidence[round_id].call.vid
            book.outcome = (
                RoundOutcome.PRODUCED_AND_FINALIZED if producer == self.node_id else RoundOutcome.OBSERVED_FINALIZED
            )
        elif statuses == {RoundStatus.SKIPPED}:
            self._enter(round_id, RoundPhase.SKIPPED)
            state = self.rounds.get(round_id)
            if state is not None:
                self.excluded.add(state.candidate)
            book.outcome = RoundOutcome.SKIPPED
        else:
            return False
        self._cancel_timers(net, round_id)
        logger.debug("{} sees round {} end as {}", self.node_id, round_id, book.outcome.value)
        return True

    def _apply_block(self, net: SimNetwork, call: FinalizeCall) -> None:
        """Re-simulate an accepted block on the local replica and clean the mempool."""
        state = self.replica
        if call.verify_data.batch_root_before != state.root:
            logger.error("{} replica is not at the pre-root of round {}", self.node_id, call.rid)
            return
        try:
            for tx in call.tx_data.txs:
                state, _ = prove_execution(state, tx)
        except SyncError as exc:
            logger.error("{} cannot replay round {}: {}", self.node_id, call.rid, exc)
            return
        if state.root != call.verify_data.batch_root_after:
            logger.error("{} replay of round {} ends at another root", self.node_id, call.rid)
            return
        self.replica = state
        self.blocks.append(call)
        for tx in call.tx_data.txs:
            self.mempool.discard(tx.id)
            if tx.invocation_key is not None:
                self.mempool.resolve(tx.invocation_key)
            for step in tx.steps:
                if step.schema_id == SchemaId.REGISTRATION.value:
                    self._apply_registration(step.args)
        for dropped in call.tx_data.dropped:
            tx = dropped.tx
            self.mempool.discard(tx.id)
            if tx.source.kind == TxSourceKind.INVOKE_HEADED and not is_revoke_record(tx):
                head = tx.steps[0].args
                self.mempool.add(
                    build_revoke_record(tx.source.chain, tx.source.invocation_id, head["sender"], head["amount"])
                )
        net.record(self.node_id, TraceKind.BLOCK_APPLIED, call.rid, digest_call(call), root=state.root.hex())

    def _apply_registration(self, args) -> None:
        node = args["node"]
        try:
            if args["quit"]:
                self.registry = deregister_voter(self.registry, node)
            else:
                self.registry = register_voter(self.registry, node, bytes.fromhex(args["pubkey"]), slot=args["slot"])
        except (DuplicateVoter, UnregisteredVoter) as exc:
            logger.error("{} registry out of sync: {}", self.node_id, exc)
            return
        self.excluded.discard(node)
        logger.info("{} registry now has {} active voters", self.node_id, self.registry.n_active)

    # skip and revoke-skip

    def _on_timer(self, net: SimNetwork, timer: TimerMsg) -> None:
        round_id = timer.round
        if timer.kind == TimerKind.BROADCAST_START:
            self._advance_broadcast(net)
            return
        self._timers.pop((timer.kind, round_id), None)
        book = self._book(round_id)
        if book.outcome is not None:
            return
        if timer.kind == TimerKind.SKIP_TIMEOUT:
            if round_id not in self.evidence:
                self._cast_skip(net, round_id)
        elif timer.kind == TimerKind.REBROADCAST and round_id in self.evidence:
            self.continue_broadcast(net, self.evidence[round_id])
            book.rebroadcasts += 1
            if book.rebroadcasts < REBROADCAST_LIMIT:
                self._set_timer(net, TimerKind.REBROADCAST, round_id, self.settings.rebroadcast_delay)

    def _cast_skip(self, net: SimNetwork, round_id: int) -> None:
        book = self._book(round_id)
        if not book.registry.is_active(self.node_id):
            return
        self._enter(round_id, RoundPhase.SKIP_VOTING)
        ticket = cast_vote(self.node_id, self.signer, round_id, book.registry, kind=TicketKind.SKIP)
        net.record(self.node_id, TraceKind.SKIP_VOTE, round_id)
        net.broadcast(self.node_id, self.peers, SkipVoteMsg(ticket=ticket))

    def _on_skip_vote(self, net: SimNetwork, ticket: VoteTicket) -> None:
        state = self.rounds.get(ticket.round)
        book = self.books.get(ticket.round)
        if state is None or book is None or book.outcome is not None:
            return
        signal = initiate_skip(state, [ticket])
        if signal is None or book.skip_sent or ticket.round in self.evidence:
            return
        book.skip_sent = True
        for chain in self.chains:
            if book.status[chain] == RoundStatus.OPEN:
                net.send(self.node_id, chain, SkipMsg(signal=signal, submitter=self.node_id))

    def _start_revoke_skip(self, net: SimNetwork, round_id: int) -> None:
        book = self._book(round_id)
        if book.revoke_voted or not book.registry.is_active(self.node_id):
            return
        book.revoke_voted = True
        self._enter(round_id, RoundPhase.REVOKE_SKIP_VOTING)
        ticket = cast_vote(self.node_id, self.signer, round_id, book.registry, kind=TicketKind.REVOKE_SKIP)
        net.record(self.node_id, TraceKind.REVOKE_SKIP_VOTE, round_id)
        net.broadcast(self.node_id, self.peers, RevokeSkipVoteMsg(ticket=ticket))
        buffered, book.buffered_revokes = book.buffered_revokes, []
        for early in buffered:
            self._on_revoke_vote(net, early)

    def _on_revoke_vote(self, net: SimNetwork, ticket: VoteTicket) -> None:
        round_id = ticket.round
        state = self.rounds.get(round_id)
        book = self.books.get(round_id)
        if state is None or book is None or book.outcome is not None:
            return
        evidence = self.evidence.get(round_id)
        if evidence is None:
            book.buffered_revokes.append(ticket)
            return
        already = state.revoke_signal is not None
        try:
            signal = revoke_skip(state, evidence, [ticket])
        except RevokeSkipPrecondition as exc:
            logger.warning("{} cannot revoke skip of round {}: {}", self.node_id, round_id, exc)
            return
        if signal is None or already:
            return
        for chain in self.chains:
            if book.status[chain] == RoundStatus.SKIPPED:
                net.send(self.node_id, chain, RevokeSkipMsg(signal=signal, submitter=self.node_id))

    def continue_broadcast(self, net: SimNetwork, evidence: BlockObservedOnChain) -> None:
        """Push a block recorded on some chain to every chain that has not taken it."""
        book = self._book(evidence.round)
        for chain in self.chains:
            status = book.status[chain]
            if status == RoundStatus.OPEN:
                self._submit(net, chain, evidence.call)
            elif status == RoundStatus.SKIPPED:
                self._start_revoke_skip(net, evidence.round)
