# -*- coding = utf-8 -*-
# @Time: 2026/08/25 11:48
# @Author: xchain-sync developers
# @Site:
# @File: native_chain.py
"""Simulated native chain hosting the guest proxy contract.

The proxy functions take a ProxyState and return a new one; a refused call
raises and leaves the input untouched. ``NativeChain`` wraps them as an
actor on the simulated network.
"""
from __future__ import annotations

from typing import List, Mapping, Sequence, Tuple

from xchain_sync.codec import digest_call
from xchain_sync.common.enums import (
    ChainEventKind,
    RoundStatus,
    SideEffectKind,
    TicketKind,
    TraceKind,
    TxSourceKind,
)
from xchain_sync.common.errors import (
    BadConsensusProof,
    BadExecutionProof,
    BadSkipProof,
    InsufficientFunds,
    MalformedPayload,
    NotOwner,
    NotPending,
    Reject,
    RootMismatch,
    RoundClosed,
    StaleNonce,
    SyncError,
    TooEarly,
)
from xchain_sync.common.logger import logger
from xchain_sync.merkle_state import (
    EMPTY_LEAF,
    GlobalState,
    StateLayout,
    fold_witness,
    project,
    witness_roots,
)
from xchain_sync.proof_engine import verify_batch_execution, verify_consensus
from xchain_sync.schema.chain_model import (
    ChainEvent,
    FinalizeCall,
    PendingInvocation,
    ProxyState,
    RevokeSkipSignal,
    SideEffectReceipt,
    SkipSignal,
)
from xchain_sync.schema.net_model import ChainEventMsg, FinalizeMsg, RevokeSkipMsg, SkipMsg
from xchain_sync.schema.state_model import LeafWitness
from xchain_sync.schema.tx_model import BundledTransaction
from xchain_sync.tx_registry import invocation_commitment, leaf_ops

CUSTODY = "proxy"
DELTA_H = 20


def open_proxy(
    chain_id: str,
    state: GlobalState,
    voter_count: int,
    wallets: Mapping[str, int] | None = None,
    custody: int = 0,
    delta_h: int = DELTA_H,
    honor_revoke_skip: bool = True,
) -> ProxyState:
    """Deploy the proxy pinned to the genesis global state."""
    layout = state.layout
    ledger = dict(wallets or {})
    ledger[CUSTODY] = ledger.get(CUSTODY, 0) + custody
    view = project(state, chain_id)
    return ProxyState(
        chain_id=chain_id,
        delta_h=delta_h,
        pinned_global_root=state.root,
        pinned_voter_root=state.tree.node_hash(layout.registry_prefix),
        voter_count=voter_count,
        region_prefix=view.prefix,
        ledger=ledger,
        partial_leaves=dict(view.leaves),
        honor_revoke_skip=honor_revoke_skip,
    )


def invoke(
    proxy: ProxyState,
    sender: str,
    amount: int,
    recipient: str,
    failed: bool = False,
) -> Tuple[ProxyState, ChainEvent]:
    """Escrow ``amount`` from ``sender`` and queue the invocation.

    ``failed`` models a contract that accepted the escrow but reports the
    invocation as failed; aggregators answer it with a revoke record.
    """
    if isinstance(amount, bool) or not isinstance(amount, int) or amount < 0:
        raise MalformedPayload(f"invoke amount {amount!r} is not a non-negative integer")
    if not sender or sender == CUSTODY or "/" in sender:
        raise MalformedPayload(f"invalid sender {sender!r}")
    target, sep, name = recipient.partition("/")
    if not sep or not target or not name:
        raise MalformedPayload(f"recipient {recipient!r} is not of the form chain/name")
    if proxy.ledger.get(sender, 0) < amount:
        raise InsufficientFunds(f"{sender} holds {proxy.ledger.get(sender, 0)}, needs {amount}")
    updated = proxy.fork()
    invocation_id = updated.next_invocation_id
    record = PendingInvocation(
        invocation_id=invocation_id,
        chain=proxy.chain_id,
        sender=sender,
        amount=amount,
        recipient=recipient,
        recorded_height=proxy.height,
        commitment=invocation_commitment(proxy.chain_id, invocation_id, sender, amount, revoked=failed),
    )
    updated.ledger[sender] = updated.ledger.get(sender, 0) - amount
    updated.ledger[CUSTODY] = updated.ledger.get(CUSTODY, 0) + amount
    updated.pending[invocation_id] = record
    updated.next_invocation_id += 1
    event = ChainEvent(
        kind=ChainEventKind.INVOKE_FAILED if failed else ChainEventKind.INVOKE_RECORDED,
        chain=proxy.chain_id,
        height=proxy.height,
        invocation=record,
    )
    return updated, event


def revoke(proxy: ProxyState, sender: str, invocation_id: int) -> ProxyState:
    record = proxy.pending.get(invocation_id)
    if record is None:
        raise NotPending(f"invocation {invocation_id} is not pending on {proxy.chain_id}")
    if record.sender != sender:
        raise NotOwner(f"invocation {invocation_id} belongs to {record.sender}")
    if proxy.height - record.recorded_height <= proxy.delta_h:
        raise TooEarly(
            f"invocation {invocation_id} recorded at {record.recorded_height}, revocable after "
            f"{record.recorded_height + proxy.delta_h}"
        )
    updated = proxy.fork()
    del updated.pending[invocation_id]
    updated.revoked[invocation_id] = record
    updated.ledger[CUSTODY] -= record.amount
    updated.ledger[sender] = updated.ledger.get(sender, 0) + record.amount
    return updated


def advance_height(proxy: ProxyState, n_blocks: int) -> ProxyState:
    if n_blocks < 0:
        raise ValueError("cannot move a chain backwards")
    if n_blocks == 0:
        return proxy
    return proxy.model_copy(update={"height": proxy.height + n_blocks})


def post_invoke_root(record: PendingInvocation, witness: LeafWitness, revoked: bool = False) -> bytes:
    """s' for an invocation: its commitment leaf folded through the slot witness of the consuming tx."""
    leaf = record.commitment
    if revoked:
        leaf = invocation_commitment(record.chain, record.invocation_id, record.sender, record.amount, revoked=True)
    return fold_witness(witness.path, leaf, witness.siblings)


def _step_witnesses(tx: BundledTransaction, witnesses: Sequence[LeafWitness], layout: StateLayout) -> List[List[LeafWitness]]:
    grouped = []
    offset = 0
    for step in tx.steps:
        width = len(leaf_ops(step, layout))
        grouped.append(list(witnesses[offset:offset + width]))
        offset += width
    return grouped


def _check_invoke_heads(proxy: ProxyState, call: FinalizeCall, layout: StateLayout) -> None:
    """Recompute s' for every invocation of this chain and compare it with the transcript."""
    for tx, transcript in zip(call.tx_data.txs, call.verify_data.transcripts):
        if tx.source.kind != TxSourceKind.INVOKE_HEADED or tx.source.chain != proxy.chain_id:
            continue
        invocation_id = tx.source.invocation_id
        revoked = bool(tx.steps[0].args.get("revoked"))
        if revoked:
            record = proxy.pending.get(invocation_id) or proxy.revoked.get(invocation_id)
        else:
            record = proxy.pending.get(invocation_id)
        if record is None:
            raise RootMismatch(f"invocation {invocation_id} has no local record on {proxy.chain_id}")
        if not transcript.steps:
            raise RootMismatch(f"transcript of {tx.id} opens no invocation slot")
        witness = transcript.steps[0]
        if tuple(witness.path) != layout.invocation_path(proxy.chain_id, invocation_id):
            raise RootMismatch(f"transcript of {tx.id} opens the wrong invocation slot")
        roots = witness_roots(witness)
        if roots is None or witness.old_value != EMPTY_LEAF:
            raise RootMismatch(f"transcript of {tx.id} does not consume a fresh invocation slot")
        if post_invoke_root(record, witness, revoked=revoked) != roots[1]:
            raise RootMismatch(f"relayed invocation {invocation_id} differs from the one recorded on {proxy.chain_id}")


def _receipt(call: FinalizeCall, chain: str, kind: SideEffectKind, tx_id: str, **args) -> SideEffectReceipt:
    return SideEffectReceipt(kind=kind, chain=chain, round=call.rid, tx_id=tx_id, l2account=call.l2account, args=args)


def _apply_effects(updated: ProxyState, call: FinalizeCall, layout: StateLayout) -> None:
    chain = updated.chain_id
    for tx, transcript in zip(call.tx_data.txs, call.verify_data.transcripts):
        for witness in transcript.steps:
            if tuple(witness.path[: len(updated.region_prefix)]) != tuple(updated.region_prefix):
                continue
            if witness.new_value == EMPTY_LEAF:
                updated.partial_leaves.pop(tuple(witness.path), None)
            else:
                updated.partial_leaves[tuple(witness.path)] = witness.new_value
        per_step = _step_witnesses(tx, transcript.steps, layout)
        for step, witnesses in zip(tx.steps, per_step):
            effect = step.side_effect
            if effect is None or effect.target not in (chain, "*"):
                continue
            if effect.kind == SideEffectKind.REMOVE_PENDING_INVOCATION:
                invocation_id = effect.args["invocation_id"]
                record = updated.pending.pop(invocation_id, None)
                refunded = bool(effect.args["refund"]) and record is not None
                if record is None:
                    record = updated.revoked.pop(invocation_id)
                if refunded:
                    updated.ledger[CUSTODY] -= record.amount
                    updated.ledger[record.sender] = updated.ledger.get(record.sender, 0) + record.amount
                updated.receipts.append(
                    _receipt(
                        call,
                        chain,
                        effect.kind,
                        tx.id,
                        invocation_id=invocation_id,
                        removed=True,
                        refunded=refunded,
                        recorded_height=record.recorded_height,
                        finalized_height=updated.height,
                    )
                )
            elif effect.kind in (SideEffectKind.WITHDRAW, SideEffectKind.CALLBACK):
                amount = effect.args["amount"]
                to = effect.args["to"]
                updated.ledger[CUSTODY] = updated.ledger.get(CUSTODY, 0) - amount
                updated.ledger[to] = updated.ledger.get(to, 0) + amount
                updated.receipts.append(_receipt(call, chain, effect.kind, tx.id, **effect.args))
            elif effect.kind == SideEffectKind.UPDATE_VOTER_ROOT:
                witness = witnesses[0]
                updated.pinned_voter_root = fold_witness(
                    witness.path, witness.new_value, witness.siblings, levels=layout.registry_depth
                )
                updated.voter_count += -1 if effect.args["quit"] else 1
                updated.receipts.append(_receipt(call, chain, effect.kind, tx.id, **effect.args))
            else:
                updated.receipts.append(_receipt(call, chain, effect.kind, tx.id, **effect.args))


def verify_and_finalize(
    proxy: ProxyState,
    call: FinalizeCall,
    layout: StateLayout,
) -> Tuple[ProxyState, List[SideEffectReceipt]]:
    """Check the call, then apply the batch delta and every side effect at once."""
    proof = call.verify_data
    if proof.batch_root_before != proxy.pinned_global_root:
        raise RootMismatch(f"batch starts from {proof.batch_root_before.hex()[:16]}, pinned is {proxy.pinned_global_root.hex()[:16]}")
    if call.rid != proxy.current_round or proxy.status_of(call.rid) != RoundStatus.OPEN:
        raise RoundClosed(f"round {call.rid} is not open on {proxy.chain_id} (current {proxy.current_round})")
    if call.vid != proof.consensus.winner:
        raise BadConsensusProof(f"{call.vid} is not the elected producer of round {call.rid}")
    if call.nonce <= proxy.nonces.get(call.vid, -1):
        raise StaleNonce(f"nonce {call.nonce} of {call.vid} already used")
    if not verify_consensus(proof.consensus, proxy.pinned_voter_root, call.rid, proxy.voter_count):
        raise BadConsensusProof(f"election proof for round {call.rid} does not verify")
    if len(proof.transcripts) != len(call.tx_data.txs):
        raise BadExecutionProof("one transcript per transaction is required")
    _check_invoke_heads(proxy, call, layout)
    if not verify_batch_execution(proof, call.tx_data.txs, layout):
        raise BadExecutionProof(f"execution proof for round {call.rid} does not verify")

    updated = proxy.fork()
    before = len(updated.receipts)
    _apply_effects(updated, call, layout)
    updated.pinned_global_root = proof.batch_root_after
    updated.round_status[call.rid] = RoundStatus.FINALIZED
    updated.current_round = call.rid + 1
    updated.nonces[call.vid] = call.nonce
    updated.finalized_log.append(call)
    return updated, updated.receipts[before:]


def apply_skip(proxy: ProxyState, signal: SkipSignal) -> ProxyState:
    rid = signal.round
    if rid != proxy.current_round or proxy.status_of(rid) != RoundStatus.OPEN or rid in proxy.reopened:
        raise RoundClosed(f"round {rid} cannot be skipped on {proxy.chain_id}")
    if not verify_consensus(signal.proof, proxy.pinned_voter_root, rid, proxy.voter_count, kind=TicketKind.SKIP):
        raise BadSkipProof(f"skip proof for round {rid} does not verify")
    updated = proxy.fork()
    updated.round_status[rid] = RoundStatus.SKIPPED
    updated.current_round = rid + 1
    return updated


def apply_revoke_skip(proxy: ProxyState, signal: RevokeSkipSignal) -> ProxyState:
    """Reopen a skipped round for a block another chain already recorded."""
    rid = signal.round
    if not proxy.honor_revoke_skip:
        raise RoundClosed(f"{proxy.chain_id} does not accept revoke-skip signals")
    if proxy.status_of(rid) != RoundStatus.SKIPPED or proxy.current_round != rid + 1:
        raise RoundClosed(f"round {rid} is not the last skipped round on {proxy.chain_id}")
    if not verify_consensus(
        signal.proof, proxy.pinned_voter_root, rid, proxy.voter_count, kind=TicketKind.REVOKE_SKIP
    ):
        raise BadSkipProof(f"revoke-skip proof for round {rid} does not verify")
    evidence = signal.evidence
    if (
        evidence.rid != rid
        or evidence.verify_data.batch_root_before != proxy.pinned_global_root
        or not verify_consensus(evidence.verify_data.consensus, proxy.pinned_voter_root, rid, proxy.voter_count)
    ):
        raise BadSkipProof(f"revoke-skip evidence for round {rid} is not a valid block")
    updated = proxy.fork()
    del updated.round_status[rid]
    updated.current_round = rid
    updated.reopened.add(rid)
    return updated


class NativeChain:
    """Actor wrapper: a sequential executor with a block-height clock."""

    def __init__(
        self,
        state: ProxyState,
        layout: StateLayout,
        observers: Sequence[str] = (),
        block_interval: int = 5,
    ):
        self.state = state
        self.layout = layout
        self.observers = list(observers)
        self.block_interval = block_interval

    @property
    def chain_id(self) -> str:
        return self.state.chain_id

    def sync_height(self, now: int) -> None:
        target = now // self.block_interval
        if target > self.state.height:
            self.state = advance_height(self.state, target - self.state.height)

    def emit(self, net, event: ChainEvent) -> None:
        for node in self.observers:
            net.send(self.chain_id, node, ChainEventMsg(event=event))

    def _event(self, kind: ChainEventKind, **fields) -> ChainEvent:
        return ChainEvent(kind=kind, chain=self.chain_id, height=self.state.height, **fields)

    def user_invoke(self, net, sender: str, amount: int, recipient: str, failed: bool = False) -> ChainEvent | None:
        self.sync_height(net.now)
        try:
            self.state, event = invoke(self.state, sender, amount, recipient, failed=failed)
        except SyncError as exc:
            logger.warning("{} refused invoke by {}: {}", self.chain_id, sender, exc)
            net.record(self.chain_id, TraceKind.INVOKE_REFUSED, sender=sender, amount=amount, reason=str(exc))
            return None
        record = event.invocation
        net.record(
            self.chain_id,
            TraceKind.INVOKED,
            invocation_id=record.invocation_id,
            sender=sender,
            amount=amount,
            recipient=recipient,
            failed=failed,
            height=record.recorded_height,
        )
        self.emit(net, event)
        return event

    def user_revoke(self, net, sender: str, invocation_id: int) -> bool:
        self.sync_height(net.now)
        try:
            self.state = revoke(self.state, sender, invocation_id)
        except SyncError as exc:
            logger.info("{} refused revoke of {}: {}", self.chain_id, invocation_id, exc)
            net.record(
                self.chain_id,
                TraceKind.USER_REVOKE_REFUSED,
                invocation_id=invocation_id,
                sender=sender,
                reason=type(exc).__name__,
            )
            return False
        record = self.state.revoked[invocation_id]
        net.record(self.chain_id, TraceKind.USER_REVOKED, invocation_id=invocation_id, sender=sender)
        self.emit(net, self._event(ChainEventKind.INVOCATION_REVOKED, invocation=record))
        return True

    def on_message(self, net, src: str, message) -> None:
        self.sync_height(net.now)
        if isinstance(message, FinalizeMsg):
            self._on_finalize(net, message)
        elif isinstance(message, SkipMsg):
            self._on_skip(net, message)
        elif isinstance(message, RevokeSkipMsg):
            self._on_revoke_skip(net, message)
        else:
            logger.debug("{} ignores {}", self.chain_id, type(message).__name__)

    def _reject(self, net, round_id: int, submitter: str, exc: SyncError) -> None:
        reason = type(exc).__name__
        logger.warning("{} rejected round {} from {}: {}", self.chain_id, round_id, submitter, exc)
        net.record(self.chain_id, TraceKind.CALL_REJECTED, round_id, submitter=submitter, reason=reason)
        self.emit(net, self._event(ChainEventKind.CALL_REJECTED, round=round_id, reason=reason, submitter=submitter))

    def _on_finalize(self, net, message: FinalizeMsg) -> None:
        call = message.call
        try:
            self.state, receipts = verify_and_finalize(self.state, call, self.layout)
        except Reject as exc:
            self._reject(net, call.rid, message.submitter, exc)
            return
        net.record(
            self.chain_id,
            TraceKind.FINALIZED,
            call.rid,
            digest_call(call),
            submitter=message.submitter,
            producer=call.vid,
            height=self.state.height,
            txs=[tx.id for tx in call.tx_data.txs],
            receipts=len(receipts),
        )
        self.emit(net, self._event(ChainEventKind.BLOCK_FINALIZED, round=call.rid, call=call, submitter=message.submitter))

    def _on_skip(self, net, message: SkipMsg) -> None:
        rid = message.signal.round
        try:
            self.state = apply_skip(self.state, message.signal)
        except (RoundClosed, BadSkipProof) as exc:
            logger.debug("{} ignored skip of round {}: {}", self.chain_id, rid, exc)
            return
        net.record(self.chain_id, TraceKind.SKIP_APPLIED, rid, submitter=message.submitter)
        self.emit(net, self._event(ChainEventKind.ROUND_SKIPPED, round=rid, submitter=message.submitter))

    def _on_revoke_skip(self, net, message: RevokeSkipMsg) -> None:
        rid = message.signal.round
        try:
            self.state = apply_revoke_skip(self.state, message.signal)
        except (RoundClosed, BadSkipProof) as exc:
            logger.debug("{} ignored revoke-skip of round {}: {}", self.chain_id, rid, exc)
            return
        net.record(self.chain_id, TraceKind.ROUND_REOPENED, rid, submitter=message.submitter)
        self.emit(net, self._event(ChainEventKind.ROUND_REOPENED, round=rid, submitter=message.submitter))
