# -*- coding = utf-8 -*-
# @Time: 2026-08-20 09:33:07
# @Author: xchain-sync developers
# @Site:
# @File: proof_engine.py
"""Transparent proofs: execution transcripts, consensus proofs and their aggregation.

A transcript is the ordered list of leaf witnesses a transaction produced;
verifying it replays every opening and re-runs the declared schemas, so it is
accepted exactly when the transition is the correct simulation of the tx.
"""
from __future__ import annotations

import struct
from typing import Dict, Iterable, Sequence, Tuple

from xchain_sync.common.crypto import verify_signature
from xchain_sync.common.enums import TicketKind
from xchain_sync.common.errors import (
    ChainBreak,
    InsufficientVotes,
    MalformedTx,
    SimFailure,
    SyncError,
)
from xchain_sync.common.logger import logger
from xchain_sync.merkle_state import (
    EMPTY_LEAF,
    TOMBSTONE,
    GlobalState,
    StateLayout,
    fold_witness,
    update_leaf,
    witness_roots,
)
from xchain_sync.schema.proof_model import (
    AggregatedProof,
    ConsensusProof,
    ExecutionTranscript,
    SanityCheckRecord,
    VoteTicket,
)
from xchain_sync.schema.state_model import MembershipProof
from xchain_sync.schema.tx_model import BundledTransaction
from xchain_sync.tx_registry import GuardViolation, leaf_ops, predicate_holds, validate_tx


class _Invalid(Exception):
    pass


def quorum_threshold(n_voters: int) -> int:
    """ceil(2n/3), never below one ticket."""
    return max(1, (2 * n_voters + 2) // 3)


# execution


def prove_execution(state_before: GlobalState, tx: BundledTransaction) -> Tuple[GlobalState, ExecutionTranscript]:
    layout = state_before.layout
    validate_tx(tx, layout)
    tree = state_before.tree
    witnesses = []
    checks = []
    for index, step in enumerate(tx.steps):
        for op in leaf_ops(step, layout):
            try:
                value = op.transform(tree.get(op.path))
            except GuardViolation as exc:
                raise SimFailure(index, str(exc)) from exc
            tree, witness = update_leaf(tree, op.path, value)
            witnesses.append(witness)
        if step.predicate is not None:
            observed = tree.get(layout.account_path(step.predicate.account))
            if not predicate_holds(step.predicate, observed):
                raise SimFailure(index, f"sanity check {step.predicate.predicate_id} failed")
            checks.append(SanityCheckRecord(step=index, predicate_id=step.predicate.predicate_id, passed=True))
    transcript = ExecutionTranscript(
        tx_id=tx.id,
        schema_ids=[step.schema_id for step in tx.steps],
        root_before=state_before.root,
        root_after=tree.root,
        steps=witnesses,
        sanity_checks=checks,
    )
    return state_before.with_tree(tree), transcript


def _check_execution(
    root_before: bytes,
    root_after: bytes,
    transcript: ExecutionTranscript,
    tx: BundledTransaction,
    layout: StateLayout,
) -> None:
    if transcript.tx_id != tx.id:
        raise _Invalid("transcript names another tx")
    if transcript.root_before != root_before or transcript.root_after != root_after:
        raise _Invalid("transcript endpoints differ from the claimed roots")
    if list(transcript.schema_ids) != [step.schema_id for step in tx.steps]:
        raise _Invalid("schema sequence differs from the declaration")
    validate_tx(tx, layout)
    cursor = root_before
    latest: Dict[Tuple[int, ...], bytes] = {}
    expected_checks = []
    witnesses = iter(transcript.steps)
    consumed = 0
    for index, step in enumerate(tx.steps):
        for op in leaf_ops(step, layout):
            witness = next(witnesses, None)
            if witness is None:
                raise _Invalid("transcript is shorter than the schema requires")
            consumed += 1
            if tuple(witness.path) != op.path:
                raise _Invalid(f"witness {consumed - 1} opens the wrong leaf")
            roots = witness_roots(witness)
            if roots is None or roots[0] != cursor:
                raise _Invalid(f"witness {consumed - 1} does not open the running root")
            try:
                expected = op.transform(witness.old_value)
            except GuardViolation as exc:
                raise _Invalid(f"step {index} violates its guard: {exc}") from exc
            if expected != witness.new_value:
                raise _Invalid(f"witness {consumed - 1} writes a value its schema does not produce")
            cursor = roots[1]
            latest[op.path] = witness.new_value
        if step.predicate is not None:
            observed = latest.get(layout.account_path(step.predicate.account))
            if observed is None or not predicate_holds(step.predicate, observed):
                raise _Invalid(f"predicate {step.predicate.predicate_id} does not hold")
            expected_checks.append(
                SanityCheckRecord(step=index, predicate_id=step.predicate.predicate_id, passed=True)
            )
    if consumed != len(transcript.steps):
        raise _Invalid("transcript carries extra witnesses")
    if cursor != root_after:
        raise _Invalid("witness chain does not end at root_after")
    if list(transcript.sanity_checks) != expected_checks:
        raise _Invalid("recorded sanity checks differ from the declared predicates")


def verify_execution(
    root_before: bytes,
    root_after: bytes,
    transcript: ExecutionTranscript,
    tx_decl: BundledTransaction,
    layout: StateLayout,
) -> bool:
    try:
        _check_execution(root_before, root_after, transcript, tx_decl, layout)
    except (_Invalid, SyncError) as exc:
        logger.debug("execution proof for {} rejected: {}", tx_decl.id, exc)
        return False
    return True


# consensus


def ticket_message(kind: TicketKind, round_id: int, voter_root: bytes, candidate: str, voter: str) -> bytes:
    kind_raw = TicketKind(kind).value.encode()
    candidate_raw = candidate.encode()
    voter_raw = voter.encode()
    return b"".join(
        [
            b"xchain-sync/ticket",
            struct.pack("<B", len(kind_raw)),
            kind_raw,
            struct.pack("<Q", round_id),
            bytes(voter_root),
            struct.pack("<I", len(candidate_raw)),
            candidate_raw,
            struct.pack("<I", len(voter_raw)),
            voter_raw,
        ]
    )


def verify_membership(voter_root: bytes, proof: MembershipProof) -> bool:
    pubkey = bytes(proof.pubkey)
    if pubkey in (EMPTY_LEAF, TOMBSTONE) or len(pubkey) != 32:
        return False
    if len(proof.siblings) != len(proof.path) or not proof.path:
        return False
    width = len(proof.siblings[0])
    if width < 1 or any(len(level) != width for level in proof.siblings):
        return False
    if any(len(node) != 32 for level in proof.siblings for node in level):
        return False
    if not all(0 <= index <= width for index in proof.path):
        return False
    return fold_witness(proof.path, pubkey, proof.siblings) == voter_root


def verify_ticket(ticket: VoteTicket) -> bool:
    if not verify_membership(ticket.voter_root, ticket.membership):
        return False
    message = ticket_message(ticket.kind, ticket.round, ticket.voter_root, ticket.candidate, ticket.voter)
    return verify_signature(ticket.membership.pubkey, message, ticket.signature)


def ticket_slot(ticket: VoteTicket) -> Tuple[int, ...]:
    return tuple(ticket.membership.path)


def _valid_tickets_by_candidate(
    tickets: Iterable[VoteTicket],
    round_id: int,
    voter_root: bytes,
    kind: TicketKind,
) -> Dict[str, Dict[Tuple[int, ...], VoteTicket]]:
    grouped: Dict[str, Dict[Tuple[int, ...], VoteTicket]] = {}
    for ticket in tickets:
        if ticket.kind != kind or ticket.round != round_id or ticket.voter_root != voter_root:
            continue
        if kind != TicketKind.ELECT and ticket.candidate:
            continue
        if not verify_ticket(ticket):
            continue
        grouped.setdefault(ticket.candidate, {}).setdefault(ticket_slot(ticket), ticket)
    return grouped


def prove_consensus(
    round_id: int,
    voter_root: bytes,
    tickets: Sequence[VoteTicket],
    n_voters: int,
    kind: TicketKind = TicketKind.ELECT,
    winner: str | None = None,
) -> ConsensusProof:
    need = quorum_threshold(n_voters)
    grouped = _valid_tickets_by_candidate(tickets, round_id, voter_root, kind)
    if winner is None:
        # most endorsed candidate; ties go to the smallest id
        winner = min(grouped, key=lambda name: (-len(grouped[name]), name), default="")
    counted = grouped.get(winner, {})
    if len(counted) < need:
        raise InsufficientVotes(len(counted), need)
    return ConsensusProof(
        kind=kind,
        round=round_id,
        voter_root=voter_root,
        winner=winner,
        tickets=[counted[slot] for slot in sorted(counted)],
        threshold=need,
    )


def verify_consensus(
    proof: ConsensusProof,
    pinned_voter_root: bytes,
    round_id: int,
    n_voters: int | None = None,
    kind: TicketKind = TicketKind.ELECT,
) -> bool:
    if proof.kind != kind or proof.round != round_id or proof.voter_root != pinned_voter_root:
        return False
    if proof.threshold < 1:
        return False
    if n_voters is not None and proof.threshold < quorum_threshold(n_voters):
        return False
    if (kind == TicketKind.ELECT) != bool(proof.winner):
        return False
    slots = set()
    for ticket in proof.tickets:
        if (
            ticket.kind != kind
            or ticket.round != round_id
            or ticket.voter_root != proof.voter_root
            or ticket.candidate != proof.winner
            or not verify_ticket(ticket)
        ):
            return False
        slots.add(ticket_slot(ticket))
    return len(slots) >= proof.threshold


# aggregation


def aggregate(
    consensus: ConsensusProof,
    transcripts: Sequence[ExecutionTranscript],
    batch_root_before: bytes | None = None,
) -> AggregatedProof:
    if not transcripts and batch_root_before is None:
        raise MalformedTx("an empty batch needs its root")
    start = transcripts[0].root_before if transcripts else batch_root_before
    if batch_root_before is not None and start != batch_root_before:
        raise ChainBreak(0)
    for index in range(1, len(transcripts)):
        if transcripts[index - 1].root_after != transcripts[index].root_before:
            raise ChainBreak(index)
    return AggregatedProof(
        consensus=consensus,
        transcripts=list(transcripts),
        batch_root_before=start,
        batch_root_after=transcripts[-1].root_after if transcripts else start,
    )


def verify_batch_execution(
    proof: AggregatedProof,
    txs: Sequence[BundledTransaction],
    layout: StateLayout,
) -> bool:
    if len(proof.transcripts) != len(txs):
        return False
    cursor = proof.batch_root_before
    for transcript, tx in zip(proof.transcripts, txs):
        if transcript.root_before != cursor:
            return False
        if not verify_execution(transcript.root_before, transcript.root_after, transcript, tx, layout):
            return False
        cursor = transcript.root_after
    return cursor == proof.batch_root_after


def verify_aggregated(
    proof: AggregatedProof,
    txs: Sequence[BundledTransaction],
    pinned_voter_root: bytes,
    round_id: int,
    n_voters: int | None,
    layout: StateLayout,
) -> bool:
    """Equivalent to verifying the consensus proof and every transcript in order."""
    if not verify_consensus(proof.consensus, pinned_voter_root, round_id, n_voters):
        return False
    return verify_batch_execution(proof, txs, layout)
