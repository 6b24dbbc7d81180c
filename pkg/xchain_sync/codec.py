# -*- coding = utf-8 -*-
# @Time: 2026-09-02 10:03:41
# @Author: xchain-sync developers
# @Site:
# @File: codec.py
"""Canonical byte layouts for trees, witnesses and proofs.

Integers are little-endian and fixed width, strings and byte strings carry a
u32 length prefix, lists a u32 count. Each top-level record starts with a
four-byte magic so a decoder refuses bytes of another record type.
"""
from __future__ import annotations

import struct
from typing import Callable, Dict, List, Sequence, TypeVar

from xchain_sync.common.crypto import NodeSigner, sha256
from xchain_sync.common.enums import TicketKind
from xchain_sync.common.errors import CodecError, SyncError
from xchain_sync.consensus import VoterRegistry, canonical_candidate, cast_vote, produce_block
from xchain_sync.merkle_state import GlobalState, StateLayout, StateTree, update_leaf
from xchain_sync.proof_engine import prove_consensus
from xchain_sync.schema.chain_model import FinalizeCall
from xchain_sync.schema.proof_model import (
    AggregatedProof,
    ConsensusProof,
    ExecutionTranscript,
    SanityCheckRecord,
    VoteTicket,
)
from xchain_sync.schema.state_model import LeafWitness, MembershipProof
from xchain_sync.tx_registry import build_pure_transfer

T = TypeVar("T")

TREE_MAGIC = b"XST1"
WITNESS_MAGIC = b"XLW1"
TRANSCRIPT_MAGIC = b"XET1"
TICKET_MAGIC = b"XVT1"
CONSENSUS_MAGIC = b"XCP1"
AGGREGATED_MAGIC = b"XAP1"


class _Writer:
    def __init__(self, magic: bytes = b""):
        self._parts: List[bytes] = [magic]

    def u8(self, value: int) -> "_Writer":
        self._parts.append(struct.pack("<B", value))
        return self

    def u32(self, value: int) -> "_Writer":
        self._parts.append(struct.pack("<I", value))
        return self

    def u64(self, value: int) -> "_Writer":
        self._parts.append(struct.pack("<Q", value))
        return self

    def raw(self, value: bytes) -> "_Writer":
        self._parts.append(bytes(value))
        return self

    def blob(self, value: bytes) -> "_Writer":
        return self.u32(len(value)).raw(value)

    def text(self, value: str) -> "_Writer":
        return self.blob(value.encode("utf-8"))

    def path(self, path: Sequence[int]) -> "_Writer":
        self.u8(len(path))
        for digit in path:
            self.u8(digit)
        return self

    def siblings(self, levels: Sequence[Sequence[bytes]]) -> "_Writer":
        self.u32(len(levels))
        for level in levels:
            self.u8(len(level))
            for node in level:
                self.blob(node)
        return self

    def many(self, items: Sequence[T], encode: Callable[["_Writer", T], object]) -> "_Writer":
        self.u32(len(items))
        for item in items:
            encode(self, item)
        return self

    def getvalue(self) -> bytes:
        return b"".join(self._parts)


class _Reader:
    def __init__(self, data: bytes, magic: bytes = b""):
        self._data = bytes(data)
        self._offset = 0
        if magic and self.take(len(magic)) != magic:
            raise CodecError(f"expected record magic {magic!r}")

    def take(self, size: int) -> bytes:
        end = self._offset + size
        if size < 0 or end > len(self._data):
            raise CodecError(f"truncated input at offset {self._offset}")
        chunk = self._data[self._offset:end]
        self._offset = end
        return chunk

    def u8(self) -> int:
        return struct.unpack("<B", self.take(1))[0]

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self.take(8))[0]

    def blob(self) -> bytes:
        return self.take(self.u32())

    def text(self) -> str:
        try:
            return self.blob().decode("utf-8")
        except UnicodeDecodeError as exc:
            raise CodecError("string field is not utf-8") from exc

    def path(self) -> tuple:
        return tuple(self.u8() for _ in range(self.u8()))

    def siblings(self) -> List[List[bytes]]:
        return [[self.blob() for _ in range(self.u8())] for _ in range(self.u32())]

    def many(self, decode: Callable[["_Reader"], T]) -> List[T]:
        return [decode(self) for _ in range(self.u32())]

    def done(self) -> None:
        if self._offset != len(self._data):
            raise CodecError(f"{len(self._data) - self._offset} trailing bytes")


def _decode(data: bytes, magic: bytes, read: Callable[[_Reader], T]) -> T:
    reader = _Reader(data, magic)
    try:
        value = read(reader)
    except (ValueError, SyncError) as exc:
        if isinstance(exc, CodecError):
            raise
        raise CodecError(str(exc)) from exc
    reader.done()
    return value


# state tree


def encode_tree(tree: StateTree) -> bytes:
    writer = _Writer(TREE_MAGIC).u8(tree.depth).u8(tree.arity).u32(len(tree.leaves))
    for path in sorted(tree.leaves):
        writer.path(path).blob(tree.leaves[path])
    return writer.getvalue()


def decode_tree(data: bytes) -> StateTree:
    def read(reader: _Reader) -> StateTree:
        depth, arity = reader.u8(), reader.u8()
        leaves = {}
        for _ in range(reader.u32()):
            path = reader.path()
            if path in leaves:
                raise CodecError(f"leaf {path} encoded twice")
            leaves[path] = reader.blob()
        return StateTree(depth, arity, leaves)

    return _decode(data, TREE_MAGIC, read)


# witnesses and transcripts


def _write_witness(writer: _Writer, witness: LeafWitness) -> None:
    writer.path(witness.path).blob(witness.old_value).blob(witness.new_value).siblings(witness.siblings)


def _read_witness(reader: _Reader) -> LeafWitness:
    return LeafWitness(path=reader.path(), old_value=reader.blob(), new_value=reader.blob(), siblings=reader.siblings())


def encode_witness(witness: LeafWitness) -> bytes:
    writer = _Writer(WITNESS_MAGIC)
    _write_witness(writer, witness)
    return writer.getvalue()


def decode_witness(data: bytes) -> LeafWitness:
    return _decode(data, WITNESS_MAGIC, _read_witness)


def _write_check(writer: _Writer, check: SanityCheckRecord) -> None:
    writer.u32(check.step).text(check.predicate_id).u8(int(check.passed))


def _read_check(reader: _Reader) -> SanityCheckRecord:
    return SanityCheckRecord(step=reader.u32(), predicate_id=reader.text(), passed=bool(reader.u8()))


def _write_transcript(writer: _Writer, transcript: ExecutionTranscript) -> None:
    writer.text(transcript.tx_id)
    writer.many(transcript.schema_ids, _Writer.text)
    writer.raw(transcript.root_before).raw(transcript.root_after)
    writer.many(transcript.steps, _write_witness)
    writer.many(transcript.sanity_checks, _write_check)


def _read_transcript(reader: _Reader) -> ExecutionTranscript:
    return ExecutionTranscript(
        tx_id=reader.text(),
        schema_ids=reader.many(_Reader.text),
        root_before=reader.take(32),
        root_after=reader.take(32),
        steps=reader.many(_read_witness),
        sanity_checks=reader.many(_read_check),
    )


def encode_transcript(transcript: ExecutionTranscript) -> bytes:
    writer = _Writer(TRANSCRIPT_MAGIC)
    _write_transcript(writer, transcript)
    return writer.getvalue()


def decode_transcript(data: bytes) -> ExecutionTranscript:
    return _decode(data, TRANSCRIPT_MAGIC, _read_transcript)


# consensus


def _write_ticket(writer: _Writer, ticket: VoteTicket) -> None:
    writer.text(ticket.kind.value).text(ticket.voter).text(ticket.candidate).u64(ticket.round)
    writer.raw(ticket.voter_root).blob(ticket.signature)
    writer.path(ticket.membership.path).blob(ticket.membership.pubkey).siblings(ticket.membership.siblings)


def _read_ticket(reader: _Reader) -> VoteTicket:
    kind, voter, candidate, round_id = TicketKind(reader.text()), reader.text(), reader.text(), reader.u64()
    voter_root, signature = reader.take(32), reader.blob()
    membership = MembershipProof(path=reader.path(), pubkey=reader.blob(), siblings=reader.siblings())
    return VoteTicket(
        kind=kind,
        voter=voter,
        candidate=candidate,
        round=round_id,
        voter_root=voter_root,
        signature=signature,
        membership=membership,
    )


def encode_ticket(ticket: VoteTicket) -> bytes:
    writer = _Writer(TICKET_MAGIC)
    _write_ticket(writer, ticket)
    return writer.getvalue()


def decode_ticket(data: bytes) -> VoteTicket:
    return _decode(data, TICKET_MAGIC, _read_ticket)


def _write_consensus(writer: _Writer, proof: ConsensusProof) -> None:
    writer.text(proof.kind.value).u64(proof.round).raw(proof.voter_root).text(proof.winner).u32(proof.threshold)
    writer.many(proof.tickets, _write_ticket)


def _read_consensus(reader: _Reader) -> ConsensusProof:
    kind, round_id, voter_root, winner, threshold = (
        TicketKind(reader.text()),
        reader.u64(),
        reader.take(32),
        reader.text(),
        reader.u32(),
    )
    return ConsensusProof(
        kind=kind,
        round=round_id,
        voter_root=voter_root,
        winner=winner,
        threshold=threshold,
        tickets=reader.many(_read_ticket),
    )


def encode_consensus(proof: ConsensusProof) -> bytes:
    writer = _Writer(CONSENSUS_MAGIC)
    _write_consensus(writer, proof)
    return writer.getvalue()


def decode_consensus(data: bytes) -> ConsensusProof:
    return _decode(data, CONSENSUS_MAGIC, _read_consensus)


def encode_aggregated(proof: AggregatedProof) -> bytes:
    writer = _Writer(AGGREGATED_MAGIC)
    _write_consensus(writer, proof.consensus)
    writer.many(proof.transcripts, _write_transcript)
    writer.raw(proof.batch_root_before).raw(proof.batch_root_after)
    return writer.getvalue()


def decode_aggregated(data: bytes) -> AggregatedProof:
    def read(reader: _Reader) -> AggregatedProof:
        consensus = _read_consensus(reader)
        transcripts = reader.many(_read_transcript)
        return AggregatedProof(
            consensus=consensus,
            transcripts=transcripts,
            batch_root_before=reader.take(32),
            batch_root_after=reader.take(32),
        )

    return _decode(data, AGGREGATED_MAGIC, read)


# digests


def digest(data: bytes) -> str:
    return sha256(data).hex()


def digest_consensus(proof: ConsensusProof | None) -> str:
    return "" if proof is None else digest(encode_consensus(proof))


def digest_call(call: FinalizeCall) -> str:
    """Identity of a finalize call: same digest on every chain it is submitted to."""
    header = _Writer(b"XFC1").u64(call.l2account).text(call.vid).u64(call.nonce).u64(call.rid)
    header.text(call.tx_data.model_dump_json())
    return digest(header.getvalue() + encode_aggregated(call.verify_data))


def golden_fixtures() -> Dict[str, Dict[str, str]]:
    """Encodings and digests of a fixed two-chain transfer, for cross-implementation checks."""
    layout = StateLayout(chains=["A", "B"], accounts={"A": ["alice", "lp"], "B": ["bob", "lp"]}, depth=8)
    voters = [f"n{index}" for index in range(4)]
    signers = {node: NodeSigner.from_name(node) for node in voters}
    registry = VoterRegistry.genesis(layout, [(node, signers[node].public_key) for node in voters])
    state = GlobalState.genesis(
        layout,
        {"A/alice": 10, "A/lp": 100, "B/bob": 0, "B/lp": 100},
        voter_keys=[signers[node].public_key for node in voters],
    )
    tickets = [cast_vote(node, signers[node], 0, registry) for node in voters]
    winner = canonical_candidate(registry, 0)
    election = prove_consensus(0, registry.root, tickets, registry.n_active)
    production = produce_block(winner, election, [build_pure_transfer("pure:0", "A/alice", "A/lp", 3)], state)
    proof = production.block.proof
    _, witness = update_leaf(state.tree, layout.account_path("A/alice"), production.state_after.tree.get(layout.account_path("A/alice")))
    records = {
        "tree": encode_tree(state.tree),
        "witness": encode_witness(witness),
        "transcript": encode_transcript(proof.transcripts[0]),
        "ticket": encode_ticket(tickets[0]),
        "consensus_proof": encode_consensus(election),
        "aggregated_proof": encode_aggregated(proof),
    }
    fixtures = {name: {"hex": raw.hex(), "digest": digest(raw)} for name, raw in records.items()}
    fixtures["roots"] = {"genesis": state.root.hex(), "after_transfer": production.state_after.root.hex()}
    return fixtures
