from __future__ import annotations

from typing import List

from xchain_sync.common.enums import TicketKind
from xchain_sync.schema.base import FrozenModel, HashBytes, PinnedHash
from xchain_sync.schema.state_model import LeafWitness, MembershipProof


class SanityCheckRecord(FrozenModel):
    step: int
    predicate_id: str
    passed: bool


class ExecutionTranscript(FrozenModel):
    tx_id: str
    schema_ids: List[str]
    root_before: PinnedHash
    root_after: PinnedHash
    steps: List[LeafWitness]
    sanity_checks: List[SanityCheckRecord]


class VoteTicket(FrozenModel):
    kind: TicketKind = TicketKind.ELECT
    voter: str
    candidate: str = ""
    round: int
    voter_root: PinnedHash
    signature: HashBytes
    membership: MembershipProof


class ConsensusProof(FrozenModel):
    kind: TicketKind = TicketKind.ELECT
    round: int
    voter_root: PinnedHash
    winner: str = ""
    tickets: List[VoteTicket]
    threshold: int


class AggregatedProof(FrozenModel):
    consensus: ConsensusProof
    transcripts: List[ExecutionTranscript]
    batch_root_before: PinnedHash
    batch_root_after: PinnedHash
