from __future__ import annotations

from typing import Dict, List, Optional, Set, Tuple

from pydantic import Field

from xchain_sync.common.enums import ChainEventKind, RoundStatus, SideEffectKind
from xchain_sync.schema.base import FrozenModel, HashBytes, PinnedHash, PrettyPrintBaseModel
from xchain_sync.schema.proof_model import AggregatedProof, ConsensusProof
from xchain_sync.schema.tx_model import ArgValue, TxBatch


class PendingInvocation(FrozenModel):
    invocation_id: int
    chain: str
    sender: str
    amount: int
    recipient: str
    recorded_height: int
    # leaf the consuming tx must write; folded into s' by native_chain.post_invoke_root
    commitment: HashBytes


class FinalizeCall(FrozenModel):
    l2account: int
    tx_data: TxBatch
    verify_data: AggregatedProof
    vid: str
    nonce: int
    rid: int


class Block(FrozenModel):
    round: int
    producer: str
    txs: TxBatch
    pre_root: PinnedHash
    post_root: PinnedHash
    proof: AggregatedProof

    def check_invariants(self) -> bool:
        return (
            self.proof.batch_root_before == self.pre_root
            and self.proof.batch_root_after == self.post_root
            and self.proof.consensus.winner == self.producer
            and self.proof.consensus.round == self.round
            and len(self.proof.transcripts) == len(self.txs.txs)
        )


class SkipSignal(FrozenModel):
    round: int
    proof: ConsensusProof


class RevokeSkipSignal(FrozenModel):
    round: int
    proof: ConsensusProof
    evidence: FinalizeCall


class BlockObservedOnChain(FrozenModel):
    chain: str
    round: int
    call: FinalizeCall


class SideEffectReceipt(FrozenModel):
    kind: SideEffectKind
    chain: str
    round: int
    tx_id: str
    l2account: int
    args: Dict[str, ArgValue] = Field(default_factory=dict)


class ChainEvent(FrozenModel):
    kind: ChainEventKind
    chain: str
    height: int
    round: Optional[int] = None
    invocation: Optional[PendingInvocation] = None
    call: Optional[FinalizeCall] = None
    reason: str = ""
    submitter: str = ""


# the event ``invoke`` returns
InvokeEvent = ChainEvent


class ProxyState(PrettyPrintBaseModel):
    """Local state of the guest proxy contract on one native chain."""

    chain_id: str
    height: int = 0
    delta_h: int = 20
    pinned_global_root: PinnedHash
    pinned_voter_root: PinnedHash
    voter_count: int
    region_prefix: Tuple[int, ...]
    pending: Dict[int, PendingInvocation] = Field(default_factory=dict)
    revoked: Dict[int, PendingInvocation] = Field(default_factory=dict)
    ledger: Dict[str, int] = Field(default_factory=dict)
    partial_leaves: Dict[Tuple[int, ...], HashBytes] = Field(default_factory=dict)
    round_status: Dict[int, RoundStatus] = Field(default_factory=dict)
    reopened: Set[int] = Field(default_factory=set)
    current_round: int = 0
    nonces: Dict[str, int] = Field(default_factory=dict)
    finalized_log: List[FinalizeCall] = Field(default_factory=list)
    receipts: List[SideEffectReceipt] = Field(default_factory=list)
    next_invocation_id: int = 0
    honor_revoke_skip: bool = True

    def fork(self) -> "ProxyState":
        """Copy with fresh containers; entries inside them are immutable."""
        return self.model_copy(
            update={
                "pending": dict(self.pending),
                "revoked": dict(self.revoked),
                "ledger": dict(self.ledger),
                "partial_leaves": dict(self.partial_leaves),
                "round_status": dict(self.round_status),
                "reopened": set(self.reopened),
                "nonces": dict(self.nonces),
                "finalized_log": list(self.finalized_log),
                "receipts": list(self.receipts),
            }
        )

    def status_of(self, round_id: int) -> RoundStatus:
        return self.round_status.get(round_id, RoundStatus.OPEN)

    @property
    def custody_total(self) -> int:
        return sum(self.ledger.values())
