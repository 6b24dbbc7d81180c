"""Pydantic models shared by the protocol modules."""

from .base import HashBytes, PinnedHash, PrettyPrintBaseModel
from .state_model import LeafWitness, LocalStateView, MembershipProof
from .tx_model import (
    BundledTransaction,
    DroppedTx,
    SanityPredicate,
    SideEffect,
    SubTx,
    TxBatch,
    TxSource,
)
from .proof_model import AggregatedProof, ConsensusProof, ExecutionTranscript, SanityCheckRecord, VoteTicket
from .chain_model import (
    Block,
    BlockObservedOnChain,
    ChainEvent,
    FinalizeCall,
    PendingInvocation,
    ProxyState,
    RevokeSkipSignal,
    SideEffectReceipt,
    SkipSignal,
)
from .sim_model import PropertyReport, ScenarioConfig

__all__ = [
    "HashBytes",
    "PinnedHash",
    "PrettyPrintBaseModel",
    "LeafWitness",
    "LocalStateView",
    "MembershipProof",
    "BundledTransaction",
    "DroppedTx",
    "SanityPredicate",
    "SideEffect",
    "SubTx",
    "TxBatch",
    "TxSource",
    "AggregatedProof",
    "ConsensusProof",
    "ExecutionTranscript",
    "SanityCheckRecord",
    "VoteTicket",
    "Block",
    "BlockObservedOnChain",
    "ChainEvent",
    "FinalizeCall",
    "PendingInvocation",
    "ProxyState",
    "RevokeSkipSignal",
    "SideEffectReceipt",
    "SkipSignal",
    "PropertyReport",
    "ScenarioConfig",
]
