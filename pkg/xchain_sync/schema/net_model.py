from __future__ import annotations

from typing import Dict, List, Optional

from pydantic import Field

from xchain_sync.common.enums import TimerKind, TraceKind
from xchain_sync.schema.base import FrozenModel, HashBytes
from xchain_sync.schema.chain_model import (
    ChainEvent,
    FinalizeCall,
    RevokeSkipSignal,
    SkipSignal,
)
from xchain_sync.schema.proof_model import VoteTicket
from xchain_sync.schema.tx_model import BundledTransaction

TraceValue = bool | int | str | None | List[str]


class RelayedEvent(FrozenModel):
    origin: str
    event: ChainEvent
    observed_height: int
    relayer: str
    signature: HashBytes


class ClientTxMsg(FrozenModel):
    tx: BundledTransaction


class ChainEventMsg(FrozenModel):
    event: ChainEvent


class VoteMsg(FrozenModel):
    ticket: VoteTicket


class SkipVoteMsg(FrozenModel):
    ticket: VoteTicket


class RevokeSkipVoteMsg(FrozenModel):
    ticket: VoteTicket


class FinalizeMsg(FrozenModel):
    call: FinalizeCall
    submitter: str


class SkipMsg(FrozenModel):
    signal: SkipSignal
    submitter: str


class RevokeSkipMsg(FrozenModel):
    signal: RevokeSkipSignal
    submitter: str


class TimerMsg(FrozenModel):
    kind: TimerKind
    round: int


class TraceEvent(FrozenModel):
    time: int
    seq: int
    actor: str
    kind: TraceKind
    round: Optional[int] = None
    digest: str = ""
    detail: Dict[str, TraceValue] = Field(default_factory=dict)
