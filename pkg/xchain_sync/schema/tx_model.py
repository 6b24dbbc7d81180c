from __future__ import annotations

from typing import Dict, List, Optional

from pydantic import Field, model_validator

from xchain_sync.common.enums import SideEffectKind, TxSourceKind
from xchain_sync.schema.base import FrozenModel

ArgValue = bool | int | str


class SanityPredicate(FrozenModel):
    """Guard ``balance(account) >= min_balance`` checked right after its step."""

    predicate_id: str
    account: str
    min_balance: int = 0


class SideEffect(FrozenModel):
    kind: SideEffectKind
    target: str
    args: Dict[str, ArgValue] = Field(default_factory=dict)


class SubTx(FrozenModel):
    chain: str
    schema_id: str
    args: Dict[str, ArgValue] = Field(default_factory=dict)
    predicate: Optional[SanityPredicate] = None
    side_effect: Optional[SideEffect] = None


class TxSource(FrozenModel):
    kind: TxSourceKind = TxSourceKind.PURE
    chain: Optional[str] = None
    invocation_id: Optional[int] = None

    @model_validator(mode="after")
    def validate_invoke_origin(self):
        if self.kind == TxSourceKind.INVOKE_HEADED and (
            self.chain is None or self.invocation_id is None
        ):
            raise ValueError("invoke-headed source needs chain and invocation_id")
        return self


class BundledTransaction(FrozenModel):
    id: str
    source: TxSource = Field(default_factory=TxSource)
    steps: List[SubTx] = Field(default_factory=list)

    @property
    def invocation_key(self) -> str | None:
        if self.source.kind != TxSourceKind.INVOKE_HEADED:
            return None
        return invocation_key(self.source.chain, self.source.invocation_id)


def invocation_key(chain: str, invocation_id: int) -> str:
    return f"{chain}:{invocation_id}"


class DroppedTx(FrozenModel):
    tx: BundledTransaction
    reason: str


class TxBatch(FrozenModel):
    """The ``tx_data`` of a finalize call: included txs plus the ones dropped."""

    txs: List[BundledTransaction] = Field(default_factory=list)
    dropped: List[DroppedTx] = Field(default_factory=list)
