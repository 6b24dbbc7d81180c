# -*- coding = utf-8 -*-
# @Time: 2026/08/18 14:41
# @Author: xchain-sync developers
# @Site:
# @File: tx_registry.py
"""Closed registry of the predefined functions a bundled transaction may call.

Every schema turns a sub-transaction into leaf operations: a path plus a pure
transform of the leaf's old value. The prover, the verifier and sequential
replay all run the same transforms, so a transcript can only verify when it
is the faithful execution of its declared transaction.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, List, Mapping, Optional

from xchain_sync.common.crypto import tagged_digest
from xchain_sync.common.enums import (
    SchemaId,
    SideEffectKind,
    TxSourceKind,
    UNSAFE_SIDE_EFFECTS,
)
from xchain_sync.common.errors import (
    LayoutError,
    MalformedTx,
    SyncError,
    UnknownChainError,
    UnknownSchema,
)
from xchain_sync.merkle_state import (
    EMPTY_LEAF,
    SYSTEM_REGION,
    TOMBSTONE,
    Path,
    StateLayout,
    decode_balance,
    encode_balance,
)
from xchain_sync.schema.tx_model import (
    ArgValue,
    BundledTransaction,
    SanityPredicate,
    SideEffect,
    SubTx,
    TxSource,
)

ALL_CHAINS = "*"


class GuardViolation(SyncError):
    """A transform refused the leaf's current value."""


@dataclass(frozen=True)
class LeafOp:
    path: Path
    transform: Callable[[bytes], bytes]


@dataclass(frozen=True)
class Schema:
    schema_id: SchemaId
    fields: Mapping[str, type]
    ops: Callable[[SubTx, StateLayout], List[LeafOp]]
    side_effect: Callable[[SubTx], Optional[SideEffect]]
    system_only: bool = False


def invocation_commitment(chain: str, invocation_id: int, sender: str, amount: int, revoked: bool) -> bytes:
    return tagged_digest("revoke" if revoked else "invoke", chain, invocation_id, sender, amount)


def round_record(round_id: int, winner: str) -> bytes:
    return tagged_digest("round", round_id, winner)


def _add(delta: int, guard: bool = False) -> Callable[[bytes], bytes]:
    def transform(old: bytes) -> bytes:
        balance = decode_balance(old) + delta
        if guard and balance < 0:
            raise GuardViolation(f"balance would drop to {balance}")
        return encode_balance(balance)

    return transform


def _write_once(value: bytes) -> Callable[[bytes], bytes]:
    def transform(old: bytes) -> bytes:
        if old != EMPTY_LEAF:
            raise GuardViolation("slot already written")
        return value

    return transform


def _retire(pubkey: bytes) -> Callable[[bytes], bytes]:
    def transform(old: bytes) -> bytes:
        if old != pubkey:
            raise GuardViolation("voter slot does not hold this key")
        return TOMBSTONE

    return transform


def _own_account(step: SubTx, layout: StateLayout, account: str) -> Path:
    chain, _ = layout.split_account(account)
    if chain != step.chain:
        raise MalformedTx(f"account {account} is not on step chain {step.chain}")
    return layout.account_path(account)


def _leaf_update_ops(step: SubTx, layout: StateLayout) -> List[LeafOp]:
    return [LeafOp(_own_account(step, layout, step.args["account"]), _add(step.args["delta"]))]


def _guarded_transfer_ops(step: SubTx, layout: StateLayout) -> List[LeafOp]:
    amount = step.args["amount"]
    if amount < 0:
        raise MalformedTx("transfer amount must be non-negative")
    src = _own_account(step, layout, step.args["src"])
    dst = layout.account_path(step.args["dst"])
    if src == dst:
        raise MalformedTx("transfer source and destination coincide")
    return [LeafOp(src, _add(-amount, guard=True)), LeafOp(dst, _add(amount))]


def _registration_ops(step: SubTx, layout: StateLayout) -> List[LeafOp]:
    try:
        pubkey = bytes.fromhex(step.args["pubkey"])
    except ValueError:
        raise MalformedTx("voter pubkey is not hex") from None
    if len(pubkey) != 32:
        raise MalformedTx("voter pubkey must be 32 bytes")
    path = layout.voter_path(step.args["slot"])
    if step.args["quit"]:
        return [LeafOp(path, _retire(pubkey))]
    return [LeafOp(path, _write_once(pubkey))]


def _vote_record_ops(step: SubTx, layout: StateLayout) -> List[LeafOp]:
    record = round_record(step.args["round"], step.args["winner"])
    return [LeafOp(layout.round_record_path(step.args["round"]), _write_once(record))]


def _callback_ops(step: SubTx, layout: StateLayout) -> List[LeafOp]:
    if step.args["amount"] < 0:
        raise MalformedTx("callback amount must be non-negative")
    return [LeafOp(_own_account(step, layout, step.args["account"]), _add(-step.args["amount"]))]


def _invoke_record_ops(step: SubTx, layout: StateLayout) -> List[LeafOp]:
    args = step.args
    commitment = invocation_commitment(
        step.chain, args["invocation_id"], args["sender"], args["amount"], args["revoked"]
    )
    return [LeafOp(layout.invocation_path(step.chain, args["invocation_id"]), _write_once(commitment))]


def _no_effect(step: SubTx) -> Optional[SideEffect]:
    return None


def _registration_effect(step: SubTx) -> Optional[SideEffect]:
    return SideEffect(
        kind=SideEffectKind.UPDATE_VOTER_ROOT,
        target=ALL_CHAINS,
        args={"slot": step.args["slot"], "quit": step.args["quit"]},
    )


def _vote_record_effect(step: SubTx) -> Optional[SideEffect]:
    return SideEffect(
        kind=SideEffectKind.EVENT,
        target=ALL_CHAINS,
        args={"round": step.args["round"], "winner": step.args["winner"]},
    )


def _callback_effect(step: SubTx) -> Optional[SideEffect]:
    kind = SideEffectKind.WITHDRAW if step.args["method"] == "withdraw" else SideEffectKind.CALLBACK
    return SideEffect(
        kind=kind,
        target=step.chain,
        args={"to": step.args["to"], "amount": step.args["amount"], "method": step.args["method"]},
    )


def _invoke_record_effect(step: SubTx) -> Optional[SideEffect]:
    return SideEffect(
        kind=SideEffectKind.REMOVE_PENDING_INVOCATION,
        target=step.chain,
        args={"invocation_id": step.args["invocation_id"], "refund": step.args["revoked"]},
    )


SCHEMAS: Dict[SchemaId, Schema] = {
    SchemaId.LEAF_UPDATE: Schema(
        SchemaId.LEAF_UPDATE, {"account": str, "delta": int}, _leaf_update_ops, _no_effect
    ),
    SchemaId.GUARDED_TRANSFER: Schema(
        SchemaId.GUARDED_TRANSFER,
        {"src": str, "dst": str, "amount": int},
        _guarded_transfer_ops,
        _no_effect,
    ),
    SchemaId.REGISTRATION: Schema(
        SchemaId.REGISTRATION,
        {"slot": int, "node": str, "pubkey": str, "quit": bool},
        _registration_ops,
        _registration_effect,
        system_only=True,
    ),
    SchemaId.VOTE_RECORD: Schema(
        SchemaId.VOTE_RECORD,
        {"round": int, "winner": str},
        _vote_record_ops,
        _vote_record_effect,
        system_only=True,
    ),
    SchemaId.CALLBACK: Schema(
        SchemaId.CALLBACK,
        {"account": str, "to": str, "amount": int, "method": str},
        _callback_ops,
        _callback_effect,
    ),
    SchemaId.INVOKE_RECORD: Schema(
        SchemaId.INVOKE_RECORD,
        {"invocation_id": int, "sender": str, "amount": int, "revoked": bool},
        _invoke_record_ops,
        _invoke_record_effect,
    ),
}


def get_schema(schema_id: SchemaId | str) -> Schema:
    try:
        return SCHEMAS[SchemaId(schema_id)]
    except (ValueError, KeyError):
        raise UnknownSchema(f"unknown schema {schema_id!r}") from None


def _check_fields(schema: Schema, args: Mapping[str, ArgValue]) -> None:
    if set(args) != set(schema.fields):
        raise MalformedTx(
            f"{schema.schema_id.value} expects fields {sorted(schema.fields)}, got {sorted(args)}"
        )
    for name, kind in schema.fields.items():
        value = args[name]
        if kind is int and (isinstance(value, bool) or not isinstance(value, int)):
            raise MalformedTx(f"{schema.schema_id.value}.{name} must be an integer")
        if not isinstance(value, kind):
            raise MalformedTx(f"{schema.schema_id.value}.{name} must be {kind.__name__}")


def leaf_ops(step: SubTx, layout: StateLayout) -> List[LeafOp]:
    schema = get_schema(step.schema_id)
    _check_fields(schema, step.args)
    if schema.system_only and step.chain != SYSTEM_REGION:
        raise MalformedTx(f"{schema.schema_id.value} runs only in the system region")
    if not schema.system_only and step.chain not in layout.chains:
        raise MalformedTx(f"step targets unknown chain {step.chain!r}")
    try:
        return schema.ops(step, layout)
    except (LayoutError, UnknownChainError) as exc:
        raise MalformedTx(str(exc)) from exc


def derive_side_effect(step: SubTx) -> Optional[SideEffect]:
    schema = get_schema(step.schema_id)
    _check_fields(schema, step.args)
    return schema.side_effect(step)


def predicate_holds(predicate: SanityPredicate, value: bytes) -> bool:
    return decode_balance(value) >= predicate.min_balance


def validate_tx(tx: BundledTransaction, layout: StateLayout) -> None:
    """Structural checks shared by prover and verifier; raises MalformedTx."""
    touched: set[Path] = set()
    for index, step in enumerate(tx.steps):
        ops = leaf_ops(step, layout)
        touched.update(op.path for op in ops)
        is_invoke = step.schema_id == SchemaId.INVOKE_RECORD
        if is_invoke and (index != 0 or tx.source.kind != TxSourceKind.INVOKE_HEADED):
            raise MalformedTx("invoke_record is allowed only as step 0 of an invoke-headed tx")
        if index == 0 and tx.source.kind == TxSourceKind.INVOKE_HEADED:
            if not is_invoke:
                raise MalformedTx("invoke-headed tx must start with invoke_record")
            if step.chain != tx.source.chain or step.args["invocation_id"] != tx.source.invocation_id:
                raise MalformedTx("invoke head does not match the tx source")
        if step.side_effect != derive_side_effect(step):
            raise MalformedTx(f"step {index} declares a side effect its schema does not produce")
        if step.side_effect is not None and step.side_effect.kind in UNSAFE_SIDE_EFFECTS and step.predicate is None:
            raise MalformedTx(f"step {index} has an unsafe side effect but no sanity predicate")
        if step.predicate is not None:
            try:
                guarded = layout.account_path(step.predicate.account)
            except (LayoutError, UnknownChainError) as exc:
                raise MalformedTx(str(exc)) from exc
            if guarded not in touched:
                raise MalformedTx(f"predicate {step.predicate.predicate_id} guards an untouched account")
    if tx.source.kind == TxSourceKind.INVOKE_HEADED and not tx.steps:
        raise MalformedTx("invoke-headed tx has no steps")


def make_step(
    chain: str,
    schema_id: SchemaId,
    predicate: SanityPredicate | None = None,
    **args: ArgValue,
) -> SubTx:
    """Build a sub-transaction carrying the side effect its schema derives."""
    step = SubTx(chain=chain, schema_id=SchemaId(schema_id).value, args=args, predicate=predicate)
    return step.model_copy(update={"side_effect": derive_side_effect(step)})


def build_transfer_continuation(
    origin: str,
    invocation_id: int,
    sender: str,
    recipient: str,
    amount: int,
) -> BundledTransaction:
    """Bundled tx that finishes an escrowed transfer from ``origin`` to ``recipient``.

    Debits the sender into the origin liquidity pool, credits the recipient and
    pays the recipient out of the destination pool's native custody.
    """
    target, _, name = recipient.partition("/")
    steps = [
        make_step(origin, SchemaId.INVOKE_RECORD, invocation_id=invocation_id, sender=sender, amount=amount, revoked=False),
        make_step(origin, SchemaId.GUARDED_TRANSFER, src=f"{origin}/{sender}", dst=f"{origin}/lp", amount=amount),
        make_step(target, SchemaId.LEAF_UPDATE, account=recipient, delta=amount),
        make_step(
            target,
            SchemaId.CALLBACK,
            predicate=SanityPredicate(predicate_id=f"lp-solvent:{target}", account=f"{target}/lp", min_balance=0),
            account=f"{target}/lp",
            to=name,
            amount=amount,
            method="withdraw",
        ),
    ]
    return BundledTransaction(
        id=f"invoke:{origin}:{invocation_id}",
        source=TxSource(kind=TxSourceKind.INVOKE_HEADED, chain=origin, invocation_id=invocation_id),
        steps=steps,
    )


def build_revoke_record(origin: str, invocation_id: int, sender: str, amount: int) -> BundledTransaction:
    """Consumes the invocation slot with the revoke commitment; finalizing it refunds the escrow."""
    return BundledTransaction(
        id=f"revoke:{origin}:{invocation_id}",
        source=TxSource(kind=TxSourceKind.INVOKE_HEADED, chain=origin, invocation_id=invocation_id),
        steps=[
            make_step(origin, SchemaId.INVOKE_RECORD, invocation_id=invocation_id, sender=sender, amount=amount, revoked=True)
        ],
    )


def build_pure_transfer(tx_id: str, src: str, dst: str, amount: int) -> BundledTransaction:
    chain = src.partition("/")[0]
    return BundledTransaction(
        id=tx_id,
        steps=[make_step(chain, SchemaId.GUARDED_TRANSFER, src=src, dst=dst, amount=amount)],
    )


def build_registration(node: str, slot: int, pubkey: bytes, quit: bool = False) -> BundledTransaction:
    return BundledTransaction(
        id=f"{'quit' if quit else 'register'}:{node}:{slot}",
        source=TxSource(kind=TxSourceKind.SYSTEM),
        steps=[make_step(SYSTEM_REGION, SchemaId.REGISTRATION, slot=slot, node=node, pubkey=pubkey.hex(), quit=quit)],
    )


def build_round_record(round_id: int, winner: str) -> BundledTransaction:
    return BundledTransaction(
        id=f"round:{round_id}",
        source=TxSource(kind=TxSourceKind.SYSTEM),
        steps=[make_step(SYSTEM_REGION, SchemaId.VOTE_RECORD, round=round_id, winner=winner)],
    )
