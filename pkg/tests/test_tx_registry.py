from __future__ import annotations

import unittest

from xchain_sync.common.enums import SchemaId, SideEffectKind, TxSourceKind
from xchain_sync.common.errors import MalformedTx, UnknownSchema
from xchain_sync.merkle_state import EMPTY_LEAF, SYSTEM_REGION, TOMBSTONE, StateLayout, decode_balance, encode_balance
from xchain_sync.schema.tx_model import BundledTransaction, SanityPredicate, SubTx, TxSource
from xchain_sync.tx_registry import (
    GuardViolation,
    build_pure_transfer,
    build_registration,
    build_revoke_record,
    build_round_record,
    build_transfer_continuation,
    get_schema,
    invocation_commitment,
    leaf_ops,
    make_step,
    validate_tx,
)

PUBKEY = bytes(range(32))


def build_layout() -> StateLayout:
    return StateLayout(
        chains=["A", "B"],
        accounts={"A": ["alice", "lp"], "B": ["bob", "lp"]},
        depth=8,
    )


class SchemaTests(unittest.TestCase):
    def test_unknown_schema_raises(self):
        with self.assertRaises(UnknownSchema):
            get_schema("mint")
        step = SubTx(chain="A", schema_id="mint", args={})
        with self.assertRaises(UnknownSchema):
            leaf_ops(step, build_layout())

    def test_missing_or_mistyped_fields_are_malformed(self):
        layout = build_layout()
        missing = SubTx(chain="A", schema_id=SchemaId.LEAF_UPDATE.value, args={"account": "A/alice"})
        with self.assertRaises(MalformedTx):
            leaf_ops(missing, layout)
        mistyped = SubTx(
            chain="A",
            schema_id=SchemaId.LEAF_UPDATE.value,
            args={"account": "A/alice", "delta": True},
        )
        with self.assertRaises(MalformedTx):
            leaf_ops(mistyped, layout)

    def test_guarded_transfer_refuses_overdraft(self):
        ops = leaf_ops(
            make_step("A", SchemaId.GUARDED_TRANSFER, src="A/alice", dst="B/bob", amount=5),
            build_layout(),
        )
        debit, credit = ops
        self.assertEqual(decode_balance(debit.transform(encode_balance(5))), 0)
        self.assertEqual(decode_balance(credit.transform(EMPTY_LEAF)), 5)
        with self.assertRaises(GuardViolation):
            debit.transform(encode_balance(4))

    def test_transfer_source_must_be_on_step_chain(self):
        step = make_step("B", SchemaId.GUARDED_TRANSFER, src="A/alice", dst="B/bob", amount=1)
        with self.assertRaises(MalformedTx):
            leaf_ops(step, build_layout())

    def test_registration_writes_once_and_quit_tombstones(self):
        layout = build_layout()
        join = build_registration("j0", 4, PUBKEY).steps[0]
        (op,) = leaf_ops(join, layout)
        self.assertEqual(op.path, layout.voter_path(4))
        self.assertEqual(op.transform(EMPTY_LEAF), PUBKEY)
        with self.assertRaises(GuardViolation):
            op.transform(PUBKEY)
        leave = build_registration("j0", 4, PUBKEY, quit=True).steps[0]
        (op,) = leaf_ops(leave, layout)
        self.assertEqual(op.transform(PUBKEY), TOMBSTONE)
        with self.assertRaises(GuardViolation):
            op.transform(EMPTY_LEAF)

    def test_system_schemas_only_run_in_system_region(self):
        step = SubTx(
            chain="A",
            schema_id=SchemaId.VOTE_RECORD.value,
            args={"round": 0, "winner": "n0"},
        )
        with self.assertRaises(MalformedTx):
            leaf_ops(step, build_layout())
        record = build_round_record(0, "n0")
        self.assertEqual(record.steps[0].chain, SYSTEM_REGION)
        validate_tx(record, build_layout())

    def test_commitments_distinguish_invoke_and_revoke(self):
        invoke = invocation_commitment("A", 0, "alice", 3, revoked=False)
        revoke = invocation_commitment("A", 0, "alice", 3, revoked=True)
        self.assertNotEqual(invoke, revoke)
        self.assertNotEqual(invoke, invocation_commitment("A", 0, "alice", 4, revoked=False))


class ValidateTxTests(unittest.TestCase):
    def test_builders_produce_valid_transactions(self):
        layout = build_layout()
        for tx in (
            build_transfer_continuation("A", 0, "alice", "B/bob", 3),
            build_revoke_record("A", 0, "alice", 3),
            build_pure_transfer("pure:0", "A/alice", "B/bob", 1),
            build_registration("j0", 4, PUBKEY),
        ):
            validate_tx(tx, layout)

    def test_continuation_carries_guarded_withdraw(self):
        tx = build_transfer_continuation("A", 7, "alice", "B/bob", 3)
        self.assertEqual(tx.invocation_key, "A:7")
        callback = tx.steps[-1]
        self.assertEqual(callback.side_effect.kind, SideEffectKind.WITHDRAW)
        self.assertEqual(callback.predicate.account, "B/lp")

    def test_invoke_record_only_heads_invoke_tx(self):
        layout = build_layout()
        head = make_step("A", SchemaId.INVOKE_RECORD, invocation_id=0, sender="alice", amount=1, revoked=False)
        pure = BundledTransaction(id="bad", steps=[head])
        with self.assertRaises(MalformedTx):
            validate_tx(pure, layout)
        headless = BundledTransaction(
            id="bad",
            source=TxSource(kind=TxSourceKind.INVOKE_HEADED, chain="A", invocation_id=0),
            steps=[make_step("A", SchemaId.LEAF_UPDATE, account="A/alice", delta=1)],
        )
        with self.assertRaises(MalformedTx):
            validate_tx(headless, layout)

    def test_head_must_match_source(self):
        tx = BundledTransaction(
            id="bad",
            source=TxSource(kind=TxSourceKind.INVOKE_HEADED, chain="A", invocation_id=1),
            steps=[make_step("A", SchemaId.INVOKE_RECORD, invocation_id=0, sender="alice", amount=1, revoked=False)],
        )
        with self.assertRaises(MalformedTx):
            validate_tx(tx, build_layout())

    def test_forged_side_effect_is_refused(self):
        honest = build_transfer_continuation("A", 0, "alice", "B/bob", 3)
        callback = honest.steps[-1]
        forged_effect = callback.side_effect.model_copy(update={"args": {**callback.side_effect.args, "amount": 99}})
        steps = honest.steps[:-1] + [callback.model_copy(update={"side_effect": forged_effect})]
        with self.assertRaises(MalformedTx):
            validate_tx(honest.model_copy(update={"steps": steps}), build_layout())

    def test_unsafe_side_effect_needs_predicate(self):
        step = make_step("B", SchemaId.CALLBACK, account="B/lp", to="bob", amount=1, method="withdraw")
        with self.assertRaises(MalformedTx):
            validate_tx(BundledTransaction(id="bad", steps=[step]), build_layout())

    def test_predicate_must_guard_a_touched_account(self):
        predicate = SanityPredicate(predicate_id="p", account="A/lp", min_balance=0)
        step = make_step(
            "B", SchemaId.CALLBACK, predicate=predicate, account="B/lp", to="bob", amount=1, method="withdraw"
        )
        with self.assertRaises(MalformedTx):
            validate_tx(BundledTransaction(id="bad", steps=[step]), build_layout())


if __name__ == "__main__":
    unittest.main()
