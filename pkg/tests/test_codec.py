from __future__ import annotations

import unittest

from xchain_sync.codec import (
    TREE_MAGIC,
    decode_aggregated,
    decode_consensus,
    decode_ticket,
    decode_transcript,
    decode_tree,
    decode_witness,
    digest,
    digest_consensus,
    encode_aggregated,
    encode_consensus,
    encode_ticket,
    encode_transcript,
    encode_tree,
    encode_witness,
    golden_fixtures,
)
from xchain_sync.common.errors import CodecError
from xchain_sync.merkle_state import StateTree, update_leaf
from xchain_sync.proof_engine import verify_ticket

DECODERS = {
    "tree": (decode_tree, encode_tree),
    "witness": (decode_witness, encode_witness),
    "transcript": (decode_transcript, encode_transcript),
    "ticket": (decode_ticket, encode_ticket),
    "consensus_proof": (decode_consensus, encode_consensus),
    "aggregated_proof": (decode_aggregated, encode_aggregated),
}


def build_fixture_bytes(name: str) -> bytes:
    return bytes.fromhex(golden_fixtures()[name]["hex"])


class GoldenFixtureTests(unittest.TestCase):
    def test_fixtures_are_deterministic(self):
        self.assertEqual(golden_fixtures(), golden_fixtures())

    def test_digests_match_encodings(self):
        for name, record in golden_fixtures().items():
            if name == "roots":
                continue
            with self.subTest(record=name):
                self.assertEqual(digest(bytes.fromhex(record["hex"])), record["digest"])

    def test_every_record_decodes_and_reencodes_identically(self):
        fixtures = golden_fixtures()
        for name, (decode, encode) in DECODERS.items():
            with self.subTest(record=name):
                raw = bytes.fromhex(fixtures[name]["hex"])
                self.assertEqual(encode(decode(raw)), raw)

    def test_decoded_tree_keeps_genesis_root(self):
        fixtures = golden_fixtures()
        tree = decode_tree(bytes.fromhex(fixtures["tree"]["hex"]))
        self.assertEqual(tree.root.hex(), fixtures["roots"]["genesis"])

    def test_decoded_proofs_still_verify(self):
        ticket = decode_ticket(build_fixture_bytes("ticket"))
        self.assertTrue(verify_ticket(ticket))
        transcript = decode_transcript(build_fixture_bytes("transcript"))
        fixtures = golden_fixtures()
        self.assertEqual(transcript.root_before.hex(), fixtures["roots"]["genesis"])
        self.assertEqual(transcript.root_after.hex(), fixtures["roots"]["after_transfer"])
        consensus = decode_consensus(build_fixture_bytes("consensus_proof"))
        aggregated = decode_aggregated(build_fixture_bytes("aggregated_proof"))
        self.assertEqual(aggregated.consensus, consensus)
        self.assertEqual(digest_consensus(consensus), fixtures["consensus_proof"]["digest"])
        self.assertEqual(digest_consensus(None), "")


class MalformedInputTests(unittest.TestCase):
    def test_wrong_magic_is_refused(self):
        with self.assertRaises(CodecError):
            decode_ticket(build_fixture_bytes("tree"))

    def test_truncated_input_is_refused(self):
        raw = build_fixture_bytes("aggregated_proof")
        for cut in (3, 10, len(raw) // 2, len(raw) - 1):
            with self.subTest(cut=cut):
                with self.assertRaises(CodecError):
                    decode_aggregated(raw[:cut])

    def test_trailing_bytes_are_refused(self):
        with self.assertRaises(CodecError):
            decode_witness(build_fixture_bytes("witness") + b"\x00")

    def test_invalid_tree_shape_is_refused(self):
        raw = TREE_MAGIC + bytes([4, 1]) + (0).to_bytes(4, "little")
        with self.assertRaises(CodecError):
            decode_tree(raw)

    def test_duplicate_leaf_is_refused(self):
        leaf = bytes([1, 0]) + (32).to_bytes(4, "little") + b"\x07" * 32
        raw = TREE_MAGIC + bytes([1, 2]) + (2).to_bytes(4, "little") + leaf + leaf
        with self.assertRaises(CodecError):
            decode_tree(raw)


class EncodingStabilityTests(unittest.TestCase):
    def test_tree_encoding_ignores_insertion_order(self):
        first = StateTree(depth=4)
        for path in [(0, 0, 1, 1), (1, 0, 1, 0), (0, 1, 1, 1)]:
            first, _ = update_leaf(first, path, bytes([sum(path) + 1]) * 32)
        second = StateTree(depth=4)
        for path in [(0, 1, 1, 1), (0, 0, 1, 1), (1, 0, 1, 0)]:
            second, _ = update_leaf(second, path, bytes([sum(path) + 1]) * 32)
        self.assertEqual(encode_tree(first), encode_tree(second))

    def test_transcript_decoding_preserves_verification_inputs(self):
        transcript = decode_transcript(build_fixture_bytes("transcript"))
        witness = transcript.steps[0]
        self.assertEqual(len(witness.siblings), len(witness.path))
        self.assertEqual(encode_witness(decode_witness(encode_witness(witness))), encode_witness(witness))


if __name__ == "__main__":
    unittest.main()
