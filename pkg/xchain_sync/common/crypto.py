"""Hashing and signing primitives.

Leaves and interior nodes are hashed with distinct one-byte tags so a leaf can
never be mistaken for a subtree. Node keys are Ed25519, derived from a 32-byte
seed so every run of a scenario signs with the same keys.
"""

from __future__ import annotations

import hashlib
import struct
from typing import Iterable

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives import serialization
from cryptography.hazmat.primitives.asymmetric import ed25519

LEAF_TAG = b"\x00"
NODE_TAG = b"\x01"
HASH_SIZE = 32


def sha256(*parts: bytes) -> bytes:
    h = hashlib.sha256()
    for part in parts:
        h.update(part)
    return h.digest()


def leaf_hash(value: bytes) -> bytes:
    return sha256(LEAF_TAG, value)


def interior_hash(children: Iterable[bytes]) -> bytes:
    return sha256(NODE_TAG, *children)


def _field_bytes(field: str | int | bytes | bool) -> bytes:
    if isinstance(field, bool):
        return b"T" if field else b"F"
    if isinstance(field, int):
        return field.to_bytes(16, "big", signed=True)
    if isinstance(field, str):
        return field.encode("utf-8")
    return bytes(field)


def tagged_digest(tag: str, *fields: str | int | bytes | bool) -> bytes:
    """sha256 over a tag and length-prefixed fields."""
    parts = [tag.encode("utf-8"), b"\x00"]
    for field in fields:
        raw = _field_bytes(field)
        parts.append(struct.pack("<I", len(raw)))
        parts.append(raw)
    return sha256(*parts)


class NodeSigner:
    """Ed25519 keypair of one aggregator node (consensus and relayer identity)."""

    def __init__(self, seed: bytes):
        if len(seed) != 32:
            raise ValueError("signer seed must be 32 bytes")
        self._private = ed25519.Ed25519PrivateKey.from_private_bytes(seed)
        self.public_key = self._private.public_key().public_bytes(
            encoding=serialization.Encoding.Raw,
            format=serialization.PublicFormat.Raw,
        )

    @classmethod
    def from_name(cls, name: str, salt: str = "") -> "NodeSigner":
        return cls(tagged_digest("node-key", salt, name))

    def sign(self, message: bytes) -> bytes:
        return self._private.sign(message)


def verify_signature(public_key: bytes, message: bytes, signature: bytes) -> bool:
    try:
        ed25519.Ed25519PublicKey.from_public_bytes(bytes(public_key)).verify(
            bytes(signature), message
        )
        return True
    except (InvalidSignature, ValueError):
        return False
