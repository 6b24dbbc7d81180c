from __future__ import annotations

from typing import Dict, List, Tuple

from xchain_sync.schema.base import FrozenModel, HashBytes, PinnedHash


class LeafWitness(FrozenModel):
    """Opening of one leaf update: siblings are ordered leaf to root."""

    path: Tuple[int, ...]
    old_value: HashBytes
    new_value: HashBytes
    siblings: List[List[HashBytes]]


class MembershipProof(FrozenModel):
    path: Tuple[int, ...]
    pubkey: HashBytes
    siblings: List[List[HashBytes]]


class LocalStateView(FrozenModel):
    region: str
    prefix: Tuple[int, ...]
    root: PinnedHash
    leaves: Dict[Tuple[int, ...], HashBytes]
