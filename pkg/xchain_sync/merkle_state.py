# -*- coding = utf-8 -*-
# @Time: 2026/08/17 10:12
# @Author: xchain-sync developers
# @Site:
# @File: merkle_state.py
"""Sparse merkle tree holding the global state of all native chains.

Leaves are addressed by their MTI path (child positions from the root). Only
non-empty leaves and non-default interior hashes are stored; every missing
node takes the precomputed hash of an empty subtree of its height.
"""
from __future__ import annotations

from functools import lru_cache
from types import MappingProxyType
from typing import Dict, Iterable, List, Mapping, Sequence, Tuple

from pydantic import Field, model_validator

from xchain_sync.common.crypto import HASH_SIZE, interior_hash, leaf_hash
from xchain_sync.common.errors import (
    LayoutError,
    LeafValueError,
    PathError,
    UnknownChainError,
)
from xchain_sync.schema.base import FrozenModel
from xchain_sync.schema.state_model import LeafWitness, LocalStateView

ARITY = 2
DEFAULT_DEPTH = 16
EMPTY_LEAF = bytes(HASH_SIZE)
TOMBSTONE = b"\xff" * HASH_SIZE
SYSTEM_REGION = "system"

Path = Tuple[int, ...]


@lru_cache(maxsize=None)
def empty_hashes(depth: int, arity: int = ARITY) -> Tuple[bytes, ...]:
    """Hash of an all-empty subtree, indexed by subtree height."""
    levels = [leaf_hash(EMPTY_LEAF)]
    for _ in range(depth):
        levels.append(interior_hash([levels[-1]] * arity))
    return tuple(levels)


def validate_path(path: Iterable[int], depth: int, arity: int) -> Path:
    path = tuple(path)
    if len(path) != depth:
        raise PathError(f"path length {len(path)} != tree depth {depth}")
    for index in path:
        if not isinstance(index, int) or isinstance(index, bool) or not 0 <= index < arity:
            raise PathError(f"path index {index!r} outside 0..{arity - 1}")
    return path


def to_digits(index: int, length: int, arity: int = ARITY) -> Path:
    if index < 0 or index >= arity**length:
        raise LayoutError(f"index {index} does not fit in {length} digits of base {arity}")
    digits = []
    for _ in range(length):
        index, digit = divmod(index, arity)
        digits.append(digit)
    return tuple(reversed(digits))


def encode_balance(amount: int) -> bytes:
    return amount.to_bytes(HASH_SIZE, "big", signed=True)


def decode_balance(value: bytes) -> int:
    return int.from_bytes(value, "big", signed=True)


def fold_witness(
    path: Sequence[int],
    value: bytes,
    siblings: Sequence[Sequence[bytes]],
    levels: int | None = None,
) -> bytes:
    """Hash ``value`` up its path; ``levels`` stops early at an inner prefix."""
    node = leaf_hash(value)
    depth = len(path)
    for height in range(depth if levels is None else levels):
        children = list(siblings[height])
        children.insert(path[depth - 1 - height], node)
        node = interior_hash(children)
    return node


def _well_formed(path: Sequence[int], value: bytes, siblings: Sequence[Sequence[bytes]]) -> bool:
    if len(value) != HASH_SIZE or not path or len(siblings) != len(path):
        return False
    width = len(siblings[0])
    if width < 1:
        return False
    for level in siblings:
        if len(level) != width or any(len(node) != HASH_SIZE for node in level):
            return False
    return all(0 <= index <= width for index in path)


def witness_roots(witness: LeafWitness) -> Tuple[bytes, bytes] | None:
    """Roots before and after the update, or None for a malformed witness."""
    if len(witness.new_value) != HASH_SIZE:
        return None
    if not _well_formed(witness.path, witness.old_value, witness.siblings):
        return None
    return (
        fold_witness(witness.path, witness.old_value, witness.siblings),
        fold_witness(witness.path, witness.new_value, witness.siblings),
    )


def verify_leaf_witness(root_before: bytes, root_after: bytes, witness: LeafWitness) -> bool:
    roots = witness_roots(witness)
    return roots is not None and roots == (root_before, root_after)


class StateTree:
    """Immutable sparse merkle tree; updates return a new tree."""

    __slots__ = ("depth", "arity", "_leaves", "_nodes")

    def __init__(
        self,
        depth: int = DEFAULT_DEPTH,
        arity: int = ARITY,
        leaves: Mapping[Path, bytes] | None = None,
    ):
        if depth < 1 or arity < 2:
            raise PathError(f"unsupported tree shape depth={depth} arity={arity}")
        self.depth = depth
        self.arity = arity
        self._leaves: Dict[Path, bytes] = {}
        self._nodes: Dict[Path, bytes] = {}
        for path, value in sorted((leaves or {}).items()):
            self._write(validate_path(path, depth, arity), value)

    @property
    def leaves(self) -> Mapping[Path, bytes]:
        return MappingProxyType(self._leaves)

    @property
    def root(self) -> bytes:
        return self.node_hash(())

    def get(self, path: Sequence[int]) -> bytes:
        return self._leaves.get(tuple(path), EMPTY_LEAF)

    def node_hash(self, prefix: Sequence[int]) -> bytes:
        prefix = tuple(prefix)
        found = self._nodes.get(prefix)
        if found is not None:
            return found
        return empty_hashes(self.depth, self.arity)[self.depth - len(prefix)]

    def siblings(self, path: Path) -> List[List[bytes]]:
        result = []
        for height in range(self.depth):
            parent = path[: self.depth - height - 1]
            own = path[self.depth - height - 1]
            result.append(
                [self.node_hash(parent + (child,)) for child in range(self.arity) if child != own]
            )
        return result

    def copy(self) -> "StateTree":
        clone = StateTree.__new__(StateTree)
        clone.depth = self.depth
        clone.arity = self.arity
        clone._leaves = dict(self._leaves)
        clone._nodes = dict(self._nodes)
        return clone

    def _set_node(self, prefix: Path, node: bytes, height: int) -> None:
        if node == empty_hashes(self.depth, self.arity)[height]:
            self._nodes.pop(prefix, None)
        else:
            self._nodes[prefix] = node

    def _write(self, path: Path, value: bytes) -> None:
        if len(value) != HASH_SIZE:
            raise LeafValueError(f"leaf value must be {HASH_SIZE} bytes, got {len(value)}")
        value = bytes(value)
        if value == EMPTY_LEAF:
            self._leaves.pop(path, None)
        else:
            self._leaves[path] = value
        self._set_node(path, leaf_hash(value), 0)
        for height in range(1, self.depth + 1):
            prefix = path[: self.depth - height]
            node = interior_hash(self.node_hash(prefix + (child,)) for child in range(self.arity))
            self._set_node(prefix, node, height)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, StateTree):
            return NotImplemented
        return (self.depth, self.arity, self._leaves) == (other.depth, other.arity, other._leaves)

    def __repr__(self) -> str:
        return f"StateTree(depth={self.depth}, arity={self.arity}, leaves={len(self._leaves)}, root={self.root.hex()[:16]})"


def update_leaf(tree: StateTree, path: Sequence[int], value: bytes) -> Tuple[StateTree, LeafWitness]:
    path = validate_path(path, tree.depth, tree.arity)
    if len(value) != HASH_SIZE:
        raise LeafValueError(f"leaf value must be {HASH_SIZE} bytes, got {len(value)}")
    witness = LeafWitness(
        path=path,
        old_value=tree.get(path),
        new_value=bytes(value),
        siblings=tree.siblings(path),
    )
    updated = tree.copy()
    updated._write(path, value)
    return updated, witness


def root(tree: StateTree) -> bytes:
    return tree.root


def recompute_root(tree: StateTree) -> bytes:
    """Full bottom-up rehash of the stored leaves, ignoring the node cache."""
    empties = empty_hashes(tree.depth, tree.arity)
    level = {path: leaf_hash(value) for path, value in tree.leaves.items()}
    for height in range(1, tree.depth + 1):
        parents: Dict[Path, bytes] = {}
        for prefix in sorted({path[:-1] for path in level}):
            parents[prefix] = interior_hash(
                level.get(prefix + (child,), empties[height - 1]) for child in range(tree.arity)
            )
        level = parents
    return level.get((), empties[tree.depth])


class StateLayout(FrozenModel):
    """Static assignment of chain regions inside the global tree.

    Each chain owns a contiguous prefix; one extra prefix holds the system
    region. Below a chain prefix digit 0 holds accounts and digit 1 holds
    invocation records; below the system prefix digit 0 is the voter registry
    and digit 1 holds round records.
    """

    chains: List[str]
    accounts: Dict[str, List[str]] = Field(default_factory=dict)
    depth: int = DEFAULT_DEPTH
    arity: int = ARITY

    @model_validator(mode="after")
    def validate_layout(self):
        if not self.chains or len(set(self.chains)) != len(self.chains):
            raise ValueError("chains must be a non-empty list of unique ids")
        if SYSTEM_REGION in self.chains or any("/" in chain for chain in self.chains):
            raise ValueError(f"chain ids may not be {SYSTEM_REGION!r} or contain '/'")
        unknown = set(self.accounts) - set(self.chains)
        if unknown:
            raise ValueError(f"accounts declared for unknown chains: {sorted(unknown)}")
        if self.arity < 2:
            raise ValueError("arity must be at least 2")
        if self.slot_digits < 1:
            raise ValueError(f"depth {self.depth} leaves no room below the chain prefixes")
        for chain, names in self.accounts.items():
            if len(set(names)) != len(names) or len(names) > self.arity**self.slot_digits:
                raise ValueError(f"chain {chain} declares duplicate or too many accounts")
        return self

    @property
    def prefix_digits(self) -> int:
        digits = 1
        while self.arity**digits < len(self.chains) + 1:
            digits += 1
        return digits

    @property
    def slot_digits(self) -> int:
        return self.depth - self.prefix_digits - 1

    @property
    def registry_depth(self) -> int:
        return self.slot_digits

    def regions(self) -> List[str]:
        return list(self.chains) + [SYSTEM_REGION]

    def region_prefix(self, region: str) -> Path:
        if region == SYSTEM_REGION:
            index = len(self.chains)
        elif region in self.chains:
            index = self.chains.index(region)
        else:
            raise UnknownChainError(f"unknown chain {region!r}")
        return to_digits(index, self.prefix_digits, self.arity)

    def region_of(self, path: Sequence[int]) -> str | None:
        head = tuple(path[: self.prefix_digits])
        for region in self.regions():
            if self.region_prefix(region) == head:
                return region
        return None

    @property
    def registry_prefix(self) -> Path:
        return self.region_prefix(SYSTEM_REGION) + (0,)

    def split_account(self, account: str) -> Tuple[str, str]:
        chain, sep, name = account.partition("/")
        if not sep or not name:
            raise LayoutError(f"account {account!r} is not of the form chain/name")
        if chain not in self.chains:
            raise UnknownChainError(f"unknown chain {chain!r}")
        return chain, name

    def account_path(self, account: str) -> Path:
        chain, name = self.split_account(account)
        names = self.accounts.get(chain, [])
        if name not in names:
            raise LayoutError(f"account {account!r} is not declared in the layout")
        slot = to_digits(names.index(name), self.slot_digits, self.arity)
        return self.region_prefix(chain) + (0,) + slot

    def account_names(self) -> List[str]:
        return [f"{chain}/{name}" for chain in self.chains for name in self.accounts.get(chain, [])]

    def invocation_path(self, chain: str, invocation_id: int) -> Path:
        return self.region_prefix(chain) + (1,) + to_digits(invocation_id, self.slot_digits, self.arity)

    def voter_path(self, slot: int) -> Path:
        return self.registry_prefix + to_digits(slot, self.slot_digits, self.arity)

    def round_record_path(self, round_id: int) -> Path:
        return self.region_prefix(SYSTEM_REGION) + (1,) + to_digits(round_id, self.slot_digits, self.arity)


class GlobalState:
    """The merkle-encoded tuple of every chain's partial state."""

    __slots__ = ("tree", "layout")

    def __init__(self, tree: StateTree, layout: StateLayout):
        if (tree.depth, tree.arity) != (layout.depth, layout.arity):
            raise LayoutError("tree shape does not match the layout")
        self.tree = tree
        self.layout = layout

    @classmethod
    def genesis(
        cls,
        layout: StateLayout,
        balances: Mapping[str, int] | None = None,
        voter_keys: Sequence[bytes] = (),
    ) -> "GlobalState":
        leaves: Dict[Path, bytes] = {}
        for account, amount in (balances or {}).items():
            leaves[layout.account_path(account)] = encode_balance(amount)
        for slot, pubkey in enumerate(voter_keys):
            leaves[layout.voter_path(slot)] = bytes(pubkey)
        return cls(StateTree(layout.depth, layout.arity, leaves), layout)

    @property
    def root(self) -> bytes:
        return self.tree.root

    def balance(self, account: str) -> int:
        return decode_balance(self.tree.get(self.layout.account_path(account)))

    def balances(self) -> Dict[str, int]:
        return {account: self.balance(account) for account in self.layout.account_names()}

    def with_tree(self, tree: StateTree) -> "GlobalState":
        return GlobalState(tree, self.layout)


def project(state: GlobalState, chain: str) -> LocalStateView:
    prefix = state.layout.region_prefix(chain)
    cut = len(prefix)
    leaves = {path: value for path, value in state.tree.leaves.items() if path[:cut] == prefix}
    return LocalStateView(region=chain, prefix=prefix, root=state.tree.node_hash(prefix), leaves=leaves)
