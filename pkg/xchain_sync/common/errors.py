"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class SyncError(Exception):
    """Base class for all protocol errors."""


# merkle state


class PathError(SyncError):
    pass


class LeafValueError(SyncError):
    pass


class UnknownChainError(SyncError):
    pass


class LayoutError(SyncError):
    pass


class CodecError(SyncError):
    pass


# proofs


class SimFailure(SyncError):
    """A sub-transaction or a sanity predicate failed during simulation."""

    def __init__(self, step: int, reason: str):
        super().__init__(f"step {step}: {reason}")
        self.step = step
        self.reason = reason


class MalformedTx(SyncError):
    pass


class UnknownSchema(MalformedTx):
    pass


class InsufficientVotes(SyncError):
    def __init__(self, have: int, need: int):
        super().__init__(f"have {have} distinct valid tickets, need {need}")
        self.have = have
        self.need = need


class ChainBreak(SyncError):
    def __init__(self, index: int):
        super().__init__(f"transcript {index} does not chain onto its predecessor")
        self.index = index


# consensus


class DuplicateVoter(SyncError):
    pass


class UnregisteredVoter(SyncError):
    pass


class PhaseError(SyncError):
    pass


class RevokeSkipPrecondition(SyncError):
    pass


# native chain


class InsufficientFunds(SyncError):
    pass


class MalformedPayload(SyncError):
    pass


class TooEarly(SyncError):
    pass


class NotPending(SyncError):
    pass


class NotOwner(SyncError):
    pass


class BadSkipProof(SyncError):
    pass


class Reject(SyncError):
    """verify_and_finalize refused a call; the proxy state is unchanged."""


class RootMismatch(Reject):
    pass


class BadConsensusProof(Reject):
    pass


class BadExecutionProof(Reject):
    pass


class RoundClosed(Reject):
    pass


class StaleNonce(Reject):
    pass


# aggregator node


class BadRelayerSignature(SyncError):
    pass


# harness


class ConfigError(SyncError):
    pass


class BoundExceeded(SyncError):
    def __init__(self, bound: int):
        super().__init__(f"exploration exceeded the bound of {bound} states")
        self.bound = bound
