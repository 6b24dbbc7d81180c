"""Enum definitions used across the cross-chain sync package."""

from __future__ import annotations

from enum import Enum


class SchemaId(str, Enum):
    """Predefined functions a sub-transaction may call."""

    LEAF_UPDATE = "leaf_update"
    GUARDED_TRANSFER = "guarded_transfer"
    REGISTRATION = "registration"
    VOTE_RECORD = "vote_record"
    CALLBACK = "callback"
    INVOKE_RECORD = "invoke_record"


class TxSourceKind(str, Enum):
    PURE = "pure"
    INVOKE_HEADED = "invoke_headed"
    SYSTEM = "system"


class SideEffectKind(str, Enum):
    """Native-chain actions the proxy performs on finalize."""

    REMOVE_PENDING_INVOCATION = "remove_pending_invocation"
    CALLBACK = "callback"
    WITHDRAW = "withdraw"
    EVENT = "event"
    UPDATE_VOTER_ROOT = "update_voter_root"


UNSAFE_SIDE_EFFECTS = frozenset({SideEffectKind.CALLBACK, SideEffectKind.WITHDRAW})


class TicketKind(str, Enum):
    ELECT = "elect"
    SKIP = "skip"
    REVOKE_SKIP = "revoke_skip"


class RoundPhase(str, Enum):
    VOTING = "voting"
    PRODUCING = "producing"
    BROADCASTING = "broadcasting"
    SKIP_VOTING = "skip_voting"
    REVOKE_SKIP_VOTING = "revoke_skip_voting"
    FINALIZED = "finalized"
    SKIPPED = "skipped"


class RoundStatus(str, Enum):
    """Per-round status as recorded by a native chain."""

    OPEN = "open"
    SKIPPED = "skipped"
    FINALIZED = "finalized"


class RoundOutcome(str, Enum):
    PRODUCED_AND_FINALIZED = "produced_and_finalized"
    OBSERVED_FINALIZED = "observed_finalized"
    SKIPPED = "skipped"
    STALLED = "stalled"


class Verdict(str, Enum):
    PASS = "PASS"
    FAIL = "FAIL"
    SKIPPED = "SKIPPED"


class PropertyName(str, Enum):
    SAFETY = "safety"
    LIVENESS = "liveness"
    PERMISSIONLESS = "permissionless"
    LINEARIZABILITY = "linearizability"


class CrashStage(str, Enum):
    """Lifecycle stage at which a crash-stop fault fires."""

    CONSENSUS = "consensus"
    SIMULATION = "simulation"
    PROVING = "proving"
    FINALIZE = "finalize"
    BROADCAST = "broadcast"


class FaultKind(str, Enum):
    CRASH = "crash"
    DISHONEST_RELAYER = "dishonest_relayer"
    PARTIAL_BROADCAST = "partial_broadcast"
    STALE_ROOT_VOTER = "stale_root_voter"
    SLOW_BROADCAST = "slow_broadcast"


class WorkloadKind(str, Enum):
    TRANSFER = "transfer"
    PURE_TRANSFER = "pure_transfer"
    REGISTER = "register"
    QUIT = "quit"
    USER_REVOKE = "user_revoke"


class ChainEventKind(str, Enum):
    """Events a proxy contract emits for relayers."""

    INVOKE_RECORDED = "invoke_recorded"
    INVOKE_FAILED = "invoke_failed"
    INVOCATION_REVOKED = "invocation_revoked"
    BLOCK_FINALIZED = "block_finalized"
    ROUND_SKIPPED = "round_skipped"
    ROUND_REOPENED = "round_reopened"
    CALL_REJECTED = "call_rejected"


class TimerKind(str, Enum):
    SKIP_TIMEOUT = "skip_timeout"
    REBROADCAST = "rebroadcast"
    BROADCAST_START = "broadcast_start"


class TraceKind(str, Enum):
    """Kinds of records in the structured execution trace."""

    TX_SUBMITTED = "tx_submitted"
    TX_REJECTED = "tx_rejected"
    INVOKED = "invoked"
    INVOKE_REFUSED = "invoke_refused"
    USER_REVOKED = "user_revoked"
    USER_REVOKE_REFUSED = "user_revoke_refused"
    EVENT_RELAYED = "event_relayed"
    VOTE_CAST = "vote_cast"
    VOTE_COUNTED = "vote_counted"
    ELECTED = "elected"
    SIMULATED = "simulated"
    TX_DROPPED = "tx_dropped"
    PROVED = "proved"
    CALL_SUBMITTED = "call_submitted"
    FINALIZED = "finalized"
    CALL_REJECTED = "call_rejected"
    SKIP_VOTE = "skip_vote"
    SKIP_APPLIED = "skip_applied"
    REVOKE_SKIP_VOTE = "revoke_skip_vote"
    ROUND_REOPENED = "round_reopened"
    BLOCK_APPLIED = "block_applied"
    BROADCAST_ABORTED = "broadcast_aborted"
    CRASHED = "crashed"
    ROUND_BEGIN = "round_begin"
    ROUND_END = "round_end"
