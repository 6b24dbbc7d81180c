# -*- coding = utf-8 -*-
# @Time: 2026/09/07 14:02
# @Author: xchain-sync developers
# @Site:
# @File: sim_model.py
from __future__ import annotations

from typing import Dict, List, Optional

from pydantic import Field, model_validator

from xchain_sync.common.enums import CrashStage, FaultKind, PropertyName, Verdict, WorkloadKind
from xchain_sync.schema.base import PrettyPrintBaseModel
from xchain_sync.schema.chain_model import FinalizeCall
from xchain_sync.schema.net_model import TraceEvent

LEADER = "@leader"


class ChainConfig(PrettyPrintBaseModel):
    id: str
    # native wallets, excluding the proxy custody
    wallets: Dict[str, int] = Field(default_factory=dict)
    custody: int = 0
    # balances of this chain's accounts inside the global state
    accounts: Dict[str, int] = Field(default_factory=dict)


class NodeConfig(PrettyPrintBaseModel):
    count: int = 4
    # nodes that exist from the start but are not registered voters
    joiners: List[str] = Field(default_factory=list)

    @property
    def voter_ids(self) -> List[str]:
        return [f"n{index}" for index in range(self.count)]


class WorkloadItem(PrettyPrintBaseModel):
    round: int = 0
    kind: WorkloadKind
    chain: str = ""
    sender: str = ""
    recipient: str = ""
    src: str = ""
    dst: str = ""
    amount: int = 0
    node: str = ""
    invocation_id: Optional[int] = None
    invoke_failure: bool = False
    wait_blocks: int = 0


class GeneratorConfig(PrettyPrintBaseModel):
    """Random pure-transfer workload."""

    seed: int = 0
    rounds: int = 3
    txs_per_round: int = 4
    max_amount: int = 5


class FaultSpec(PrettyPrintBaseModel):
    kind: FaultKind
    node: str = ""
    round: int = 0
    stage: Optional[CrashStage] = None
    corruption: str = "amount"
    subset: List[str] = Field(default_factory=list)
    delay: int = 0

    @model_validator(mode="after")
    def validate_fault(self):
        if self.kind == FaultKind.CRASH and self.stage is None:
            raise ValueError("crash fault needs a stage")
        if self.kind in (FaultKind.CRASH, FaultKind.DISHONEST_RELAYER, FaultKind.STALE_ROOT_VOTER) and not self.node:
            raise ValueError(f"{self.kind.value} fault needs a node")
        return self


class ExploreConfig(PrettyPrintBaseModel):
    """Shape of the skip-vs-block race explored exhaustively."""

    race: bool = True
    # chains the producer reaches before stopping; empty means all
    broadcast_subset: List[str] = Field(default_factory=list)


class ScenarioConfig(PrettyPrintBaseModel):
    name: str = "scenario"
    seed: int = 0
    rounds: Optional[int] = None
    depth: int = 16
    arity: int = 2
    delta_h: int = 20
    vote_timeout: int = 10
    block_interval: int = 5
    max_delay: int = 3
    max_batch: int = 32
    # prepend a vote_record tx to every block
    record_rounds: bool = False
    chains: List[ChainConfig]
    nodes: NodeConfig = Field(default_factory=NodeConfig)
    workload: List[WorkloadItem] = Field(default_factory=list)
    generator: Optional[GeneratorConfig] = None
    faults: List[FaultSpec] = Field(default_factory=list)
    explore: ExploreConfig = Field(default_factory=ExploreConfig)

    @model_validator(mode="after")
    def validate_timing(self):
        if self.vote_timeout >= self.delta_h:
            raise ValueError("vote_timeout must be smaller than delta_h")
        if min(self.block_interval, self.max_delay, self.vote_timeout) < 1:
            raise ValueError("block_interval, max_delay and vote_timeout must be positive")
        if not self.chains:
            raise ValueError("at least one chain is required")
        if self.nodes.count < 1:
            raise ValueError("at least one voter is required")
        return self

    @property
    def fault_count(self) -> int:
        return len(self.faults)

    @property
    def last_workload_round(self) -> int:
        last = max((item.round for item in self.workload), default=0)
        if self.generator is not None:
            last = max(last, self.generator.rounds - 1)
        return last

    @property
    def total_rounds(self) -> int:
        if self.rounds is not None:
            return self.rounds
        return self.last_workload_round + self.fault_count + 3


class PropertyVerdict(PrettyPrintBaseModel):
    verdict: Verdict
    detail: str = ""
    counterexample: List[TraceEvent] = Field(default_factory=list)


class RoundSummary(PrettyPrintBaseModel):
    round: int
    outcome: str
    producer: str = ""
    txs: int = 0


class PropertyReport(PrettyPrintBaseModel):
    scenario: str = ""
    seed: int = 0
    verdicts: Dict[PropertyName, PropertyVerdict] = Field(default_factory=dict)
    checks: Dict[str, PropertyVerdict] = Field(default_factory=dict)
    deadline_violations: List[str] = Field(default_factory=list)
    rounds: List[RoundSummary] = Field(default_factory=list)
    final_roots: Dict[str, str] = Field(default_factory=dict)
    explored_states: int = 0
    terminal_branches: int = 0

    @property
    def passed(self) -> bool:
        results = list(self.verdicts.values()) + list(self.checks.values())
        return all(item.verdict != Verdict.FAIL for item in results)

    def verdict_of(self, name: PropertyName) -> Verdict:
        return self.verdicts[name].verdict


class ExecutionTrace(PrettyPrintBaseModel):
    """What linearizability replay needs from a finished run."""

    events: List[TraceEvent] = Field(default_factory=list)
    finalized: List[FinalizeCall] = Field(default_factory=list)
    final_roots: Dict[str, str] = Field(default_factory=dict)


class NodeSettings(PrettyPrintBaseModel):
    """Timing knobs shared by every aggregator node of a scenario."""

    block_interval: int = 5
    vote_timeout: int = 10
    max_delay: int = 3
    max_batch: Optional[int] = 32
    record_rounds: bool = False

    @property
    def skip_timeout(self) -> int:
        return self.vote_timeout * self.block_interval

    @property
    def rebroadcast_delay(self) -> int:
        # a full origin-first broadcast: submit, ack, submit, ack
        return 3 * self.max_delay + 1


class NodeFaults(PrettyPrintBaseModel):
    crash_at: Dict[int, CrashStage] = Field(default_factory=dict)
    partial_at: Dict[int, List[str]] = Field(default_factory=dict)
    slow_at: Dict[int, int] = Field(default_factory=dict)
    corruption: Optional[str] = None
    stale_root: bool = False


class Submission(PrettyPrintBaseModel):
    """A valid transaction the workload handed to the system, tracked until it resolves."""

    # tx id, or the invocation key for native invocations
    key: str
    round: int
    invocation: bool = False
