# -*- coding = utf-8 -*-
# @Time: 2026/09/07 13:56
# @Author: xchain-sync developers
# @Site:
# @File: sim_harness.py
"""Scenario loading, the round-by-round simulator and exhaustive race exploration."""
from __future__ import annotations

import json
import random
try:  # Python 3.11+
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - Python 3.10 fallback
    import tomli as tomllib  # type: ignore
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, List, Tuple

from pydantic import ValidationError

from xchain_sync.aggregator_node import AggregatorNode, l2account
from xchain_sync.checkers import (
    RunArtifacts,
    check_linearizability,
    check_liveness,
    check_permissionless,
    check_safety,
    deadline_violations,
    failed,
    passed,
    safety_checks,
)
from xchain_sync.common.crypto import NodeSigner
from xchain_sync.common.enums import (
    FaultKind,
    PropertyName,
    RoundStatus,
    TicketKind,
    TraceKind,
    WorkloadKind,
)
from xchain_sync.common.errors import BoundExceeded, ConfigError, SyncError
from xchain_sync.common.logger import logger
from xchain_sync.consensus import (
    RoundState,
    VoterRegistry,
    canonical_candidate,
    cast_vote,
    initiate_skip,
    produce_block,
    revoke_skip,
)
from xchain_sync.merkle_state import GlobalState, StateLayout
from xchain_sync.native_chain import NativeChain, apply_revoke_skip, apply_skip, open_proxy, verify_and_finalize
from xchain_sync.network import SimNetwork
from xchain_sync.proof_engine import prove_consensus
from xchain_sync.schema.chain_model import BlockObservedOnChain, FinalizeCall, ProxyState, RevokeSkipSignal, SkipSignal
from xchain_sync.schema.net_model import ClientTxMsg, TraceEvent
from xchain_sync.schema.sim_model import (
    LEADER,
    NodeFaults,
    NodeSettings,
    PropertyReport,
    RoundSummary,
    ScenarioConfig,
    Submission,
    WorkloadItem,
)
from xchain_sync.tx_registry import build_pure_transfer, build_registration

CLIENT = "client"
DEFAULT_BOUND = 10_000


def load_scenario(path: str | Path) -> ScenarioConfig:
    try:
        raw = tomllib.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot read scenario {path}: {exc}") from exc
    raw.setdefault("name", Path(path).stem)
    try:
        cfg = ScenarioConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(f"invalid scenario {path}: {exc}") from exc
    validate_scenario(cfg)
    return cfg


def validate_scenario(cfg: ScenarioConfig) -> None:
    """Cross-field checks pydantic cannot express; raises ConfigError."""
    chains = {chain.id for chain in cfg.chains}
    nodes = set(cfg.nodes.voter_ids) | set(cfg.nodes.joiners)
    if len(chains) != len(cfg.chains):
        raise ConfigError("chain ids must be unique")
    if len(nodes) != len(cfg.nodes.voter_ids) + len(cfg.nodes.joiners):
        raise ConfigError("node ids must be unique")
    if nodes & {CLIENT} or chains & nodes:
        raise ConfigError("node ids, chain ids and the client id must not collide")
    for fault in cfg.faults:
        if fault.node and fault.node != LEADER and fault.node not in nodes:
            raise ConfigError(f"fault targets unknown node {fault.node!r}")
        unknown = set(fault.subset) - chains
        if unknown:
            raise ConfigError(f"partial broadcast names unknown chains {sorted(unknown)}")
        if fault.kind == FaultKind.PARTIAL_BROADCAST:
            origins = {
                item.chain for item in cfg.workload if item.round == fault.round and item.kind == WorkloadKind.TRANSFER
            }
            if origins - set(fault.subset):
                raise ConfigError(
                    f"partial broadcast of round {fault.round} must reach invoke origins {sorted(origins)}"
                )
    for item in cfg.workload:
        if item.kind in (WorkloadKind.TRANSFER, WorkloadKind.USER_REVOKE) and item.chain not in chains:
            raise ConfigError(f"workload item targets unknown chain {item.chain!r}")
        if item.kind in (WorkloadKind.REGISTER, WorkloadKind.QUIT) and item.node not in nodes:
            raise ConfigError(f"workload item targets unknown node {item.node!r}")
    unknown = set(cfg.explore.broadcast_subset) - chains
    if unknown:
        raise ConfigError(f"explore subset names unknown chains {sorted(unknown)}")
    try:
        build_layout(cfg)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def build_layout(cfg: ScenarioConfig) -> StateLayout:
    return StateLayout(
        chains=[chain.id for chain in cfg.chains],
        accounts={chain.id: list(chain.accounts) for chain in cfg.chains},
        depth=cfg.depth,
        arity=cfg.arity,
    )


def write_trace(events: Iterable[TraceEvent], path: str | Path) -> None:
    """One JSON object per line with sorted keys, so equal runs give equal bytes."""
    with open(path, "w", encoding="utf-8") as handle:
        for event in events:
            handle.write(json.dumps(event.model_dump(mode="json"), sort_keys=True) + "\n")


class Simulator:
    """Drives one scenario round by round on a seeded network."""

    def __init__(self, cfg: ScenarioConfig, honor_revoke_skip: bool = True):
        validate_scenario(cfg)
        self.cfg = cfg
        self.layout = build_layout(cfg)
        self.net = SimNetwork(seed=cfg.seed, max_delay=cfg.max_delay)
        self.voters = cfg.nodes.voter_ids
        self.node_ids = self.voters + list(cfg.nodes.joiners)
        self.signers = {node: NodeSigner.from_name(node) for node in self.node_ids}
        balances = {f"{chain.id}/{name}": amount for chain in cfg.chains for name, amount in chain.accounts.items()}
        self.genesis = GlobalState.genesis(
            self.layout, balances, voter_keys=[self.signers[node].public_key for node in self.voters]
        )
        registry = VoterRegistry.genesis(self.layout, [(node, self.signers[node].public_key) for node in self.voters])
        self.chains: Dict[str, NativeChain] = {}
        self.initial_ledgers: Dict[str, Dict[str, int]] = {}
        for chain in cfg.chains:
            proxy = open_proxy(
                chain.id,
                self.genesis,
                len(self.voters),
                wallets=chain.wallets,
                custody=chain.custody,
                delta_h=cfg.delta_h,
                honor_revoke_skip=honor_revoke_skip,
            )
            self.initial_ledgers[chain.id] = dict(proxy.ledger)
            self.chains[chain.id] = NativeChain(proxy, self.layout, self.node_ids, cfg.block_interval)
            self.net.register(chain.id, self.chains[chain.id])
        settings = NodeSettings(
            block_interval=cfg.block_interval,
            vote_timeout=cfg.vote_timeout,
            max_delay=cfg.max_delay,
            max_batch=cfg.max_batch,
            record_rounds=cfg.record_rounds,
        )
        self.nodes: Dict[str, AggregatorNode] = {}
        for node in self.node_ids:
            self.nodes[node] = AggregatorNode(
                node, self.layout, self.genesis, registry, self.node_ids, settings, NodeFaults()
            )
            self.net.register(node, self.nodes[node])
        self.dishonest: set[str] = set()
        self.submissions: List[Submission] = []
        self.rounds: List[RoundSummary] = []
        self._workload_rng = random.Random(cfg.generator.seed if cfg.generator else cfg.seed)

    # views

    def honest_nodes(self) -> List[AggregatorNode]:
        return [
            node
            for node_id, node in self.nodes.items()
            if node_id not in self.dishonest and not self.net.is_crashed(node_id)
        ]

    def reference_node(self) -> AggregatorNode:
        honest = self.honest_nodes()
        if not honest:
            raise SyncError("every node crashed or is dishonest")
        return honest[0]

    @property
    def proxies(self) -> Dict[str, ProxyState]:
        return {chain_id: chain.state for chain_id, chain in self.chains.items()}

    # faults and workload

    def _resolve(self, name: str, round_id: int) -> str:
        if name != LEADER:
            return name
        reference = self.reference_node()
        return canonical_candidate(reference.registry, round_id, reference.excluded)

    def assign_faults(self, round_id: int) -> None:
        for fault in self.cfg.faults:
            if fault.round != round_id:
                continue
            if fault.kind == FaultKind.STALE_ROOT_VOTER:
                self.nodes[self._resolve(fault.node, round_id)].faults.stale_root = True
            elif fault.kind == FaultKind.CRASH:
                self.nodes[self._resolve(fault.node, round_id)].faults.crash_at[round_id] = fault.stage
            elif fault.kind == FaultKind.DISHONEST_RELAYER:
                node = self._resolve(fault.node, round_id)
                self.nodes[node].faults.corruption = fault.corruption
                self.dishonest.add(node)
            elif fault.kind == FaultKind.PARTIAL_BROADCAST:
                for node in self.nodes.values():
                    node.faults.partial_at[round_id] = list(fault.subset)
            elif fault.kind == FaultKind.SLOW_BROADCAST:
                for node in self.nodes.values():
                    node.faults.slow_at[round_id] = fault.delay

    def _workload(self, round_id: int) -> List[WorkloadItem]:
        items = [item for item in self.cfg.workload if item.round == round_id]
        generator = self.cfg.generator
        if generator is not None and round_id < generator.rounds:
            accounts = self.layout.account_names()
            for _ in range(generator.txs_per_round):
                src, dst = self._workload_rng.sample(accounts, 2)
                items.append(
                    WorkloadItem(
                        round=round_id,
                        kind=WorkloadKind.PURE_TRANSFER,
                        src=src,
                        dst=dst,
                        amount=self._workload_rng.randint(1, generator.max_amount),
                    )
                )
        return items

    def _submit_client_tx(self, tx, round_id: int) -> None:
        self.submissions.append(Submission(key=tx.id, round=round_id))
        self.net.broadcast(CLIENT, self.node_ids, ClientTxMsg(tx=tx))

    def apply_workload(self, round_id: int) -> None:
        for index, item in enumerate(self._workload(round_id)):
            if item.kind == WorkloadKind.TRANSFER:
                chain = self.chains[item.chain]
                event = chain.user_invoke(self.net, item.sender, item.amount, item.recipient, failed=item.invoke_failure)
                if event is not None:
                    key = f"{item.chain}:{event.invocation.invocation_id}"
                    self.submissions.append(Submission(key=key, round=round_id, invocation=True))
            elif item.kind == WorkloadKind.PURE_TRANSFER:
                self._submit_client_tx(build_pure_transfer(f"pure:{round_id}:{index}", item.src, item.dst, item.amount), round_id)
            elif item.kind in (WorkloadKind.REGISTER, WorkloadKind.QUIT):
                registry = self.reference_node().registry
                quitting = item.kind == WorkloadKind.QUIT
                slot = registry.slots.get(item.node) if quitting else registry.next_slot
                if slot is None:
                    logger.warning("workload quits {} which never registered", item.node)
                    continue
                tx = build_registration(item.node, slot, self.signers[item.node].public_key, quit=quitting)
                self._submit_client_tx(tx, round_id)
            elif item.kind == WorkloadKind.USER_REVOKE:
                self.net.advance(item.wait_blocks * self.cfg.block_interval)
                chain = self.chains[item.chain]
                invocation_id = item.invocation_id
                if invocation_id is None:
                    invocation_id = min(chain.state.pending, default=0)
                chain.user_revoke(self.net, item.sender, invocation_id)

    # rounds

    def round_status(self, round_id: int) -> Dict[str, RoundStatus]:
        return {chain_id: chain.state.status_of(round_id) for chain_id, chain in self.chains.items()}

    def play_round(self, round_id: int) -> RoundSummary:
        self.net.record("harness", TraceKind.ROUND_BEGIN, round_id)
        self.assign_faults(round_id)
        self.apply_workload(round_id)
        self.net.run_until_quiescent()
        for node_id in self.node_ids:
            self.nodes[node_id].begin_round(self.net, round_id)
        self.net.run_until_quiescent()
        statuses = set(self.round_status(round_id).values())
        summary = RoundSummary(round=round_id, outcome="stalled")
        if statuses == {RoundStatus.FINALIZED}:
            call = next(iter(self.chains.values())).state.finalized_log[-1]
            summary = RoundSummary(round=round_id, outcome="finalized", producer=call.vid, txs=len(call.tx_data.txs))
        elif statuses == {RoundStatus.SKIPPED}:
            summary = RoundSummary(round=round_id, outcome="skipped")
        self.net.record("harness", TraceKind.ROUND_END, round_id, outcome=summary.outcome, producer=summary.producer)
        logger.info("round {} {} {}", round_id, summary.outcome, summary.producer)
        self.rounds.append(summary)
        return summary

    def run(self) -> RunArtifacts:
        for round_id in range(self.cfg.total_rounds):
            if self.play_round(round_id).outcome == "stalled":
                logger.warning("scenario {} stalled in round {}", self.cfg.name, round_id)
                break
        return self.artifacts()

    def artifacts(self) -> RunArtifacts:
        honest = self.honest_nodes()
        return RunArtifacts(
            layout=self.layout,
            genesis=self.genesis,
            proxies=self.proxies,
            initial_ledgers=self.initial_ledgers,
            replicas={node.node_id: node.replica for node in honest},
            registries={node.node_id: node.registry for node in honest},
            events=list(self.net.trace),
            submissions=list(self.submissions),
            fault_count=self.cfg.fault_count,
            joiners=list(self.cfg.nodes.joiners),
        )

    def report(self, run: RunArtifacts) -> PropertyReport:
        checks = safety_checks(run)
        trace = run.trace()
        return PropertyReport(
            scenario=self.cfg.name,
            seed=self.cfg.seed,
            verdicts={
                PropertyName.SAFETY: check_safety(checks),
                PropertyName.LIVENESS: check_liveness(run),
                PropertyName.PERMISSIONLESS: check_permissionless(run),
                PropertyName.LINEARIZABILITY: check_linearizability(trace, self.genesis),
            },
            checks=checks,
            deadline_violations=deadline_violations(run.proxies, self.cfg.delta_h, self.cfg.vote_timeout),
            rounds=list(self.rounds),
            final_roots=trace.final_roots,
        )


def run_scenario(cfg: ScenarioConfig) -> Tuple[List[TraceEvent], PropertyReport]:
    simulator = Simulator(cfg)
    run = simulator.run()
    return run.events, simulator.report(run)


# exhaustive exploration of the skip-vs-block race


class RaceFixture:
    """Round-0 block, skip signal and revoke-skip signal built by the real protocol functions."""

    def __init__(self, simulator: Simulator):
        self.simulator = simulator
        net = simulator.net
        simulator.assign_faults(0)
        simulator.apply_workload(0)
        net.run_until_quiescent()
        node = simulator.reference_node()
        registry = node.registry
        tickets = [
            cast_vote(voter, simulator.signers[voter], 0, registry)
            for voter in registry.active_nodes()
        ]
        winner = canonical_candidate(registry, 0)
        election = prove_consensus(0, registry.root, tickets, registry.n_active)
        block = produce_block(
            winner, election, list(node.mempool), node.replica, max_batch=simulator.cfg.max_batch
        ).block
        self.call = FinalizeCall(
            l2account=l2account(winner),
            tx_data=block.txs,
            verify_data=block.proof,
            vid=winner,
            nonce=0,
            rid=0,
        )
        round_state = RoundState(round=0, voter_root=registry.root, n_voters=registry.n_active, candidate=winner)
        skip_tickets = [
            cast_vote(voter, simulator.signers[voter], 0, registry, kind=TicketKind.SKIP)
            for voter in registry.active_nodes()
        ]
        self.skip: SkipSignal = initiate_skip(round_state, skip_tickets)
        revoke_tickets = [
            cast_vote(voter, simulator.signers[voter], 0, registry, kind=TicketKind.REVOKE_SKIP)
            for voter in registry.active_nodes()
        ]
        evidence = BlockObservedOnChain(chain=simulator.layout.chains[0], round=0, call=self.call)
        self.revoke: RevokeSkipSignal = revoke_skip(round_state, evidence, revoke_tickets)


# a pending delivery: (kind, chain, generation)
Delivery = Tuple[str, str, int]


def _deliver(proxy: ProxyState, kind: str, fixture: RaceFixture, layout: StateLayout) -> ProxyState:
    try:
        if kind in ("block", "rebroadcast"):
            return verify_and_finalize(proxy, fixture.call, layout)[0]
        if kind == "skip":
            return apply_skip(proxy, fixture.skip)
        return apply_revoke_skip(proxy, fixture.revoke)
    except SyncError:
        return proxy


def _chain_key(proxy: ProxyState) -> tuple:
    return proxy.status_of(0), proxy.current_round, 0 in proxy.reopened, proxy.pinned_global_root


def enumerate_interleavings(
    cfg: ScenarioConfig,
    bound: int = DEFAULT_BOUND,
    honor_revoke_skip: bool = True,
) -> PropertyReport:
    """Depth-first search over every delivery order of the round-0 race messages.

    Nodes react to what chains record: a chain that skipped while another
    recorded the block gets one revoke-skip, and an open chain gets the
    recorded block re-broadcast. States are deduplicated by chain status and
    pending deliveries; the number of complete orderings is counted per state.
    """
    simulator = Simulator(cfg, honor_revoke_skip=honor_revoke_skip)
    fixture = RaceFixture(simulator)
    layout = simulator.layout
    chains = list(layout.chains)
    targets = cfg.explore.broadcast_subset or chains
    initial: List[Delivery] = [("block", chain, 0) for chain in targets]
    if cfg.explore.race:
        initial += [("skip", chain, 0) for chain in chains]

    start_proxies = tuple(simulator.chains[chain].state for chain in chains)
    memo: Dict[tuple, int] = {}
    terminals: Dict[tuple, Tuple[ProxyState, ...]] = {}
    diverged: List[str] = []

    def reactions(proxies: Tuple[ProxyState, ...], issued: FrozenSet[Delivery]) -> List[Delivery]:
        if not any(proxy.status_of(0) == RoundStatus.FINALIZED for proxy in proxies):
            return []
        derived = []
        for chain, proxy in zip(chains, proxies):
            status = proxy.status_of(0)
            generation = 1 if 0 in proxy.reopened else 0
            if status == RoundStatus.SKIPPED:
                candidate = ("revoke", chain, 0)
            elif status == RoundStatus.OPEN:
                candidate = ("rebroadcast", chain, generation)
            else:
                continue
            if candidate not in issued:
                derived.append(candidate)
        return derived

    def explore(proxies: Tuple[ProxyState, ...], pending: Tuple[Delivery, ...], issued: FrozenSet[Delivery]) -> int:
        key = (tuple(_chain_key(proxy) for proxy in proxies), pending, issued)
        if key in memo:
            return memo[key]
        if len(memo) >= bound:
            raise BoundExceeded(bound)
        memo[key] = 0
        if not pending:
            terminals[key[0]] = proxies
            statuses = {proxy.status_of(0) for proxy in proxies}
            roots = {proxy.pinned_global_root for proxy in proxies}
            if len(statuses) != 1 or RoundStatus.OPEN in statuses or len(roots) != 1:
                diverged.append(", ".join(f"{chain}={proxy.status_of(0).value}" for chain, proxy in zip(chains, proxies)))
            memo[key] = 1
            return 1
        branches = 0
        for index, (kind, chain, generation) in enumerate(pending):
            if (kind, chain, generation) in pending[:index]:
                continue
            position = chains.index(chain)
            after = list(proxies)
            after[position] = _deliver(proxies[position], kind, fixture, layout)
            after = tuple(after)
            rest = pending[:index] + pending[index + 1:]
            derived = reactions(after, issued)
            next_pending = tuple(sorted(rest + tuple(derived)))
            branches += explore(after, next_pending, issued | frozenset(derived))
        memo[key] = branches
        return branches

    total = explore(start_proxies, tuple(sorted(initial)), frozenset())
    if diverged:
        verdict = failed(f"{len(diverged)} terminal states diverge, e.g. {diverged[0]}")
    else:
        verdict = passed(f"{len(terminals)} terminal states, all converged")
    first = terminals[min(terminals, key=repr)] if terminals else start_proxies
    logger.info("explored {} states, {} orderings of scenario {}", len(memo), total, cfg.name)
    return PropertyReport(
        scenario=cfg.name,
        seed=cfg.seed,
        checks={"convergence": verdict},
        explored_states=len(memo),
        terminal_branches=total,
        final_roots={chain: proxy.pinned_global_root.hex() for chain, proxy in zip(chains, first)},
    )
