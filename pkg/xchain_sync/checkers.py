# -*- coding = utf-8 -*-
# @Time: 2026/09/04 17:19
# @Author: xchain-sync developers
# @Site:
# @File: checkers.py
"""Property checkers evaluated over a finished simulation run."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Mapping, Sequence

from xchain_sync.codec import digest_call
from xchain_sync.common.enums import SideEffectKind, TraceKind, Verdict
from xchain_sync.common.errors import SyncError
from xchain_sync.consensus import VoterRegistry
from xchain_sync.merkle_state import GlobalState, StateLayout, project
from xchain_sync.native_chain import CUSTODY
from xchain_sync.proof_engine import prove_execution
from xchain_sync.schema.chain_model import FinalizeCall, ProxyState
from xchain_sync.schema.net_model import TraceEvent
from xchain_sync.schema.sim_model import ExecutionTrace, PropertyVerdict, Submission

COUNTEREXAMPLE_LIMIT = 20


@dataclass
class RunArtifacts:
    """Everything the checkers read from a finished run."""

    layout: StateLayout
    genesis: GlobalState
    proxies: Dict[str, ProxyState]
    initial_ledgers: Dict[str, Dict[str, int]]
    # honest, live nodes only
    replicas: Dict[str, GlobalState]
    registries: Dict[str, VoterRegistry]
    events: List[TraceEvent]
    submissions: List[Submission] = field(default_factory=list)
    fault_count: int = 0
    joiners: List[str] = field(default_factory=list)

    def finalized_order(self) -> List[FinalizeCall]:
        logs = [proxy.finalized_log for proxy in self.proxies.values()]
        return list(max(logs, key=len)) if logs else []

    def trace(self) -> ExecutionTrace:
        return ExecutionTrace(
            events=self.events,
            finalized=self.finalized_order(),
            final_roots={chain: proxy.pinned_global_root.hex() for chain, proxy in self.proxies.items()},
        )


def passed(detail: str = "") -> PropertyVerdict:
    return PropertyVerdict(verdict=Verdict.PASS, detail=detail)


def failed(detail: str, events: Iterable[TraceEvent] = ()) -> PropertyVerdict:
    return PropertyVerdict(verdict=Verdict.FAIL, detail=detail, counterexample=list(events)[:COUNTEREXAMPLE_LIMIT])


def skipped(detail: str) -> PropertyVerdict:
    return PropertyVerdict(verdict=Verdict.SKIPPED, detail=detail)


def _select(events: Sequence[TraceEvent], keep: Callable[[TraceEvent], bool]) -> List[TraceEvent]:
    return [event for event in events if keep(event)]


def _mentions(event: TraceEvent, key: str) -> bool:
    if event.digest == key or event.detail.get("tx_id") == key:
        return True
    txs = event.detail.get("txs")
    return isinstance(txs, list) and key in txs


# safety


def check_atomicity(run: RunArtifacts) -> PropertyVerdict:
    """Every chain applied the same sequence of blocks: each tx's deltas landed everywhere or nowhere."""
    logs = {chain: [digest_call(call) for call in proxy.finalized_log] for chain, proxy in run.proxies.items()}
    reference_chain, reference = next(iter(logs.items()))
    for chain, log in logs.items():
        if log == reference:
            continue
        index = next((i for i, (a, b) in enumerate(zip(log, reference)) if a != b), min(len(log), len(reference)))
        return failed(
            f"{chain} and {reference_chain} diverge at block {index}",
            _select(run.events, lambda event: event.kind == TraceKind.FINALIZED),
        )
    return passed(f"{len(reference)} blocks on {len(logs)} chains")


def check_custody(run: RunArtifacts) -> PropertyVerdict:
    for chain, proxy in run.proxies.items():
        before = sum(run.initial_ledgers[chain].values())
        if proxy.custody_total != before:
            return failed(f"{chain} native supply moved from {before} to {proxy.custody_total}")
        negative = sorted(holder for holder, amount in proxy.ledger.items() if amount < 0)
        if negative:
            return failed(f"{chain} has negative balances for {negative}")
        if proxy.ledger.get(CUSTODY, 0) < sum(record.amount for record in proxy.pending.values()):
            return failed(f"{chain} custody does not cover its pending escrows")
    return passed()


def check_revoke_exclusivity(run: RunArtifacts) -> PropertyVerdict:
    """No invocation is both continued and refunded."""
    user_revoked = {
        (event.actor, event.detail.get("invocation_id"))
        for event in run.events
        if event.kind == TraceKind.USER_REVOKED
    }
    for chain, proxy in run.proxies.items():
        continued = {}
        for call in proxy.finalized_log:
            for tx in call.tx_data.txs:
                key = tx.invocation_key
                if key is None:
                    continue
                if key in continued:
                    return failed(f"invocation {key} finalized twice on {chain}", _select(run.events, lambda e: _mentions(e, tx.id)))
                continued[key] = tx
        refunded = {
            (receipt.chain, receipt.args.get("invocation_id"))
            for receipt in proxy.receipts
            if receipt.kind == SideEffectKind.REMOVE_PENDING_INVOCATION and receipt.args.get("refunded")
        }
        for key, tx in continued.items():
            if tx.id.startswith("revoke:") or tx.source.chain != chain:
                continue
            marker = (tx.source.chain, tx.source.invocation_id)
            if marker in refunded or marker in user_revoked:
                return failed(
                    f"invocation {key} was continued and refunded",
                    _select(run.events, lambda e: _mentions(e, tx.id) or e.kind == TraceKind.USER_REVOKED),
                )
    return passed()


def check_replica_convergence(run: RunArtifacts) -> PropertyVerdict:
    roots = {node: state.root.hex() for node, state in run.replicas.items()}
    if len(set(roots.values())) > 1:
        return failed(f"honest replicas disagree: {roots}", _select(run.events, lambda e: e.kind == TraceKind.BLOCK_APPLIED))
    pinned = {chain: proxy.pinned_global_root.hex() for chain, proxy in run.proxies.items()}
    if roots and set(pinned.values()) != set(roots.values()):
        return failed(f"replicas at {sorted(set(roots.values()))}, chains pinned {pinned}")
    return passed()


def check_projection(run: RunArtifacts) -> PropertyVerdict:
    """Each proxy's partial state is the projection of the agreed global state."""
    if not run.replicas:
        return skipped("no honest replica survived")
    state = next(iter(run.replicas.values()))
    for chain, proxy in run.proxies.items():
        view = project(state, chain)
        if dict(proxy.partial_leaves) != dict(view.leaves):
            return failed(f"{chain} partial state differs from its projection")
    return passed()


def check_lifecycle(run: RunArtifacts) -> PropertyVerdict:
    """consensus < simulation < proving < finalize for every finalized block."""
    for call in run.finalized_order():
        digest = digest_call(call)
        steps = [
            _select(run.events, lambda e: e.kind == TraceKind.ELECTED and e.round == call.rid and e.actor == call.vid),
            _select(run.events, lambda e: e.kind == TraceKind.PROVED and e.digest == digest),
            _select(run.events, lambda e: e.kind == TraceKind.CALL_SUBMITTED and e.digest == digest),
            _select(run.events, lambda e: e.kind == TraceKind.FINALIZED and e.digest == digest),
        ]
        simulated = _select(run.events, lambda e: e.kind == TraceKind.SIMULATED and e.round == call.rid and e.actor == call.vid)
        if any(not found for found in steps):
            return failed(f"round {call.rid} misses a lifecycle stage", _select(run.events, lambda e: e.round == call.rid))
        firsts = [found[0].seq for found in steps]
        if firsts != sorted(firsts) or any(not firsts[0] < event.seq < firsts[1] for event in simulated):
            return failed(f"round {call.rid} stages out of order", _select(run.events, lambda e: e.round == call.rid))
    return passed()


SAFETY_CHECKS: Dict[str, Callable[[RunArtifacts], PropertyVerdict]] = {
    "atomicity": check_atomicity,
    "custody": check_custody,
    "revoke_exclusivity": check_revoke_exclusivity,
    "replica_convergence": check_replica_convergence,
    "projection": check_projection,
    "lifecycle": check_lifecycle,
}


def safety_checks(run: RunArtifacts) -> Dict[str, PropertyVerdict]:
    return {name: check(run) for name, check in SAFETY_CHECKS.items()}


def check_safety(checks: Mapping[str, PropertyVerdict]) -> PropertyVerdict:
    broken = [name for name, verdict in checks.items() if verdict.verdict == Verdict.FAIL]
    if not broken:
        return passed(", ".join(checks))
    first = checks[broken[0]]
    return failed(f"failed: {', '.join(broken)} ({first.detail})", first.counterexample)


# liveness


def _resolution_rounds(proxies: Mapping[str, ProxyState]) -> Dict[str, tuple]:
    """key -> (round finalized on every chain, resolving tx id); keys are tx ids and invocation keys."""
    per_chain: List[Dict[str, tuple]] = []
    for proxy in proxies.values():
        seen: Dict[str, tuple] = {}
        for call in proxy.finalized_log:
            for tx in call.tx_data.txs:
                seen.setdefault(tx.id, (call.rid, tx.id))
                if tx.invocation_key is not None:
                    seen.setdefault(tx.invocation_key, (call.rid, tx.id))
            for dropped in call.tx_data.dropped:
                if dropped.tx.invocation_key is None:
                    seen.setdefault(dropped.tx.id, (call.rid, "dropped"))
        per_chain.append(seen)
    if not per_chain:
        return {}
    common = set(per_chain[0]).intersection(*per_chain[1:])
    return {key: max((seen[key] for seen in per_chain), key=lambda item: item[0]) for key in common}


def check_liveness(run: RunArtifacts) -> PropertyVerdict:
    """Valid txs finalize on every chain within faults+2 rounds, counted inclusively.

    Txs that end as a revoke record or a dropped pure tx only need to resolve.
    """
    bound = run.fault_count + 2
    resolved = _resolution_rounds(run.proxies)
    slowest = 0
    for submission in run.submissions:
        found = resolved.get(submission.key)
        if found is None:
            return failed(
                f"{submission.key} submitted in round {submission.round} never resolved",
                _select(run.events, lambda e: _mentions(e, submission.key) or e.kind == TraceKind.ROUND_END),
            )
        round_id, tx_id = found
        if tx_id == "dropped" or tx_id.startswith("revoke:"):
            continue
        took = round_id - submission.round + 1
        slowest = max(slowest, took)
        if took > bound:
            return failed(
                f"{submission.key} took {took} rounds, bound is {bound}",
                _select(run.events, lambda e: _mentions(e, submission.key)),
            )
    return passed(f"{len(run.submissions)} submissions, slowest {slowest} of {bound} rounds")


# permissionless


def check_permissionless(run: RunArtifacts) -> PropertyVerdict:
    if not run.joiners:
        return skipped("scenario has no joining node")
    resolved = _resolution_rounds(run.proxies)
    for joiner in run.joiners:
        registration = next(
            (round_id for key, (round_id, _) in resolved.items() if key.startswith(f"register:{joiner}:")),
            None,
        )
        if registration is None:
            return failed(f"{joiner} never got registered")
        if not all(registry.is_active(joiner) for registry in run.registries.values()):
            return failed(f"{joiner} is not active in every honest registry")
        counted = _select(
            run.events,
            lambda e: e.kind == TraceKind.VOTE_COUNTED and e.detail.get("voter") == joiner and e.round > registration,
        )
        if not counted:
            return failed(
                f"no election after round {registration} counted a ticket of {joiner}",
                _select(run.events, lambda e: e.actor == joiner),
            )
        produced = [call.rid for call in run.finalized_order() if call.vid == joiner]
        endorsed = _select(
            run.events,
            lambda e: e.kind == TraceKind.VOTE_COUNTED and e.detail.get("candidate") == joiner,
        )
        if not produced and not endorsed:
            return failed(f"{joiner} was never elected after joining in round {registration}")
    return passed(f"{', '.join(run.joiners)} voted and was elected after joining")


# linearizability


def check_linearizability(trace: ExecutionTrace, init: GlobalState) -> PropertyVerdict:
    """Replay the finalized txs in block order from ``init`` and compare with every pinned root."""
    state = init
    for call in trace.finalized:
        try:
            for tx in call.tx_data.txs:
                state, _ = prove_execution(state, tx)
        except SyncError as exc:
            return failed(
                f"round {call.rid} does not replay: {exc}",
                _select(trace.events, lambda e: e.round == call.rid),
            )
        if state.root != call.verify_data.batch_root_after:
            return failed(
                f"replay of round {call.rid} ends at {state.root.hex()[:16]}, block claims "
                f"{call.verify_data.batch_root_after.hex()[:16]}",
                _select(trace.events, lambda e: e.round == call.rid),
            )
    final = state.root.hex()
    stray = {chain: root for chain, root in trace.final_roots.items() if root != final}
    if stray:
        return failed(
            f"sequential replay ends at {final[:16]}, chains pinned {stray}",
            _select(trace.events, lambda e: e.kind == TraceKind.FINALIZED),
        )
    return passed(f"{len(trace.finalized)} blocks replayed")


def deadline_violations(proxies: Mapping[str, ProxyState], delta_h: int, vote_timeout: int) -> List[str]:
    """Invocations removed later than delta_h - vote_timeout blocks after they were recorded."""
    allowed = delta_h - vote_timeout
    late = []
    for chain, proxy in proxies.items():
        for receipt in proxy.receipts:
            if receipt.kind != SideEffectKind.REMOVE_PENDING_INVOCATION:
                continue
            waited = receipt.args["finalized_height"] - receipt.args["recorded_height"]
            if waited > allowed:
                late.append(f"{chain}:{receipt.args['invocation_id']} finalized after {waited} blocks")
    return late
