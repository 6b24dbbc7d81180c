"""Simulator for synchronizing one global state across several native chains."""

from .merkle_state import GlobalState, StateLayout, StateTree, update_leaf
from .proof_engine import prove_execution, verify_execution, prove_consensus, verify_consensus, aggregate
from .consensus import VoterRegistry, cast_vote, collect_and_elect, produce_block
from .native_chain import NativeChain, open_proxy, verify_and_finalize
from .aggregator_node import AggregatorNode
from .sim_harness import Simulator, enumerate_interleavings, load_scenario, run_scenario
from .checkers import check_linearizability
from ._version import __version__

__all__ = [
    "GlobalState",
    "StateLayout",
    "StateTree",
    "update_leaf",
    "prove_execution",
    "verify_execution",
    "prove_consensus",
    "verify_consensus",
    "aggregate",
    "VoterRegistry",
    "cast_vote",
    "collect_and_elect",
    "produce_block",
    "NativeChain",
    "open_proxy",
    "verify_and_finalize",
    "AggregatorNode",
    "Simulator",
    "enumerate_interleavings",
    "load_scenario",
    "run_scenario",
    "check_linearizability",
    "__version__",
]
