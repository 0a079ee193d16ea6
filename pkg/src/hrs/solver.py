"""Round-based solver: deferred acceptance over an ordered agent partition.

The solver walks the partition classes in order. For class k it computes each
hospital's residual capacity (capacity minus occupancy accumulated so far),
restricts the graph to the class agents, and runs agent-proposing deferred
acceptance there; because all agents in a class share one size s, a hospital
with residual capacity r behaves exactly like a classic hospital with
floor(r / s) slots. Round matchings accumulate by union into the final result.

Run with the size-descending partition, the final matching is always
occupancy-stable and its total size is within a factor 3 of the best
occupancy-stable matching. Run with any partition the hospital lists follow
(a generalized master list), the final matching is stable outright.

The full trace (per-round edge sets, residual capacities, round and cumulative
matchings) is returned so the structural round invariants can be audited:
round edge sets are pairwise disjoint, the final matching is exactly the union
of the round matchings, per-hospital occupancy never decreases across rounds,
and each round matching has no blocking pair within its round's subgraph and
capacities.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from heapq import heappush, heapreplace
from itertools import chain, repeat
from typing import Sequence

from .model import (
    UNMATCHED,
    HrsInstance,
    Matching,
    ValidationReport,
    matching_to_json,
    occupancies,
)
from .partition import OrderedPartition, size_descending_partition, validate_ordered_partition
from .verify import find_blocking_pairs_residual


@dataclass(frozen=True)
class SolveRound:
    index: int                      # 1-based round number
    agents: tuple[int, ...]         # the class processed this round
    edges: tuple[tuple[int, int], ...]
    residual_caps: tuple[int, ...]
    matching: Matching              # pairs added this round


@dataclass(frozen=True)
class SolveTrace:
    partition: OrderedPartition
    rounds: tuple[SolveRound, ...]
    cumulative: tuple[Matching, ...]
    final: Matching


def uniform_gs(
    inst: HrsInstance, class_agents: Sequence[int], residual_caps: Sequence[int]
) -> Matching:
    """Agent-proposing deferred acceptance for one size-homogeneous class under
    residual capacities. Returns the class-agent-optimal matching with no
    blocking pair inside the class subgraph.

    A hospital with residual capacity r offers floor(r / s) slots to agents of
    size s; hospitals with no whole slot are skipped rather than removed.
    """
    residual_caps = list(residual_caps)
    if len(residual_caps) != inst.n_hospitals:
        raise ValueError("residual capacity vector has wrong length")
    if any(r < 0 for r in residual_caps):
        raise ValueError("negative residual capacity")
    assign = [UNMATCHED] * inst.n_agents
    if not class_agents:
        return Matching(assign)
    sizes = {inst.sizes[a] for a in class_agents}
    if len(sizes) != 1:
        raise ValueError(f"class mixes sizes {sorted(sizes)}")
    s = sizes.pop()
    slots = [r // s for r in residual_caps]
    prefs = inst.agent_prefs
    edge_ranks = inst.agent_pref_hranks_neg
    # accepted[h] is a heap of (negated rank, agent): the top is the worst
    accepted: list[list[tuple[int, int]]] = [[] for _ in range(inst.n_hospitals)]
    fill = [0] * inst.n_hospitals
    ptr = [0] * inst.n_agents
    queue = deque(class_agents)
    pop = queue.popleft
    push_back = queue.append
    while queue:
        a = pop()
        lst = prefs[a]
        ranks = edge_ranks[a]
        end = len(lst)
        i = ptr[a]
        while i < end:
            h = lst[i]
            cap = slots[h]
            i += 1
            if cap == 0:
                continue
            neg_rank = ranks[i - 1]
            heap = accepted[h]
            if fill[h] < cap:
                heappush(heap, (neg_rank, a))
                fill[h] += 1
                break
            top = heap[0]
            if neg_rank > top[0]:
                heapreplace(heap, (neg_rank, a))
                push_back(top[1])
                break
        ptr[a] = i
    for h, heap in enumerate(accepted):
        for _, a in heap:
            assign[a] = h
    return Matching(assign)


def solve(inst: HrsInstance, partition: OrderedPartition) -> SolveTrace:
    """Run all rounds of the partition in order and return the full trace."""
    report = validate_ordered_partition(inst, partition)
    if not report.ok:
        raise ValueError(f"invalid partition: {report.summary()}")
    caps = inst.caps
    cum_assign = [UNMATCHED] * inst.n_agents
    cum_occ = [0] * inst.n_hospitals
    rounds: list[SolveRound] = []
    cumulative: list[Matching] = []
    for k, cls in enumerate(partition.classes, start=1):
        residual = tuple(caps[h] - cum_occ[h] for h in range(inst.n_hospitals))
        round_matching = uniform_gs(inst, cls, residual)
        edges = tuple(chain.from_iterable(
            zip(repeat(a), inst.agent_prefs[a]) for a in cls
        ))
        round_assign = round_matching.assign
        for a in cls:
            h = round_assign[a]
            if h != UNMATCHED:
                cum_assign[a] = h
                cum_occ[h] += inst.sizes[a]
        rounds.append(SolveRound(k, cls, edges, residual, round_matching))
        cumulative.append(Matching(cum_assign))
    final = cumulative[-1] if cumulative else Matching.empty(inst)
    return SolveTrace(partition, tuple(rounds), tuple(cumulative), final)


def solve_occupancy(inst: HrsInstance) -> Matching:
    """Occupancy-stable matching: run the rounds on the size-descending
    partition (largest agents first)."""
    return solve(inst, size_descending_partition(inst)).final


def check_trace(inst: HrsInstance, trace: SolveTrace) -> ValidationReport:
    """Audit a trace against the round invariants; empty report on success."""
    report = ValidationReport()
    part_report = validate_ordered_partition(inst, trace.partition)
    for issue in part_report.issues:
        report.add(issue.severity, issue.location, issue.message)
    if len(trace.rounds) != len(trace.partition.classes):
        report.add("error", "trace", "round count differs from class count")
        return report
    if len(trace.cumulative) != len(trace.rounds):
        report.add("error", "trace", "cumulative count differs from round count")
        return report

    # rounds must use exactly their class, pairwise edge-disjoint subgraphs
    seen_edges: dict[tuple[int, int], int] = {}
    for rnd, cls in zip(trace.rounds, trace.partition.classes):
        loc = f"round {rnd.index}"
        if tuple(sorted(rnd.agents)) != tuple(sorted(cls)):
            report.add("error", loc, "round agents differ from partition class")
        for e in rnd.edges:
            if e in seen_edges:
                report.add(
                    "error", loc,
                    f"edge {e} already in round {seen_edges[e]}",
                )
            else:
                seen_edges[e] = rnd.index
        agent_set = set(rnd.agents)
        edge_set = set(rnd.edges)
        for a, h in rnd.matching.pairs():
            if a not in agent_set:
                report.add("error", loc, f"matched agent {inst.agent_labels[a]} outside class")
            if (a, h) not in edge_set:
                report.add("error", loc, f"matched pair ({a}, {h}) outside round edges")

    # cumulative[k] must equal cumulative[k-1] plus this round's pairs,
    # and the final matching exactly the union of round matchings
    prev_pairs: set[tuple[int, int]] = set()
    union_pairs: set[tuple[int, int]] = set()
    for rnd, cum in zip(trace.rounds, trace.cumulative):
        loc = f"round {rnd.index}"
        round_pairs = set(rnd.matching.pairs())
        union_pairs |= round_pairs
        expected = prev_pairs | round_pairs
        got = set(cum.pairs())
        if got != expected:
            report.add("error", loc, "cumulative matching is not the union so far")
        prev_pairs = got
    if set(trace.final.pairs()) != union_pairs:
        report.add("error", "final", "final matching differs from union of rounds")

    # per-hospital occupancy must never decrease across cumulative matchings
    prev_occ = [0] * inst.n_hospitals
    for rnd, cum in zip(trace.rounds, trace.cumulative):
        occ = occupancies(inst, cum)
        for h in range(inst.n_hospitals):
            if occ[h] < prev_occ[h]:
                report.add(
                    "error", f"round {rnd.index}",
                    f"occupancy of {inst.hospital_labels[h]} decreased",
                )
        prev_occ = occ

    # every round matching must be blocking-free in its own subgraph
    for rnd in trace.rounds:
        loc = f"round {rnd.index}"
        try:
            blocking = find_blocking_pairs_residual(
                inst, rnd.matching, rnd.residual_caps, rnd.edges
            )
        except ValueError as exc:
            report.add("error", loc, str(exc))
            continue
        for w in blocking:
            report.add(
                "error", loc,
                f"round blocking pair ({inst.agent_labels[w.agent]}, "
                f"{inst.hospital_labels[w.hospital]})",
            )
    return report


def trace_to_json(inst: HrsInstance, trace: SolveTrace) -> dict:
    return {
        "partition": [
            [inst.agent_labels[a] for a in cls] for cls in trace.partition.classes
        ],
        "provenance": trace.partition.provenance,
        "rounds": [
            {
                "k": rnd.index,
                "agents": [inst.agent_labels[a] for a in rnd.agents],
                "edges": [
                    [inst.agent_labels[a], inst.hospital_labels[h]] for a, h in rnd.edges
                ],
                "residual_caps": {
                    inst.hospital_labels[h]: rnd.residual_caps[h]
                    for h in range(inst.n_hospitals)
                },
                "matching": matching_to_json(inst, rnd.matching),
            }
            for rnd in trace.rounds
        ],
        "cumulative": [matching_to_json(inst, m) for m in trace.cumulative],
        "final": matching_to_json(inst, trace.final),
    }
