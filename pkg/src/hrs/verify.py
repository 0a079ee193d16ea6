"""Blocking-pair detection and stability predicates.

Two notions are checked. A pair (a, h) not in the matching *blocks* it in the
classic sense when a prefers h to its assignment and h can fit a after
evicting some set X of strictly lower-preferred residents. The *occupancy*
variant additionally requires the eviction set to free at most s(a) positions,
so the hospital never loses occupancy by the swap. A matching is stable
(resp. occupancy-stable) when no pair of that kind blocks it.

The eviction-set search is a reachable-subset-sum scan over the sizes of the
lower-preferred residents, done with integer bitsets; reported witnesses take
the smallest achievable eviction total and, among those, the lexicographically
smallest agent set.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

from .model import (
    UNMATCHED,
    HrsInstance,
    Matching,
    is_feasible,
    occupancies,
)

CLASSIC = "classic"
OCCUPANCY = "occupancy"


@dataclass(frozen=True)
class BlockingWitness:
    """One blocking pair together with a concrete eviction set."""

    agent: int
    hospital: int
    displaced: tuple[int, ...]
    kind: str

    def to_json(self, inst: HrsInstance) -> dict:
        return {
            "agent": inst.agent_labels[self.agent],
            "hospital": inst.hospital_labels[self.hospital],
            "displaced": [inst.agent_labels[b] for b in self.displaced],
            "kind": self.kind,
        }


def _suffix_reachable(sizes: Sequence[int], limit: int) -> list[int]:
    # suffix[i] = bitset of subset sums of sizes[i:], truncated to <= limit
    mask = (1 << (limit + 1)) - 1
    suffix = [0] * (len(sizes) + 1)
    suffix[len(sizes)] = 1
    for i in range(len(sizes) - 1, -1, -1):
        b = suffix[i + 1]
        suffix[i] = (b | (b << sizes[i])) & mask
    return suffix


def _min_sum_eviction(
    members: Sequence[int], sizes: Sequence[int], lo: int, hi: int
) -> tuple[int, ...] | None:
    """Subset of members with size-sum in [lo, hi], minimizing the sum and then
    lexicographic on (index-sorted) members; None when no subset qualifies."""
    if lo <= 0:
        return ()
    if hi < lo:
        return None
    suffix = _suffix_reachable(sizes, hi)
    reachable = suffix[0]
    target = next((t for t in range(lo, hi + 1) if (reachable >> t) & 1), None)
    if target is None:
        return None
    chosen = []
    need = target
    for i, s in enumerate(sizes):
        if need == 0:
            break
        if s <= need and (suffix[i + 1] >> (need - s)) & 1:
            chosen.append(members[i])
            need -= s
    return tuple(chosen)


def _scan_pairs(
    inst: HrsInstance,
    matching: Matching,
    kind: str,
    caps: Sequence[int],
    allowed: set[tuple[int, int]] | None,
    collect: bool,
    out: list[BlockingWitness] | None,
) -> bool:
    """Walk candidate pairs in canonical order (agent index, then that agent's
    preference order). Returns True if any pair blocks; fills ``out`` with all
    witnesses when collecting."""
    assign = matching.assign
    occ = occupancies(inst, matching)
    sizes = inst.sizes
    hospital_rank = inst.hospital_rank
    matched_at: list[list[int]] = [[] for _ in range(inst.n_hospitals)]
    for a, h in enumerate(assign):
        if h != UNMATCHED:
            matched_at[h].append(a)
    found = False
    for a in range(inst.n_agents):
        cur = assign[a]
        s_a = sizes[a]
        for h in inst.agent_prefs[a]:
            if h == cur:
                break  # remaining hospitals are not preferred to the assignment
            if allowed is not None and (a, h) not in allowed:
                continue
            o, q = occ[h], caps[h]
            need = o + s_a - q
            if need <= 0:
                witness: tuple[int, ...] | None = ()
            else:
                rank_a = hospital_rank[h][a]
                lower = [b for b in matched_at[h] if hospital_rank[h][b] > rank_a]
                lower_sizes = [sizes[b] for b in lower]
                hi = s_a if kind == OCCUPANCY else sum(lower_sizes)
                witness = _min_sum_eviction(lower, lower_sizes, need, hi)
            if witness is None:
                continue
            found = True
            if not collect:
                return True
            out.append(BlockingWitness(a, h, witness, kind))
    return found


def _require_feasible(inst: HrsInstance, matching: Matching) -> None:
    ok, msg = is_feasible(inst, matching)
    if not ok:
        raise ValueError(f"infeasible matching: {msg}")


def find_blocking_pairs(inst: HrsInstance, matching: Matching) -> list[BlockingWitness]:
    """All classic blocking pairs, each with one valid eviction set."""
    _require_feasible(inst, matching)
    out: list[BlockingWitness] = []
    _scan_pairs(inst, matching, CLASSIC, inst.caps, None, True, out)
    return out


def find_occupancy_blocking_pairs(inst: HrsInstance, matching: Matching) -> list[BlockingWitness]:
    """All occupancy-blocking pairs (eviction total bounded by the incoming size)."""
    _require_feasible(inst, matching)
    out: list[BlockingWitness] = []
    _scan_pairs(inst, matching, OCCUPANCY, inst.caps, None, True, out)
    return out


def find_blocking_pairs_residual(
    inst: HrsInstance,
    matching: Matching,
    residual_caps: Sequence[int],
    subgraph: Iterable[tuple[int, int]],
) -> list[BlockingWitness]:
    """Classic blocking pairs restricted to an edge subset under substitute
    capacities; used to audit one solver round at a time."""
    residual_caps = list(residual_caps)
    if len(residual_caps) != inst.n_hospitals:
        raise ValueError("residual capacity vector has wrong length")
    if any(c < 0 for c in residual_caps):
        raise ValueError("negative residual capacity")
    allowed = set(subgraph)
    occ = occupancies(inst, matching)
    for h, o in enumerate(occ):
        if o > residual_caps[h]:
            raise ValueError(
                f"matching infeasible under residual capacities at {inst.hospital_labels[h]}"
            )
    for a, h in enumerate(matching.assign):
        if h != UNMATCHED and (a, h) not in allowed:
            raise ValueError(
                f"matched pair ({inst.agent_labels[a]}, {inst.hospital_labels[h]}) "
                "outside the given subgraph"
            )
    out: list[BlockingWitness] = []
    _scan_pairs(inst, matching, CLASSIC, residual_caps, allowed, True, out)
    return out


def is_stable(inst: HrsInstance, matching: Matching) -> bool:
    _require_feasible(inst, matching)
    return not _scan_pairs(inst, matching, CLASSIC, inst.caps, None, False, None)


def is_occupancy_stable(inst: HrsInstance, matching: Matching) -> bool:
    _require_feasible(inst, matching)
    return not _scan_pairs(inst, matching, OCCUPANCY, inst.caps, None, False, None)


def is_a_perfect(inst: HrsInstance, matching: Matching) -> bool:
    """True when every agent is matched."""
    _require_feasible(inst, matching)
    return UNMATCHED not in matching.assign


def make_blocking_tester(
    inst: HrsInstance, kind: str = CLASSIC
) -> Callable[[Sequence[int], Sequence[int]], bool]:
    """Fast existence-only test over raw (assign, occupancy) arrays, for use in
    enumeration inner loops. Assumes the assignment is feasible."""
    if kind not in (CLASSIC, OCCUPANCY):
        raise ValueError(f"unknown blocking kind {kind!r}")
    n_agents = inst.n_agents
    n_hospitals = inst.n_hospitals
    sizes = inst.sizes
    caps = inst.caps
    agent_prefs = inst.agent_prefs
    hospital_rank = inst.hospital_rank
    occupancy_kind = kind == OCCUPANCY

    def has_blocking(assign: Sequence[int], occ: Sequence[int]) -> bool:
        matched_at: list[list[int]] = [[] for _ in range(n_hospitals)]
        for a in range(n_agents):
            h = assign[a]
            if h >= 0:
                matched_at[h].append(a)
        for a in range(n_agents):
            cur = assign[a]
            s_a = sizes[a]
            for h in agent_prefs[a]:
                if h == cur:
                    break
                need = occ[h] + s_a - caps[h]
                if need <= 0:
                    return True
                ranks = hospital_rank[h]
                rank_a = ranks[a]
                if occupancy_kind:
                    if need > s_a:
                        continue
                    bits = 1
                    for b in matched_at[h]:
                        if ranks[b] > rank_a:
                            bits |= bits << sizes[b]
                    if (bits >> need) & ((1 << (s_a - need + 1)) - 1):
                        return True
                else:
                    removable = 0
                    for b in matched_at[h]:
                        if ranks[b] > rank_a:
                            removable += sizes[b]
                    if removable >= need:
                        return True
        return False

    return has_blocking
