"""Exact brute-force ground truth on small instances.

The searcher assigns agents in index order, each to a listed hospital with
enough residual capacity or to nothing (tried last), pruning on capacity only;
stability predicates are evaluated at the leaves because blocking-pair absence
is not prefix-monotone. Every bound in the budget (node count, wall clock,
solution cap) aborts the sweep with an explicit ``budget_exhausted`` verdict
rather than truncating silently.

The ``decompose`` strategy for the stable-matching query splits the instance
into blocks that touch each other only through a set of interface hospitals.
It enumerates, per interface hospital, every feasible set of residents it
could hold; given one combined interface state the blocks are independent, so
each block is searched on its own (with blocking pairs against the fixed
interface state checked as soon as they are decided) and the per-block
solutions are multiplied out. Distinct interface states yield distinct
matchings, so the union over states is exact. This makes the gadget-chain
instances produced by the stable-target reduction tractable.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Iterator, Sequence

from .model import UNMATCHED, HrsError, HrsInstance, Matching, matching_size
from .reduce import SmtiInstance, SmtiMatching, is_weakly_stable
from . import verify

COMPLETE = "complete"
EXHAUSTED = "budget_exhausted"

PLAIN = "plain"
DECOMPOSE = "decompose"


class BudgetExhausted(HrsError):
    def __init__(self, nodes: int):
        self.nodes = nodes
        super().__init__(f"search budget exhausted after {nodes} nodes")


@dataclass
class SearchBudget:
    """Bounds for one oracle call. ``deadline`` is seconds of wall clock."""

    max_nodes: int = 10_000_000
    max_solutions: int | None = None
    deadline: float | None = None


@dataclass
class OracleResult:
    verdict: str
    matchings: list[Matching]
    value: int | None
    nodes: int

    @property
    def complete(self) -> bool:
        return self.verdict == COMPLETE

    def to_json(self, inst: HrsInstance) -> dict:
        from .model import matching_to_json

        witness = self.matchings[0] if self.matchings else None
        return {
            "verdict": self.verdict,
            "count": len(self.matchings),
            "value": self.value,
            "witness": matching_to_json(inst, witness) if witness is not None else None,
            "nodes": self.nodes,
        }


class _SolutionCap(Exception):
    pass


class _Found(Exception):
    pass


class _Ticker:
    """Shared node counter enforcing max_nodes and the deadline."""

    __slots__ = ("nodes", "limit", "t_end")

    def __init__(self, budget: SearchBudget):
        self.nodes = 0
        self.limit = budget.max_nodes
        self.t_end = (
            time.monotonic() + budget.deadline if budget.deadline is not None else None
        )

    def tick(self) -> None:
        self.nodes += 1
        if self.nodes > self.limit:
            raise BudgetExhausted(self.nodes)
        if self.t_end is not None and (self.nodes & 2047) == 0:
            if time.monotonic() > self.t_end:
                raise BudgetExhausted(self.nodes)


def enumerate_feasible(
    inst: HrsInstance, budget: SearchBudget | None = None
) -> Iterator[Matching]:
    """Yield every feasible matching exactly once, in canonical search order.
    Raises BudgetExhausted when a bound trips."""
    budget = budget or SearchBudget()
    ticker = _Ticker(budget)
    n = inst.n_agents
    sizes, caps, prefs = inst.sizes, inst.caps, inst.agent_prefs
    assign = [UNMATCHED] * n
    occ = [0] * inst.n_hospitals
    yielded = 0

    def rec(a: int) -> Iterator[Matching]:
        nonlocal yielded
        if a == n:
            yield Matching(assign)
            yielded += 1
            if budget.max_solutions is not None and yielded >= budget.max_solutions:
                raise BudgetExhausted(ticker.nodes)
            return
        s = sizes[a]
        for h in prefs[a]:
            if occ[h] + s <= caps[h]:
                ticker.tick()
                assign[a] = h
                occ[h] += s
                yield from rec(a + 1)
                occ[h] -= s
        ticker.tick()
        assign[a] = UNMATCHED
        yield from rec(a + 1)

    yield from rec(0)


def _walk(
    inst: HrsInstance,
    budget: SearchBudget,
    perfect: bool,
    on_leaf: Callable[[list[int], list[int]], None],
) -> tuple[str, int]:
    """Callback-style sweep over feasible (optionally all-agents-matched)
    assignments; returns (verdict, nodes)."""
    ticker = _Ticker(budget)
    n = inst.n_agents
    sizes, caps, prefs = inst.sizes, inst.caps, inst.agent_prefs
    assign = [UNMATCHED] * n
    occ = [0] * inst.n_hospitals

    def rec(a: int) -> None:
        if a == n:
            on_leaf(assign, occ)
            return
        s = sizes[a]
        for h in prefs[a]:
            if occ[h] + s <= caps[h]:
                ticker.tick()
                assign[a] = h
                occ[h] += s
                rec(a + 1)
                occ[h] -= s
        assign[a] = UNMATCHED
        if not perfect:
            ticker.tick()
            rec(a + 1)

    try:
        rec(0)
    except BudgetExhausted as exc:
        return EXHAUSTED, exc.nodes
    except _SolutionCap:
        return EXHAUSTED, ticker.nodes
    except _Found:
        return COMPLETE, ticker.nodes
    return COMPLETE, ticker.nodes


def stable_matchings(
    inst: HrsInstance,
    budget: SearchBudget | None = None,
    strategy: str = PLAIN,
    interfaces: Sequence[int] | None = None,
) -> OracleResult:
    """All stable matchings (canonical order). ``strategy=decompose`` answers
    the same query block-wise; ``interfaces`` optionally pins the interface
    hospitals instead of auto-detection."""
    budget = budget or SearchBudget()
    if strategy == DECOMPOSE:
        return _stable_decomposed(inst, budget, interfaces)
    if strategy != PLAIN:
        raise ValueError(f"unknown strategy {strategy!r}")
    tester = verify.make_blocking_tester(inst, verify.CLASSIC)
    found: list[Matching] = []

    def on_leaf(assign, occ):
        if not tester(assign, occ):
            found.append(Matching(assign))
            if budget.max_solutions is not None and len(found) >= budget.max_solutions:
                raise _SolutionCap

    verdict, nodes = _walk(inst, budget, False, on_leaf)
    return OracleResult(verdict, found, None, nodes)


def occupancy_stable_matchings(
    inst: HrsInstance, budget: SearchBudget | None = None
) -> OracleResult:
    """All occupancy-stable matchings; nonempty whenever the sweep completes."""
    budget = budget or SearchBudget()
    tester = verify.make_blocking_tester(inst, verify.OCCUPANCY)
    found: list[Matching] = []

    def on_leaf(assign, occ):
        if not tester(assign, occ):
            found.append(Matching(assign))
            if budget.max_solutions is not None and len(found) >= budget.max_solutions:
                raise _SolutionCap

    verdict, nodes = _walk(inst, budget, False, on_leaf)
    return OracleResult(verdict, found, None, nodes)


def max_occupancy_stable(
    inst: HrsInstance, budget: SearchBudget | None = None
) -> OracleResult:
    """An occupancy-stable matching of maximum total size, with its value."""
    budget = budget or SearchBudget()
    tester = verify.make_blocking_tester(inst, verify.OCCUPANCY)
    sizes = inst.sizes
    best: list[Matching] = []
    best_value = -1

    def on_leaf(assign, occ):
        nonlocal best_value
        value = 0
        for a, h in enumerate(assign):
            if h >= 0:
                value += sizes[a]
        if value > best_value and not tester(assign, occ):
            best_value = value
            best[:] = [Matching(assign)]

    verdict, nodes = _walk(inst, budget, False, on_leaf)
    return OracleResult(verdict, best, best_value if best else None, nodes)


def exists_a_perfect_occupancy_stable(
    inst: HrsInstance, budget: SearchBudget | None = None
) -> OracleResult:
    """Decision: is there an occupancy-stable matching with every agent
    matched? Complete with a witness when yes; complete and empty when the
    full sweep finds none."""
    budget = budget or SearchBudget()
    tester = verify.make_blocking_tester(inst, verify.OCCUPANCY)
    found: list[Matching] = []

    def on_leaf(assign, occ):
        if not tester(assign, occ):
            found.append(Matching(assign))
            raise _Found

    verdict, nodes = _walk(inst, budget, True, on_leaf)
    value = matching_size(inst, found[0]) if found else None
    return OracleResult(verdict, found, value, nodes)


def smti_complete_stable(smti: SmtiInstance) -> SmtiMatching | None:
    """First complete weakly stable matching in enumeration order (men by
    index, women in each man's list order), or None. Exhaustive; sides of at
    most 7 only."""
    if smti.n_men > 7 or smti.n_women > 7:
        raise ValueError("exhaustive marriage search limited to 7 per side")
    if smti.n_men != smti.n_women:
        return None
    n = smti.n_men
    choices = [
        [w for group in smti.men_prefs[m] for w in group] for m in range(n)
    ]
    taken = [False] * smti.n_women
    assign = [UNMATCHED] * n

    def rec(m: int) -> SmtiMatching | None:
        if m == n:
            candidate = SmtiMatching(assign)
            if is_weakly_stable(smti, candidate):
                return candidate
            return None
        for w in choices[m]:
            if not taken[w]:
                assign[m] = w
                taken[w] = True
                result = rec(m + 1)
                taken[w] = False
                if result is not None:
                    return result
        assign[m] = UNMATCHED
        return None

    return rec(0)


# --- decomposition strategy ---------------------------------------------------


def _components(
    inst: HrsInstance, removed: set[int]
) -> list[tuple[list[int], list[int]]]:
    """Connected components (agents, hospitals) after deleting the removed
    hospitals; every vertex appears in exactly one component."""
    n_a, n_h = inst.n_agents, inst.n_hospitals
    seen_a = [False] * n_a
    seen_h = [False] * n_h
    comps: list[tuple[list[int], list[int]]] = []
    for start in range(n_a):
        if seen_a[start]:
            continue
        agents = [start]
        hospitals: list[int] = []
        seen_a[start] = True
        stack = [("a", start)]
        while stack:
            kind, v = stack.pop()
            if kind == "a":
                for h in inst.agent_prefs[v]:
                    if h not in removed and not seen_h[h]:
                        seen_h[h] = True
                        hospitals.append(h)
                        stack.append(("h", h))
            else:
                for a in inst.hospital_prefs[v]:
                    if not seen_a[a]:
                        seen_a[a] = True
                        agents.append(a)
                        stack.append(("a", a))
        comps.append((sorted(agents), sorted(hospitals)))
    for h in range(n_h):
        if not seen_h[h] and h not in removed:
            comps.append(([], [h]))
    return comps


def auto_interfaces(inst: HrsInstance, max_block_agents: int = 12) -> list[int]:
    """Greedy interface choice: while some block holds more agents than the
    cap, remove the hospital set (up to three at a time) that most shrinks the
    largest block. Any choice is sound; this one keeps the state product small
    on gadget-chain instances."""
    interfaces: set[int] = set()
    while True:
        comps = _components(inst, interfaces)
        worst = max((len(ags) for ags, _ in comps), default=0)
        if worst <= max_block_agents:
            break
        big_agents, big_hospitals = max(comps, key=lambda c: len(c[0]))
        candidates = [h for h in big_hospitals if len(inst.hospital_prefs[h]) >= 2]
        candidates.sort(key=lambda h: -len(inst.hospital_prefs[h]))
        candidates = candidates[:24]
        best: tuple[int, tuple[int, ...]] | None = None
        for r in (1, 2, 3):
            for subset in combinations(candidates, r):
                comps2 = _components(inst, interfaces | set(subset))
                w = max((len(ags) for ags, _ in comps2), default=0)
                key = (w, tuple(sorted(subset)))
                if best is None or key < best:
                    best = key
            if best is not None and best[0] <= max_block_agents:
                break
        if best is None or best[0] >= worst:
            break  # no hospital set helps; give up splitting further
        interfaces.update(best[1])
    return sorted(interfaces)


def _interface_states(inst: HrsInstance, h: int) -> list[tuple[int, ...]]:
    """Every subset of h's listed agents whose sizes fit its capacity, the
    empty set first; these are the possible resident sets of h."""
    neighbors = sorted(inst.hospital_prefs[h])
    if len(neighbors) > 16:
        raise ValueError(
            f"interface hospital {inst.hospital_labels[h]} lists {len(neighbors)} "
            "agents; too wide to enumerate"
        )
    cap = inst.caps[h]
    sizes = inst.sizes
    out: list[tuple[int, ...]] = []
    for mask in range(1 << len(neighbors)):
        members = [neighbors[i] for i in range(len(neighbors)) if (mask >> i) & 1]
        if sum(sizes[a] for a in members) <= cap:
            out.append(tuple(members))
    out.sort(key=lambda s: (len(s), s))
    return out


def _block_solutions(
    inst: HrsInstance,
    block_agents: Sequence[int],
    block_hospitals: Sequence[int],
    iface_state: dict[int, tuple[int, ...]],
    ticker: _Ticker,
) -> list[tuple[int, ...]]:
    """All assignments of the block agents (as tuples aligned with
    block_agents; UNMATCHED allowed) that are feasible, consistent with the
    interface state, and free of blocking pairs involving block agents.

    Interface pairs are checked the moment the agent is assigned; pairs at an
    internal hospital are checked once its last listed agent is assigned.
    """
    sizes, caps, prefs = inst.sizes, inst.caps, inst.agent_prefs
    hospital_rank = inst.hospital_rank
    agents = list(block_agents)
    internal = set(block_hospitals)
    pos = {a: i for i, a in enumerate(agents)}
    forced: dict[int, int] = {}
    for h, members in iface_state.items():
        for a in members:
            if a in pos:
                forced[a] = h
    iface_occ = {
        h: sum(sizes[a] for a in members) for h, members in iface_state.items()
    }
    # an internal hospital closes at the largest position among its residents
    close_at: dict[int, list[int]] = {}
    for h in internal:
        listed = [a for a in inst.hospital_prefs[h] if a in pos]
        if listed:
            close_at.setdefault(max(pos[a] for a in listed), []).append(h)

    assign: dict[int, int] = {}
    occ = {h: 0 for h in internal}
    members_at: dict[int, list[int]] = {h: [] for h in internal}
    solutions: list[tuple[int, ...]] = []

    def iface_blocks(a: int, chosen: int) -> bool:
        # does a form a blocking pair with an interface hospital it prefers?
        s_a = sizes[a]
        for h in prefs[a]:
            if h == chosen:
                return False
            if h not in iface_state:
                continue
            need = iface_occ[h] + s_a - caps[h]
            if need <= 0:
                return True
            ranks = hospital_rank[h]
            removable = sum(
                sizes[b] for b in iface_state[h] if ranks[b] > ranks[a]
            )
            if removable >= need:
                return True
        return False

    def internal_blocks(h: int) -> bool:
        # with M(h) final, does any listed block agent prefer in?
        ranks = hospital_rank[h]
        o = occ[h]
        cap = caps[h]
        residents = members_at[h]
        for b in inst.hospital_prefs[h]:
            if b not in pos or assign.get(b) == h:
                continue
            cur = assign[b]
            # does b prefer h to its assignment?
            if cur != UNMATCHED and inst.agent_rank[b][h] >= inst.agent_rank[b][cur]:
                continue
            need = o + sizes[b] - cap
            if need <= 0:
                return True
            rb = ranks[b]
            removable = sum(sizes[c] for c in residents if ranks[c] > rb)
            if removable >= need:
                return True
        return False

    def rec(i: int) -> None:
        if i == len(agents):
            solutions.append(tuple(assign[a] for a in agents))
            return
        a = agents[i]
        s_a = sizes[a]
        if a in forced:
            candidates: list[int] = [forced[a]]
            allow_unmatched = False
        else:
            candidates = [
                h for h in prefs[a]
                if h in internal and occ[h] + s_a <= caps[h]
            ]
            allow_unmatched = True
        for h in candidates:
            ticker.tick()
            if iface_blocks(a, h):
                continue
            assign[a] = h
            is_internal = h in internal
            if is_internal:
                occ[h] += s_a
                members_at[h].append(a)
            if not any(internal_blocks(hh) for hh in close_at.get(i, ())):
                rec(i + 1)
            if is_internal:
                occ[h] -= s_a
                members_at[h].pop()
        if allow_unmatched:
            ticker.tick()
            assign[a] = UNMATCHED
            if not iface_blocks(a, UNMATCHED):
                if not any(internal_blocks(hh) for hh in close_at.get(i, ())):
                    rec(i + 1)
        assign.pop(a, None)

    if not agents:
        # hospital-only block: nothing to assign, nothing can block
        return [()]
    rec(0)
    return solutions


def _stable_decomposed(
    inst: HrsInstance,
    budget: SearchBudget,
    interfaces: Sequence[int] | None,
) -> OracleResult:
    ticker = _Ticker(budget)
    iface_list = sorted(set(interfaces)) if interfaces is not None else auto_interfaces(inst)
    iface_set = set(iface_list)
    blocks = _components(inst, iface_set)
    states = {h: _interface_states(inst, h) for h in iface_list}
    owner: dict[int, int] = {}
    for bi, (ags, _) in enumerate(blocks):
        for a in ags:
            owner[a] = bi
    relevant: list[list[int]] = [[] for _ in blocks]
    for h in iface_list:
        touched = sorted({owner[a] for a in inst.hospital_prefs[h]})
        for bi in touched:
            relevant[bi].append(h)
    memo: dict[tuple, list[tuple[int, ...]]] = {}
    found: list[Matching] = []

    def block_key(bi: int, state: dict[int, tuple[int, ...]]) -> tuple:
        return (bi,) + tuple((h, state[h]) for h in relevant[bi])

    def solve_block(bi: int, state: dict[int, tuple[int, ...]]) -> list[tuple[int, ...]]:
        key = block_key(bi, state)
        if key not in memo:
            sub_state = {h: state[h] for h in relevant[bi]}
            memo[key] = _block_solutions(
                inst, blocks[bi][0], blocks[bi][1], sub_state, ticker
            )
        return memo[key]

    def emit(state: dict[int, tuple[int, ...]]) -> None:
        per_block = []
        for bi in range(len(blocks)):
            sols = solve_block(bi, state)
            if not sols:
                return
            per_block.append(sols)

        assign = [UNMATCHED] * inst.n_agents

        def product(bi: int) -> None:
            if bi == len(blocks):
                found.append(Matching(assign))
                if budget.max_solutions is not None and len(found) >= budget.max_solutions:
                    raise _SolutionCap
                return
            agents = blocks[bi][0]
            for sol in per_block[bi]:
                for a, h in zip(agents, sol):
                    assign[a] = h
                product(bi + 1)

        product(0)

    state: dict[int, tuple[int, ...]] = {}
    claimed: set[int] = set()

    def sweep(i: int) -> None:
        if i == len(iface_list):
            emit(state)
            return
        h = iface_list[i]
        for st in states[h]:
            if any(a in claimed for a in st):
                continue
            ticker.tick()
            state[h] = st
            claimed.update(st)
            sweep(i + 1)
            claimed.difference_update(st)
        del state[h]

    try:
        sweep(0)
        verdict = COMPLETE
    except BudgetExhausted as exc:
        return OracleResult(EXHAUSTED, sorted(found, key=lambda m: m.assign), None, exc.nodes)
    except _SolutionCap:
        verdict = EXHAUSTED
    found.sort(key=lambda m: m.assign)
    return OracleResult(verdict, found, None, ticker.nodes)
