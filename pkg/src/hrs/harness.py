"""Seeded generators, property suites, and approximation-ratio experiments.

All generation is a pure function of the parameters: the same params (seed
included) reproduce the same instance byte for byte. Experiment trials derive
their seeds as ``seed XOR trial-index`` so runs are reproducible and trials
independent. Property suites shrink any failing instance to a local minimum
(no single agent, hospital or edge can be dropped while keeping the failure)
before reporting it.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from multiprocessing import get_context
from typing import Callable

from .model import HrsInstance, matching_size, serialize_instance
from .oracle import (
    COMPLETE,
    EXHAUSTED,
    BudgetExhausted,
    SearchBudget,
    enumerate_feasible,
    max_occupancy_stable,
)
from .partition import detect_generalized_master_list
from .reduce import SmtiInstance
from .solver import solve, solve_occupancy
from .verify import (
    find_blocking_pairs,
    find_occupancy_blocking_pairs,
    is_occupancy_stable,
    is_stable,
)

UNIFORM_RANDOM = "uniform_random"
GEN_MASTER_LIST = "gen_master_list"
CSMTI = "csmti"


@dataclass(frozen=True)
class GenParams:
    """Generator knobs. For the marriage family, ``n_agents`` is the side size
    and ``n_ties`` the number of tied men (None: coin flip per man)."""

    n_agents: int
    n_hospitals: int
    size_range: tuple[int, int] = (1, 3)
    cap_range: tuple[int, int] = (1, 6)
    density: float = 1.0
    seed: int = 0
    family: str = UNIFORM_RANDOM
    n_ties: int | None = None

    def check(self) -> None:
        if self.n_agents < 0 or self.n_hospitals < 0:
            raise ValueError("negative counts")
        for lo, hi in (self.size_range, self.cap_range):
            if lo < 1 or hi < lo:
                raise ValueError("empty or non-positive range")
        if not 0.0 <= self.density <= 1.0:
            raise ValueError("density must lie in [0, 1]")


def _sample_edges(params: GenParams, rng: random.Random) -> list[list[int]]:
    """Neighbor hospital lists per agent (unordered)."""
    if params.density >= 1.0:
        return [list(range(params.n_hospitals)) for _ in range(params.n_agents)]
    return [
        [h for h in range(params.n_hospitals) if rng.random() < params.density]
        for _ in range(params.n_agents)
    ]


def gen_random(params: GenParams) -> HrsInstance:
    """Uniform random instance: sizes and capacities from the given ranges,
    each edge present with the given density, both sides' lists uniformly
    shuffled. Agents with empty lists are allowed (trivially unmatched)."""
    params.check()
    rng = random.Random(params.seed)
    sizes = [rng.randint(*params.size_range) for _ in range(params.n_agents)]
    caps = [rng.randint(*params.cap_range) for _ in range(params.n_hospitals)]
    neighbors = _sample_edges(params, rng)
    agent_lists = []
    for a in range(params.n_agents):
        lst = list(neighbors[a])
        rng.shuffle(lst)
        agent_lists.append(lst)
    hospital_neighbors: list[list[int]] = [[] for _ in range(params.n_hospitals)]
    for a in range(params.n_agents):
        for h in neighbors[a]:
            hospital_neighbors[h].append(a)
    hospital_lists = []
    for h in range(params.n_hospitals):
        lst = list(hospital_neighbors[h])
        rng.shuffle(lst)
        hospital_lists.append(lst)
    return _assemble(sizes, caps, agent_lists, hospital_lists)


def gen_master_list(params: GenParams) -> HrsInstance:
    """Random instance whose hospital lists all follow one ordered partition
    of the agents into size classes, so an ordering is always detectable:
    hospital lists are built class by class in a common random class order."""
    params.check()
    rng = random.Random(params.seed)
    sizes = [rng.randint(*params.size_range) for _ in range(params.n_agents)]
    caps = [rng.randint(*params.cap_range) for _ in range(params.n_hospitals)]
    neighbors = _sample_edges(params, rng)
    distinct = sorted(set(sizes))
    rng.shuffle(distinct)
    class_rank = {s: i for i, s in enumerate(distinct)}
    agent_lists = []
    for a in range(params.n_agents):
        lst = list(neighbors[a])
        rng.shuffle(lst)
        agent_lists.append(lst)
    hospital_neighbors: list[list[int]] = [[] for _ in range(params.n_hospitals)]
    for a in range(params.n_agents):
        for h in neighbors[a]:
            hospital_neighbors[h].append(a)
    hospital_lists = []
    for h in range(params.n_hospitals):
        by_class: dict[int, list[int]] = {}
        for a in hospital_neighbors[h]:
            by_class.setdefault(class_rank[sizes[a]], []).append(a)
        lst: list[int] = []
        for c in sorted(by_class):
            group = by_class[c]
            rng.shuffle(group)
            lst.extend(group)
        hospital_lists.append(lst)
    return _assemble(sizes, caps, agent_lists, hospital_lists)


def _assemble(sizes, caps, agent_lists, hospital_lists) -> HrsInstance:
    agents = [
        (f"a{a + 1}", sizes[a], [f"h{h + 1}" for h in agent_lists[a]])
        for a in range(len(sizes))
    ]
    hospitals = [
        (f"h{h + 1}", caps[h], [f"a{a + 1}" for a in hospital_lists[h]])
        for h in range(len(caps))
    ]
    return HrsInstance.build(agents, hospitals)


def gen_csmti(params: GenParams) -> SmtiInstance:
    """Random restricted marriage instance: ``n_agents`` men and women, tied
    men choosing two women, strict men exactly three, every woman listed by at
    most three men. Strict men require at least three women."""
    params.check()
    n = params.n_agents
    rng = random.Random(params.seed)
    if params.n_ties is None:
        tied = [rng.random() < 0.5 for _ in range(n)]
    else:
        if not 0 <= params.n_ties <= n:
            raise ValueError("tie count out of range")
        picks = set(rng.sample(range(n), params.n_ties))
        tied = [m in picks for m in range(n)]
    if any(not t for t in tied) and n < 3:
        raise ValueError("strict men need three women; use at least 3 per side")
    if any(tied) and n < 2:
        raise ValueError("tied men need two women")
    for _attempt in range(200):
        room = [3] * n
        chosen: list[list[int]] = []
        ok = True
        for m in range(n):
            need = 2 if tied[m] else 3
            avail = [w for w in range(n) if room[w] > 0]
            if len(avail) < need:
                ok = False
                break
            ws = rng.sample(avail, need)
            for w in ws:
                room[w] -= 1
            chosen.append(ws)
        if ok:
            break
    else:
        raise ValueError("could not satisfy per-woman list caps; try another seed")
    men = []
    for m in range(n):
        label = f"m{m + 1}"
        if tied[m]:
            men.append((label, [[f"w{w + 1}" for w in chosen[m]]]))
        else:
            men.append((label, [[f"w{w + 1}"] for w in chosen[m]]))
    suitors: list[list[int]] = [[] for _ in range(n)]
    for m in range(n):
        for w in chosen[m]:
            suitors[w].append(m)
    women = []
    for w in range(n):
        lst = list(suitors[w])
        rng.shuffle(lst)
        women.append((f"w{w + 1}", [f"m{m + 1}" for m in lst]))
    return SmtiInstance.build(men, women)


# --- pinned example instances --------------------------------------------------


def no_stable_example() -> HrsInstance:
    """Three agents, two hospitals, no stable matching at all; yet
    {(a1, h1), (a3, h2)} is occupancy-stable."""
    return HrsInstance.build(
        agents=[
            ("a1", 1, ["h2", "h1"]),
            ("a2", 1, ["h1", "h2"]),
            ("a3", 2, ["h2"]),
        ],
        hospitals=[
            ("h1", 1, ["a1", "a2"]),
            ("h2", 2, ["a2", "a3", "a1"]),
        ],
    )


def approx_gap_example() -> HrsInstance:
    """Instance where the size-descending solver returns total size 3 while
    the best occupancy-stable matching has total size 7, so the solver's
    ratio exceeds 2 here."""
    return HrsInstance.build(
        agents=[
            ("a1", 3, ["h1", "h2"]),
            ("a2", 2, ["h1"]),
            ("a3", 2, ["h1"]),
        ],
        hospitals=[
            ("h1", 4, ["a2", "a3", "a1"]),
            ("h2", 3, ["a1"]),
        ],
    )


def master_list_example() -> HrsInstance:
    """Five agents in three size classes whose hospital lists all follow the
    class order <{a1, a2}, {a3}, {a4, a5}>."""
    return HrsInstance.build(
        agents=[
            ("a1", 1, ["h1", "h2"]),
            ("a2", 1, ["h2", "h1"]),
            ("a3", 2, ["h2"]),
            ("a4", 3, ["h1", "h3"]),
            ("a5", 3, ["h3"]),
        ],
        hospitals=[
            ("h1", 3, ["a2", "a1", "a4"]),
            ("h2", 3, ["a1", "a2", "a3"]),
            ("h3", 3, ["a5", "a4"]),
        ],
    )


# --- instance shrinking ---------------------------------------------------------


def _without_agent(inst: HrsInstance, victim: int) -> HrsInstance:
    agents = [
        (inst.agent_labels[a], inst.sizes[a],
         [inst.hospital_labels[h] for h in inst.agent_prefs[a]])
        for a in range(inst.n_agents) if a != victim
    ]
    hospitals = [
        (inst.hospital_labels[h], inst.caps[h],
         [inst.agent_labels[a] for a in inst.hospital_prefs[h] if a != victim])
        for h in range(inst.n_hospitals)
    ]
    return HrsInstance.build(agents, hospitals)


def _without_hospital(inst: HrsInstance, victim: int) -> HrsInstance:
    agents = [
        (inst.agent_labels[a], inst.sizes[a],
         [inst.hospital_labels[h] for h in inst.agent_prefs[a] if h != victim])
        for a in range(inst.n_agents)
    ]
    hospitals = [
        (inst.hospital_labels[h], inst.caps[h],
         [inst.agent_labels[a] for a in inst.hospital_prefs[h]])
        for h in range(inst.n_hospitals) if h != victim
    ]
    return HrsInstance.build(agents, hospitals)


def _without_edge(inst: HrsInstance, edge: tuple[int, int]) -> HrsInstance:
    ea, eh = edge
    agents = [
        (inst.agent_labels[a], inst.sizes[a],
         [inst.hospital_labels[h] for h in inst.agent_prefs[a] if (a, h) != (ea, eh)])
        for a in range(inst.n_agents)
    ]
    hospitals = [
        (inst.hospital_labels[h], inst.caps[h],
         [inst.agent_labels[a] for a in inst.hospital_prefs[h] if (a, h) != (ea, eh)])
        for h in range(inst.n_hospitals)
    ]
    return HrsInstance.build(agents, hospitals)


def shrink_instance(
    inst: HrsInstance, still_fails: Callable[[HrsInstance], bool]
) -> HrsInstance:
    """Greedy local minimization: repeatedly drop one agent, hospital or edge
    while the predicate keeps failing; the result admits no further single
    removal."""
    current = inst
    changed = True
    while changed:
        changed = False
        for a in range(current.n_agents):
            candidate = _without_agent(current, a)
            if _fails(candidate, still_fails):
                current, changed = candidate, True
                break
        if changed:
            continue
        for h in range(current.n_hospitals):
            candidate = _without_hospital(current, h)
            if _fails(candidate, still_fails):
                current, changed = candidate, True
                break
        if changed:
            continue
        for edge in current.edges():
            candidate = _without_edge(current, edge)
            if _fails(candidate, still_fails):
                current, changed = candidate, True
                break
    return current


def _fails(candidate: HrsInstance, still_fails) -> bool:
    try:
        return still_fails(candidate)
    except BudgetExhausted:
        return False


# --- ratio experiment -----------------------------------------------------------


@dataclass(frozen=True)
class RatioRow:
    seed: int
    m: int
    n_agents: int
    s_alg: int
    s_best: int | None
    ratio: float | None
    verdict: str


@dataclass
class RatioReport:
    rows: list[RatioRow] = field(default_factory=list)
    aggregates: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        lines = ["seed,m,n_agents,sM,sMstar,ratio,verdict"]
        for r in self.rows:
            best = "" if r.s_best is None else str(r.s_best)
            ratio = "" if r.ratio is None else f"{r.ratio:.6f}"
            lines.append(f"{r.seed},{r.m},{r.n_agents},{r.s_alg},{best},{ratio},{r.verdict}")
        return "\n".join(lines) + "\n"


def _ratio_trial(args: tuple) -> RatioRow:
    template_dict, trial, max_nodes = args
    template = GenParams(**template_dict)
    trial_seed = template.seed ^ trial
    rng = random.Random(trial_seed)
    n_a = rng.randint(1, max(1, template.n_agents))
    n_h = rng.randint(1, max(1, template.n_hospitals))
    inst = gen_random(replace(template, n_agents=n_a, n_hospitals=n_h, seed=trial_seed))
    return _measure_ratio(inst, trial_seed, SearchBudget(max_nodes=max_nodes))


def _measure_ratio(inst: HrsInstance, seed: int, budget: SearchBudget) -> RatioRow:
    alg = solve_occupancy(inst)
    s_alg = matching_size(inst, alg)
    result = max_occupancy_stable(inst, budget)
    if not result.complete:
        return RatioRow(seed, inst.n_edges, inst.n_agents, s_alg, result.value, None, EXHAUSTED)
    s_best = result.value if result.value is not None else 0
    ratio = (s_best / s_alg) if s_alg > 0 else 1.0
    return RatioRow(seed, inst.n_edges, inst.n_agents, s_alg, s_best, ratio, COMPLETE)


def run_ratio_experiment(
    params: GenParams,
    trials: int,
    budget: SearchBudget | None = None,
    jobs: int = 1,
) -> RatioReport:
    """Solver size vs. exact best occupancy-stable size over random trials.
    The template's counts act as upper bounds; each trial draws its own shape
    from its derived seed. The first row is the pinned known-gap example
    (seed -1, ratio 7/3)."""
    budget = budget or SearchBudget()
    rows = [_measure_ratio(approx_gap_example(), -1, budget)]
    work = [(params.__dict__, t, budget.max_nodes) for t in range(trials)]
    if jobs > 1:
        with get_context("fork").Pool(jobs) as pool:
            rows.extend(pool.map(_ratio_trial, work))
    else:
        rows.extend(_ratio_trial(w) for w in work)
    complete = [r for r in rows if r.verdict == COMPLETE]
    violations = [
        r for r in complete
        if (r.s_alg == 0 and r.s_best != 0) or (r.s_alg > 0 and 3 * r.s_alg <= r.s_best)
    ]
    ratios = [r.ratio for r in complete if r.ratio is not None]
    report = RatioReport(rows)
    report.aggregates = {
        "trials": len(rows),
        "complete": len(complete),
        "budget_exhausted": len(rows) - len(complete),
        "max_ratio": max(ratios) if ratios else None,
        "mean_ratio": (sum(ratios) / len(ratios)) if ratios else None,
        "violations": len(violations),
    }
    return report


# --- property suites -------------------------------------------------------------


@dataclass
class SuiteReport:
    suite: str
    trials: int
    exhausted: int = 0
    violations: list[dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {
            "suite": self.suite,
            "trials": self.trials,
            "exhausted": self.exhausted,
            "violations": self.violations,
            "passed": self.passed,
        }


SUITES = ("occ-stable-always", "gen-ml-stable", "stable-implies-occ")

_SMALL = GenParams(n_agents=6, n_hospitals=4, size_range=(1, 3), cap_range=(1, 6), density=0.7)


def _trial_instance(template: GenParams, trial: int, gen) -> HrsInstance:
    trial_seed = template.seed ^ trial
    rng = random.Random(trial_seed)
    n_a = rng.randint(1, max(1, template.n_agents))
    n_h = rng.randint(1, max(1, template.n_hospitals))
    return gen(replace(template, n_agents=n_a, n_hospitals=n_h, seed=trial_seed))


def run_property_suite(
    suite: str,
    trials: int,
    budget: SearchBudget | None = None,
    params: GenParams | None = None,
) -> SuiteReport:
    """Run one named invariant family over seeded random trials; violations
    come back with a shrunken instance attached."""
    budget = budget or SearchBudget()
    report = SuiteReport(suite, trials)
    if suite == "occ-stable-always":
        template = params or _SMALL

        def fails(inst: HrsInstance) -> bool:
            return bool(find_occupancy_blocking_pairs(inst, solve_occupancy(inst)))

        for t in range(trials):
            inst = _trial_instance(template, t, gen_random)
            if fails(inst):
                small = shrink_instance(inst, fails)
                report.violations.append({
                    "seed": template.seed ^ t,
                    "message": "solver output admits an occupancy-blocking pair",
                    "instance": serialize_instance(small),
                })
    elif suite == "gen-ml-stable":
        template = params or replace(_SMALL, family=GEN_MASTER_LIST)

        def fails(inst: HrsInstance) -> bool:
            partition = detect_generalized_master_list(inst)
            if partition is None:
                return True
            return bool(find_blocking_pairs(inst, solve(inst, partition).final))

        for t in range(trials):
            inst = _trial_instance(template, t, gen_master_list)
            if fails(inst):
                small = shrink_instance(inst, fails)
                report.violations.append({
                    "seed": template.seed ^ t,
                    "message": "solver output under a detected ordering admits a blocking pair",
                    "instance": serialize_instance(small),
                })
    elif suite == "stable-implies-occ":
        template = params or replace(_SMALL, n_agents=4)

        def fails(inst: HrsInstance) -> bool:
            for matching in enumerate_feasible(inst, budget):
                if is_stable(inst, matching) and not is_occupancy_stable(inst, matching):
                    return True
            return False

        for t in range(trials):
            inst = _trial_instance(template, t, gen_random)
            try:
                if fails(inst):
                    small = shrink_instance(inst, fails)
                    report.violations.append({
                        "seed": template.seed ^ t,
                        "message": "stable matching that is not occupancy-stable",
                        "instance": serialize_instance(small),
                    })
            except BudgetExhausted:
                report.exhausted += 1
    else:
        raise ValueError(f"unknown suite {suite!r}")
    return report
