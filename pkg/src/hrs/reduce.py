"""Marriage instances with ties and the two gadget constructions over them.

The source model is a restricted stable-marriage-with-ties form: equally many
men and women, every woman with a strict list of at most three men, and every
man either with a strict list of exactly three women or with a single tie over
exactly two women. Deciding whether such an instance admits a complete weakly
stable matching is hard, which makes it the seed of two reductions into sized
hospital-residents instances:

* target ``occ``: the reduced instance admits an all-agents-matched
  occupancy-stable matching exactly when the source admits a complete stable
  matching. Every woman becomes a capacity-2 hospital; a tied man becomes a
  six-agent/four-hospital gadget, a strict man a two-agent/one-hospital one.
  All sizes and capacities stay at most 2 and all lists at most 4 entries.

* target ``stable``: the reduced instance admits a (classic) stable matching
  exactly when the source admits a complete stable matching. Every woman
  becomes a capacity-1 hospital; a tied man becomes a twelve-agent gadget with
  two chained sub-gadgets, a strict man a four-agent gadget with one chain.
  Every agent of size 3 lists exactly one hospital.

Both directions of each equivalence are realized as explicit matching maps
(lift: source matching to reduced matching, project: reduced matching back to
the source); the lifts run the corresponding verifier before returning and
fail loudly if the construction is broken.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .model import (
    UNMATCHED,
    FormatError,
    HrsError,
    HrsInstance,
    InstanceError,
    Matching,
    ValidationReport,
)
from . import verify


class ReductionError(HrsError):
    """A lift/project precondition failed or a construction check tripped."""


# --- SMTI model --------------------------------------------------------------


class SmtiInstance:
    """Marriage instance with ties: men rank women in tied groups (singleton
    groups are strict entries), women rank men strictly. Acceptability is
    mutual."""

    __slots__ = (
        "men_labels", "women_labels", "men_prefs", "women_prefs",
        "men_rank", "women_rank", "men_index", "women_index",
    )

    def __init__(
        self,
        men_labels: Sequence[str],
        men_prefs: Sequence[Sequence[Sequence[int]]],
        women_labels: Sequence[str],
        women_prefs: Sequence[Sequence[int]],
    ):
        self.men_labels = tuple(men_labels)
        self.women_labels = tuple(women_labels)
        self.men_prefs = tuple(tuple(tuple(g) for g in p) for p in men_prefs)
        self.women_prefs = tuple(tuple(p) for p in women_prefs)
        self.men_index = {m: i for i, m in enumerate(self.men_labels)}
        self.women_index = {w: i for i, w in enumerate(self.women_labels)}
        if len(self.men_index) != len(self.men_labels):
            raise InstanceError("duplicate man label")
        if len(self.women_index) != len(self.women_labels):
            raise InstanceError("duplicate woman label")
        men_rank = []
        for m, groups in enumerate(self.men_prefs):
            rank: dict[int, int] = {}
            for g, group in enumerate(groups):
                for w in group:
                    if not 0 <= w < len(self.women_labels):
                        raise InstanceError(f"woman index {w} out of range")
                    if w in rank:
                        raise InstanceError(
                            f"man {self.men_labels[m]} lists {self.women_labels[w]} twice"
                        )
                    rank[w] = g
            men_rank.append(rank)
        self.men_rank = tuple(men_rank)
        women_rank = []
        for w, prefs in enumerate(self.women_prefs):
            rank = {}
            for r, m in enumerate(prefs):
                if not 0 <= m < len(self.men_labels):
                    raise InstanceError(f"man index {m} out of range")
                if m in rank:
                    raise InstanceError(
                        f"woman {self.women_labels[w]} lists {self.men_labels[m]} twice"
                    )
                rank[m] = r
            women_rank.append(rank)
        self.women_rank = tuple(women_rank)
        for m in range(self.n_men):
            for w in self.men_rank[m]:
                if m not in self.women_rank[w]:
                    raise InstanceError(
                        f"man {self.men_labels[m]} lists {self.women_labels[w]} "
                        "which does not list him back"
                    )
        for w in range(self.n_women):
            for m in self.women_rank[w]:
                if w not in self.men_rank[m]:
                    raise InstanceError(
                        f"woman {self.women_labels[w]} lists {self.men_labels[m]} "
                        "which does not list her back"
                    )

    @property
    def n_men(self) -> int:
        return len(self.men_labels)

    @property
    def n_women(self) -> int:
        return len(self.women_labels)

    def has_tie(self, m: int) -> bool:
        return any(len(g) > 1 for g in self.men_prefs[m])

    @classmethod
    def build(
        cls,
        men: Iterable[tuple[str, Sequence[Sequence[str]]]],
        women: Iterable[tuple[str, Sequence[str]]],
    ) -> "SmtiInstance":
        """Construct from labels; men's preferences are given as groups of
        woman labels (singleton group = strict entry)."""
        men = list(men)
        women = list(women)
        w_index = {lbl: i for i, (lbl, _) in enumerate(women)}
        m_index = {lbl: i for i, (lbl, _) in enumerate(men)}
        if len(w_index) != len(women):
            raise InstanceError("duplicate woman label")
        if len(m_index) != len(men):
            raise InstanceError("duplicate man label")

        def widx(lbl, who):
            if lbl not in w_index:
                raise InstanceError(f"{who} lists unknown woman {lbl!r}")
            return w_index[lbl]

        def midx(lbl, who):
            if lbl not in m_index:
                raise InstanceError(f"{who} lists unknown man {lbl!r}")
            return m_index[lbl]

        men_prefs = [
            [[widx(x, f"man {lbl}") for x in group] for group in groups]
            for lbl, groups in men
        ]
        women_prefs = [[midx(x, f"woman {lbl}") for x in prefs] for lbl, prefs in women]
        return cls([m[0] for m in men], men_prefs, [w[0] for w in women], women_prefs)

    def _key(self):
        return (self.men_labels, self.men_prefs, self.women_labels, self.women_prefs)

    def __eq__(self, other) -> bool:
        return isinstance(other, SmtiInstance) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __repr__(self) -> str:
        return f"SmtiInstance({self.n_men} men, {self.n_women} women)"


class SmtiMatching:
    """Injective partial map man -> woman over acceptable pairs."""

    __slots__ = ("assign",)

    def __init__(self, assign: Sequence[int]):
        self.assign = tuple(assign)
        matched = [w for w in self.assign if w != UNMATCHED]
        if len(set(matched)) != len(matched):
            raise InstanceError("two men matched to one woman")

    @classmethod
    def empty(cls, smti: SmtiInstance) -> "SmtiMatching":
        return cls((UNMATCHED,) * smti.n_men)

    @classmethod
    def from_pairs(cls, smti: SmtiInstance, pairs: Iterable[tuple[int, int]]) -> "SmtiMatching":
        assign = [UNMATCHED] * smti.n_men
        for m, w in pairs:
            if assign[m] != UNMATCHED:
                raise InstanceError(f"man {smti.men_labels[m]} matched twice")
            assign[m] = w
        return cls(assign)

    def pairs(self) -> list[tuple[int, int]]:
        return [(m, w) for m, w in enumerate(self.assign) if w != UNMATCHED]

    def __eq__(self, other) -> bool:
        return isinstance(other, SmtiMatching) and self.assign == other.assign

    def __hash__(self):
        return hash(self.assign)

    def __repr__(self) -> str:
        return f"SmtiMatching({self.pairs()!r})"


def is_complete(smti: SmtiInstance, matching: SmtiMatching) -> bool:
    if UNMATCHED in matching.assign:
        return False
    return len(matching.pairs()) == smti.n_women


def smti_blocking_pairs(smti: SmtiInstance, matching: SmtiMatching) -> list[tuple[int, int]]:
    """Pairs where both sides strictly prefer each other to their partners
    (being unmatched ranks below anyone acceptable)."""
    woman_of = matching.assign
    man_of = [UNMATCHED] * smti.n_women
    for m, w in enumerate(woman_of):
        if w != UNMATCHED:
            if w not in smti.men_rank[m]:
                raise ValueError("matching uses an unacceptable pair")
            man_of[w] = m
    out = []
    big = 1 << 30
    for m in range(smti.n_men):
        cur = woman_of[m]
        cur_rank = smti.men_rank[m][cur] if cur != UNMATCHED else big
        for w, rank in smti.men_rank[m].items():
            if w == cur or rank >= cur_rank:
                continue
            partner = man_of[w]
            partner_rank = smti.women_rank[w][partner] if partner != UNMATCHED else big
            if smti.women_rank[w][m] < partner_rank:
                out.append((m, w))
    out.sort()
    return out


def is_weakly_stable(smti: SmtiInstance, matching: SmtiMatching) -> bool:
    return not smti_blocking_pairs(smti, matching)


def validate_csmti(smti: SmtiInstance) -> ValidationReport:
    """Report violations of the restricted form: equal sides; women strict with
    at most three entries; men either strict with exactly three entries or a
    single tie over exactly two."""
    report = ValidationReport()
    if smti.n_men != smti.n_women:
        report.add("error", "instance", f"{smti.n_men} men but {smti.n_women} women")
    for m, groups in enumerate(smti.men_prefs):
        loc = f"man {smti.men_labels[m]}"
        if all(len(g) == 1 for g in groups):
            if len(groups) != 3:
                report.add("error", loc, f"strict list has {len(groups)} entries, need exactly 3")
        elif len(groups) == 1 and len(groups[0]) == 2:
            pass  # single tie of two
        else:
            report.add("error", loc, "must be strict of length 3 or a single tie of two")
    for w, prefs in enumerate(smti.women_prefs):
        if len(prefs) > 3:
            report.add(
                "error", f"woman {smti.women_labels[w]}",
                f"list has {len(prefs)} entries, at most 3 allowed",
            )
    return report


# --- SMTI text format --------------------------------------------------------
#
#   m <id> : w1 w2 w3        strict list
#   m <id> : ( w1 w2 )       tie
#   w <id> : m1 m2 m3


def parse_smti(text: str) -> SmtiInstance:
    men: list[tuple[str, list[list[str]]]] = []
    women: list[tuple[str, list[str]]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) < 3 or tokens[0] not in ("m", "w") or tokens[2] != ":":
            raise FormatError("expected 'm <id> : ...' or 'w <id> : ...'", lineno)
        label = tokens[1]
        rest = tokens[3:]
        if tokens[0] == "w":
            if "(" in rest or ")" in rest:
                raise FormatError("women's lists are strict; no ties allowed", lineno)
            women.append((label, rest))
            continue
        groups: list[list[str]] = []
        i = 0
        while i < len(rest):
            tok = rest[i]
            if tok == "(":
                j = i + 1
                group = []
                while j < len(rest) and rest[j] != ")":
                    group.append(rest[j])
                    j += 1
                if j == len(rest):
                    raise FormatError("unclosed '(' in tie", lineno)
                if len(group) < 2:
                    raise FormatError("tie must contain at least two entries", lineno)
                groups.append(group)
                i = j + 1
            elif tok == ")":
                raise FormatError("')' without '('", lineno)
            else:
                groups.append([tok])
                i += 1
        men.append((label, groups))
    try:
        return SmtiInstance.build(men, women)
    except InstanceError as exc:
        raise FormatError(str(exc)) from exc


def serialize_smti(smti: SmtiInstance) -> str:
    lines = []
    for m in range(smti.n_men):
        parts = []
        for group in smti.men_prefs[m]:
            labels = [smti.women_labels[w] for w in group]
            if len(labels) == 1:
                parts.append(labels[0])
            else:
                parts.append("( " + " ".join(labels) + " )")
        lines.append(f"m {smti.men_labels[m]} : {' '.join(parts)}".rstrip())
    for w in range(smti.n_women):
        labels = " ".join(smti.men_labels[m] for m in smti.women_prefs[w])
        lines.append(f"w {smti.women_labels[w]} : {labels}".rstrip())
    return "\n".join(lines) + ("\n" if lines else "")


# --- gadget constructions ----------------------------------------------------


@dataclass(frozen=True, eq=False)
class GadgetIndex:
    """Label book for one reduction: woman -> hospital plus, per man, the
    labels of its gadget agents and hospitals keyed by role. Projection reads
    matched pairs back purely through these labels."""

    target: str
    women: dict[str, str]
    men: dict[str, dict]

    def to_json(self) -> dict:
        return {"target": self.target, "women": dict(self.women), "men": dict(self.men)}

    @classmethod
    def from_json(cls, data: dict) -> "GadgetIndex":
        return cls(data["target"], data["women"], data["men"])


def _require_csmti(smti: SmtiInstance) -> None:
    report = validate_csmti(smti)
    if not report.ok:
        raise ReductionError(f"not a valid restricted instance: {report.summary()}")


def _normalized_tie(smti: SmtiInstance, m: int) -> tuple[int, int]:
    a, b = smti.men_prefs[m][0]
    return (a, b) if a < b else (b, a)


def reduce_occ(smti: SmtiInstance) -> tuple[HrsInstance, GadgetIndex]:
    """Reduction targeting all-agents-matched occupancy-stable matchings.

    Women become capacity-2 hospitals. A tied man over (w_a, w_b) (index order)
    becomes two size-2 agents wired to the two woman-hospitals through a
    four-hospital core that can absorb exactly one of them, plus two unit
    anchors; a strict man becomes one size-2 agent listing his three
    woman-hospitals and a private fallback hospital guarded by a unit anchor.
    """
    _require_csmti(smti)
    women_h = [f"W{i + 1}" for i in range(smti.n_women)]
    agents: list[tuple[str, int, list[str]]] = []
    gadget_hospitals: list[tuple[str, int, list[str]]] = []
    men_info: dict[str, dict] = {}
    for j in range(smti.n_men):
        tag = j + 1
        if smti.has_tie(j):
            wa, wb = _normalized_tie(smti, j)
            a1, a2, a3, a4 = (f"A{tag}_1", f"A{tag}_2", f"A{tag}_3", f"A{tag}_4")
            x1, x2 = f"A{tag}_x1", f"A{tag}_x2"
            h1, h2 = f"H{tag}_1", f"H{tag}_2"
            g1, g2 = f"H{tag}_x1", f"H{tag}_x2"
            agents += [
                (a1, 2, [h1, women_h[wa], g1]),
                (a2, 2, [h2, women_h[wb], g2]),
                (a3, 1, [h1, h2]),
                (a4, 1, [h2, h1]),
                (x1, 1, [g1]),
                (x2, 1, [g2]),
            ]
            gadget_hospitals += [
                (h1, 2, [a4, a1, a3]),
                (h2, 2, [a3, a2, a4]),
                (g1, 2, [x1, a1]),
                (g2, 2, [x2, a2]),
            ]
            men_info[smti.men_labels[j]] = {
                "kind": "tie",
                "agents": {"a1": a1, "a2": a2, "a3": a3, "a4": a4, "x1": x1, "x2": x2},
                "hospitals": {"h1": h1, "h2": h2, "x1": g1, "x2": g2},
            }
        else:
            ws = [g[0] for g in smti.men_prefs[j]]
            a_s, beta = f"A{tag}", f"B{tag}"
            hb = f"H{tag}_b"
            agents += [
                (a_s, 2, [women_h[w] for w in ws] + [hb]),
                (beta, 1, [hb]),
            ]
            gadget_hospitals += [(hb, 2, [beta, a_s])]
            men_info[smti.men_labels[j]] = {
                "kind": "strict",
                "agents": {"a": a_s, "beta": beta},
                "hospitals": {"beta": hb},
            }
    # entry-wise substitution into the woman-hospital lists
    woman_hospitals: list[tuple[str, int, list[str]]] = []
    for i in range(smti.n_women):
        lst = []
        for m in smti.women_prefs[i]:
            if smti.has_tie(m):
                wa, _ = _normalized_tie(smti, m)
                role = "a1" if i == wa else "a2"
                lst.append(men_info[smti.men_labels[m]]["agents"][role])
            else:
                lst.append(men_info[smti.men_labels[m]]["agents"]["a"])
        woman_hospitals.append((women_h[i], 2, lst))
    inst = HrsInstance.build(agents, woman_hospitals + gadget_hospitals)
    index = GadgetIndex(
        "occ",
        {smti.women_labels[i]: women_h[i] for i in range(smti.n_women)},
        men_info,
    )
    report = check_occ_bounds(inst)
    if not report.ok:
        raise ReductionError(f"construction broke its bounds: {report.summary()}")
    return inst, index


def check_occ_bounds(inst: HrsInstance) -> ValidationReport:
    """Structural bounds of the occ target: sizes and capacities at most 2,
    all preference lists at most 4 entries."""
    report = ValidationReport()
    for a in range(inst.n_agents):
        if inst.sizes[a] > 2:
            report.add("error", f"agent {inst.agent_labels[a]}", f"size {inst.sizes[a]} > 2")
        if len(inst.agent_prefs[a]) > 4:
            report.add("error", f"agent {inst.agent_labels[a]}", "list longer than 4")
    for h in range(inst.n_hospitals):
        if inst.caps[h] > 2:
            report.add("error", f"hospital {inst.hospital_labels[h]}", f"capacity {inst.caps[h]} > 2")
        if len(inst.hospital_prefs[h]) > 4:
            report.add("error", f"hospital {inst.hospital_labels[h]}", "list longer than 4")
    return report


def reduce_stable(smti: SmtiInstance) -> tuple[HrsInstance, GadgetIndex]:
    """Reduction targeting classic stable matchings, with every size-3 agent
    listing exactly one hospital.

    Women become capacity-1 hospitals. A tied man becomes a twelve-agent
    gadget: a four-agent core wired to the two woman-hospitals, two blocking
    size-3 agents, and two three-agent chase chains whose first hospital
    prefers a core agent; a strict man gets one unit agent plus one chase
    chain. Each chase chain minus its first hospital is a pattern with no
    stable matching, which is what forces the chain edges.
    """
    _require_csmti(smti)
    women_h = [f"W{i + 1}" for i in range(smti.n_women)]
    agents: list[tuple[str, int, list[str]]] = []
    gadget_hospitals: list[tuple[str, int, list[str]]] = []
    men_info: dict[str, dict] = {}

    def chain(agent_prefix: str, hospital_prefix: str, guard_agent: str) -> tuple[list, list, dict, dict]:
        """Chase chain q1/q2/q3 over p1/p2/p3; p1 prefers guard_agent."""
        q1, q2, q3 = f"{agent_prefix}1", f"{agent_prefix}2", f"{agent_prefix}3"
        p1, p2, p3 = f"{hospital_prefix}1", f"{hospital_prefix}2", f"{hospital_prefix}3"
        ag = [
            (q1, 1, [p1, p2, p3]),
            (q2, 1, [p3, p2]),
            (q3, 3, [p3]),
        ]
        hs = [
            (p1, 1, [guard_agent, q1]),
            (p2, 1, [q2, q1]),
            (p3, 3, [q1, q3, q2]),
        ]
        return ag, hs, {"q1": q1, "q2": q2, "q3": q3}, {"p1": p1, "p2": p2, "p3": p3}

    for j in range(smti.n_men):
        tag = j + 1
        if smti.has_tie(j):
            wa, wb = _normalized_tie(smti, j)
            a1, a2, a3 = f"A{tag}_1", f"A{tag}_2", f"A{tag}_3"
            a4, a5, a6 = f"A{tag}_4", f"A{tag}_5", f"A{tag}_6"
            h1, h2 = f"H{tag}_1", f"H{tag}_2"
            c1_ag, c1_hs, c1_qroles, c1_proles = chain(f"Q{tag}_1_", f"P{tag}_1_", a1)
            c2_ag, c2_hs, c2_qroles, c2_proles = chain(f"Q{tag}_2_", f"P{tag}_2_", a2)
            agents += [
                (a1, 1, [h1, women_h[wa], c1_proles["p1"]]),
                (a2, 1, [h2, women_h[wb], c2_proles["p1"]]),
                (a3, 1, [h2, h1]),
                (a4, 1, [h1, h2]),
                (a5, 3, [h1]),
                (a6, 3, [h2]),
            ] + c1_ag + c2_ag
            gadget_hospitals += [
                (h1, 3, [a3, a5, a1, a4]),
                (h2, 3, [a4, a6, a2, a3]),
            ] + c1_hs + c2_hs
            agent_roles = {"a1": a1, "a2": a2, "a3": a3, "a4": a4, "a5": a5, "a6": a6}
            hospital_roles = {"h1": h1, "h2": h2}
            for k, (qr, pr) in enumerate(((c1_qroles, c1_proles), (c2_qroles, c2_proles)), 1):
                for t in (1, 2, 3):
                    agent_roles[f"q_{k}_{t}"] = qr[f"q{t}"]
                    hospital_roles[f"p_{k}_{t}"] = pr[f"p{t}"]
            men_info[smti.men_labels[j]] = {
                "kind": "tie", "agents": agent_roles, "hospitals": hospital_roles,
            }
        else:
            ws = [g[0] for g in smti.men_prefs[j]]
            a_s = f"A{tag}"
            c_ag, c_hs, c_qroles, c_proles = chain(f"Q{tag}_", f"P{tag}_", a_s)
            agents += [
                (a_s, 1, [women_h[w] for w in ws] + [c_proles["p1"]]),
            ] + c_ag
            gadget_hospitals += c_hs
            agent_roles = {"a": a_s}
            hospital_roles = {}
            for t in (1, 2, 3):
                agent_roles[f"q_{t}"] = c_qroles[f"q{t}"]
                hospital_roles[f"p_{t}"] = c_proles[f"p{t}"]
            men_info[smti.men_labels[j]] = {
                "kind": "strict", "agents": agent_roles, "hospitals": hospital_roles,
            }
    woman_hospitals: list[tuple[str, int, list[str]]] = []
    for i in range(smti.n_women):
        lst = []
        for m in smti.women_prefs[i]:
            if smti.has_tie(m):
                wa, _ = _normalized_tie(smti, m)
                role = "a1" if i == wa else "a2"
                lst.append(men_info[smti.men_labels[m]]["agents"][role])
            else:
                lst.append(men_info[smti.men_labels[m]]["agents"]["a"])
        woman_hospitals.append((women_h[i], 1, lst))
    inst = HrsInstance.build(agents, woman_hospitals + gadget_hospitals)
    index = GadgetIndex(
        "stable",
        {smti.women_labels[i]: women_h[i] for i in range(smti.n_women)},
        men_info,
    )
    report = check_stable_bounds(inst)
    if not report.ok:
        raise ReductionError(f"construction broke its bounds: {report.summary()}")
    return inst, index


def check_stable_bounds(inst: HrsInstance) -> ValidationReport:
    """Structural bound of the stable target: every non-unit agent lists
    exactly one hospital."""
    report = ValidationReport()
    for a in range(inst.n_agents):
        if inst.sizes[a] > 1 and len(inst.agent_prefs[a]) != 1:
            report.add(
                "error", f"agent {inst.agent_labels[a]}",
                f"size {inst.sizes[a]} agent with {len(inst.agent_prefs[a])} hospitals",
            )
    return report


# --- witness maps -------------------------------------------------------------


def _pair(inst: HrsInstance, agent_label: str, hospital_label: str) -> tuple[int, int]:
    return inst.agent_index[agent_label], inst.hospital_index[hospital_label]


def tied_t_sets(
    smti: SmtiInstance, index: GadgetIndex, inst: HrsInstance, m: int
) -> tuple[list[tuple[int, int]], list[tuple[int, int]]]:
    """The two alternative pair sets of a tied man's gadget: the first is used
    when he marries the lower-indexed woman, the second otherwise."""
    info = index.men[smti.men_labels[m]]
    if info["kind"] != "tie":
        raise ReductionError(f"man {smti.men_labels[m]} is not tied")
    wa, wb = _normalized_tie(smti, m)
    ag, hs = info["agents"], info["hospitals"]
    ha = index.women[smti.women_labels[wa]]
    hb = index.women[smti.women_labels[wb]]
    if index.target == "occ":
        t_a = [
            _pair(inst, ag["a1"], ha),
            _pair(inst, ag["a2"], hs["h2"]),
            _pair(inst, ag["a3"], hs["h1"]),
            _pair(inst, ag["a4"], hs["h1"]),
            _pair(inst, ag["x1"], hs["x1"]),
            _pair(inst, ag["x2"], hs["x2"]),
        ]
        t_b = [
            _pair(inst, ag["a1"], hs["h1"]),
            _pair(inst, ag["a2"], hb),
            _pair(inst, ag["a3"], hs["h2"]),
            _pair(inst, ag["a4"], hs["h2"]),
            _pair(inst, ag["x1"], hs["x1"]),
            _pair(inst, ag["x2"], hs["x2"]),
        ]
    else:
        t_a = [
            _pair(inst, ag["a1"], ha),
            _pair(inst, ag["a2"], hs["h2"]),
            _pair(inst, ag["a3"], hs["h2"]),
            _pair(inst, ag["a4"], hs["h2"]),
            _pair(inst, ag["a5"], hs["h1"]),
        ]
        t_b = [
            _pair(inst, ag["a1"], hs["h1"]),
            _pair(inst, ag["a2"], hb),
            _pair(inst, ag["a3"], hs["h1"]),
            _pair(inst, ag["a4"], hs["h1"]),
            _pair(inst, ag["a6"], hs["h2"]),
        ]
    return t_a, t_b


def forced_chain_pairs(
    smti: SmtiInstance, index: GadgetIndex, inst: HrsInstance
) -> list[tuple[int, int]]:
    """All chase-chain pairs the stable target forces into every stable
    matching (one chain per strict man, two per tied man)."""
    if index.target != "stable":
        raise ReductionError("forced chains exist only in the stable target")
    out: list[tuple[int, int]] = []
    for m in range(smti.n_men):
        info = index.men[smti.men_labels[m]]
        ag, hs = info["agents"], info["hospitals"]
        if info["kind"] == "tie":
            for k in (1, 2):
                for t in (1, 2, 3):
                    out.append(_pair(inst, ag[f"q_{k}_{t}"], hs[f"p_{k}_{t}"]))
        else:
            for t in (1, 2, 3):
                out.append(_pair(inst, ag[f"q_{t}"], hs[f"p_{t}"]))
    return out


def _strict_pairs(
    smti: SmtiInstance, index: GadgetIndex, inst: HrsInstance, m: int, w: int
) -> list[tuple[int, int]]:
    info = index.men[smti.men_labels[m]]
    pairs = [_pair(inst, info["agents"]["a"], index.women[smti.women_labels[w]])]
    if index.target == "occ":
        pairs.append(_pair(inst, info["agents"]["beta"], info["hospitals"]["beta"]))
    return pairs


def lift_occ(
    smti: SmtiInstance,
    matching: SmtiMatching,
    index: GadgetIndex,
    inst: HrsInstance | None = None,
) -> Matching:
    """Map a complete weakly stable source matching to an all-agents-matched
    occupancy-stable matching of the occ-target instance. Verifier-checked."""
    if index.target != "occ":
        raise ReductionError("index is not from the occ reduction")
    if not is_complete(smti, matching):
        raise ReductionError("source matching is not complete")
    if inst is None:
        inst, _ = reduce_occ(smti)
    pairs: list[tuple[int, int]] = []
    for m, w in enumerate(matching.assign):
        if smti.has_tie(m):
            wa, wb = _normalized_tie(smti, m)
            t_a, t_b = tied_t_sets(smti, index, inst, m)
            if w == wa:
                pairs += t_a
            elif w == wb:
                pairs += t_b
            else:
                raise ReductionError("tied man matched outside his tie")
        else:
            pairs += _strict_pairs(smti, index, inst, m, w)
    lifted = Matching.from_pairs(inst, pairs)
    if not verify.is_a_perfect(inst, lifted):
        raise ReductionError("lifted matching leaves an agent unmatched")
    if not verify.is_occupancy_stable(inst, lifted):
        raise ReductionError("lifted matching is not occupancy-stable")
    return lifted


def project_occ(
    smti: SmtiInstance,
    matching: Matching,
    index: GadgetIndex,
    inst: HrsInstance | None = None,
) -> SmtiMatching:
    """Read a complete weakly stable source matching off an all-agents-matched
    occupancy-stable matching of the occ-target instance."""
    if index.target != "occ":
        raise ReductionError("index is not from the occ reduction")
    if inst is None:
        inst, _ = reduce_occ(smti)
    if not verify.is_a_perfect(inst, matching):
        raise ReductionError("reduced matching is not all-agents-matched")
    if not verify.is_occupancy_stable(inst, matching):
        raise ReductionError("reduced matching is not occupancy-stable")
    matched = dict(matching.pairs())
    women_by_h = {v: k for k, v in index.women.items()}
    out: list[tuple[int, int]] = []
    for m in range(smti.n_men):
        info = index.men[smti.men_labels[m]]
        if info["kind"] == "tie":
            wa, wb = _normalized_tie(smti, m)
            a1, _ = _pair(inst, info["agents"]["a1"], info["hospitals"]["h1"])
            a2, _ = _pair(inst, info["agents"]["a2"], info["hospitals"]["h2"])
            ha = inst.hospital_index[index.women[smti.women_labels[wa]]]
            hb = inst.hospital_index[index.women[smti.women_labels[wb]]]
            if matched.get(a1) == ha:
                out.append((m, wa))
            elif matched.get(a2) == hb:
                out.append((m, wb))
            else:
                raise ReductionError(
                    f"gadget of {smti.men_labels[m]} selects no woman-hospital"
                )
        else:
            a_s = inst.agent_index[info["agents"]["a"]]
            h = matched.get(a_s)
            label = inst.hospital_labels[h] if h is not None else None
            if label not in women_by_h:
                raise ReductionError(
                    f"agent of {smti.men_labels[m]} not at a woman-hospital"
                )
            out.append((m, smti.women_index[women_by_h[label]]))
    projected = SmtiMatching.from_pairs(smti, out)
    if not is_complete(smti, projected):
        raise ReductionError("projected matching is not complete")
    if not is_weakly_stable(smti, projected):
        raise ReductionError("projected matching is not weakly stable")
    return projected


def lift_stable(
    smti: SmtiInstance,
    matching: SmtiMatching,
    index: GadgetIndex,
    inst: HrsInstance | None = None,
) -> Matching:
    """Map a complete weakly stable source matching to a stable matching of
    the stable-target instance. Verifier-checked."""
    if index.target != "stable":
        raise ReductionError("index is not from the stable reduction")
    if not is_complete(smti, matching):
        raise ReductionError("source matching is not complete")
    if inst is None:
        inst, _ = reduce_stable(smti)
    pairs = forced_chain_pairs(smti, index, inst)
    for m, w in enumerate(matching.assign):
        if smti.has_tie(m):
            wa, wb = _normalized_tie(smti, m)
            t_a, t_b = tied_t_sets(smti, index, inst, m)
            if w == wa:
                pairs += t_a
            elif w == wb:
                pairs += t_b
            else:
                raise ReductionError("tied man matched outside his tie")
        else:
            pairs += _strict_pairs(smti, index, inst, m, w)
    lifted = Matching.from_pairs(inst, pairs)
    if not verify.is_stable(inst, lifted):
        raise ReductionError("lifted matching is not stable")
    return lifted


def project_stable(
    smti: SmtiInstance,
    matching: Matching,
    index: GadgetIndex,
    inst: HrsInstance | None = None,
) -> SmtiMatching:
    """Read a complete weakly stable source matching off a stable matching of
    the stable-target instance."""
    if index.target != "stable":
        raise ReductionError("index is not from the stable reduction")
    if inst is None:
        inst, _ = reduce_stable(smti)
    if not verify.is_stable(inst, matching):
        raise ReductionError("reduced matching is not stable")
    pair_set = set(matching.pairs())
    matched = dict(matching.pairs())
    women_by_h = {v: k for k, v in index.women.items()}
    out: list[tuple[int, int]] = []
    for m in range(smti.n_men):
        info = index.men[smti.men_labels[m]]
        if info["kind"] == "tie":
            wa, wb = _normalized_tie(smti, m)
            t_a, t_b = tied_t_sets(smti, index, inst, m)
            if set(t_a) <= pair_set:
                out.append((m, wa))
            elif set(t_b) <= pair_set:
                out.append((m, wb))
            else:
                raise ReductionError(
                    f"gadget of {smti.men_labels[m]} matches neither alternative"
                )
        else:
            a_s = inst.agent_index[info["agents"]["a"]]
            h = matched.get(a_s)
            label = inst.hospital_labels[h] if h is not None else None
            if label not in women_by_h:
                raise ReductionError(
                    f"agent of {smti.men_labels[m]} not at a woman-hospital"
                )
            out.append((m, smti.women_index[women_by_h[label]]))
    projected = SmtiMatching.from_pairs(smti, out)
    if not is_complete(smti, projected):
        raise ReductionError("projected matching is not complete")
    if not is_weakly_stable(smti, projected):
        raise ReductionError("projected matching is not weakly stable")
    return projected
