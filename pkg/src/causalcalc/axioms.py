"""Decidable checkers for the preference axioms over a belief family.

All act-quantified statements are checked as equalities (or forced
inequalities) of conditional belief tables; see the module note in
:mod:`causalcalc.beliefs`.

The subset sweeps are exponential in the number of variables.  They are
meant for desk-scale verification and refuse to run above ``max_vars``
variables unless explicitly overridden.  Subset enumeration order is fixed
(by size, then variable positions) so violation witnesses are reproducible.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable

from .beliefs import BELIEF_TOL, BeliefFamily, causal_graph, complete_state_space_check
from .dist import cond_dependence_gap
from .errors import CycleError
from .graph import Dag
from .space import Assignment, Policy

# a dependence claim needs a strict margin: deviations at or below rounding
# scale must not count as "dependent"
DEPENDENCE_FLOOR = 1e-6


@dataclass
class AxiomReport:
    axiom_id: str
    violations: list = field(default_factory=list)
    notes: tuple = ()

    @property
    def passed(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        head = "%s: %s" % (self.axiom_id, "pass" if self.passed else "FAIL")
        if self.violations:
            head += " (%d violation(s); first: %r)" % (len(self.violations), self.violations[0])
        return head


def _guard(fam: BeliefFamily, max_vars: int) -> None:
    n = len(fam.space.names)
    if n > max_vars:
        raise ValueError(
            "axiom sweep over %d variables is exponential; pass max_vars=%d to override"
            % (n, n)
        )


def _subsets(names: Iterable[str], space) -> list:
    names = tuple(names)
    out = []
    for r in range(len(names) + 1):
        out.extend(itertools.combinations(names, r))
    return [space.canonical(s) for s in out]


def intervention_ci_gap(fam: BeliefFamily, i: str, j_set, k_set, h_set) -> float:
    """Worst deviation from "i independent of j_set given k_set, after
    intervening h_set" across all intervention contexts."""
    sp = fam.space
    j_set, k_set, h_set = sp.canonical(j_set), sp.canonical(k_set), sp.canonical(h_set)
    groups = ({i}, set(j_set), set(k_set), set(h_set))
    for a, b in itertools.combinations(groups, 2):
        if a & b:
            raise ValueError("conditional-independence sets overlap: %r" % (sorted(a & b),))
    if not j_set:
        return 0.0
    worst = 0.0
    for ctx in sp.value_tuples(h_set):
        table = fam.table(Policy(sp, zip(h_set, ctx)))
        worst = max(worst, cond_dependence_gap(table, (i,), j_set, k_set))
    return worst


def check_intervention_ci(fam: BeliefFamily, i: str, j_set, k_set, h_set, tol: float = BELIEF_TOL) -> bool:
    """Is i independent of ``j_set`` given ``k_set`` under every
    intervention context over ``h_set``?"""
    return intervention_ci_gap(fam, i, j_set, k_set, h_set) <= tol


def check_axiom2(fam: BeliefFamily, tol: float = BELIEF_TOL) -> AxiomReport:
    """Logical independence: every variable subset must contain a member
    caused by none of the others.

    Checked as acyclicity of the causes digraph, which gives the same
    verdict as the subset statement: a cycle is a subset with no
    uncaused member, and any subset without one contains a cycle by
    finite descent along causes.  The witness is a shortest cycle.
    """
    report = AxiomReport(
        "axiom2",
        notes=("checked as acyclicity of the causes digraph; "
               "equivalent to the every-subset-has-a-source form",),
    )
    try:
        causal_graph(fam, tol)
    except CycleError as err:
        report.violations.append(("cycle", _shortest_cycle(fam, tol) or err.cycle))
    return report


def _shortest_cycle(fam: BeliefFamily, tol: float) -> tuple | None:
    from .beliefs import causes

    names = fam.space.names
    children = {
        j: [i for i in names if i != j and causes(fam, j, i, tol)] for j in names
    }
    best = None
    for start in names:
        # BFS back to start
        frontier = [(start, (start,))]
        seen = set()
        while frontier:
            node, path = frontier.pop(0)
            for nxt in children[node]:
                if nxt == start:
                    candidate = path + (start,)
                    if best is None or len(candidate) < len(best):
                        best = candidate
                elif nxt not in seen and len(path) < len(names):
                    seen.add(nxt)
                    frontier.append((nxt, path + (nxt,)))
    return best


def check_axiom3(fam: BeliefFamily, g: Dag, max_vars: int = 6) -> AxiomReport:
    """Causes are proximal: no slicing of a variable's causes into an
    intervened part and an observed part makes the remaining causes
    uninformative.

    This is an existence-of-dependence claim, so "dependent" requires a
    strict margin above rounding noise.
    """
    _guard(fam, max_vars)
    sp = fam.space
    report = AxiomReport("axiom3")
    for i in sp.names:
        ca = sp.canonical(g.parents(i))
        others = tuple(n for n in sp.names if n != i)
        for j_obs in _subsets(ca, sp):
            h_pool = tuple(n for n in others if n not in j_obs)
            for h_int in _subsets(h_pool, sp):
                remaining = tuple(n for n in ca if n not in j_obs and n not in h_int)
                if not remaining:
                    continue
                gap = intervention_ci_gap(fam, i, remaining, j_obs, h_int)
                if gap <= DEPENDENCE_FLOOR:
                    report.violations.append((i, j_obs, h_int, remaining, gap))
    return report


def check_axiom4(fam: BeliefFamily, g: Dag, tol: float = BELIEF_TOL, max_vars: int = 6) -> AxiomReport:
    """Mutually uncaused variables are independent given their causes:
    for every non-adjacent pair and every split of the other variables
    into an intervened part and extra conditions, the pair is
    conditionally independent given both causal sets plus the extras.

    The extra conditioning set ranges over common nondescendants of the
    pair.  Conditioning on a shared effect (or one of its descendants)
    links two otherwise unrelated causes and cannot be demanded
    independent of them; the nondescendant restriction is also all the
    representation argument ever uses, since it composes cause sets of
    ancestors only.
    """
    _guard(fam, max_vars)
    sp = fam.space
    report = AxiomReport("axiom4")
    for i, j in itertools.combinations(sp.names, 2):
        if (i, j) in g.edges or (j, i) in g.edges:
            continue
        causes_union = set(g.parents(i)) | set(g.parents(j))
        pool = tuple(n for n in sp.names if n not in (i, j))
        extra_pool = tuple(
            n for n in pool if n in g.nondescendants(i) and n in g.nondescendants(j)
        )
        for k_int in _subsets(pool, sp):
            rest = tuple(n for n in extra_pool if n not in k_int)
            for j_extra in _subsets(rest, sp):
                cond = sp.canonical((causes_union | set(j_extra)) - set(k_int))
                gap = intervention_ci_gap(fam, i, (j,), cond, k_int)
                if gap > tol:
                    report.violations.append((i, j, j_extra, k_int, gap))
    return report


def check_axiom6(fam: BeliefFamily, g: Dag, tol: float = BELIEF_TOL, max_vars: int = 6) -> AxiomReport:
    """Intervening and conditioning agree given a variable's causes: the
    observational row of i given all its causes must equal the
    intervention-belief row of i given the non-intervened causes, for
    every intervened subset and every value combination."""
    _guard(fam, max_vars)
    sp = fam.space
    report = AxiomReport("axiom6")
    obs = fam.observational()
    for i in sp.names:
        ca = sp.canonical(g.parents(i))
        pool = tuple(n for n in sp.names if n != i)
        for j_int in _subsets(pool, sp):
            if not j_int:
                continue  # both sides are literally the same table
            free_causes = tuple(n for n in ca if n not in j_int)
            for ctx_j in sp.value_tuples(j_int):
                policy = Policy(sp, zip(j_int, ctx_j))
                table_j = fam.table(policy)
                for ctx_free in sp.value_tuples(free_causes):
                    given_free = Assignment(sp, zip(free_causes, ctx_free))
                    if len(given_free) and table_j.prob(given_free) <= 0.0:
                        continue
                    rhs = table_j.conditional((i,), given_free)
                    full_causes = Assignment(
                        sp,
                        tuple(zip(free_causes, ctx_free))
                        + tuple((n, v) for n, v in zip(j_int, ctx_j) if n in ca),
                    )
                    if len(full_causes) and obs.prob(full_causes) <= 0.0:
                        continue
                    lhs = obs.conditional((i,), full_causes)
                    if not lhs.allclose(rhs, tol):
                        report.violations.append(
                            (i, policy, given_free, float(abs(lhs.probs - rhs.probs).max()))
                        )
    return report


def check_assumption1(fam: BeliefFamily, tol: float = BELIEF_TOL) -> AxiomReport:
    """The testable parts of the basic probabilistic-sophistication
    assumption: full support on every policy table (no null states) and
    the completeness of the state space (observing equals intervening in
    fully pinned two-variable worlds).

    Monotone expected utility and policy-invariant tastes hold by
    construction here (beliefs are tables, utility is global) and are
    reported as such.
    """
    import numpy as np

    report = AxiomReport(
        "assumption1",
        notes=(
            "item i (monotone SEU) holds by construction: beliefs are tables",
            "item iv (policy-invariant utility) holds by construction: one global utility",
        ),
    )
    for policy in fam.policies():
        table = fam.table(policy)
        if not table.full_support:
            cell = np.argwhere(table.probs <= 0.0)[0]
            report.violations.append(("null-state", policy, tuple(int(v) for v in cell)))
    for item in complete_state_space_check(fam, tol):
        report.violations.append(("incomplete-state-space",) + item)
    return report
