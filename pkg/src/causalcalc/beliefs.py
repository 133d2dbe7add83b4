"""Intervention-belief families, expected utility, and the causal relation.

A belief family assigns to every policy a probability table over the
variables the policy leaves alone.  The causality notions here are defined
through those tables:

* variable j *causes* variable i when, holding everything else fixed by
  intervention, moving j's intervened value shifts the distribution of i;
* the causal graph collects those ordered pairs as edges and must be
  acyclic, otherwise the family is rejected loudly.

Act-quantified comparisons ("for all acts f, g ...") are implemented as
equalities of conditional belief tables.  Under monotone expected utility
with full support the two are equivalent, and table equality avoids
quantifying over real-valued acts.  This transcription is the module's
central design decision.
"""

from __future__ import annotations

import enum
from typing import Callable, Iterable, Iterator, Mapping

from .dist import JointTable
from .errors import CycleError
from .graph import Dag, find_cycle
from .space import Act, Assignment, Policy, VariableSpace, iter_policies, policy_count

BELIEF_TOL = 1e-9
PREFERENCE_TOL = 1e-12


class Utility:
    """A strictly increasing Bernoulli index over money.

    One global utility is shared by every policy, so interventions can
    never act through taste changes.  Monotonicity is verified pairwise on
    the payoff values actually evaluated.
    """

    def __init__(self, fn: Callable[[float], float] | None = None, name: str = "identity"):
        self._fn = fn if fn is not None else (lambda x: x)
        self.name = name

    def __call__(self, value: float) -> float:
        return float(self._fn(value))

    def check_monotone(self, values: Iterable[float]) -> None:
        pts = sorted(set(float(v) for v in values))
        for lo, hi in zip(pts, pts[1:]):
            if not self(lo) < self(hi):
                raise ValueError(
                    "utility %r is not strictly increasing between %g and %g"
                    % (self.name, lo, hi)
                )


class Preference(enum.Enum):
    FIRST = "first-strict"
    SECOND = "second-strict"
    INDIFFERENT = "indifferent"


class BeliefFamily:
    """A total map from policies to intervention beliefs.

    One table exists for every one of the prod(card+1) policies; each
    table's domain is exactly the policy's unintervened variables.  The
    all-intervened policy carries the trivial empty-domain table.

    Families may be given eagerly (explicit tables, e.g. hand-built
    counterexamples) or through a supplier function evaluated on demand
    and memoized (e.g. generated from a structural model).  Full support
    is *not* enforced here: the assumption checkers must be able to
    receive violating families and report the offending cells.
    """

    def __init__(self, space: VariableSpace, supplier: Callable[[Policy], JointTable], tables: dict | None = None):
        self.space = space
        self._supplier = supplier
        self._tables = dict(tables or {})

    @classmethod
    def from_tables(cls, space: VariableSpace, tables: Mapping[Assignment, JointTable]) -> "BeliefFamily":
        normalized = {}
        for key, table in tables.items():
            policy = key if isinstance(key, Policy) else Policy(space, key.items)
            normalized[policy] = table
        missing = [p for p in iter_policies(space) if p not in normalized]
        if missing:
            raise ValueError(
                "belief family is missing %d of %d policies, e.g. %r"
                % (len(missing), policy_count(space), missing[0])
            )

        def fail(policy):
            raise KeyError(policy)

        fam = cls(space, fail, normalized)
        for policy in normalized:
            fam.table(policy)  # domain validation
        return fam

    @classmethod
    def from_supplier(cls, space: VariableSpace, supplier: Callable[[Policy], JointTable]) -> "BeliefFamily":
        return cls(space, supplier)

    def table(self, policy: Assignment) -> JointTable:
        if not isinstance(policy, Policy):
            policy = Policy(self.space, policy.items)
        got = self._tables.get(policy)
        if got is None:
            got = self._supplier(policy)
            self._tables[policy] = got
        expected = policy.unintervened()
        if got.domain != expected:
            raise ValueError(
                "belief table for %r has domain %r, expected %r"
                % (policy, got.domain, expected)
            )
        return got

    def observational(self) -> JointTable:
        return self.table(Policy(self.space))

    def policies(self) -> Iterator[Policy]:
        return iter_policies(self.space)

    def with_table(self, policy: Policy, table: JointTable) -> "BeliefFamily":
        """A copy of the family with one policy's table replaced."""
        override = dict(self._tables)
        override[policy] = table
        replaced = BeliefFamily(self.space, self._supplier, override)
        replaced.table(policy)
        return replaced

    def allclose(self, other: "BeliefFamily", tol: float = BELIEF_TOL) -> bool:
        if self.space != other.space:
            return False
        return all(
            self.table(p).allclose(other.table(p), tol) for p in self.policies()
        )


def expected_utility(fam: BeliefFamily, policy: Policy, act: Act, utility: Utility | None = None) -> float:
    """Expected utility of an act under the policy's intervention belief.

    The act may live on a subset of the unintervened variables; it is
    extended cylindrically over the rest.  Mentioning an intervened
    variable is an error, not a silent marginalization.
    """
    utility = utility or Utility()
    if not isinstance(policy, Policy):
        policy = Policy(fam.space, policy.items)
    free = fam.space.canonical(policy.unintervened())
    bad = [n for n in act.domain if n not in free]
    if bad:
        raise ValueError("act depends on intervened variable(s) %r" % (bad,))
    utility.check_monotone(act.payoffs.values())
    table = fam.table(policy)
    margin = table.marginal(act.domain)
    total = 0.0
    for values in fam.space.value_tuples(act.domain):
        total += utility(act.payoff(values)) * float(margin.probs[values])
    return total


def prefers(fam: BeliefFamily, policy: Policy, first: Act, second: Act, utility: Utility | None = None) -> Preference:
    a = expected_utility(fam, policy, first, utility)
    b = expected_utility(fam, policy, second, utility)
    if a > b + PREFERENCE_TOL:
        return Preference.FIRST
    if b > a + PREFERENCE_TOL:
        return Preference.SECOND
    return Preference.INDIFFERENT


def k_independent(fam: BeliefFamily, i: str, j: str, screen: Iterable[str], tol: float = BELIEF_TOL) -> bool:
    """Is variable i insensitive to interventions on j, once the variables
    in ``screen`` are pinned by intervention?

    Holds when, for every pinned context and every intervened value of j,
    the marginal of i under the (j + screen) policy equals the marginal
    of i under the screen-only policy.
    """
    sp = fam.space
    screen = sp.canonical(screen)
    if i == j or i in screen or j in screen:
        raise ValueError("i, j, and the screening set must be disjoint")
    for v in (i, j):
        sp.position(v)
    for ctx in sp.value_tuples(screen):
        base_policy = Policy(sp, zip(screen, ctx))
        base = fam.table(base_policy).marginal((i,))
        for xj in range(sp.card(j)):
            moved_policy = Policy(sp, tuple(zip(screen, ctx)) + ((j, xj),))
            moved = fam.table(moved_policy).marginal((i,))
            if not moved.allclose(base, tol):
                return False
    return True


def causes(fam: BeliefFamily, j: str, i: str, tol: float = BELIEF_TOL) -> bool:
    """Does j cause i: is i sensitive to ceteris-paribus moves of j?"""
    if i == j:
        raise ValueError("a variable cannot cause itself")
    rest = tuple(n for n in fam.space.names if n not in (i, j))
    return not k_independent(fam, i, j, rest, tol)


def causal_set(fam: BeliefFamily, i: str, tol: float = BELIEF_TOL) -> frozenset:
    return frozenset(j for j in fam.space.names if j != i and causes(fam, j, i, tol))


def causal_graph(fam: BeliefFamily, tol: float = BELIEF_TOL) -> Dag:
    """The directed graph with an edge j -> i whenever j causes i.

    Raises :class:`CycleError` with a witness cycle when the relation is
    cyclic; a cyclic causal relation means the variables are not logically
    independent and no DAG treatment is possible.
    """
    names = fam.space.names
    edges = [
        (j, i)
        for i in names
        for j in names
        if i != j and causes(fam, j, i, tol)
    ]
    cycle = find_cycle(names, edges)
    if cycle is not None:
        raise CycleError(
            "causal relation is cyclic (%s): every variable set must contain "
            "one member caused by none of the others" % " -> ".join(cycle),
            cycle,
        )
    return Dag(names, edges)


def indirect_causes(fam: BeliefFamily, i: str, tol: float = BELIEF_TOL) -> frozenset:
    """All ancestors of i in the causal graph (chains of direct causes)."""
    return causal_graph(fam, tol).ancestors(i)


def complete_state_space_check(fam: BeliefFamily, tol: float = BELIEF_TOL) -> list:
    """Check that observing and intervening coincide in two-variable worlds.

    For every causal pair j -> i and every context fixing all other
    variables, conditioning the (i, j) table on x_j must agree with
    intervening j at x_j.  Returns violation tuples
    ``(i, j, context, x_i, lhs, rhs)``; empty means the family treats its
    state space as complete (no hidden mediators).
    """
    sp = fam.space
    violations = []
    for i in sp.names:
        for j in sp.names:
            if i == j or not causes(fam, j, i, tol):
                continue
            rest = tuple(n for n in sp.names if n not in (i, j))
            for ctx in sp.value_tuples(rest):
                pair_policy = Policy(sp, zip(rest, ctx))
                pair_table = fam.table(pair_policy)
                for xj in range(sp.card(j)):
                    given = Assignment(sp, [(j, xj)])
                    if pair_table.prob(given) <= 0.0:
                        continue  # vacuous under a null conditioning event
                    lhs = pair_table.conditional((i,), given)
                    single_policy = Policy(sp, tuple(zip(rest, ctx)) + ((j, xj),))
                    rhs = fam.table(single_policy).marginal((i,))
                    for xi in range(sp.card(i)):
                        lv = float(lhs.probs[xi])
                        rv = float(rhs.probs[xi])
                        if abs(lv - rv) > tol:
                            context = Assignment(sp, tuple(zip(rest, ctx)) + ((j, xj),))
                            violations.append((i, j, context, xi, lv, rv))
    return violations
