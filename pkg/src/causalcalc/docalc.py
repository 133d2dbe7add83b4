"""Structural models, do-probabilities, causal-calculus rules, identification.

A :class:`MarkovModel` is the constructive counterpart of a belief family:
every variable is a deterministic function of its graph parents plus an
independent uniform noise, encoded through half-open intervals whose
lengths reproduce the conditional table rows.  Intervention beliefs derived
from such a model are exactly its do-probabilities, which makes the model
the synthetic decision-maker used throughout the test harness.

Do-probabilities are computed by truncated factorization (the closed form
available for finite acyclic systems); the literal delete-substitute-solve
procedure is kept as an independent second path and the two are asserted
equal by the tests.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import expr
from .beliefs import BeliefFamily
from .dist import JointTable, grouped
from .errors import CycleError, EngineError, ZeroProbabilityError
from .graph import Dag
from .space import Assignment, VariableSpace

DEFAULT_DEPTH_LIMIT = 12


class MarkovModel:
    """Per-variable conditional tables tied to a DAG, plus the interval
    coding of the per-variable noise functions.

    ``cpts[v]`` has one axis per parent of v (canonical order) and a last
    axis over v's values; each row along the last axis is a distribution.
    ``noise_bounds[v]`` holds the cumulative right endpoints of the
    half-open noise intervals, with the final endpoint pinned to exactly
    1.0 so the intervals partition [0, 1).
    """

    __slots__ = ("space", "graph", "cpts", "noise_bounds")

    def __init__(self, space: VariableSpace, graph: Dag, cpts: Mapping[str, np.ndarray]):
        if set(graph.nodes) != set(space.names):
            raise ValueError("graph nodes %r do not match space %r" % (graph.nodes, space.names))
        tables = {}
        bounds = {}
        for name in space.names:
            parents = space.canonical(graph.parents(name))
            shape = tuple(space.card(p) for p in parents) + (space.card(name),)
            try:
                arr = np.asarray(cpts[name], dtype=float).reshape(shape)
            except KeyError:
                raise ValueError("missing conditional table for %r" % (name,)) from None
            if np.any(arr < 0):
                raise ValueError("negative entry in conditional table for %r" % (name,))
            sums = arr.sum(axis=-1)
            if np.any(np.abs(sums - 1.0) > 1e-12):
                raise ValueError("rows of conditional table for %r do not sum to 1" % (name,))
            arr = arr.copy()
            arr.flags.writeable = False
            tables[name] = arr
            cum = np.cumsum(arr, axis=-1)
            cum[..., -1] = 1.0
            cum.flags.writeable = False
            bounds[name] = cum
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "graph", graph)
        object.__setattr__(self, "cpts", tables)
        object.__setattr__(self, "noise_bounds", bounds)

    def __setattr__(self, name, value):
        raise AttributeError("MarkovModel is immutable")

    def parent_order(self, name: str) -> tuple:
        return self.space.canonical(self.graph.parents(name))

    @property
    def strictly_positive(self) -> bool:
        return all(np.all(t > 0.0) for t in self.cpts.values())

    def row(self, name: str, context: Assignment) -> np.ndarray:
        parents = self.parent_order(name)
        if set(context.variables) != set(parents):
            raise ValueError(
                "context %r must bind exactly the parents %r of %r" % (context, parents, name)
            )
        key = tuple(context[p] for p in parents)
        return self.cpts[name][key]


def h_eval(model: MarkovModel, name: str, parents: Assignment, eps: float) -> int:
    """The value whose noise interval contains ``eps``.

    Intervals are half-open on the right, so an eps sitting exactly on a
    boundary belongs to the next value.
    """
    if not 0.0 <= eps < 1.0:
        raise ValueError("noise draw %r outside [0, 1)" % (eps,))
    order = model.parent_order(name)
    if set(parents.variables) != set(order):
        raise ValueError("parent assignment %r must bind exactly %r" % (parents, order))
    key = tuple(parents[p] for p in order)
    bounds = model.noise_bounds[name][key]
    return int(np.searchsorted(bounds, eps, side="right"))


def joint_from_markov(model: MarkovModel) -> JointTable:
    """The unique joint law of the system: the product of the rows."""
    return post_intervention_table(model, Assignment(model.space))


def post_intervention_table(model: MarkovModel, do: Assignment) -> JointTable:
    """Joint distribution of the non-intervened variables after pinning
    ``do``: intervened variables lose their own equations and enter the
    survivors' rows as constants (truncated factorization)."""
    sp = model.space
    fixed = dict(do.items)
    free = tuple(n for n in sp.names if n not in fixed)
    shape = tuple(sp.card(n) for n in free)
    arr = np.empty(shape if shape else (1,))
    lookups = []
    for name in free:
        parents = model.parent_order(name)
        lookups.append((name, parents, model.cpts[name]))
    for values in sp.value_tuples(free):
        at = dict(zip(free, values))
        at.update(fixed)
        p = 1.0
        for name, parents, cpt in lookups:
            key = tuple(at[q] for q in parents) + (at[name],)
            p *= float(cpt[key])
            if p == 0.0:
                break
        arr[values if shape else 0] = p
    if not shape:
        arr = arr.reshape(())
    return JointTable(sp, free, arr)


@dataclass(frozen=True)
class QueryExpr:
    """A do-probability query: target, observations, and the do-set."""

    target: Assignment
    observed: Assignment
    intervened: Assignment

    def __post_init__(self):
        groups = (self.target.variables, self.observed.variables, self.intervened.variables)
        for a, b in itertools.combinations(groups, 2):
            overlap = set(a) & set(b)
            if overlap:
                raise ValueError("query mentions %r in two roles" % (sorted(overlap),))
        if not self.target.variables:
            raise ValueError("query needs at least one target binding")


def do_probability(model: MarkovModel, query: QueryExpr) -> float:
    """P(target | observed, do(intervened)) by truncated factorization."""
    table = post_intervention_table(model, query.intervened)
    if len(query.observed):
        denom = table.prob(query.observed)
        if denom <= 0.0:
            raise ZeroProbabilityError(
                "observed event %r has zero probability after intervention" % (query.observed,)
            )
        return table.prob(query.target.merge(query.observed)) / denom
    return table.prob(query.target)


def do_probability_by_system(model: MarkovModel, query: QueryExpr) -> float:
    """The same do-probability via the literal equation-system procedure:
    delete the intervened variables' equations, substitute their values
    into surviving rows, then measure the noise sets generating the event.

    Kept as an independent cross-check of :func:`do_probability`.
    """
    sp = model.space
    fixed = dict(query.intervened.items)
    free = tuple(n for n in sp.names if n not in fixed)
    reduced_space = VariableSpace(free, tuple(sp.card(n) for n in free))
    reduced_graph = model.graph.truncate_remove(fixed)
    reduced_cpts = {}
    for name in free:
        parents = model.parent_order(name)
        cpt = model.cpts[name]
        index = []
        for p in parents:
            index.append(fixed[p] if p in fixed else slice(None))
        reduced_cpts[name] = cpt[tuple(index)]
    reduced = MarkovModel(reduced_space, reduced_graph, reduced_cpts)

    def event_mass(event: dict) -> float:
        total = 0.0
        for values in reduced_space.value_tuples(free):
            at = dict(zip(free, values))
            if any(at[k] != v for k, v in event.items()):
                continue
            p = 1.0
            for name in free:
                order = reduced.parent_order(name)
                bounds = reduced.noise_bounds[name][tuple(at[q] for q in order)]
                lo = float(bounds[at[name] - 1]) if at[name] > 0 else 0.0
                hi = float(bounds[at[name]])
                p *= hi - lo
            total += p
        return total

    want = dict(query.target.items)
    if len(query.observed):
        obs = dict(query.observed.items)
        denom = event_mass(obs)
        if denom <= 0.0:
            raise ZeroProbabilityError(
                "observed event %r has zero probability after intervention" % (query.observed,)
            )
        both = dict(want)
        both.update(obs)
        return event_mass(both) / denom
    return event_mass(want)


def family_from_markov(model: MarkovModel, require_full_support: bool = True) -> BeliefFamily:
    """The belief family whose policy tables are the model's
    do-probability distributions; the synthetic decision maker."""
    if require_full_support and not model.strictly_positive:
        raise EngineError(
            "conditional tables contain zero cells; the induced family "
            "would have null states"
        )
    return BeliefFamily.from_supplier(
        model.space, lambda policy: post_intervention_table(model, policy)
    )


def random_markov_model(
    graph: Dag,
    space: VariableSpace | None = None,
    seed: int | np.random.Generator = 0,
    min_prob: float = 0.08,
    min_effect: float = 0.04,
    max_tries: int = 500,
) -> MarkovModel:
    """A random strictly-positive parameterization of ``graph``.

    Every parent is kept "live": for each variable, each parent must shift
    the conditional row by at least ``min_effect`` (sup norm) in every
    context of the remaining parents; near-degenerate draws are resampled.
    Liveness keeps the discovered causal graph equal to ``graph`` and
    keeps dependence margins far from the independence tolerances.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if space is None:
        space = VariableSpace(graph.nodes, (2,) * len(graph.nodes))

    def sample_rows(shape):
        flat = rng.dirichlet(np.ones(shape[-1]), size=int(np.prod(shape[:-1], dtype=int)))
        flat = flat * (1.0 - shape[-1] * min_prob) + min_prob
        return flat.reshape(shape)

    cpts = {}
    for name in space.names:
        parents = space.canonical(graph.parents(name))
        shape = tuple(space.card(p) for p in parents) + (space.card(name),)
        for attempt in range(max_tries):
            arr = sample_rows(shape)
            if _all_parents_live(arr, len(parents), min_effect):
                break
        else:
            raise EngineError("could not sample a live conditional table for %r" % (name,))
        cpts[name] = arr
    return MarkovModel(space, graph, cpts)


def _all_parents_live(arr: np.ndarray, n_parents: int, min_effect: float) -> bool:
    for axis in range(n_parents):
        moved = np.moveaxis(arr, axis, 0)
        # flatten the other parent axes; rows indexed by (this parent, context)
        flat = moved.reshape(moved.shape[0], -1, arr.shape[-1])
        spread = flat.max(axis=0) - flat.min(axis=0)
        if np.any(spread.max(axis=-1) < min_effect):
            return False
    return True


# -- the two rules of causal calculus ------------------------------------


def rule1_applies(g: Dag, i0, i1, i2, i3) -> bool:
    """Exchange of intervention and observation: valid when i1+i3 block
    every path from i0 to i2 once arrows into i1 and out of i2 are cut."""
    truncated = g.truncate_in_out(i1, i2)
    return truncated.blocks(i0, i2, set(i1) | set(i3))


def rule2_applies(g: Dag, i0, i1, i2, i3) -> bool:
    """Deletion of an intervention: valid when i1+i3 block every path from
    i0 to i2 in the graph that also cuts arrows into the i2 nodes that
    cannot reach i3."""
    truncated = g.truncate_in_cond(i1, i2, i3)
    return truncated.blocks(i0, i2, set(i1) | set(i3))


# -- identification ------------------------------------------------------


@dataclass(frozen=True)
class IdentifiedFormula:
    """A do-free rewrite of a query, with the rule trace that produced it."""

    formula: expr.Formula
    trace: tuple
    order: tuple

    def render(self) -> str:
        return expr.render(self.formula, self.order)

    def evaluate(self, table: JointTable) -> float:
        return expr.evaluate(self.formula, table)

    def key(self) -> str:
        return expr.canonical_key(self.formula, self.order)


@dataclass(frozen=True)
class NotIdentified:
    """Budget exhaustion, not a non-identifiability verdict."""

    reason: str
    depth_limit: int


def _query_term(query: QueryExpr) -> expr.PTerm:
    return expr.PTerm(
        target=tuple(query.target.items),
        given=tuple(query.observed.items),
        do=tuple(query.intervened.items),
    )


def canonical_identified_form(g: Dag, space: VariableSpace, query: QueryExpr) -> expr.Formula:
    """The truncated-factorization normal form of an observation-free
    query: sum out the hidden variables of the post-intervention product,
    after pruning barren terms (hidden variables feeding nothing retained).
    """
    if len(query.observed):
        raise ValueError("canonical form is defined for observation-free queries")
    fixed = dict(query.intervened.items)
    targets = dict(query.target.items)
    retained = [n for n in space.names if n not in fixed]
    hidden = [n for n in retained if n not in targets]

    # barren pruning: drop hidden variables with no children retained
    while True:
        dropped = [
            h for h in hidden
            if not (g.children(h) & set(retained))
        ]
        if not dropped:
            break
        for h in dropped:
            hidden.remove(h)
            retained.remove(h)

    syms = {h: "s%d" % k for k, h in enumerate(hidden)}

    def slot(name):
        if name in fixed:
            return fixed[name]
        if name in targets:
            return targets[name]
        return syms[name]

    factors = []
    for name in retained:
        parents = space.canonical(g.parents(name))
        factors.append(
            expr.PTerm(
                target=((name, slot(name)),),
                given=tuple((p, slot(p)) for p in parents),
            )
        )
    sums = tuple((h, syms[h]) for h in hidden)
    return expr.Formula(sums, tuple(factors))


def _fresh_symbol(state: expr.Formula) -> str:
    used = state.symbols()
    k = 0
    while "s%d" % k in used:
        k += 1
    return "s%d" % k


def _subsets(entries: tuple):
    for r in range(1, len(entries) + 1):
        yield from itertools.combinations(entries, r)


def _proper_subsets(entries: tuple):
    for r in range(1, len(entries)):
        yield from itertools.combinations(entries, r)


def _moves(state: expr.Formula, g: Dag, max_sums: int, max_factors: int):
    """Deterministically enumerate one-step rewrites of a state."""
    factors = state.factors
    nodes = g.nodes

    for idx, f in enumerate(factors):
        others = factors[:idx] + factors[idx + 1:]
        mentioned = f.variables()

        # law of total probability: bind an absent variable into the target
        if len(state.sums) < max_sums and len(factors) <= max_factors:
            for var in nodes:
                if var in mentioned:
                    continue
                sym = _fresh_symbol(state)
                grown = expr.PTerm(f.target + ((var, sym),), f.given, f.do)
                yield (
                    expr.Formula(state.sums + ((var, sym),), others + (grown,)),
                    "total-probability: bind %s in %s" % (var, _describe(f)),
                )

        # marginalization (total probability in reverse): drop a target
        # entry whose symbol is bound here and appears nowhere else
        for entry in f.target:
            var, slot = entry
            if not isinstance(slot, str):
                continue
            uses = sum(
                1
                for term in factors
                for _, s in term.target + term.given + term.do
                if s == slot
            )
            if uses != 1 or slot not in {s for _, s in state.sums}:
                continue
            rest_target = tuple(e for e in f.target if e != entry)
            sums = tuple(vs for vs in state.sums if vs[1] != slot)
            new_factors = others + ((expr.PTerm(rest_target, f.given, f.do),) if rest_target else ())
            yield (
                expr.Formula(sums, new_factors),
                "marginalize: sum out %s from %s" % (var, _describe(f)),
            )

        # chain rule, splitting direction
        if len(f.target) >= 2 and len(factors) < max_factors:
            for tail in _proper_subsets(f.target):
                head = tuple(e for e in f.target if e not in tail)
                yield (
                    expr.Formula(
                        state.sums,
                        others
                        + (
                            expr.PTerm(head, tail + f.given, f.do),
                            expr.PTerm(tail, f.given, f.do),
                        ),
                    ),
                    "chain-split: %s into %s given %s" % (_describe(f), _set_text(head), _set_text(tail)),
                )

        # rule 1 forward: exchange part of the do-set for observation
        for part in _subsets(f.do):
            kept = tuple(e for e in f.do if e not in part)
            if rule1_applies(
                g,
                [v for v, _ in f.target],
                [v for v, _ in kept],
                [v for v, _ in part],
                [v for v, _ in f.given],
            ):
                yield (
                    expr.Formula(
                        state.sums,
                        others + (expr.PTerm(f.target, f.given + part, kept),),
                    ),
                    "rule-1: observe %s instead of intervening in %s" % (_set_text(part), _describe(f)),
                )

        # rule 1 reverse: trade an observation back into an intervention
        for part in _subsets(f.given):
            kept = tuple(e for e in f.given if e not in part)
            if rule1_applies(
                g,
                [v for v, _ in f.target],
                [v for v, _ in f.do],
                [v for v, _ in part],
                [v for v, _ in kept],
            ):
                yield (
                    expr.Formula(
                        state.sums,
                        others + (expr.PTerm(f.target, kept, f.do + part),),
                    ),
                    "rule-1: intervene on %s instead of observing in %s" % (_set_text(part), _describe(f)),
                )

        # rule 2: delete part of the do-set outright
        for part in _subsets(f.do):
            kept = tuple(e for e in f.do if e not in part)
            if rule2_applies(
                g,
                [v for v, _ in f.target],
                [v for v, _ in kept],
                [v for v, _ in part],
                [v for v, _ in f.given],
            ):
                yield (
                    expr.Formula(
                        state.sums,
                        others + (expr.PTerm(f.target, f.given, kept),),
                    ),
                    "rule-2: delete intervention on %s in %s" % (_set_text(part), _describe(f)),
                )

    # chain rule, merging direction
    for i, j in itertools.permutations(range(len(factors)), 2):
        a, b = factors[i], factors[j]
        if a.do != b.do:
            continue
        if set(a.given) == set(b.target) | set(b.given) and not (set(a.target) & set(b.target)):
            rest = tuple(f for k, f in enumerate(factors) if k not in (i, j))
            yield (
                expr.Formula(
                    state.sums,
                    rest + (expr.PTerm(a.target + b.target, b.given, a.do),),
                ),
                "chain-merge: %s with %s" % (_describe(a), _describe(b)),
            )


def _set_text(entries) -> str:
    return "{%s}" % ",".join(sorted(v for v, _ in entries))


def _describe(term: expr.PTerm) -> str:
    return "P(%s|%s;do %s)" % (
        _set_text(term.target),
        _set_text(term.given),
        _set_text(term.do),
    )


def identify(
    g: Dag,
    space: VariableSpace,
    query: QueryExpr,
    depth_limit: int = DEFAULT_DEPTH_LIMIT,
    max_states: int = 100_000,
) -> "IdentifiedFormula | NotIdentified":
    """Rewrite a do-query into observational conditionals.

    Breadth-first search over expression states under the two causal-
    calculus rules plus ordinary probability algebra, deduplicated by
    canonical normal form.  For observation-free queries the goal state is
    pinned first to the truncated-factorization normal form, which makes
    the output canonical and reproducible; if that form is not derivable
    within budget the search re-runs accepting any do-free state (still a
    sound identification, just not the canonical factor shape).  With
    observations present any do-free state is accepted directly.  Failure
    means the budget ran out, never that the query is unidentifiable.
    """
    order = space.names
    start = expr.Formula((), (_query_term(query),))
    if not len(query.intervened):
        return IdentifiedFormula(expr.normalize(start, order), (), order)

    if not len(query.observed):
        goal = canonical_identified_form(g, space, query)
        goal_key = expr.canonical_key(goal, order)
        found = _rewrite_search(g, space, start, depth_limit, max_states, goal_key)
        if found is None:
            found = _rewrite_search(g, space, start, depth_limit, max_states, None)
    else:
        found = _rewrite_search(g, space, start, depth_limit, max_states, None)
    if found is None:
        return NotIdentified("not identified within depth budget %d" % depth_limit, depth_limit)
    return found


def _rewrite_search(g, space, start, depth_limit, max_states, goal_key):
    order = space.names

    def is_goal(state, key):
        if goal_key is not None:
            return key == goal_key
        return state.do_free()

    start_key = expr.canonical_key(start, order)
    if is_goal(start, start_key):
        return IdentifiedFormula(expr.normalize(start, order), (), order)

    max_sums = len(space.names)
    max_factors = len(space.names) + 2
    seen = {start_key}
    queue = deque([(start, (), 0)])
    while queue:
        state, trace, depth = queue.popleft()
        if depth == depth_limit:
            continue
        for successor, description in _moves(state, g, max_sums, max_factors):
            key = expr.canonical_key(successor, order)
            if key in seen:
                continue
            seen.add(key)
            extended = trace + (description,)
            if is_goal(successor, key):
                return IdentifiedFormula(expr.normalize(successor, order), extended, order)
            if len(seen) >= max_states:
                return None
            queue.append((successor, extended, depth + 1))
    return None


# -- theorem-level round trip --------------------------------------------


@dataclass(frozen=True)
class Theorem2Verdict:
    axioms_pass: bool
    markov_match: bool
    agree: bool
    dag: "Dag | None" = None
    details: dict = field(default_factory=dict)


def cpts_from_joint(table: JointTable, g: Dag) -> dict:
    """Per-variable conditional tables of a joint, read along the graph."""
    sp = table.space
    cpts = {}
    for name in sp.names:
        parents = sp.canonical(g.parents(name))
        arr = grouped(table, (parents, (name,)))
        denom = arr.sum(axis=-1, keepdims=True)
        if np.any(denom <= 0.0):
            raise ZeroProbabilityError(
                "cannot read conditional rows for %r: a parent context has zero mass" % (name,)
            )
        cpts[name] = arr / denom
    return cpts


def markov_model_from_family(fam: BeliefFamily, g: Dag) -> MarkovModel:
    """The structural model induced by a family's observational table."""
    return MarkovModel(fam.space, g, cpts_from_joint(fam.observational(), g))


def theorem2_verdict(fam: BeliefFamily, tol: float = 1e-9, max_vars: int = 6) -> Theorem2Verdict:
    """Do the four preference axioms hold exactly when the family is the
    do-probability family of a structural model?  Both sides are evaluated
    independently; they must agree, and a disagreement is an
    implementation bug or tolerance artifact worth failing loudly over.
    """
    from . import axioms as axioms_mod
    from .beliefs import causal_graph

    details: dict = {}
    try:
        g = causal_graph(fam)
    except CycleError as err:
        details["cycle"] = err.cycle
        return Theorem2Verdict(False, False, True, None, details)

    a2 = axioms_mod.check_axiom2(fam)
    a3 = axioms_mod.check_axiom3(fam, g, max_vars=max_vars)
    a4 = axioms_mod.check_axiom4(fam, g, tol=tol, max_vars=max_vars)
    a6 = axioms_mod.check_axiom6(fam, g, tol=tol, max_vars=max_vars)
    axioms_pass = all(r.passed for r in (a2, a3, a4, a6))
    details["axioms"] = {r.axiom_id: r.passed for r in (a2, a3, a4, a6)}

    model = markov_model_from_family(fam, g)
    regenerated = family_from_markov(model, require_full_support=False)
    markov_match = fam.allclose(regenerated, tol)
    details["markov_match"] = markov_match

    return Theorem2Verdict(axioms_pass, markov_match, axioms_pass == markov_match, g, details)
