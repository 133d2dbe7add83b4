"""Representation checks: when does a DAG represent a distribution, and
when does it represent a whole intervention-belief family?

Distribution-level representation (factorize + minimal parent sets) is not
unique; family-level representation adds per-truncation factorization and
an edge-orientation identity, and is unique when it exists.  Both facts
are exercised by the test suite.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from .beliefs import BELIEF_TOL, BeliefFamily, causal_graph
from .dist import JointTable, chain_factorization_residual
from .graph import Dag
from .space import Assignment, Policy


@dataclass
class RepresentationVerdict:
    represents: bool
    failures: list = field(default_factory=list)
    minimality_witness: dict | None = None


def represents_distribution(g: Dag, table: JointTable, tol: float = BELIEF_TOL) -> RepresentationVerdict:
    """Does the DAG represent the distribution?

    Clause 1: the joint factorizes into per-variable conditionals given
    graph parents.  Clause 2 (minimality): no family of parent subsets
    with at least one strictly smaller set also factorizes.  Under full
    support a multi-variable shrink factorizes only if each per-variable
    shrink does, so proper subsets are searched one variable at a time.
    """
    if set(g.nodes) != set(table.domain):
        raise ValueError(
            "graph nodes %r do not match table domain %r" % (g.nodes, table.domain)
        )
    parent_sets = {n: g.parents(n) for n in g.nodes}
    verdict = RepresentationVerdict(represents=True)

    residual = chain_factorization_residual(table, parent_sets)
    if residual > tol:
        verdict.represents = False
        verdict.failures.append(("factorization", residual))

    for name in g.nodes:
        parents = table.space.canonical(parent_sets[name])
        if not parents:
            continue
        found = None
        for r in range(len(parents)):
            for sub in itertools.combinations(parents, r):
                shrunk = dict(parent_sets)
                shrunk[name] = sub
                if chain_factorization_residual(table, shrunk) <= tol:
                    found = sub
                    break
            if found is not None:
                break
        if found is not None:
            verdict.represents = False
            verdict.failures.append(("minimality", (name, found)))
            if verdict.minimality_witness is None:
                witness = {n: tuple(table.space.canonical(parent_sets[n])) for n in g.nodes}
                witness[name] = tuple(found)
                verdict.minimality_witness = witness
    return verdict


def represents_family(g: Dag, fam: BeliefFamily, tol: float = BELIEF_TOL) -> RepresentationVerdict:
    """Does the DAG represent the belief family?

    Clause i: for every intervened subset and every value of it, the
    node-deleted subgraph represents the corresponding intervention
    belief.  Clause ii: along every edge, conditioning the effect on the
    cause (all else pinned) agrees with intervening the cause.  The
    everything-intervened case is skipped: the empty-domain table carries
    no content.  The first witness per clause is recorded.
    """
    sp = fam.space
    if set(g.nodes) != set(sp.names):
        raise ValueError("graph nodes %r do not match space %r" % (g.nodes, sp.names))
    verdict = RepresentationVerdict(represents=True)

    names = sp.names
    done_outer = False
    for r in range(len(names)):
        for pinned in itertools.combinations(names, r):
            sub = g.truncate_remove(pinned)
            for ctx in sp.value_tuples(pinned):
                policy = Policy(sp, zip(pinned, ctx))
                inner = represents_distribution(sub, fam.table(policy), tol)
                if not inner.represents:
                    verdict.represents = False
                    verdict.failures.append(("truncation", (policy, inner.failures)))
                    if inner.minimality_witness is not None and verdict.minimality_witness is None:
                        verdict.minimality_witness = inner.minimality_witness
                    done_outer = True
                    break
            if done_outer:
                break
        if done_outer:
            break

    for cause, effect in sorted(g.edges, key=lambda e: (names.index(e[0]), names.index(e[1]))):
        rest = tuple(n for n in names if n not in (cause, effect))
        bad = None
        for ctx in sp.value_tuples(rest):
            pair = fam.table(Policy(sp, zip(rest, ctx)))
            for xc in range(sp.card(cause)):
                lhs = pair.conditional((effect,), Assignment(sp, [(cause, xc)]))
                pinned = fam.table(Policy(sp, tuple(zip(rest, ctx)) + ((cause, xc),)))
                rhs = pinned.marginal((effect,))
                if not lhs.allclose(rhs, tol):
                    bad = (cause, effect, Assignment(sp, tuple(zip(rest, ctx)) + ((cause, xc),)))
                    break
            if bad:
                break
        if bad:
            verdict.represents = False
            verdict.failures.append(("orientation", bad))
            break
    return verdict


@dataclass(frozen=True)
class Theorem1Verdict:
    axioms_pass: bool
    dag: "Dag | None"
    represents: bool
    agree: bool


def theorem1_verdict(fam: BeliefFamily, tol: float = BELIEF_TOL, max_vars: int = 6) -> Theorem1Verdict:
    """Evaluate both sides of the DAG-representation equivalence.

    The axiom side and the representation side are computed independently
    and must agree on every family; a disagreement signals an
    implementation bug or a tolerance artifact and is surfaced via
    ``agree=False`` for the caller to report loudly.
    """
    from .axioms import check_axiom2, check_axiom3, check_axiom4

    a2 = check_axiom2(fam, tol)
    if not a2.passed:
        # a cyclic causes relation admits no representing DAG (uniqueness
        # would force the causal graph itself, which is not acyclic)
        return Theorem1Verdict(False, None, False, True)

    g = causal_graph(fam, tol)
    a3 = check_axiom3(fam, g, max_vars=max_vars)
    a4 = check_axiom4(fam, g, tol=tol, max_vars=max_vars)
    axioms_pass = a3.passed and a4.passed
    rep = represents_family(g, fam, tol).represents
    return Theorem1Verdict(axioms_pass, g, rep, axioms_pass == rep)
