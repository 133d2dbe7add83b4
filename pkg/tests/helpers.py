"""Shared fixtures and independent brute-force oracles.

The oracles here are deliberately written in plain dict arithmetic with no
engine imports on their computational path, so they can vouch for the
numpy-based implementations.
"""

from __future__ import annotations

import itertools
from pathlib import Path

import numpy as np

from causalcalc import (
    BeliefFamily,
    Dag,
    JointTable,
    MarkovModel,
    Policy,
    VariableSpace,
    family_from_markov,
    post_intervention_table,
)

MODELS = Path(__file__).resolve().parent.parent / "models"


# -- reference graphs ------------------------------------------------------

def chain_space():
    return VariableSpace(("A", "E", "L"), (2, 2, 2))


def chain_graph():
    # mediated influence only: A -> E -> L
    return Dag(("A", "E", "L"), [("A", "E"), ("E", "L")])


def blake_graph():
    return Dag(("A", "E", "L"), [("A", "E"), ("A", "L"), ("E", "L")])


def charlie_space():
    return VariableSpace(("E", "A", "L"), (2, 2, 2))


def charlie_graph():
    return Dag(("E", "A", "L"), [("E", "A"), ("A", "L")])


def fig7_graph():
    return Dag(
        ("a", "b", "w", "j", "i", "k", "z"),
        [("a", "b"), ("a", "j"), ("w", "b"), ("w", "i"), ("j", "i"), ("i", "k"), ("k", "z")],
    )


def fig10_graph():
    return Dag(("J1", "K", "J0", "I"), [("J1", "K"), ("K", "J0"), ("J0", "I"), ("J1", "I")])


def collider_graph():
    return Dag(("x", "y", "z"), [("x", "z"), ("y", "z")])


# -- dict-based probability oracles ---------------------------------------

def dict_joint_from_cpts(space, parent_sets, cpts):
    """Joint distribution as {values-tuple: prob} by straight enumeration.

    ``cpts[name]`` maps (parent value tuple) -> row list; parent order is
    the canonical order of ``parent_sets[name]``.
    """
    names = space.names
    cells = {}
    for values in itertools.product(*(range(c) for c in space.cards)):
        at = dict(zip(names, values))
        p = 1.0
        for name in names:
            parents = tuple(sorted(parent_sets[name], key=names.index))
            row = cpts[name][tuple(at[q] for q in parents)]
            p *= row[at[name]]
        cells[values] = p
    return cells


def dict_marginal(cells, names, subset):
    idx = [names.index(n) for n in subset]
    out = {}
    for values, p in cells.items():
        key = tuple(values[i] for i in idx)
        out[key] = out.get(key, 0.0) + p
    return out


def dict_conditional_prob(cells, names, target: dict, given: dict):
    num = 0.0
    den = 0.0
    for values, p in cells.items():
        at = dict(zip(names, values))
        if all(at[k] == v for k, v in given.items()):
            den += p
            if all(at[k] == v for k, v in target.items()):
                num += p
    if den == 0.0:
        raise ZeroDivisionError("zero-mass conditioning event")
    return num / den


def dict_ci_holds(cells, names, i_set, j_set, k_set, tol=1e-9):
    """Brute-force conditional independence on a dict joint."""
    cards = {}
    for values in cells:
        for n, v in zip(names, values):
            cards[n] = max(cards.get(n, 0), v + 1)
    for kv in itertools.product(*(range(cards[n]) for n in k_set)):
        given_k = dict(zip(k_set, kv))
        mass_k = sum(
            p for values, p in cells.items()
            if all(dict(zip(names, values))[n] == v for n, v in given_k.items())
        )
        if mass_k <= 0.0:
            continue
        for jv in itertools.product(*(range(cards[n]) for n in j_set)):
            given_kj = dict(given_k)
            given_kj.update(zip(j_set, jv))
            mass_kj = sum(
                p for values, p in cells.items()
                if all(dict(zip(names, values))[n] == v for n, v in given_kj.items())
            )
            if mass_kj <= 0.0:
                continue
            for iv in itertools.product(*(range(cards[n]) for n in i_set)):
                target = dict(zip(i_set, iv))
                lhs = dict_conditional_prob(cells, names, target, given_kj)
                rhs = dict_conditional_prob(cells, names, target, given_k)
                if abs(lhs - rhs) > tol:
                    return False
    return True


def table_from_dict(space, domain, cells) -> JointTable:
    shape = tuple(space.card(n) for n in domain)
    arr = np.zeros(shape)
    for values, p in cells.items():
        arr[values] = p
    return JointTable(space, domain, arr)


# -- corruption harnesses --------------------------------------------------

def perturbed_family(model: MarkovModel, rng, min_residual=1e-3, max_tries=50) -> BeliefFamily:
    """Replace the observational table with a full-support perturbation
    that demonstrably breaks the factorization over the model's graph."""
    from causalcalc import chain_factorization_residual

    fam = family_from_markov(model)
    obs = fam.observational()
    parent_sets = {n: model.graph.parents(n) for n in model.space.names}
    for _ in range(max_tries):
        noise = rng.uniform(0.4, 1.6, obs.probs.shape)
        arr = obs.probs * noise
        arr = arr / arr.sum()
        candidate = JointTable(model.space, model.space.names, arr)
        if chain_factorization_residual(candidate, parent_sets) > min_residual:
            return fam.with_table(Policy(model.space), candidate)
    raise AssertionError("could not build a non-factorizing perturbation")


def mismatched_family(observational_model: MarkovModel, intervention_model: MarkovModel) -> BeliefFamily:
    """Observational beliefs from one parameterization, intervention
    beliefs from another: the hallmark violation of the
    observe/intervene-equivalence axiom."""
    assert observational_model.graph == intervention_model.graph

    def supply(policy):
        if not len(policy):
            return post_intervention_table(observational_model, policy)
        return post_intervention_table(intervention_model, policy)

    return BeliefFamily.from_supplier(observational_model.space, supply)
