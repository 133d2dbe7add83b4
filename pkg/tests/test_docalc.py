import itertools

import numpy as np
import pytest

from causalcalc import (
    Assignment,
    Dag,
    EngineError,
    MarkovModel,
    Policy,
    QueryExpr,
    VariableSpace,
    ZeroProbabilityError,
    do_probability,
    do_probability_by_system,
    family_from_markov,
    h_eval,
    joint_from_markov,
    random_markov_model,
    represents_distribution,
    rule1_applies,
    rule2_applies,
    theorem2_verdict,
)
from helpers import (
    blake_graph,
    charlie_graph,
    charlie_space,
    fig7_graph,
    fig10_graph,
    mismatched_family,
)

CHAIN_SPACE = VariableSpace(("A", "B", "C"), (2, 2, 2))
CHAIN_GRAPH = Dag(("A", "B", "C"), [("A", "B"), ("B", "C")])
CHAIN_CPTS = {
    "A": np.array([0.5, 0.5]),
    "B": np.array([[0.9, 0.1], [0.2, 0.8]]),
    "C": np.array([[0.7, 0.3], [0.1, 0.9]]),
}

CHARLIE_CPTS = {
    "E": np.array([0.4, 0.6]),
    "A": np.array([[0.7, 0.3], [0.2, 0.8]]),
    "L": np.array([[0.9, 0.1], [0.3, 0.7]]),
}


@pytest.fixture(scope="module")
def chain_model():
    return MarkovModel(CHAIN_SPACE, CHAIN_GRAPH, CHAIN_CPTS)


@pytest.fixture(scope="module")
def charlie_model():
    return MarkovModel(charlie_space(), charlie_graph(), CHARLIE_CPTS)


def q(space, target, observed=(), do=()):
    return QueryExpr(
        Assignment(space, dict(target)),
        Assignment(space, dict(observed)),
        Assignment(space, dict(do)),
    )


def test_markov_model_validates_rows():
    sp = VariableSpace(("A",), (2,))
    with pytest.raises(ValueError, match="sum"):
        MarkovModel(sp, Dag(("A",)), {"A": np.array([0.5, 0.6])})
    with pytest.raises(ValueError, match="missing"):
        MarkovModel(sp, Dag(("A",)), {})


def test_noise_intervals_reproduce_rows(chain_model):
    for name, cpt in chain_model.cpts.items():
        bounds = chain_model.noise_bounds[name]
        lengths = np.diff(np.concatenate([np.zeros(bounds.shape[:-1] + (1,)), bounds], axis=-1))
        assert np.all(np.abs(lengths - cpt) <= 1e-12)
        assert np.all(bounds[..., -1] == 1.0)


def test_h_eval_deterministic_row():
    sp = VariableSpace(("A", "B"), (2, 2))
    m = MarkovModel(sp, Dag(sp.names, [("A", "B")]),
                    {"A": [0.5, 0.5], "B": [[1.0, 0.0], [0.0, 1.0]]})
    for eps in (0.0, 0.25, 0.999):
        assert h_eval(m, "B", Assignment(sp, {"A": 0}), eps) == 0
        assert h_eval(m, "B", Assignment(sp, {"A": 1}), eps) == 1


def test_h_eval_interval_boundaries(chain_model):
    ctx = Assignment(CHAIN_SPACE, {"A": 1})  # row (0.2, 0.8)
    assert h_eval(chain_model, "B", ctx, 0.19) == 0
    assert h_eval(chain_model, "B", ctx, 0.21) == 1
    assert h_eval(chain_model, "A", Assignment(CHAIN_SPACE), 0.5) == 1  # half-open


def test_h_eval_rejects_bad_noise(chain_model):
    with pytest.raises(ValueError, match="outside"):
        h_eval(chain_model, "A", Assignment(CHAIN_SPACE), 1.0)


def test_h_eval_requires_exact_parent_binding(chain_model):
    with pytest.raises(ValueError, match="bind exactly"):
        h_eval(chain_model, "B", Assignment(CHAIN_SPACE), 0.5)


def test_joint_single_variable():
    sp = VariableSpace(("A", "Z"), (2, 2))
    m = MarkovModel(sp, Dag(sp.names), {"A": [0.4, 0.6], "Z": [0.5, 0.5]})
    assert np.allclose(joint_from_markov(m).marginal(("A",)).probs, [0.4, 0.6])


def test_joint_two_variable_hand_products():
    sp = VariableSpace(("A", "E"), (2, 2))
    m = MarkovModel(sp, Dag(sp.names, [("A", "E")]),
                    {"A": [0.5, 0.5], "E": [[0.9, 0.1], [0.2, 0.8]]})
    expect = np.array([[0.45, 0.05], [0.1, 0.4]])
    assert np.allclose(joint_from_markov(m).probs, expect, atol=1e-15)


def test_joint_fig7_self_check():
    g = fig7_graph()
    m = random_markov_model(g, seed=51)
    verdict = represents_distribution(g, joint_from_markov(m))
    assert verdict.represents


def test_do_probability_chain_matches_conditioning(chain_model):
    joint = joint_from_markov(chain_model)
    for a in (0, 1):
        for c in (0, 1):
            lhs = do_probability(chain_model, q(CHAIN_SPACE, [("C", c)], do=[("A", a)]))
            rhs = joint.conditional(("C",), Assignment(CHAIN_SPACE, {"A": a})).probs[c]
            assert lhs == pytest.approx(float(rhs), abs=1e-12)


def test_do_probability_full_pin_constant_in_upstream(chain_model):
    for b in (0, 1):
        for c in (0, 1):
            values = [
                do_probability(chain_model, q(CHAIN_SPACE, [("C", c)], do=[("A", a), ("B", b)]))
                for a in (0, 1)
            ]
            assert abs(values[0] - values[1]) <= 1e-12


def test_do_probability_empty_do_is_conditional(chain_model):
    joint = joint_from_markov(chain_model)
    got = do_probability(chain_model, q(CHAIN_SPACE, [("C", 1)], observed=[("A", 1)]))
    want = joint.conditional(("C",), Assignment(CHAIN_SPACE, {"A": 1})).probs[1]
    assert got == pytest.approx(float(want), abs=1e-14)


def test_query_roles_must_be_disjoint():
    sp = VariableSpace(("A", "B"), (2, 2))
    with pytest.raises(ValueError, match="two roles"):
        QueryExpr(
            Assignment(sp, {"A": 0}), Assignment(sp, {}), Assignment(sp, {"A": 0})
        )


def test_observed_zero_mass_error_message():
    # do(A=0) forces B=0 through a deterministic row, so observing B=1 is null
    sp = VariableSpace(("A", "B", "C"), (2, 2, 2))
    g = Dag(sp.names, [("A", "B"), ("B", "C")])
    m = MarkovModel(sp, g, {
        "A": [0.5, 0.5],
        "B": [[1.0, 0.0], [0.0, 1.0]],
        "C": [[0.7, 0.3], [0.2, 0.8]],
    })
    query = QueryExpr(
        Assignment(sp, {"C": 0}), Assignment(sp, {"B": 1}), Assignment(sp, {"A": 0})
    )
    with pytest.raises(ZeroProbabilityError, match="zero probability"):
        do_probability(m, query)
    with pytest.raises(ZeroProbabilityError):
        do_probability_by_system(m, query)


def test_two_do_probability_paths_agree():
    rng = np.random.default_rng(52)
    for g in (CHAIN_GRAPH, blake_graph(), fig10_graph()):
        seed = int(rng.integers(1 << 30))
        m = random_markov_model(g, seed=seed)
        sp = m.space
        names = sp.names
        for assign in itertools.product(range(4), repeat=len(names)):
            target = [(n, 1) for n, a in zip(names, assign) if a == 0]
            observed = [(n, 0) for n, a in zip(names, assign) if a == 1]
            do = [(n, 1) for n, a in zip(names, assign) if a == 2]
            if not target:
                continue
            query = q(sp, target, observed, do)
            try:
                lhs = do_probability(m, query)
            except ZeroProbabilityError:
                continue
            rhs = do_probability_by_system(m, query)
            assert abs(lhs - rhs) <= 1e-12


def test_family_from_markov_empty_policy_is_joint(chain_model):
    fam = family_from_markov(chain_model)
    assert fam.observational().allclose(joint_from_markov(chain_model), 0.0)


def test_family_charlie_indirect_identification(charlie_model):
    # mu_e(l) must equal sum_a mu(l|a) mu(a|e), computed from raw rows
    fam = family_from_markov(charlie_model)
    for e in (0, 1):
        table = fam.table(Policy(charlie_model.space, {"E": e}))
        for l in (0, 1):
            direct = float(table.marginal(("L",)).probs[l])
            by_formula = sum(
                CHARLIE_CPTS["L"][a][l] * CHARLIE_CPTS["A"][e][a] for a in (0, 1)
            )
            assert direct == pytest.approx(by_formula, abs=1e-12)


def test_family_blake_direct_identification():
    sp = VariableSpace(("A", "E", "L"), (2, 2, 2))
    m = random_markov_model(blake_graph(), sp, seed=53)
    fam = family_from_markov(m)
    joint = joint_from_markov(m)
    for a in (0, 1):
        for e in (0, 1):
            pinned = fam.table(Policy(sp, {"A": a, "E": e})).probs
            cond = joint.conditional(("L",), Assignment(sp, {"A": a, "E": e})).probs
            assert np.allclose(pinned, cond, atol=1e-12)


def test_family_requires_positive_cpts():
    sp = VariableSpace(("A", "B"), (2, 2))
    m = MarkovModel(sp, Dag(sp.names, [("A", "B")]),
                    {"A": [0.5, 0.5], "B": [[1.0, 0.0], [0.0, 1.0]]})
    with pytest.raises(EngineError, match="null"):
        family_from_markov(m)


def test_forward_sampling_matches_joint(chain_model):
    # interval-coded noises reproduce the joint law: 1e6 draws per run,
    # every cell within three standard errors
    rng = np.random.default_rng(54)
    n = 1_000_000
    sp = chain_model.space
    eps = rng.random((n, len(sp.names)))
    columns = {}
    counts = np.zeros((2, 2, 2))
    for k, name in enumerate(sp.names):
        parents = chain_model.parent_order(name)
        bounds = chain_model.noise_bounds[name]
        if parents:
            ctx = np.stack([columns[p] for p in parents], axis=1)
            values = np.empty(n, dtype=int)
            for parent_values in itertools.product(*(range(sp.card(p)) for p in parents)):
                mask = np.all(ctx == parent_values, axis=1)
                if mask.any():
                    values[mask] = np.searchsorted(bounds[parent_values], eps[mask, k], side="right")
        else:
            values = np.searchsorted(bounds, eps[:, k], side="right")
        columns[name] = values
    stacked = np.stack([columns[n_] for n_ in sp.names], axis=1)
    for cell in itertools.product((0, 1), repeat=3):
        counts[cell] = np.mean(np.all(stacked == cell, axis=1))
    joint = joint_from_markov(chain_model)
    se = np.sqrt(joint.probs * (1 - joint.probs) / n)
    assert np.all(np.abs(counts - joint.probs) <= 3 * se + 1e-12)


def test_rule1_blake_full_exchange():
    assert rule1_applies(blake_graph(), ("L",), (), ("A", "E"), ())


def test_rule2_charlie_deletion_with_mediator():
    assert rule2_applies(charlie_graph(), ("L",), (), ("E",), ("A",))


def test_rule1_charlie_exogenous_exchange():
    assert rule1_applies(charlie_graph(), ("A",), (), ("E",), ())


def test_rule2_not_applicable_with_open_path():
    # deleting do(E) changes mu_e(l) when nothing blocks E -> A -> L
    assert not rule2_applies(charlie_graph(), ("L",), (), ("E",), ())


def test_theorem2_roundtrip_pass(chain_model):
    fam = family_from_markov(chain_model)
    verdict = theorem2_verdict(fam)
    assert verdict.axioms_pass and verdict.markov_match and verdict.agree


def test_theorem2_mismatched_generators_fail_together():
    g = charlie_graph()
    sp = charlie_space()
    fam = mismatched_family(
        random_markov_model(g, sp, seed=55), random_markov_model(g, sp, seed=56)
    )
    verdict = theorem2_verdict(fam)
    assert not verdict.axioms_pass and not verdict.markov_match and verdict.agree


def test_theorem2_product_family():
    sp = VariableSpace(("A", "B"), (2, 2))
    fam = family_from_markov(random_markov_model(Dag(sp.names), sp, seed=57))
    verdict = theorem2_verdict(fam)
    assert verdict.axioms_pass and verdict.markov_match and verdict.agree


def test_mixed_cardinality_pipeline():
    from causalcalc import theorem2_verdict as t2

    sp = VariableSpace(("U", "V", "W"), (3, 2, 4))
    g = Dag(sp.names, [("U", "V"), ("V", "W")])
    for seed in range(3):
        m = random_markov_model(g, sp, seed=seed)
        fam = family_from_markov(m)
        verdict = t2(fam)
        assert verdict.axioms_pass and verdict.markov_match and verdict.agree
    from causalcalc import identify, IdentifiedFormula

    query = q(sp, [("W", 3)], do=[("U", 2)])
    result = identify(g, sp, query)
    assert isinstance(result, IdentifiedFormula)
    m = random_markov_model(g, sp, seed=9)
    assert result.evaluate(joint_from_markov(m)) == pytest.approx(
        do_probability(m, query), abs=1e-9
    )
