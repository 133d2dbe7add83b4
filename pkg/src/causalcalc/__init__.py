"""causalcalc: a discrete causal-calculus engine.

Intervention-belief families over finite state spaces, causal-set
discovery, DAG representation checks, d-separation, do-probabilities, the
two rules of causal calculus, and a bounded identification rewriter, with
a model-file front end under ``causalcalc.cli``.
"""

from .space import (
    Act,
    Assignment,
    Policy,
    VariableSpace,
    enumerate_outcomes,
    indicator_act,
    iter_policies,
    policy_count,
)
from .dist import (
    JointTable,
    chain_factorization_residual,
    cond_dependence_gap,
    cond_independent,
)
from .graph import Dag, enumerate_dags, find_cycle
from .beliefs import (
    BeliefFamily,
    Preference,
    Utility,
    causal_graph,
    causal_set,
    causes,
    complete_state_space_check,
    expected_utility,
    indirect_causes,
    k_independent,
    prefers,
)
from .axioms import (
    AxiomReport,
    check_assumption1,
    check_axiom2,
    check_axiom3,
    check_axiom4,
    check_axiom6,
    check_intervention_ci,
    intervention_ci_gap,
)
from .represent import (
    RepresentationVerdict,
    Theorem1Verdict,
    represents_distribution,
    represents_family,
    theorem1_verdict,
)
from .docalc import (
    IdentifiedFormula,
    MarkovModel,
    NotIdentified,
    QueryExpr,
    Theorem2Verdict,
    canonical_identified_form,
    do_probability,
    do_probability_by_system,
    family_from_markov,
    h_eval,
    identify,
    joint_from_markov,
    post_intervention_table,
    random_markov_model,
    rule1_applies,
    rule2_applies,
    theorem2_verdict,
)
from .errors import (
    CycleError,
    EngineError,
    ParseError,
    UnknownVariableError,
    ZeroProbabilityError,
)

__version__ = "0.1.0"
