"""Soundness, completeness and termination of rewritings on generated knowledge bases"""

import random

import pytest

from chase_oracle import Entailment, entails_with_result
from formula import entails_facts
from fragments import is_cdr, is_clr, is_dder, is_fus_guaranteed
from generators import (linear_problem, query_against, random_facts, random_problem,
                        restricted_problem, rule_where, wide_disjunctive_rule)
from rewrite_engine import (RewriteBudget, UcqRewriter, disjunctive_step,
                            validate_piece_unification)
from utils import make_rule

pytestmark = pytest.mark.slow

SOUNDNESS_SEEDS = range(200)
COMPLETENESS_INSTANCES = 100
TERMINATION_SEEDS = range(50)
DISJUNCTIVE_STEPS = 500


def rewrite(rules, positives, observer=None, max_cqs=300):
    budget = RewriteBudget(max_iterations=10, timeout_secs=30.0, max_cqs=max_cqs)
    return UcqRewriter(rules, positives, budget=budget, observer=observer).rewrite()


def rewrite_to_fixpoint(rules, positives):
    budget = RewriteBudget(timeout_secs=60.0, max_cqs=None)
    return UcqRewriter(rules, positives, budget=budget).rewrite()


def test_every_rewriting_is_entailed():
    confirmed = 0
    for seed in SOUNDNESS_SEEDS:
        rules, positives = random_problem(seed)
        for cq in rewrite(rules, positives).queries:
            answer, chase_result = entails_with_result(rules, cq, positives, max_depth=6,
                                                       max_branches=1024)
            conclusive = chase_result.saturated and not chase_result.overflow
            assert answer is Entailment.TRUE or not conclusive, \
                f"seed {seed}: unsound rewriting {cq}"
            confirmed += answer is Entailment.TRUE
    assert confirmed >= len(SOUNDNESS_SEEDS)


def test_converged_rewriting_is_complete():
    converged = entailed = 0
    seed = 0
    while converged < COMPLETENESS_INSTANCES and seed < 3 * COMPLETENESS_INSTANCES:
        rules, positives = random_problem(seed)
        result = rewrite(rules, positives)
        rng = random.Random(seed + 1000)
        seed += 1
        if not result.converged:
            continue
        converged += 1
        for _ in range(10):
            facts = random_facts(rng)
            answer = entails_with_result(rules, facts, positives, max_depth=6,
                                         max_branches=1024)[0]
            if answer is Entailment.TRUE:
                entailed += 1
                assert any(entails_facts(facts, cq) for cq in result.queries), \
                    f"seed {seed - 1}: no rewriting holds in {facts}"
    assert converged == COMPLETENESS_INSTANCES
    assert entailed >= 50


@pytest.mark.parametrize("seed", range(40))
def test_stratified_existential_rules_converge(seed):
    rules, positives = random_problem(seed, disjunctive=False)
    assert is_fus_guaranteed(rules).guaranteed
    result = rewrite(rules, positives, max_cqs=None)
    assert result.converged


@pytest.mark.parametrize("seed", TERMINATION_SEEDS)
def test_linear_rules_with_atomic_queries_converge(seed):
    rules, positives = linear_problem(seed)
    assert all(len(r.body) == 1 for r in rules)
    assert all(len(q.positives) == 1 for q in positives)
    assert rewrite_to_fixpoint(rules, positives).converged


@pytest.mark.parametrize("fragment", [is_cdr, is_clr])
@pytest.mark.parametrize("seed", TERMINATION_SEEDS)
def test_dder_rule_sets_converge(seed, fragment):
    rules, positives = restricted_problem(seed, (is_dder, fragment))
    report = is_fus_guaranteed(rules)
    assert report.guaranteed, report.to_dict()
    assert rewrite_to_fixpoint(rules, positives).converged


@pytest.mark.parametrize("fragment", [None, is_cdr, is_clr])
def test_disjunctive_steps_keep_rule_fragments(fragment):
    rng = random.Random(11)
    accept = (is_dder,) if fragment is None else (is_dder, fragment)
    produced = 0
    for step in range(DISJUNCTIVE_STEPS):
        rule = make_rule(rule_where(rng, wide_disjunctive_rule, f"d{step}", accept))
        for rewritten in disjunctive_step(rule, query_against(rng, rule)):
            produced += 1
            assert all(check(rewritten) for check in accept), f"{rule} gave {rewritten}"
    assert produced >= 100


@pytest.mark.parametrize("seed", range(10))
def test_accepted_unifications_are_valid(seed):
    rules, positives = random_problem(seed)
    seen = []
    rewrite(rules, positives, observer=seen.append)
    assert all(validate_piece_unification(pu) == [] for pu in seen)
