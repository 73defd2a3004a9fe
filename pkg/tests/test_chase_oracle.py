"""Bounded disjunctive chase and the entailment oracle"""

import random

import pytest

from chase_oracle import DisjunctiveChase, Entailment, chase, entails, entails_with_result
from formula import entails_facts, freeze, is_null
from generators import random_facts, random_problem
from utils import make_cq, make_facts, make_rules

R1 = "[r1] [(diabetic(Y), sibling(Y,X)), (diabetic(Z), parent(Z,X))] :- diabetesRisk(X)."


def test_entailment_truthiness():
    assert Entailment.TRUE
    assert not Entailment.UNKNOWN
    assert str(Entailment.UNKNOWN) == "unknown"


def test_every_branch_satisfies_query():
    facts = make_facts("diabetesRisk(ann)")
    assert entails(make_rules(R1), facts, [make_cq("diabetic(X)")]) is Entailment.TRUE


def test_query_missing_in_one_branch_is_unknown():
    facts = make_facts("diabetesRisk(ann)")
    answer, result = entails_with_result(make_rules(R1), facts, [make_cq("sibling(Y,X)")])
    assert answer is Entailment.UNKNOWN
    assert result.saturated
    assert len(result.branches) == 1
    assert entails_facts(result.branches[0].facts, make_cq("parent(Z,ann)"))


def test_union_covers_both_branches():
    facts = make_facts("diabetesRisk(ann)")
    ucq = [make_cq("sibling(Y,X)"), make_cq("parent(Z,ann)")]
    assert entails(make_rules(R1), facts, ucq)


def test_disjunctive_chase_splits_branches():
    result = chase(make_rules(R1), make_facts("diabetesRisk(ann)"))
    assert result.saturated
    assert len(result.branches) == 2


def test_saturation():
    result = chase(make_rules("q(X) :- p(X)."), make_facts("p(a)"))
    assert result.saturated
    assert result.depth == 2
    assert entails_facts(result.branches[0].facts, make_cq("q(a)"))


def test_satisfied_trigger_does_not_fire():
    result = chase(make_rules("p(Y) :- p(X)."), make_facts("p(a)"))
    assert result.saturated
    assert len(result.branches[0].facts) == 1


def test_growing_chase_stops_at_depth():
    rules = make_rules("p(Y), e(X,Y) :- p(X).")
    result = DisjunctiveChase(rules, max_depth=3).run(make_facts("p(a)"))
    assert not result.saturated
    assert result.depth == 3
    assert len(result.branches[0].facts) == 7


def test_branch_cap_overflow():
    rules = make_rules("[a(X), b(X)] :- p(X).")
    facts = make_facts("p(c1), p(c2), p(c3), p(c4)")
    answer, result = entails_with_result(rules, facts, [make_cq("z(X)")], max_branches=8)
    assert answer is Entailment.UNKNOWN
    assert result.overflow
    assert not result.saturated


def test_fact_variables_are_unknown_individuals():
    facts = make_facts("p(X)")
    assert entails([], facts, [make_cq("p(Y)")])
    assert not entails([], facts, [make_cq("p(a)")])


def test_constraints_are_rejected():
    with pytest.raises(ValueError):
        DisjunctiveChase(make_rules("! :- p(X)."))


def test_negative_depth_is_rejected():
    with pytest.raises(ValueError):
        DisjunctiveChase([], max_depth=-1)


def test_chase_nulls_never_reuse_input_nulls():
    rules = make_rules("q(X,Y) :- p(X).")
    facts = make_facts("p(_:n0), p(_:n1)")
    answer, result = entails_with_result(rules, facts, [make_cq("q(Z,Z)")])
    assert answer is Entailment.UNKNOWN
    assert result.saturated
    assert len({t for a in result.branches[0].facts for t in a.args}) == 4


def test_freeze_keeps_clear_of_existing_nulls():
    facts = make_facts("p(X), q(_:v_X)")
    frozen = freeze(facts)
    assert len({t for a in frozen for t in a.args if is_null(t)}) == 2
    assert not entails_facts(facts, make_cq("p(Z), q(Z)"))


def test_branch_cap_holds_within_one_round():
    rules = make_rules("[a(X), b(X)] :- p(X).")
    facts = make_facts(", ".join(f"p(c{i})" for i in range(20)))
    result = DisjunctiveChase(rules, max_depth=1, max_branches=8).run(facts)
    assert result.overflow
    assert result.depth == 1
    assert len(result.branches) == 8


@pytest.mark.slow
def test_entailment_is_monotone_in_depth():
    confirmed = 0
    for seed in range(100):
        rules, positives = random_problem(seed)
        facts = random_facts(random.Random(seed))
        answers = [entails(rules, facts, positives, max_depth=depth, max_branches=1024)
                   for depth in range(5)]
        for shallow, deep in zip(answers, answers[1:]):
            assert not shallow or deep, f"seed {seed}: {answers}"
        confirmed += bool(answers[-1])
    assert confirmed >= 5
