"""
Problem Reduction
Turns a knowledge base with constraints and a union of queries with negation
into a constraint-free rule set and a union of positive queries
"""

import logging
from typing import Iterable, Optional, Tuple

from formula import Csf, Dsf
from logic_core import FreshNames, Substitution, Term, rename_apart
from rule_model import (ORIGIN_QUERY, ORIGIN_WITNESS, ConjunctiveQueryNeg, KnowledgeBase,
                        Rule, Ucq, ensure_valid, partition)

logger = logging.getLogger(__name__)


class ReductionError(ValueError):
    """Raised when an input does not have the shape a reduction step expects"""


def constraints_to_queries(constraints: Iterable[Rule]) -> Tuple[ConjunctiveQueryNeg, ...]:
    """
    Turn each negative constraint B -> false into the Boolean query B

    Raises:
        ReductionError: If one of the rules has a non-empty head
    """
    queries = []
    for r in constraints:
        if len(r.head):
            raise ReductionError(f'Not a negative constraint: {r}')
        queries.append(ConjunctiveQueryNeg(r.body, label=r.label, origin=ORIGIN_WITNESS))
    return tuple(queries)


def negated_query_to_rule(q: ConjunctiveQueryNeg) -> Rule:
    """
    Negate a query with negated atoms into a rule

    The positive atoms become the body and each negated atom becomes a
    singleton disjunct of the head. Variables occurring only in negated atoms
    become existential variables of the rule.

    Raises:
        ReductionError: If the query has no negated atom
    """
    if not q.negatives:
        raise ReductionError(f'Query has no negated atom: {q}')
    head = Dsf(Csf([a]) for a in q.negatives)
    return Rule(q.positives, head, q.label, ORIGIN_QUERY)


def align_answer_variables(ucq: Ucq, names: Optional[FreshNames] = None) -> Ucq:
    """
    Give every non-Boolean query the answer variable names of the first one

    Answer tuples are matched by position. Other variables that clash with
    the shared names are renamed apart. Boolean queries are returned as is.
    """
    reference = ucq.answer_vars
    if not reference:
        return ucq
    aligned = []
    for q in ucq:
        if q.is_boolean or q.answer_vars == reference:
            aligned.append(q)
            continue
        renamed, renaming = rename_apart(q, set(reference), names=names)
        s = Substitution({renaming.get(Term.var(own)): Term.var(shared)
                          for own, shared in zip(q.answer_vars, reference)})
        aligned.append(renamed.substitute(s))
    return Ucq(tuple(aligned))


def normalize_problem(kb: KnowledgeBase, ucq: Ucq,
                      names: Optional[FreshNames] = None) -> Tuple[Tuple[Rule, ...], Ucq]:
    """
    Reduce the entailment problem to rules without constraints and a positive union

    Args:
        kb: Knowledge base (facts are not used)
        ucq: Union of queries, possibly with negated atoms
        names: Fresh name generator used for renaming

    Returns:
        Tuple of (rules, positive_ucq); answer variables share one set of names
        and no other variable carries one of those names

    Raises:
        ValidationError: If the knowledge base or the queries are not well formed
    """
    ensure_valid(kb, ucq)
    ucq = align_answer_variables(ucq, names)
    answers = set(ucq.answer_vars)

    def apart(x):
        return rename_apart(x, answers, names=names)[0] if answers else x

    existential, disjunctive, constraints = partition(kb)
    rules = [apart(r) for r in existential + disjunctive]
    for q in ucq.with_negations(1).cqs + ucq.with_many_negations().cqs:
        # answer variables stay as they are, they are frozen during rewriting
        rules.append(negated_query_to_rule(apart_query(q, answers, names)))
    positives = [apart_query(q, answers, names) for q in ucq.with_negations(0)]
    positives.extend(apart(q) for q in constraints_to_queries(constraints))
    logger.debug('Normalized problem: %d rules, %d positive queries', len(rules), len(positives))
    return tuple(rules), Ucq(tuple(positives))


def apart_query(q: ConjunctiveQueryNeg, answers: set,
                names: Optional[FreshNames] = None) -> ConjunctiveQueryNeg:
    """Rename the non-answer variables of a query that clash with the shared answer names"""
    own = set(q.answer_vars)
    clashing = answers - own
    if not clashing:
        return q
    return rename_apart(q, clashing, avoid=answers, names=names)[0]
