"""
Chase Oracle
Bounded restricted chase with disjunctive branching, used as a ground-truth
entailment check on small instances
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, Iterable, List, Optional, Set, Tuple

from formula import Csf, freeze, homomorphism, iter_homomorphisms
from logic_core import FreshNames, Substitution, Term, TermKind
from rule_model import CONSTRAINT, ConjunctiveQueryNeg, Rule

logger = logging.getLogger(__name__)

DEFAULT_DEPTH = 3
DEFAULT_MAX_BRANCHES = 256


class Entailment(Enum):
    """A bounded chase can confirm entailment but never refute it"""
    TRUE = 'true'
    UNKNOWN = 'unknown'

    def __bool__(self) -> bool:
        return self is Entailment.TRUE

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class Branch:
    """One alternative model under construction"""
    facts: Csf
    depth: int = 0


@dataclass
class ChaseResult:
    branches: List[Branch] = field(default_factory=list)
    saturated: bool = False
    overflow: bool = False
    depth: int = 0


def _queries(ucq) -> List[Csf]:
    return [q.positives if isinstance(q, ConjunctiveQueryNeg) else
            (q if isinstance(q, Csf) else Csf(q)) for q in ucq]


class DisjunctiveChase:
    """
    Breadth-first restricted chase

    Each round collects the active triggers of every open branch and fires
    them in order. A trigger is active when no head disjunct is already
    satisfied by an extension of its body match. Firing a trigger of a
    disjunctive rule splits the branch, one child per disjunct; existential
    variables get fresh labelled nulls.
    """

    def __init__(self, rules: Iterable[Rule], max_depth: int = DEFAULT_DEPTH,
                 max_branches: int = DEFAULT_MAX_BRANCHES):
        """
        Initialize the chase

        Args:
            rules: Existential and disjunctive rules (constraints are not allowed)
            max_depth: Number of rounds
            max_branches: Cap on simultaneously open branches
        """
        self.rules = tuple(rules)
        if any(r.kind == CONSTRAINT for r in self.rules):
            raise ValueError('The chase does not take constraints; pass them as queries')
        if max_depth < 0:
            raise ValueError(f'max_depth must be non-negative, got {max_depth}')
        self.max_depth = max_depth
        self.max_branches = max_branches
        self._nulls = FreshNames(prefix='n')
        self._taken: Set[str] = set()

    def _fresh_null(self) -> Term:
        return Term.null(self._nulls.fresh(self._taken))

    def _triggers(self, facts: Csf) -> List[Tuple[Rule, Substitution]]:
        triggers = []
        for rule in self.rules:
            for match in iter_homomorphisms(rule.body, facts):
                if self._active(rule, match, facts):
                    triggers.append((rule, match))
        return triggers

    @staticmethod
    def _active(rule: Rule, match: Substitution, facts: Csf) -> bool:
        for disjunct in rule.head:
            if homomorphism(disjunct.substitute(match), facts) is not None:
                return False
        return True

    def _fire(self, rule: Rule, match: Substitution, facts: Csf) -> List[Csf]:
        children = []
        for index, disjunct in enumerate(rule.head):
            nulls = {Term.var(v): self._fresh_null() for v in rule.disjunct_existentials(index)}
            image = disjunct.substitute(match).substitute(Substitution(nulls))
            children.append(facts.union(image))
        return children

    def _round(self, facts: Csf) -> Optional[List[Csf]]:
        """
        Fire every trigger active at the start of the round; None when there was none

        Stops splitting once the states outnumber max_branches, returning one
        state more than the cap so the caller sees the overflow.
        """
        triggers = self._triggers(facts)
        if not triggers:
            return None
        states = [facts]
        for rule, match in triggers:
            expanded = []
            for state in states:
                if self._active(rule, match, state):
                    expanded.extend(self._fire(rule, match, state))
                else:
                    expanded.append(state)
            states = list(dict.fromkeys(expanded))
            if len(states) > self.max_branches:
                return states[:self.max_branches + 1]
        return states

    def run(self, facts, stop: Optional[Callable[[Csf], bool]] = None) -> ChaseResult:
        """
        Chase a fact set

        Args:
            facts: Facts (their variables are treated as unknown individuals)
            stop: Predicate closing a branch early when it holds

        Returns:
            ChaseResult with the open branches left at the end
        """
        facts = freeze(facts)
        self._nulls.reset()
        self._taken = {t.name for a in facts for t in a.args if t.kind is TermKind.NULL}
        if stop is not None and stop(facts):
            return ChaseResult([], saturated=True, depth=0)
        open_branches = [Branch(facts, 0)]
        result = ChaseResult(depth=0)
        for depth in range(1, self.max_depth + 1):
            next_branches: Dict[Branch, None] = {}
            progressed = False
            for branch in open_branches:
                states = self._round(branch.facts)
                if states is None:
                    next_branches.setdefault(branch, None)
                    continue
                progressed = True
                for state in states:
                    if stop is None or not stop(state):
                        next_branches.setdefault(Branch(state, depth), None)
                if len(next_branches) > self.max_branches:
                    break
            open_branches = list(next_branches)
            result.depth = depth
            if len(open_branches) > self.max_branches:
                logger.warning('Chase branch cap %d exceeded at depth %d',
                               self.max_branches, depth)
                result.overflow = True
                open_branches = open_branches[:self.max_branches]
                break
            if not progressed:
                break
        result.branches = open_branches
        result.saturated = not result.overflow and \
            all(not self._triggers(b.facts) for b in open_branches)
        return result


def chase(rules: Iterable[Rule], facts, max_depth: int = DEFAULT_DEPTH,
          max_branches: int = DEFAULT_MAX_BRANCHES) -> ChaseResult:
    """Run the bounded disjunctive chase"""
    return DisjunctiveChase(rules, max_depth, max_branches).run(facts)


def entails(rules: Iterable[Rule], facts, ucq, max_depth: int = DEFAULT_DEPTH,
            max_branches: int = DEFAULT_MAX_BRANCHES) -> Entailment:
    """
    Decide rules, facts |= ucq as far as the bounded chase can tell

    A branch is closed as soon as one query maps into it. The answer is TRUE
    when every branch closes within the depth bound, UNKNOWN otherwise.
    """
    return entails_with_result(rules, facts, ucq, max_depth, max_branches)[0]


def entails_with_result(rules: Iterable[Rule], facts, ucq, max_depth: int = DEFAULT_DEPTH,
                        max_branches: int = DEFAULT_MAX_BRANCHES
                        ) -> Tuple[Entailment, ChaseResult]:
    """Like entails, also returning the chase result for its open branches"""
    queries = _queries(ucq)

    def satisfied(state: Csf) -> bool:
        return any(homomorphism(q, state) is not None for q in queries)

    result = DisjunctiveChase(rules, max_depth, max_branches).run(facts, stop=satisfied)
    if not result.branches and not result.overflow:
        return Entailment.TRUE, result
    return Entailment.UNKNOWN, result
