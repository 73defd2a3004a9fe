"""
Rule Model
Rules, facts, queries with negation, unions of queries and knowledge bases,
with the structural accessors and the well-formedness validator
"""

from dataclasses import dataclass, field
from typing import Dict, Iterable, Iterator, List, Optional, Tuple

from formula import Csf, Dsf, is_variant, shape_key
from logic_core import Atom, Substitution, Term

ORIGIN_QUERY = 'query'
ORIGIN_WITNESS = 'inconsistency-witness'

CONSTRAINT = 'constraint'
EXISTENTIAL = 'existential'
DISJUNCTIVE = 'disjunctive'


@dataclass(frozen=True)
class Diagnostic:
    """A problem found while reading or validating input"""
    message: str
    code: str = 'invalid'
    severity: str = 'error'
    line: Optional[int] = None
    column: Optional[int] = None

    def __str__(self) -> str:
        where = f'{self.line}:{self.column}: ' if self.line is not None else ''
        return f'{where}{self.severity}: {self.message} [{self.code}]'

    def to_dict(self) -> dict:
        return {
            'message': self.message,
            'code': self.code,
            'severity': self.severity,
            'line': self.line,
            'column': self.column,
        }


class ValidationError(ValueError):
    """Raised when a knowledge base or query set is not well formed"""

    def __init__(self, diagnostics: List[Diagnostic]):
        self.diagnostics = list(diagnostics)
        summary = '; '.join(str(d) for d in self.diagnostics[:5])
        more = f' (+{len(self.diagnostics) - 5} more)' if len(self.diagnostics) > 5 else ''
        super().__init__(f'{summary}{more}')


def _ordered(names: Iterable[str]) -> Tuple[str, ...]:
    return tuple(dict.fromkeys(names))


@dataclass(frozen=True)
class Rule:
    """
    Body implies a disjunction of conjunctive heads

    Zero disjuncts is a negative constraint, one is an existential rule,
    more than one is a disjunctive existential rule.
    """
    body: Csf
    head: Dsf = field(default_factory=Dsf)
    label: Optional[str] = field(default=None, compare=False)
    origin: Optional[str] = field(default=None, compare=False)  # None for input rules

    @property
    def kind(self) -> str:
        if len(self.head) == 0:
            return CONSTRAINT
        if len(self.head) == 1:
            return EXISTENTIAL
        return DISJUNCTIVE

    @property
    def frontier(self) -> Tuple[str, ...]:
        head_vars = set(self.head.variables())
        return tuple(v for v in self.body.variables() if v in head_vars)

    @property
    def existential_vars(self) -> Tuple[str, ...]:
        body_vars = set(self.body.variables())
        return tuple(v for v in self.head.variables() if v not in body_vars)

    def disjunct_existentials(self, index: int) -> Tuple[str, ...]:
        body_vars = set(self.body.variables())
        return tuple(v for v in self.head[index].variables() if v not in body_vars)

    def variables(self) -> Tuple[str, ...]:
        return _ordered(self.body.variables() + self.head.variables())

    def substitute(self, s: Substitution) -> 'Rule':
        return Rule(self.body.substitute(s), self.head.substitute(s), self.label, self.origin)

    def relabel(self, label: Optional[str]) -> 'Rule':
        return Rule(self.body, self.head, label, self.origin)

    def __str__(self) -> str:
        head = ' | '.join(f'({d})' for d in self.head) or 'false'
        return f'{self.body} -> {head}'


@dataclass(frozen=True)
class Fact:
    """A fact statement; its variables are unknown individuals"""
    atoms: Csf
    label: Optional[str] = field(default=None, compare=False)


@dataclass(frozen=True)
class ConjunctiveQueryNeg:
    """
    Conjunctive query with negated atoms

    Variables of the positive atoms are existential, variables that occur only
    in negated atoms are universal, and answer variables are free.
    """
    positives: Csf
    negatives: Csf = field(default_factory=Csf)
    answer_vars: Tuple[str, ...] = ()
    label: Optional[str] = field(default=None, compare=False)
    origin: str = field(default=ORIGIN_QUERY, compare=False)

    @property
    def negation_count(self) -> int:
        return len(self.negatives)

    @property
    def is_boolean(self) -> bool:
        return not self.answer_vars

    @property
    def existential_vars(self) -> Tuple[str, ...]:
        answers = set(self.answer_vars)
        return tuple(v for v in self.positives.variables() if v not in answers)

    @property
    def universal_vars(self) -> Tuple[str, ...]:
        positive = set(self.positives.variables())
        return tuple(v for v in self.negatives.variables() if v not in positive)

    @property
    def frontier(self) -> Tuple[str, ...]:
        negative = set(self.negatives.variables())
        return tuple(v for v in self.positives.variables() if v in negative)

    def variables(self) -> Tuple[str, ...]:
        return _ordered(self.positives.variables() + self.negatives.variables())

    def substitute(self, s: Substitution) -> 'ConjunctiveQueryNeg':
        answers = []
        for name in self.answer_vars:
            image = s.get(Term.var(name))
            answers.append(image.name if image.is_variable else name)
        return ConjunctiveQueryNeg(self.positives.substitute(s), self.negatives.substitute(s),
                                   tuple(answers), self.label, self.origin)

    def with_label(self, label: Optional[str],
                   origin: Optional[str] = None) -> 'ConjunctiveQueryNeg':
        return ConjunctiveQueryNeg(self.positives, self.negatives, self.answer_vars,
                                   label, origin or self.origin)

    def __str__(self) -> str:
        literals = [str(a) for a in self.positives] + [f'-{a}' for a in self.negatives]
        head = f"?({','.join(self.answer_vars)})" if self.answer_vars else '?'
        return f"{head} :- {', '.join(literals)}"


@dataclass(frozen=True)
class Ucq:
    """Union of conjunctive queries with negation"""
    cqs: Tuple[ConjunctiveQueryNeg, ...] = ()

    def __iter__(self) -> Iterator[ConjunctiveQueryNeg]:
        return iter(self.cqs)

    def __len__(self) -> int:
        return len(self.cqs)

    def with_negations(self, k: int) -> 'Ucq':
        """Members with exactly k negated atoms"""
        return Ucq(tuple(q for q in self.cqs if q.negation_count == k))

    def with_many_negations(self) -> 'Ucq':
        """Members with two or more negated atoms"""
        return Ucq(tuple(q for q in self.cqs if q.negation_count >= 2))

    @property
    def answer_vars(self) -> Tuple[str, ...]:
        for q in self.cqs:
            if q.answer_vars:
                return q.answer_vars
        return ()


@dataclass
class KnowledgeBase:
    """Rules and facts plus the predicate arity table"""
    rules: Tuple[Rule, ...] = ()
    facts: Csf = field(default_factory=Csf)
    predicates: Dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        self.rules = tuple(self.rules)
        if not self.predicates:
            for a in list(self.facts) + [a for r in self.rules for a in _rule_atoms(r)]:
                self.predicates.setdefault(a.predicate, a.arity)

    @classmethod
    def from_statements(cls, statements: Iterable) -> 'KnowledgeBase':
        """Build a knowledge base from parsed statements (queries are ignored)"""
        rules, facts = [], []
        for statement in statements:
            if isinstance(statement, Rule):
                rules.append(statement)
            elif isinstance(statement, Fact):
                facts.extend(statement.atoms)
        return cls(tuple(rules), Csf(facts))

    def partition(self) -> Tuple[Tuple[Rule, ...], Tuple[Rule, ...], Tuple[Rule, ...]]:
        return partition(self)

    @property
    def existential_rules(self) -> Tuple[Rule, ...]:
        return partition(self)[0]

    @property
    def disjunctive_rules(self) -> Tuple[Rule, ...]:
        return partition(self)[1]

    @property
    def constraints(self) -> Tuple[Rule, ...]:
        return partition(self)[2]


def _rule_atoms(r: Rule) -> List[Atom]:
    return list(r.body) + list(r.head.atoms())


def partition(kb) -> Tuple[Tuple[Rule, ...], Tuple[Rule, ...], Tuple[Rule, ...]]:
    """
    Split rules into existential rules, disjunctive rules and constraints

    Args:
        kb: KnowledgeBase or any iterable of rules

    Returns:
        Tuple of (existential, disjunctive, constraints)
    """
    rules = kb.rules if isinstance(kb, KnowledgeBase) else tuple(kb)
    existential = tuple(r for r in rules if r.kind == EXISTENTIAL)
    disjunctive = tuple(r for r in rules if r.kind == DISJUNCTIVE)
    constraints = tuple(r for r in rules if r.kind == CONSTRAINT)
    return existential, disjunctive, constraints


def frontier(r: Rule) -> Tuple[str, ...]:
    return r.frontier


def existential_vars(r: Rule) -> Tuple[str, ...]:
    return r.existential_vars


def rule_kind(r: Rule) -> str:
    return r.kind


def encode_rule(r: Rule) -> Csf:
    """Flatten a rule into one CSF so variant checks can reuse CSF machinery"""
    atoms = [Atom(f'#b:{a.predicate}', a.args) for a in r.body]
    for index, disjunct in enumerate(r.head):
        marker = Term.var(f'#d{index}')
        atoms.extend(Atom(f'#h:{a.predicate}', a.args + (marker,)) for a in disjunct)
    return Csf(atoms)


def rule_shape(r: Rule, frozen: Iterable[str] = ()) -> Tuple:
    return (len(r.head), shape_key(encode_rule(r), frozen))


def rule_variant(r1: Rule, r2: Rule, frozen: Iterable[str] = ()) -> bool:
    """True when two rules are equal up to variable renaming and disjunct order"""
    if len(r1.head) != len(r2.head) or len(r1.body) != len(r2.body):
        return False
    return is_variant(encode_rule(r1), encode_rule(r2), frozen)


def validate(kb: Optional[KnowledgeBase] = None,
             queries: Optional[Iterable[ConjunctiveQueryNeg]] = None) -> List[Diagnostic]:
    """
    Check a knowledge base and its queries for well-formedness

    Args:
        kb: Knowledge base to check (optional)
        queries: Queries to check alongside it (optional)

    Returns:
        List of diagnostics; empty when everything is well formed
    """
    diagnostics: List[Diagnostic] = []
    arities: Dict[str, int] = {}
    queries = list(queries or ())

    def check_arity(a: Atom, where: str):
        known = arities.setdefault(a.predicate, a.arity)
        if known != a.arity:
            diagnostics.append(Diagnostic(
                f"predicate '{a.predicate}' used with arity {a.arity} in {where}, "
                f"previously {known}", code='arity-conflict'))
            arities[a.predicate] = a.arity

    if kb is not None:
        for a in kb.facts:
            check_arity(a, 'facts')
        for r in kb.rules:
            where = f"rule '{r.label}'" if r.label else f'rule {r}'
            for a in _rule_atoms(r):
                check_arity(a, where)
            if r.body.is_empty:
                diagnostics.append(Diagnostic(f'{where} has an empty body', code='empty-body'))

    answer_arity = None
    for q in queries:
        where = f"query '{q.label}'" if q.label else f'query {q}'
        for a in list(q.positives) + list(q.negatives):
            check_arity(a, where)
        if q.positives.is_empty:
            diagnostics.append(Diagnostic(f'{where} has no positive atom', code='empty-query'))
        if len(set(q.answer_vars)) != len(q.answer_vars):
            diagnostics.append(Diagnostic(f'{where} repeats an answer variable',
                                          code='duplicate-answer-var'))
        positive = set(q.positives.variables())
        unsafe = [v for v in dict.fromkeys(q.answer_vars) if v not in positive]
        if unsafe:
            diagnostics.append(Diagnostic(
                f"{where}: answer variable(s) {', '.join(unsafe)} not in a positive atom",
                code='unsafe-answer-var'))
        if q.answer_vars:
            if answer_arity is None:
                answer_arity = len(q.answer_vars)
            elif answer_arity != len(q.answer_vars):
                diagnostics.append(Diagnostic(
                    f'{where} has {len(q.answer_vars)} answer variables, other queries have '
                    f'{answer_arity}', code='answer-arity'))
    return diagnostics


def ensure_valid(kb: Optional[KnowledgeBase] = None,
                 queries: Optional[Iterable[ConjunctiveQueryNeg]] = None):
    """Raise ValidationError when validate reports any error"""
    errors = [d for d in validate(kb, queries) if d.severity == 'error']
    if errors:
        raise ValidationError(errors)
