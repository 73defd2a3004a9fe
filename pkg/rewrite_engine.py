"""
UCQ Rewriting Engine
Piece-based rewriting steps for existential and disjunctive existential rules,
and the alternating fixpoint that compiles a union of conjunctive queries
into a UCQ-rewriting
"""

import logging
import time
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations, product
from typing import (Callable, Dict, FrozenSet, Iterable, Iterator, List, Optional, Sequence,
                    Set, Tuple, Union)

from formula import Csf, Dsf, is_variant, subsumes
from logic_core import Atom, FreshNames, Substitution, Term, rename_apart
from rule_model import (CONSTRAINT, DISJUNCTIVE, EXISTENTIAL, ORIGIN_QUERY, ORIGIN_WITNESS,
                        ConjunctiveQueryNeg, Rule, Ucq, rule_shape, rule_variant)

logger = logging.getLogger(__name__)

DEFAULT_K = 2
DEFAULT_MAX_ITERATIONS = 64

Observer = Callable[['PieceUnification'], None]


@dataclass(frozen=True)
class PieceUnification:
    """
    A unifier between parts of selected head disjuncts and a part of a query

    Attributes:
        rule: The rule, already renamed apart from the query
        query: The whole query
        selected: Pairs of (disjunct index, unified head atoms of that disjunct)
        query_part: The unified query atoms
        mgu: Most general unifier making every head part equal to the query part
        frozen: Variable names treated as constants
    """
    rule: Rule
    query: Csf
    selected: Tuple[Tuple[int, Tuple[Atom, ...]], ...]
    query_part: Csf
    mgu: Substitution
    frozen: FrozenSet[str] = frozenset()

    @property
    def disjunct_indexes(self) -> Tuple[int, ...]:
        return tuple(index for index, _ in self.selected)

    @property
    def rest(self) -> Csf:
        return self.query.without(self.query_part)

    def rewriting(self) -> Csf:
        """The rewritten query (B + rest) under the mgu"""
        return self.rule.body.union(self.rest).substitute(self.mgu)

    def rule_rewriting(self) -> Rule:
        """The rewritten rule (B + rest -> H minus the selected disjuncts) under the mgu"""
        chosen = set(self.disjunct_indexes)
        head = Dsf(d for i, d in enumerate(self.rule.head) if i not in chosen)
        return Rule(self.rewriting(), head.substitute(self.mgu), self.rule.label, self.rule.origin)


def _as_csf(f) -> Csf:
    if isinstance(f, Csf):
        return f
    if isinstance(f, ConjunctiveQueryNeg):
        return f.positives
    return Csf(f)


def disjunct_selections(size: int) -> List[Tuple[int, ...]]:
    """Every non-empty set of disjunct indexes, smallest first"""
    return [c for n in range(1, size + 1) for c in combinations(range(size), n)]


def _root(parent: Dict[Term, Term], term: Term) -> Term:
    while parent.get(term, term) != term:
        term = parent[term]
    return term


def _merge(parent: Dict[Term, Term], a: Term, b: Term, frozen: FrozenSet[str]) -> bool:
    ra, rb = _root(parent, a), _root(parent, b)
    if ra == rb:
        return True
    if ra.is_rigid(frozen) and rb.is_rigid(frozen):
        return False
    if ra.is_rigid(frozen):
        parent[rb] = ra
    else:
        parent[ra] = rb
    return True


def _assignments(query_atoms: Sequence[Atom], selected: Sequence[Sequence[Atom]],
                 frozen: FrozenSet[str]
                 ) -> Iterator[Tuple[Tuple[Optional[Tuple[Atom, ...]], ...], Dict]]:
    """Map each query atom to nothing or to one head atom per selected disjunct"""
    candidates = []
    for q in query_atoms:
        per_disjunct = [[a for a in disjunct if a.signature == q.signature]
                        for disjunct in selected]
        candidates.append(list(product(*per_disjunct)) if all(per_disjunct) else [])

    def extend(position: int, parent: Dict[Term, Term], chosen: Tuple):
        if position == len(query_atoms):
            yield chosen, parent
            return
        yield from extend(position + 1, parent, chosen + (None,))
        q = query_atoms[position]
        for heads in candidates[position]:
            trial = dict(parent)
            if all(_merge(trial, s, t, frozen) for a in heads for s, t in zip(a.args, q.args)):
                yield from extend(position + 1, trial, chosen + (heads,))

    yield from extend(0, {}, ())


def _rank(term: Term, frontier: FrozenSet[str], owners: Dict[str, int],
          frozen: FrozenSet[str]) -> int:
    if term.is_rigid(frozen):
        return 0
    if term.name in frontier:
        return 1
    if term.name in owners:
        return 2
    return 3


def _oriented_mgu(parent: Dict[Term, Term], frontier: FrozenSet[str], owners: Dict[str, int],
                  frozen: FrozenSet[str]) -> Optional[Substitution]:
    """
    Resolve union-find classes into an idempotent substitution

    Class representatives are rigid terms, then frontier variables, then
    existential variables, then query variables. Returns None when a class
    breaks existential rigidity.
    """
    classes: Dict[Term, List[Term]] = defaultdict(list)
    for term in dict.fromkeys(list(parent) + list(parent.values())):
        classes[_root(parent, term)].append(term)
    bindings = {}
    for members in classes.values():
        existentials = [t for t in members if t.is_variable and t.name in owners
                        and not t.is_rigid(frozen)]
        if existentials:
            if any(t.is_rigid(frozen) or t.name in frontier for t in members):
                return None
            disjuncts = [owners[t.name] for t in existentials]
            if len(disjuncts) != len(set(disjuncts)):
                return None
        representative = min(members, key=lambda t: (_rank(t, frontier, owners, frozen),
                                                     t.sort_key()))
        for t in members:
            if t != representative and not t.is_rigid(frozen):
                bindings[t] = representative
    return Substitution(bindings)


def separate_existentials(rule: Rule, avoid: Iterable[str] = (),
                          names: Optional[FreshNames] = None) -> Rule:
    """Give each head disjunct its own existential variable names"""
    if len(rule.head) < 2:
        return rule
    names = names or FreshNames()
    taken = set(rule.variables()) | set(avoid)
    seen: Set[str] = set()
    disjuncts = []
    for index, disjunct in enumerate(rule.head):
        shared = [v for v in rule.disjunct_existentials(index) if v in seen]
        seen.update(rule.disjunct_existentials(index))
        if shared:
            bindings = {}
            for v in shared:
                new = names.fresh(taken)
                taken.add(new)
                bindings[Term.var(v)] = Term.var(new)
            disjunct = disjunct.substitute(Substitution(bindings))
        disjuncts.append(disjunct)
    return Rule(rule.body, Dsf(disjuncts), rule.label, rule.origin)


def iter_piece_unifications(rule: Rule, query, frozen: Iterable[str] = (),
                            selections: Optional[Iterable[Tuple[int, ...]]] = None
                            ) -> Iterator[PieceUnification]:
    """
    Enumerate the valid piece unifications of a rule head with a query

    The rule must share no unfrozen variable with the query.

    Args:
        rule: Rule renamed apart from the query
        query: Conjunctive query (CSF of atoms)
        frozen: Variable names treated as constants
        selections: Sets of disjunct indexes to unify (default: every non-empty set)

    Yields:
        One PieceUnification per admissible mapping of query atoms to head atoms
    """
    query = _as_csf(query)
    frozen = frozenset(frozen)
    rule = separate_existentials(rule, avoid=set(query.variables()) | frozen)
    if selections is None:
        selections = disjunct_selections(len(rule.head))
    frontier = frozenset(rule.frontier)
    owners = {v: index for index in range(len(rule.head))
              for v in rule.disjunct_existentials(index)}
    for selection in selections:
        selected = [rule.head[index] for index in selection]
        for assignment, parent in _assignments(query.atoms, selected, frozen):
            if all(heads is None for heads in assignment):
                continue
            query_part = Csf(q for q, heads in zip(query.atoms, assignment) if heads is not None)
            parts: Dict[int, List[Atom]] = {index: [] for index in selection}
            for heads in assignment:
                if heads is not None:
                    for index, a in zip(selection, heads):
                        parts[index].append(a)
            theta = _oriented_mgu(parent, frontier, owners, frozen)
            if theta is None:
                continue
            rest_vars = set(query.without(query_part).variables())
            if not _conditions_hold(theta, rest_vars, frontier, owners, frozen):
                continue
            yield PieceUnification(rule, query,
                                   tuple((index, tuple(dict.fromkeys(parts[index])))
                                         for index in selection),
                                   query_part, theta, frozen)


def _conditions_hold(theta: Substitution, rest_vars: Set[str], frontier: FrozenSet[str],
                     owners: Dict[str, int], frozen: FrozenSet[str]) -> bool:
    for name in rest_vars:
        image = theta.get(Term.var(name))
        if image.is_variable and image.name != name and image.name not in frontier \
                and image.name not in frozen:
            return False
    for name in owners:
        image = theta.get(Term.var(name))
        if image.is_variable and image.name in rest_vars:
            return False
    return True


def validate_piece_unification(pu: PieceUnification) -> List[str]:
    """
    Re-check a piece unification against the rewriting step conditions

    Returns:
        Human-readable violations; empty when the unification is valid
    """
    problems = []
    rule, theta, frozen = pu.rule, pu.mgu, pu.frozen
    query_atoms = set(pu.query)
    query_part = set(pu.query_part)
    if not pu.selected:
        problems.append('no head disjunct selected')
    if not query_part:
        problems.append('empty query part')
    if not query_part <= query_atoms:
        problems.append('query part is not a subset of the query')
    target = {a.substitute(theta) for a in query_part}
    for index, atoms in pu.selected:
        if not atoms:
            problems.append(f'empty head part for disjunct {index}')
        if not set(atoms) <= set(rule.head[index]):
            problems.append(f'head part is not a subset of disjunct {index}')
        if {a.substitute(theta) for a in atoms} != target:
            problems.append(f'disjunct {index} part and query part differ under the unifier')
    for name in frozen:
        if theta.get(Term.var(name)) != Term.var(name):
            problems.append(f'frozen variable {name} is bound')
    frontier = set(rule.frontier)
    rest_vars = set(pu.rest.variables())
    for name in sorted(rest_vars):
        image = theta.get(Term.var(name))
        if image == Term.var(name) or not image.is_variable:
            continue
        if image.name not in frontier and image.name not in frozen:
            problems.append(f'rest variable {name} is mapped to {image}, '
                            f'neither a frontier variable nor a constant')
    frontier_images = {theta.get(Term.var(name)) for name in frontier}
    for index, _ in pu.selected:
        existentials = rule.disjunct_existentials(index)
        images = [theta.get(Term.var(name)) for name in existentials]
        for name, image in zip(existentials, images):
            if image.is_variable and image.name in rest_vars:
                problems.append(f'existential {name} leaks: mapped to {image}, '
                                f'which occurs outside the query part')
            if image.is_rigid(frozen):
                problems.append(f'existential {name} is mapped to the rigid term {image}')
            if image in frontier_images:
                problems.append(f'existential {name} is merged with a frontier variable')
        if len(set(images)) != len(images):
            problems.append(f'existentials of disjunct {index} are merged together')
    return problems


def _prepare(rule: Rule, query: Csf, frozen: FrozenSet[str], names: FreshNames) -> Rule:
    reserved = set(query.variables()) - frozen
    renamed, _ = rename_apart(rule, reserved, avoid=set(query.variables()) | frozen, names=names)
    return renamed


def existential_step(r: Rule, q, frozen: Iterable[str] = (), names: Optional[FreshNames] = None,
                     observer: Optional[Observer] = None) -> List[Csf]:
    """
    Rewrite a query with an existential rule

    Args:
        r: Rule with exactly one head disjunct
        q: Conjunctive query
        frozen: Variable names treated as constants
        names: Fresh name generator for renaming the rule apart
        observer: Called with every accepted piece unification

    Returns:
        The distinct rewritings, one per valid piece unification
    """
    if len(r.head) != 1:
        raise ValueError(f'Existential step needs a rule with one head disjunct: {r}')
    q, frozen = _as_csf(q), frozenset(frozen)
    renamed = _prepare(r, q, frozen, names or FreshNames())
    results: Dict[Csf, None] = {}
    for pu in iter_piece_unifications(renamed, q, frozen, selections=((0,),)):
        if observer:
            observer(pu)
        results.setdefault(pu.rewriting(), None)
    return list(results)


def disjunctive_step(r: Rule, q, frozen: Iterable[str] = (), names: Optional[FreshNames] = None,
                     observer: Optional[Observer] = None) -> List[Rule]:
    """
    Rewrite a query with a (disjunctive) rule into rules with fewer disjuncts

    Whole selected disjuncts are removed from the head. A result with one
    disjunct is an existential rule; one with none is a negative constraint.
    """
    if len(r.head) == 0:
        raise ValueError(f'Disjunctive step needs a rule with a head: {r}')
    q, frozen = _as_csf(q), frozenset(frozen)
    renamed = _prepare(r, q, frozen, names or FreshNames())
    results: Dict[Rule, None] = {}
    for pu in iter_piece_unifications(renamed, q, frozen):
        if observer:
            observer(pu)
        results.setdefault(pu.rule_rewriting(), None)
    return list(results)


def prune(ucq, frozen: Iterable[str] = ()) -> List[Csf]:
    """
    Keep only the most general queries

    Earlier queries win ties, so of two equivalent queries the first is kept.
    """
    frozen = frozenset(frozen)
    kept: List[Csf] = []
    for q in ucq:
        q = _as_csf(q)
        if any(subsumes(k, q, frozen) for k in kept):
            continue
        kept = [k for k in kept if not subsumes(q, k, frozen)]
        kept.append(q)
    return kept


@dataclass
class RewriteBudget:
    """Limits on a rewriting run; None disables a limit"""
    max_iterations: Optional[int] = DEFAULT_MAX_ITERATIONS
    timeout_secs: Optional[float] = None
    max_cqs: Optional[int] = None


@dataclass(frozen=True)
class CqEntry:
    query: Csf
    generation: int = 0
    origin: str = ORIGIN_QUERY
    label: Optional[str] = None


@dataclass
class RewritingState:
    """The growing pair of rules and queries; queries hold the pruned view"""
    rules: List[Rule] = field(default_factory=list)
    rule_generations: List[int] = field(default_factory=list)
    cqs: List[CqEntry] = field(default_factory=list)
    constraints: List[Rule] = field(default_factory=list)

    @property
    def queries(self) -> List[Csf]:
        return [entry.query for entry in self.cqs]


@dataclass
class RewriteStats:
    iterations: int = 0
    completed_iterations: int = 0
    cq_generated: int = 0
    cq_kept_after_prune: int = 0
    rules_generated: int = 0
    converged: bool = False
    stop_reason: Optional[str] = None


@dataclass
class RewriteResult:
    ucq: Ucq
    state: RewritingState
    stats: RewriteStats

    @property
    def converged(self) -> bool:
        return self.stats.converged

    @property
    def queries(self) -> List[Csf]:
        return self.state.queries


class BudgetExhausted(Exception):
    """Internal signal that a budget limit was reached"""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


def _combine(rule_origin: Optional[str], cq_origin: str) -> str:
    if ORIGIN_QUERY in (rule_origin, cq_origin):
        return ORIGIN_QUERY
    return ORIGIN_WITNESS


def _as_queries(ucq) -> List[ConjunctiveQueryNeg]:
    queries = []
    for q in ucq:
        if isinstance(q, ConjunctiveQueryNeg):
            queries.append(q)
        else:
            queries.append(ConjunctiveQueryNeg(_as_csf(q)))
    return queries


class UcqRewriter:
    """
    Compile a union of positive queries under existential and disjunctive rules

    Existential expansion (bounded to k levels per call) alternates with the
    closure of disjunctive steps until neither adds a rule or a query, or
    until the budget runs out. Results gathered so far are always returned.
    """

    def __init__(self, rules: Iterable[Rule], ucq, k: Optional[int] = DEFAULT_K,
                 frozen: Optional[Iterable[str]] = None, budget: Optional[RewriteBudget] = None,
                 jobs: int = 1, prune: bool = True, observer: Optional[Observer] = None,
                 name_seed: int = 0, answer_vars: Optional[Sequence[str]] = None):
        """
        Initialize the rewriter

        Args:
            rules: Existential and disjunctive rules (no constraints)
            ucq: Positive queries (Ucq, ConjunctiveQueryNeg or CSF items)
            k: Levels per existential expansion call, None for unbounded
            frozen: Variable names treated as constants (default: the answer variables)
            budget: Iteration, time and size limits
            jobs: Worker threads for the steps of one level
            prune: Keep only most general queries
            observer: Called with every accepted piece unification
            name_seed: First index of the fresh variable names
            answer_vars: Answer tuple of the output (default: taken from the queries)
        """
        rules = tuple(rules)
        queries = _as_queries(ucq)
        if any(r.kind == CONSTRAINT for r in rules):
            raise ValueError('Constraints must be turned into queries before rewriting')
        if any(q.negatives for q in queries):
            raise ValueError('Queries with negated atoms must be turned into rules first')
        if k == float('inf'):
            k = None
        if k is not None and k < 0:
            raise ValueError(f'k must be a natural number, got {k}')

        self.k = k
        self.answer_vars = tuple(answer_vars) if answer_vars is not None \
            else Ucq(tuple(queries)).answer_vars
        self.frozen = frozenset(self.answer_vars if frozen is None else frozen)
        self.budget = budget or RewriteBudget()
        self.jobs = max(1, int(jobs))
        self.prune = prune
        self.observer = observer
        self.name_seed = name_seed

        self.state = RewritingState()
        self.stats = RewriteStats()
        self._rule_buckets: Dict[Tuple, List[int]] = defaultdict(list)
        self._kept: Set[Csf] = set()
        self._expanded: Set[Tuple[int, Csf]] = set()
        self._label_counter = 0
        self._deadline: Optional[float] = None

        for r in rules:
            self._add_rule(r, 0, None)
        for q in queries:
            self._add_cq(q.positives, 0, q.origin, q.label, fixed_label=True)

    # ---- bookkeeping ----

    def _next_label(self, parent: Optional[str], default: str) -> str:
        self._label_counter += 1
        root = parent.split('.rw')[0] if parent else default
        return f'{root}.rw{self._label_counter}'

    def _add_rule(self, rule: Rule, generation: int, parent_label: Optional[str]) -> bool:
        key = rule_shape(rule, self.frozen)
        for index in self._rule_buckets[key]:
            if rule_variant(self.state.rules[index], rule, self.frozen):
                return False
        if generation:
            rule = rule.relabel(self._next_label(parent_label, 'r'))
            self.stats.rules_generated += 1
        self._rule_buckets[key].append(len(self.state.rules))
        self.state.rules.append(rule)
        self.state.rule_generations.append(generation)
        logger.debug('Rule %s: %s', rule.label, rule)
        return True

    def _add_cq(self, query: Csf, generation: int, origin: str, parent_label: Optional[str],
                fixed_label: bool = False) -> Optional[CqEntry]:
        cqs = self.state.cqs
        if self.prune:
            if any(subsumes(e.query, query, self.frozen) for e in cqs):
                return None
            removed = [e for e in cqs if subsumes(query, e.query, self.frozen)]
            if removed:
                cqs = [e for e in cqs if e not in removed]
                self._kept.difference_update(e.query for e in removed)
        elif query in self._kept or any(is_variant(e.query, query, self.frozen) for e in cqs):
            return None
        label = parent_label if fixed_label else self._next_label(parent_label, 'q')
        entry = CqEntry(query, generation, origin, label)
        cqs.append(entry)
        self.state.cqs = cqs
        self._kept.add(query)
        if self.budget.max_cqs is not None and len(cqs) > self.budget.max_cqs:
            raise BudgetExhausted('max-cqs')
        return entry

    def _check_deadline(self):
        if self._deadline is not None and time.monotonic() > self._deadline:
            raise BudgetExhausted('timeout')

    def _map(self, step, pairs: List[Tuple[int, CqEntry]]) -> List[list]:
        if self.jobs > 1 and len(pairs) > 1:
            with ThreadPoolExecutor(max_workers=self.jobs) as pool:
                return list(pool.map(step, pairs))
        return [step(pair) for pair in pairs]

    def _existential_outputs(self, pair: Tuple[int, CqEntry]) -> List[Csf]:
        self._check_deadline()
        index, entry = pair
        return existential_step(self.state.rules[index], entry.query, self.frozen,
                                FreshNames(start=self.name_seed), self.observer)

    def _disjunctive_outputs(self, pair: Tuple[int, CqEntry]) -> List[Rule]:
        self._check_deadline()
        index, entry = pair
        return disjunctive_step(self.state.rules[index], entry.query, self.frozen,
                                FreshNames(start=self.name_seed), self.observer)

    # ---- the two phases ----

    def expand_existential(self, k: Optional[int] = None) -> bool:
        """
        Breadth-first existential expansion, at most k levels

        Returns:
            True when at least one new query was kept
        """
        existential = [i for i, r in enumerate(self.state.rules) if r.kind == EXISTENTIAL]
        frontier = list(self.state.cqs)
        added = False
        level = 0
        while frontier and (k is None or level < k):
            level += 1
            pairs = [(i, e) for e in frontier for i in existential
                     if (i, e.query) not in self._expanded and e.query in self._kept]
            self._expanded.update((i, e.query) for i, e in pairs)
            results = self._map(self._existential_outputs, pairs)
            next_frontier = []
            for (i, entry), outputs in zip(pairs, results):
                origin = _combine(self.state.rules[i].origin, entry.origin)
                for query in outputs:
                    self.stats.cq_generated += 1
                    new = self._add_cq(query, entry.generation + 1, origin, entry.label)
                    if new is not None:
                        next_frontier.append(new)
            added = added or bool(next_frontier)
            frontier = [e for e in next_frontier if e.query in self._kept]
            logger.debug('Existential level %d: %d new queries', level, len(next_frontier))
        return added

    def close_disjunctive(self, inject: bool = True) -> bool:
        """
        Apply disjunctive steps until no new rule appears

        Args:
            inject: Add generated constraints to the queries (otherwise they are only recorded)

        Returns:
            True when a rule or a query was added
        """
        changed = False
        while True:
            disjunctive = [i for i, r in enumerate(self.state.rules) if r.kind == DISJUNCTIVE]
            pairs = [(i, e) for i in disjunctive for e in self.state.cqs
                     if (i, e.query) not in self._expanded]
            if not pairs:
                return changed
            self._expanded.update((i, e.query) for i, e in pairs)
            results = self._map(self._disjunctive_outputs, pairs)
            for (i, entry), outputs in zip(pairs, results):
                source = self.state.rules[i]
                origin = _combine(source.origin, entry.origin)
                generation = max(self.state.rule_generations[i], entry.generation) + 1
                for derived in outputs:
                    derived = Rule(derived.body, derived.head, source.label, origin)
                    if derived.kind == CONSTRAINT:
                        changed = self._add_constraint(derived, generation, inject) or changed
                    else:
                        changed = self._add_rule(derived, generation, source.label) or changed

    def _add_constraint(self, constraint: Rule, generation: int, inject: bool) -> bool:
        self.stats.cq_generated += 1
        if not inject:
            if any(rule_variant(c, constraint, self.frozen) for c in self.state.constraints):
                return False
            label = self._next_label(constraint.label, 'r')
            self.state.constraints.append(constraint.relabel(label))
            self.stats.rules_generated += 1
            return True
        entry = self._add_cq(constraint.body, generation, constraint.origin, constraint.label)
        if entry is None:
            return False
        self.state.constraints.append(constraint.relabel(entry.label))
        return True

    # ---- driver ----

    def rewrite(self) -> RewriteResult:
        """
        Run the alternating fixpoint

        Returns:
            RewriteResult with the kept queries, the final state and run statistics
        """
        started = time.monotonic()
        if self.budget.timeout_secs is not None:
            self._deadline = started + self.budget.timeout_secs
        try:
            while True:
                if self.budget.max_iterations is not None \
                        and self.stats.iterations >= self.budget.max_iterations:
                    raise BudgetExhausted('max-iterations')
                self.stats.iterations += 1
                grew = self.expand_existential(self.k)
                grew = self.close_disjunctive() or grew
                self.stats.completed_iterations += 1
                logger.info('Iteration %d: %d queries, %d rules', self.stats.iterations,
                            len(self.state.cqs), len(self.state.rules))
                if not grew:
                    self.stats.converged = True
                    break
        except BudgetExhausted as exc:
            self.stats.stop_reason = exc.reason
            logger.warning('Rewriting stopped before the fixpoint (%s) after %d iterations',
                           exc.reason, self.stats.iterations)
        self.stats.cq_kept_after_prune = len(self.state.cqs)
        return RewriteResult(self.output_ucq(), self.state, self.stats)

    def output_ucq(self) -> Ucq:
        """Kept queries as a Ucq; answer variables restored where they all occur"""
        answers = set(self.answer_vars)
        cqs = []
        for entry in self.state.cqs:
            keeps_answers = bool(answers) and answers <= set(entry.query.variables())
            cqs.append(ConjunctiveQueryNeg(entry.query,
                                           answer_vars=self.answer_vars if keeps_answers else (),
                                           label=entry.label, origin=entry.origin))
        return Ucq(tuple(cqs))


def _bounded(k) -> Optional[int]:
    return None if k is None or k == float('inf') else int(k)


def rewrite_exists_k(existential_rules: Iterable[Rule], ucq,
                     k: Union[int, float, None] = DEFAULT_K,
                     frozen: Iterable[str] = ()) -> List[Csf]:
    """Bounded breadth-first rewriting with existential rules only"""
    existential_rules = tuple(existential_rules)
    if any(r.kind != EXISTENTIAL for r in existential_rules):
        raise ValueError('rewrite_exists_k only accepts rules with one head disjunct')
    rewriter = UcqRewriter(existential_rules, ucq, k=_bounded(k), frozen=frozen,
                           budget=RewriteBudget(max_iterations=None))
    rewriter.expand_existential(_bounded(k))
    return rewriter.state.queries


def rewrite_disj(rules: Iterable[Rule], ucq, frozen: Iterable[str] = ()) -> List[Rule]:
    """
    Close a rule set under disjunctive steps with the given queries

    Returns:
        The input rules followed by every generated rule and constraint
    """
    rewriter = UcqRewriter(rules, ucq, frozen=frozen, budget=RewriteBudget(max_iterations=None))
    rewriter.close_disjunctive(inject=False)
    return rewriter.state.rules + rewriter.state.constraints


def rewrite_k(rules: Iterable[Rule], ucq, k: Union[int, float, None] = DEFAULT_K,
              frozen: Optional[Iterable[str]] = None, budget: Optional[RewriteBudget] = None,
              **options) -> Tuple[List[Csf], RewritingState, bool]:
    """
    Compute a UCQ-rewriting

    Returns:
        Tuple of (queries, state, converged)
    """
    result = UcqRewriter(rules, ucq, k=_bounded(k), frozen=frozen, budget=budget,
                         **options).rewrite()
    return result.queries, result.state, result.converged
