"""
Rule Fragments
Syntactic classifiers for the rewritable rule fragments and a combined
report predicting whether rewriting is guaranteed to terminate
"""

import logging
from dataclasses import asdict, dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Set, Tuple

import networkx as nx

from formula import connected_components
from logic_core import FreshNames, rename_apart
from rewrite_engine import iter_piece_unifications
from rule_model import CONSTRAINT, DISJUNCTIVE, EXISTENTIAL, Rule

logger = logging.getLogger(__name__)

VERDICT_FUS = 'guaranteed-fus'
VERDICT_UNKNOWN = 'unknown'

# order in which a single class is reported for a set of existential rules
FUS_CLASSES = ('linear', 'dr', 'cdr', 'clr', 'sticky', 'agrd')


def _body_vars(r: Rule) -> Set[str]:
    return set(r.body.variables())


def is_linear(r: Rule) -> bool:
    """One atom in the body"""
    return len(r.body) == 1


def is_disconnected(r: Rule) -> bool:
    """No variable shared between body and head (constants may be shared)"""
    return not r.frontier


def is_domain_restricted(r: Rule) -> bool:
    """Every head atom holds none or all of the body variables"""
    body = _body_vars(r)
    for a in r.head.atoms():
        shared = body & set(a.variables())
        if shared and shared != body:
            return False
    return True


def is_cdr(r: Rule) -> bool:
    """
    Connected domain restricted: for every body component C and head atom h,
    h holds none or all of the variables of C
    """
    components = [set(c.variables()) for c in connected_components(r.body)]
    for a in r.head.atoms():
        head_vars = set(a.variables())
        for component in components:
            shared = component & head_vars
            if shared and shared != component:
                return False
    return True


def is_clr(r: Rule) -> bool:
    """
    Connected linear: every head atom draws body variables from at most one
    body component, and that component is a single atom
    """
    components = connected_components(r.body)
    for a in r.head.atoms():
        head_vars = set(a.variables())
        touched = [c for c in components if head_vars & set(c.variables())]
        if not touched:
            continue
        if len(touched) > 1 or len(touched[0]) != 1:
            return False
    return True


def is_dder(r: Rule) -> bool:
    """Disconnected disjunction: no body component feeds two different head disjuncts"""
    if len(r.head) < 2:
        return True
    for component in connected_components(r.body):
        component_vars = set(component.variables())
        fed = sum(1 for disjunct in r.head if component_vars & set(disjunct.variables()))
        if fed > 1:
            return False
    return True


@dataclass
class StickyMarking:
    """
    Result of the sticky marking procedure

    Attributes:
        marked: (rule index, body atom index, argument index) of every marked occurrence
        marked_vars: Marked variable names per rule index
        converged: Whether propagation reached its fixpoint
    """
    marked: Set[Tuple[int, int, int]] = field(default_factory=set)
    marked_vars: Dict[int, Set[str]] = field(default_factory=dict)
    converged: bool = True

    def rule_is_sticky(self, rules: List[Rule], index: int) -> bool:
        rule = rules[index]
        for name in self.marked_vars.get(index, ()):
            occurrences = sum(1 for a in rule.body for t in a.args
                              if t.is_variable and t.name == name)
            if occurrences > 1:
                return False
        return True


def sticky_marking(rules: Iterable[Rule]) -> StickyMarking:
    """
    Mark body variables that may be lost by rule application

    A body variable missing from some head atom is marked. Marks then spread:
    a marked variable at position (p, i) in some body marks every variable
    at position (p, i) in any rule head, in that rule's body, until nothing
    changes.
    """
    rules = list(rules)
    marked: Dict[int, Set[str]] = {i: set() for i in range(len(rules))}
    for i, r in enumerate(rules):
        head_atoms = r.head.atoms()
        for name in r.body.variables():
            if not all(name in a.variables() for a in head_atoms):
                marked[i].add(name)

    changed = True
    while changed:
        changed = False
        positions = {(a.predicate, k)
                     for i, r in enumerate(rules) for a in r.body
                     for k, t in enumerate(a.args) if t.is_variable and t.name in marked[i]}
        for j, r in enumerate(rules):
            body = _body_vars(r)
            for a in r.head.atoms():
                for k, t in enumerate(a.args):
                    if t.is_variable and t.name in body and (a.predicate, k) in positions \
                            and t.name not in marked[j]:
                        marked[j].add(t.name)
                        changed = True

    occurrences = {(i, n, k)
                   for i, r in enumerate(rules) for n, a in enumerate(r.body)
                   for k, t in enumerate(a.args) if t.is_variable and t.name in marked[i]}
    return StickyMarking(occurrences, marked, True)


def is_sticky(rules: Iterable[Rule]) -> bool:
    """Every marked variable occurs at most once in its rule body"""
    rules = list(rules)
    marking = sticky_marking(rules)
    return all(marking.rule_is_sticky(rules, i) for i in range(len(rules)))


def depends_on(r1: Rule, r2: Rule, frozen: Iterable[str] = ()) -> bool:
    """True when some head disjunct of r1 piece-unifies with the body of r2"""
    if not len(r1.head) or r2.body.is_empty:
        return False
    frozen = frozenset(frozen)
    reserved = set(r2.variables()) - frozen
    renamed, _ = rename_apart(r1, reserved, avoid=set(r2.variables()) | frozen,
                              names=FreshNames())
    selections = [(index,) for index in range(len(renamed.head))]
    for _ in iter_piece_unifications(renamed, r2.body, frozen, selections):
        return True
    return False


def dependency_graph(rules: Iterable[Rule], frozen: Iterable[str] = ()) -> nx.DiGraph:
    """
    Graph of rule dependencies

    Nodes are rule indexes (with the rule in the 'rule' attribute); an edge
    (i, j) means rule j depends on rule i.
    """
    rules = list(rules)
    graph = nx.DiGraph()
    for i, r in enumerate(rules):
        graph.add_node(i, rule=r, label=r.label)
    for i, r1 in enumerate(rules):
        for j, r2 in enumerate(rules):
            if depends_on(r1, r2, frozen):
                graph.add_edge(i, j)
    return graph


def is_agrd(rules: Iterable[Rule], frozen: Iterable[str] = ()) -> bool:
    """The dependency graph has no cycle (self-loops included)"""
    return nx.is_directed_acyclic_graph(dependency_graph(rules, frozen))


@dataclass
class RuleFlags:
    label: Optional[str]
    kind: str
    linear: bool
    disconnected: bool
    dr: bool
    cdr: bool
    clr: bool
    dder: bool
    sticky_compatible: bool


@dataclass
class FusReport:
    """Per-rule fragment flags, set-level flags and the termination verdict"""
    rules: List[RuleFlags] = field(default_factory=list)
    sticky: bool = True
    agrd: bool = True
    linear_atomic_termination: bool = True
    independent_sets: bool = True
    verdict: str = VERDICT_UNKNOWN
    fus_class: Optional[str] = None
    citation: Optional[str] = None

    @property
    def guaranteed(self) -> bool:
        return self.verdict == VERDICT_FUS

    def to_dict(self) -> dict:
        return asdict(self)


def _rule_flags(r: Rule, sticky_compatible: bool) -> RuleFlags:
    return RuleFlags(label=r.label, kind=r.kind, linear=is_linear(r),
                     disconnected=is_disconnected(r), dr=is_domain_restricted(r),
                     cdr=is_cdr(r), clr=is_clr(r), dder=is_dder(r),
                     sticky_compatible=sticky_compatible)


def _existential_class(rules: List[Rule], frozen: FrozenSet[str]) -> Optional[str]:
    """Fragment shared by all the given existential rules, if any"""
    checks = {
        'linear': lambda: all(is_linear(r) for r in rules),
        'dr': lambda: all(is_domain_restricted(r) for r in rules),
        'cdr': lambda: all(is_cdr(r) for r in rules),
        'clr': lambda: all(is_clr(r) for r in rules),
        'sticky': lambda: is_sticky(rules),
        'agrd': lambda: is_agrd(rules, frozen),
    }
    for name in FUS_CLASSES:
        if checks[name]():
            return name
    return None


def _existential_fus(rules: List[Rule], frozen: FrozenSet[str]) -> Tuple[Optional[str], str]:
    """Class name and citation when the existential rules are known to be a fus"""
    if not rules:
        return 'empty', 'an empty rule set is a fus'
    connected = [r for r in rules if not is_disconnected(r)]
    if not connected:
        return 'disconnected', 'a set of disconnected existential rules is a fus'
    name = _existential_class(connected, frozen)
    if name is None:
        return None, ''
    citation = f'a set of {name} existential rules is a fus'
    if len(connected) < len(rules):
        citation += ', and adding disconnected existential rules keeps it a fus'
    return name, citation


def is_fus_guaranteed(rules: Iterable[Rule], frozen: Iterable[str] = ()) -> FusReport:
    """
    Classify a rule set and decide whether rewriting is guaranteed to terminate

    The verdict is 'guaranteed-fus' when one of these holds:
    the rules are existential and form a known fus class (disconnected rules
    aside); the existential rules form a fus and every disjunctive rule is
    disconnected; every rule has disconnected disjunction and all are cdr, or
    all are clr. Otherwise the verdict is 'unknown'.

    Args:
        rules: Rules after reduction (constraints are ignored)
        frozen: Variable names treated as constants

    Returns:
        FusReport
    """
    frozen = frozenset(frozen)
    rules = [r for r in rules if r.kind != CONSTRAINT]
    existential = [r for r in rules if r.kind == EXISTENTIAL]
    disjunctive = [r for r in rules if r.kind == DISJUNCTIVE]

    marking = sticky_marking(rules)
    sticky_flags = [marking.rule_is_sticky(rules, i) for i in range(len(rules))]
    graph = dependency_graph(rules, frozen)
    report = FusReport(
        rules=[_rule_flags(r, s) for r, s in zip(rules, sticky_flags)],
        sticky=all(sticky_flags),
        agrd=nx.is_directed_acyclic_graph(graph),
        linear_atomic_termination=all(is_linear(r) for r in rules),
    )
    kinds = {i: r.kind for i, r in enumerate(rules)}
    report.independent_sets = not any(kinds[i] != kinds[j] for i, j in graph.edges)

    name, citation = _existential_fus(existential, frozen)
    if name is not None and not disjunctive:
        report.verdict, report.fus_class, report.citation = VERDICT_FUS, name, citation
    elif name is not None and all(is_disconnected(r) for r in disjunctive):
        report.verdict, report.fus_class = VERDICT_FUS, name
        report.citation = (f'{citation}; with only disconnected disjunctive rules '
                           f'the whole set is a fus')
    elif all(is_dder(r) for r in rules):
        for fragment, check in (('cdr', is_cdr), ('clr', is_clr)):
            if all(check(r) for r in rules):
                report.verdict, report.fus_class = VERDICT_FUS, f'dder+{fragment}'
                report.citation = (f'rules with disconnected disjunction that are all '
                                   f'{fragment} are a fus')
                break
    logger.debug('Fus verdict %s (%s)', report.verdict, report.fus_class)
    return report
