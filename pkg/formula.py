"""
Set Formulas
Conjunctive and disjunctive set formulas, their hypergraph components,
size measures and homomorphism-based subsumption
"""

from collections import Counter, defaultdict
from typing import Dict, Iterable, Iterator, List, Optional, Set, Tuple, Union

import networkx as nx

from logic_core import Atom, Substitution, Term, TermKind


class Csf:
    """
    Conjunctive set formula: a duplicate-free set of atoms

    Atoms keep their first-insertion order for deterministic iteration;
    equality and hashing are order independent.
    """

    __slots__ = ('atoms', '_key')

    def __init__(self, atoms: Iterable[Atom] = ()):
        self.atoms: Tuple[Atom, ...] = tuple(dict.fromkeys(atoms))
        self._key = frozenset(self.atoms)

    def __iter__(self) -> Iterator[Atom]:
        return iter(self.atoms)

    def __len__(self) -> int:
        return len(self.atoms)

    def __contains__(self, item) -> bool:
        return item in self._key

    def __eq__(self, other) -> bool:
        if not isinstance(other, Csf):
            return NotImplemented
        return self._key == other._key

    def __hash__(self) -> int:
        return hash(self._key)

    def __repr__(self) -> str:
        return f'Csf({self})'

    def __str__(self) -> str:
        return ', '.join(str(a) for a in self.atoms) if self.atoms else 'true'

    def variables(self) -> Tuple[str, ...]:
        seen: Dict[str, None] = {}
        for a in self.atoms:
            for name in a.variables():
                seen.setdefault(name, None)
        return tuple(seen)

    def terms(self) -> Tuple[Term, ...]:
        return tuple(dict.fromkeys(t for a in self.atoms for t in a.args))

    def predicates(self) -> Set[Tuple[str, int]]:
        return {a.signature for a in self.atoms}

    def substitute(self, s: Substitution) -> 'Csf':
        if not s:
            return self
        return Csf(a.substitute(s) for a in self.atoms)

    def union(self, other: Iterable[Atom]) -> 'Csf':
        return Csf(self.atoms + tuple(other))

    def without(self, removed: Iterable[Atom]) -> 'Csf':
        removed = set(removed)
        return Csf(a for a in self.atoms if a not in removed)

    def sorted_atoms(self) -> List[Atom]:
        return sorted(self.atoms, key=Atom.sort_key)

    def sort_key(self) -> Tuple:
        return (len(self.atoms), tuple(a.sort_key() for a in self.sorted_atoms()))

    @property
    def is_empty(self) -> bool:
        return not self.atoms


class Dsf:
    """Disjunctive set formula: a duplicate-free set of Csf disjuncts (empty means false)"""

    __slots__ = ('disjuncts', '_key')

    def __init__(self, disjuncts: Iterable[Csf] = ()):
        self.disjuncts: Tuple[Csf, ...] = tuple(dict.fromkeys(disjuncts))
        self._key = frozenset(self.disjuncts)

    def __iter__(self) -> Iterator[Csf]:
        return iter(self.disjuncts)

    def __len__(self) -> int:
        return len(self.disjuncts)

    def __getitem__(self, index: int) -> Csf:
        return self.disjuncts[index]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dsf):
            return NotImplemented
        return self._key == other._key

    def __hash__(self) -> int:
        return hash(self._key)

    def __repr__(self) -> str:
        return f"Dsf([{'; '.join(str(d) for d in self.disjuncts)}])"

    def variables(self) -> Tuple[str, ...]:
        seen: Dict[str, None] = {}
        for d in self.disjuncts:
            for name in d.variables():
                seen.setdefault(name, None)
        return tuple(seen)

    def atoms(self) -> Tuple[Atom, ...]:
        return tuple(a for d in self.disjuncts for a in d)

    def substitute(self, s: Substitution) -> 'Dsf':
        if not s:
            return self
        return Dsf(d.substitute(s) for d in self.disjuncts)


def _as_csf(f: Union[Csf, Iterable[Atom]]) -> Csf:
    return f if isinstance(f, Csf) else Csf(f)


def connected_components(f: Union[Csf, Iterable[Atom]]) -> List[Csf]:
    """
    Split a CSF into variable-connected components

    Atoms are linked through shared variables (constants do not connect).
    Every ground atom is its own component.

    Returns:
        Components ordered by their smallest atom
    """
    f = _as_csf(f)
    graph = nx.Graph()
    for index, a in enumerate(f.atoms):
        graph.add_node(('atom', index))
        for name in a.variables():
            graph.add_edge(('atom', index), ('var', name))
    components = []
    for nodes in nx.connected_components(graph):
        indexes = sorted(i for kind, i in nodes if kind == 'atom')
        if indexes:
            components.append(Csf(f.atoms[i] for i in indexes))
    components.sort(key=lambda c: c.sorted_atoms()[0].sort_key())
    return components


def card(f: Union[Csf, Iterable[Atom]]) -> int:
    """Number of distinct variables"""
    return len(_as_csf(f).variables())


def width(f: Union[Csf, Iterable[Atom]]) -> int:
    """Number of atoms with at least one variable"""
    return sum(1 for a in _as_csf(f) if not a.is_ground())


def ccard(f: Union[Csf, Dsf, Iterable[Atom]]) -> int:
    """Largest cardinality over the connected components (or over the disjuncts of a DSF)"""
    if isinstance(f, Dsf):
        return max((ccard(d) for d in f), default=0)
    return max((card(c) for c in connected_components(f)), default=0)


def cwidth(f: Union[Csf, Dsf, Iterable[Atom]]) -> int:
    """Largest width over the connected components (or over the disjuncts of a DSF)"""
    if isinstance(f, Dsf):
        return max((cwidth(d) for d in f), default=0)
    return max((width(c) for c in connected_components(f)), default=0)


def _extend(source: Atom, target: Atom, binding: Dict[Term, Term], frozen: frozenset,
            injective: bool, used: Set[Term]) -> Optional[Dict[Term, Term]]:
    added: Dict[Term, Term] = {}
    for s, t in zip(source.args, target.args):
        if s.is_rigid(frozen):
            if s != t:
                return None
            continue
        bound = binding.get(s, added.get(s))
        if bound is not None:
            if bound != t:
                return None
            continue
        if injective:
            if not t.is_variable or t.name in frozen or t in used or t in added.values():
                return None
        added[s] = t
    return added


def iter_homomorphisms(src: Union[Csf, Iterable[Atom]], dst: Union[Csf, Iterable[Atom]],
                       frozen: Iterable[str] = (),
                       injective: bool = False) -> Iterator[Substitution]:
    """
    Enumerate the distinct substitutions mapping every atom of src onto an atom of dst

    Args:
        src: Formula to map
        dst: Target formula
        frozen: Variable names that must map to themselves
        injective: Require distinct variables to map to distinct, unfrozen variables

    Yields:
        Each mapping once, as a Substitution
    """
    src, dst = _as_csf(src), _as_csf(dst)
    frozen = frozenset(frozen)
    index: Dict[Tuple[str, int], List[Atom]] = defaultdict(list)
    for a in dst:
        index[a.signature].append(a)
    if any(a.signature not in index for a in src):
        return

    def search(remaining: List[Atom], binding: Dict[Term, Term]) -> Iterator[Dict[Term, Term]]:
        if not remaining:
            yield binding
            return
        used = set(binding.values())
        best, best_options = None, None
        # most constrained atom first
        for position, a in enumerate(remaining):
            options = []
            for target in index[a.signature]:
                added = _extend(a, target, binding, frozen, injective, used)
                if added is not None:
                    options.append(added)
            if best_options is None or len(options) < len(best_options):
                best, best_options = position, options
                if not options:
                    return
        rest = remaining[:best] + remaining[best + 1:]
        for added in best_options:
            yield from search(rest, {**binding, **added})

    seen = set()
    for found in search(list(src.atoms), {}):
        key = frozenset(found.items())
        if key not in seen:
            seen.add(key)
            yield Substitution(found)


def homomorphism(src: Union[Csf, Iterable[Atom]], dst: Union[Csf, Iterable[Atom]],
                 frozen: Iterable[str] = (), injective: bool = False) -> Optional[Substitution]:
    """
    Find a substitution mapping every atom of src onto an atom of dst

    Returns:
        The first mapping found, or None if none exists
    """
    return next(iter_homomorphisms(src, dst, frozen, injective), None)


def subsumes(general: Union[Csf, Iterable[Atom]], specific: Union[Csf, Iterable[Atom]],
             frozen: Iterable[str] = ()) -> bool:
    """True when general maps homomorphically into specific"""
    return homomorphism(general, specific, frozen) is not None


def freeze(f: Union[Csf, Iterable[Atom]], prefix: str = 'v_') -> Csf:
    """Replace each variable by a labelled null so it behaves as an unknown individual"""
    f = _as_csf(f)
    nulls = {t.name for a in f for t in a.args if t.kind is TermKind.NULL}
    while any(prefix + v in nulls for v in f.variables()):
        prefix += '_'
    s = Substitution({Term.var(v): Term.null(prefix + v) for v in f.variables()})
    return f.substitute(s)


def entails_facts(d: Union[Csf, Iterable[Atom]], q: Union[Csf, Iterable[Atom]],
                  frozen: Iterable[str] = ()) -> bool:
    """
    Decide whether a fact set satisfies a Boolean CQ

    Variables of the facts are unknown individuals: they are frozen as distinct
    nulls, so they never match a constant of the query.
    """
    return homomorphism(q, freeze(d), frozen) is not None


def shape_key(f: Union[Csf, Iterable[Atom]], frozen: Iterable[str] = ()) -> Tuple:
    """Key that is invariant under renaming of the non-frozen variables"""
    f = _as_csf(f)
    frozen = frozenset(frozen)
    occurrences = Counter(t for a in f for t in a.args if t.is_variable and t.name not in frozen)
    shapes = []
    for a in f:
        args = []
        for t in a.args:
            if t.is_variable and t.name not in frozen:
                args.append(('?', occurrences[t]))
            else:
                args.append((t.kind.value, t.name))
        shapes.append((a.predicate, tuple(args)))
    return tuple(sorted(shapes))


def is_variant(f: Union[Csf, Iterable[Atom]], g: Union[Csf, Iterable[Atom]],
               frozen: Iterable[str] = ()) -> bool:
    """True when f and g are equal up to a renaming of their non-frozen variables"""
    f, g = _as_csf(f), _as_csf(g)
    if len(f) != len(g) or card(f) != card(g):
        return False
    if shape_key(f, frozen) != shape_key(g, frozen):
        return False
    return homomorphism(f, g, frozen, injective=True) is not None


def is_null(term: Term) -> bool:
    return term.kind is TermKind.NULL
