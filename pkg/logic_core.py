"""
Logic Core
Terms, atoms, literals, substitutions and most general unification
for function-free first-order formulas
"""

import threading
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, Iterator, Mapping, Optional, Tuple


class TermKind(Enum):
    """Lexical kind of a term"""
    VARIABLE = 'variable'
    CONSTANT = 'constant'
    NULL = 'null'  # labelled null introduced by the chase


_KIND_ORDER = {TermKind.CONSTANT: 0, TermKind.NULL: 1, TermKind.VARIABLE: 2}


@dataclass(frozen=True)
class Term:
    """A variable, a constant or a labelled null"""
    name: str
    kind: TermKind

    @classmethod
    def var(cls, name: str) -> 'Term':
        return cls(name, TermKind.VARIABLE)

    @classmethod
    def const(cls, name: str) -> 'Term':
        return cls(name, TermKind.CONSTANT)

    @classmethod
    def null(cls, name: str) -> 'Term':
        return cls(name, TermKind.NULL)

    @property
    def is_variable(self) -> bool:
        return self.kind is TermKind.VARIABLE

    def is_rigid(self, frozen: Iterable[str] = ()) -> bool:
        """Constants, nulls and frozen variables never get bound"""
        return not self.is_variable or self.name in frozen

    def sort_key(self) -> Tuple[int, str]:
        return (_KIND_ORDER[self.kind], self.name)

    def substitute(self, s: 'Substitution') -> 'Term':
        return s.get(self)

    def variables(self) -> Tuple[str, ...]:
        return (self.name,) if self.is_variable else ()

    def __str__(self) -> str:
        if self.kind is TermKind.NULL:
            return f'_:{self.name}'
        return self.name


@dataclass(frozen=True)
class Atom:
    """A predicate applied to an ordered tuple of terms"""
    predicate: str
    args: Tuple[Term, ...] = ()

    @property
    def arity(self) -> int:
        return len(self.args)

    @property
    def signature(self) -> Tuple[str, int]:
        return (self.predicate, len(self.args))

    def sort_key(self) -> Tuple:
        return (self.predicate, len(self.args), tuple(t.sort_key() for t in self.args))

    def variables(self) -> Tuple[str, ...]:
        seen: Dict[str, None] = {}
        for term in self.args:
            if term.is_variable:
                seen.setdefault(term.name, None)
        return tuple(seen)

    def is_ground(self) -> bool:
        return not any(t.is_variable for t in self.args)

    def substitute(self, s: 'Substitution') -> 'Atom':
        if not s:
            return self
        return Atom(self.predicate, tuple(s.get(t) for t in self.args))

    def __str__(self) -> str:
        if not self.args:
            return self.predicate
        return f"{self.predicate}({','.join(str(t) for t in self.args)})"


@dataclass(frozen=True)
class Literal:
    """An atom or its negation"""
    atom: Atom
    positive: bool = True

    def complement(self) -> 'Literal':
        return Literal(self.atom, not self.positive)

    def variables(self) -> Tuple[str, ...]:
        return self.atom.variables()

    def substitute(self, s: 'Substitution') -> 'Literal':
        return Literal(self.atom.substitute(s), self.positive)

    def __str__(self) -> str:
        return str(self.atom) if self.positive else f'-{self.atom}'


class Substitution(Mapping[Term, Term]):
    """
    Finite mapping from variables to terms

    Identity bindings are dropped on construction, so an empty
    substitution is the identity.
    """

    __slots__ = ('_bindings', '_hash')

    def __init__(self, bindings: Optional[Mapping[Term, Term]] = None):
        items = {}
        for var, term in (bindings or {}).items():
            if not var.is_variable:
                raise ValueError(f"Only variables can be bound, got {var}")
            if var != term:
                items[var] = term
        self._bindings: Dict[Term, Term] = items
        self._hash: Optional[int] = None

    def __getitem__(self, var: Term) -> Term:
        return self._bindings[var]

    def __iter__(self) -> Iterator[Term]:
        return iter(self._bindings)

    def __len__(self) -> int:
        return len(self._bindings)

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._bindings.items()))
        return self._hash

    def __eq__(self, other) -> bool:
        if isinstance(other, Substitution):
            return self._bindings == other._bindings
        if isinstance(other, Mapping):
            return self._bindings == dict(other)
        return NotImplemented

    def get(self, term: Term, default: Optional[Term] = None) -> Term:
        return self._bindings.get(term, term if default is None else default)

    def __repr__(self) -> str:
        inner = ', '.join(f'{v}<-{t}' for v, t in sorted(self._bindings.items(),
                                                          key=lambda kv: kv[0].sort_key()))
        return '{' + inner + '}'


EMPTY = Substitution()


def apply(s: Substitution, f):
    """
    Apply a substitution to any formula object

    Args:
        s: Substitution to apply
        f: Term, atom, literal, set formula, rule, query, or a list/tuple of those

    Returns:
        The same kind of object with every bound variable replaced
    """
    if isinstance(f, list):
        return [apply(s, x) for x in f]
    if isinstance(f, tuple):
        return tuple(apply(s, x) for x in f)
    return f.substitute(s)


def compose(s1: Substitution, s2: Substitution) -> Substitution:
    """Substitution equivalent to applying s1 then s2"""
    bindings: Dict[Term, Term] = {var: s2.get(term) for var, term in s1.items()}
    for var, term in s2.items():
        if var not in s1:
            bindings[var] = term
    return Substitution(bindings)


def _find(parent: Dict[Term, Term], term: Term) -> Term:
    root = term
    while parent.get(root, root) != root:
        root = parent[root]
    while parent.get(term, term) != root:
        parent[term], term = root, parent[term]
    return root


def unify(atoms: Iterable[Atom], frozen: Iterable[str] = ()) -> Optional[Substitution]:
    """
    Compute an idempotent most general unifier of a set of atoms

    Args:
        atoms: Atoms that must become equal
        frozen: Variable names treated as constants

    Returns:
        The mgu, or None when the atoms do not unify
    """
    atoms = list(atoms)
    if not atoms:
        return EMPTY
    frozen = frozenset(frozen)
    first = atoms[0]
    parent: Dict[Term, Term] = {}
    for other in atoms[1:]:
        if other.signature != first.signature:
            return None
        for left, right in zip(first.args, other.args):
            a, b = _find(parent, left), _find(parent, right)
            if a == b:
                continue
            a_rigid, b_rigid = a.is_rigid(frozen), b.is_rigid(frozen)
            if a_rigid and b_rigid:
                return None
            if a_rigid:
                parent[b] = a
            elif b_rigid:
                parent[a] = b
            elif b.sort_key() < a.sort_key():
                parent[a] = b
            else:
                parent[b] = a
    return Substitution({t: _find(parent, t) for t in list(parent) if t.is_variable})


class FreshNames:
    """
    Monotone generator of fresh variable names X0, X1, ...

    Names already in use are skipped. The counter is lock-protected so one
    instance can be shared by worker threads.
    """

    def __init__(self, prefix: str = 'X', start: int = 0):
        self.prefix = prefix
        self._next = start
        self._lock = threading.Lock()

    def reset(self, start: int = 0):
        with self._lock:
            self._next = start

    def fresh(self, avoid: Iterable[str] = ()) -> str:
        avoid = avoid if isinstance(avoid, (set, frozenset)) else set(avoid)
        with self._lock:
            while True:
                name = f'{self.prefix}{self._next}'
                self._next += 1
                if name not in avoid:
                    return name


FRESH = FreshNames()


def variables_of(f) -> Tuple[str, ...]:
    """Variable names of a formula object in order of first occurrence"""
    if isinstance(f, (list, tuple)):
        seen: Dict[str, None] = {}
        for x in f:
            for name in variables_of(x):
                seen.setdefault(name, None)
        return tuple(seen)
    return f.variables()


def rename_apart(f, reserved: Iterable[str], avoid: Iterable[str] = (),
                 names: Optional[FreshNames] = None):
    """
    Rename the variables of f that clash with reserved names

    Args:
        f: Formula object to rename
        reserved: Variable names f must not share
        avoid: Extra names the fresh variables must not take
        names: Fresh name generator (defaults to the shared one)

    Returns:
        Tuple of (renamed formula, renaming substitution)
    """
    names = names or FRESH
    reserved = frozenset(reserved)
    own = variables_of(f)
    clashing = [v for v in own if v in reserved]
    if not clashing:
        return f, EMPTY
    taken = set(reserved) | set(own) | set(avoid)
    bindings = {}
    for v in clashing:
        new = names.fresh(taken)
        taken.add(new)
        bindings[Term.var(v)] = Term.var(new)
    renaming = Substitution(bindings)
    return apply(renaming, f), renaming


def parse_term(text: str) -> Term:
    """Build a term from DLGP lexical conventions (uppercase or _ starts a variable)"""
    if text.startswith('_:'):
        return Term.null(text[2:])
    if text[:1].isupper() or text[:1] == '_':
        return Term.var(text)
    return Term.const(text)


def atom(predicate: str, *args: str) -> Atom:
    """Shorthand used by callers that build atoms from names"""
    return Atom(predicate, tuple(parse_term(a) for a in args))
