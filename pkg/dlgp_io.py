"""
DLGP+ Reader and Writer
Parses and prints the DLGP+ dialect: facts, existential rules, disjunctive
rules with bracketed heads, negative constraints and queries with negated atoms
"""

import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Optional, Tuple, Union

from formula import Csf, Dsf
from logic_core import Atom, Term, TermKind
from rule_model import (ORIGIN_WITNESS, ConjunctiveQueryNeg, Diagnostic, Fact,
                        KnowledgeBase, Rule, Ucq)

logger = logging.getLogger(__name__)

Statement = Union[Fact, Rule, ConjunctiveQueryNeg]

TOKEN_SPEC = [
    ('NEWLINE',   r'\n'),
    ('SKIP',      r'[ \t\r\f\v]+'),
    ('COMMENT',   r'%[^\n]*'),
    ('DIRECTIVE', r'@[A-Za-z]+'),
    ('IRI',       r'<[^<>"{}|^`\\\s]*>'),
    ('STRING',    r'"(?:[^"\\\n]|\\.)*"'),
    ('NULL',      r'_:[A-Za-z0-9_]+'),
    ('PNAME',     r'(?:[A-Za-z][A-Za-z0-9_\-]*)?:[A-Za-z0-9_](?:[A-Za-z0-9_\-.]*[A-Za-z0-9_])?'),
    ('PNAME_NS',  r'(?:[A-Za-z][A-Za-z0-9_\-]*)?:(?=[\s<])'),
    ('NUMBER',    r'[+-]?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?'),
    ('IMPLIES',   r':-'),
    ('VAR',       r'[A-Z_][A-Za-z0-9_]*'),
    ('LOWER',     r'[a-z][A-Za-z0-9_]*'),
    ('LP',        r'\('),
    ('RP',        r'\)'),
    ('LB',        r'\['),
    ('RB',        r'\]'),
    ('COMMA',     r','),
    ('DOT',       r'\.'),
    ('BANG',      r'!'),
    ('QMARK',     r'\?'),
    ('MINUS',     r'-'),
    ('ERROR',     r'.'),
]

TOKEN_REGEX = re.compile('|'.join('(?P<%s>%s)' % pair for pair in TOKEN_SPEC), re.DOTALL)
LABEL_REGEX = re.compile(r'\[([^\]\(\n]*)\]')
IMPLIES_AHEAD = re.compile(r'[ \t\r\f\v\n]*:-')

SIMPLE_NAME = re.compile(r'[a-z][A-Za-z0-9_]*')
VARIABLE_NAME = re.compile(r'[A-Z_][A-Za-z0-9_]*')
NUMBER_NAME = re.compile(r'[+-]?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?')
STRING_NAME = re.compile(r'"(?:[^"\\\n]|\\.)*"')

SECTIONS = ('facts', 'rules', 'constraints', 'queries')
DIRECTIVES = ('base', 'prefix', 'una') + SECTIONS

TERM_TOKENS = ('VAR', 'LOWER', 'NUMBER', 'STRING', 'IRI', 'PNAME', 'NULL')
PREDICATE_TOKENS = ('LOWER', 'IRI', 'PNAME')


@dataclass(frozen=True)
class Token:
    type: str
    value: str
    line: int
    column: int


@dataclass(frozen=True)
class Directive:
    """A header directive such as @prefix ex: <http://example.org/>"""
    name: str
    args: Tuple[str, ...] = ()


@dataclass
class Document:
    """Parsed DLGP+ document: header directives and statements in input order"""
    directives: List[Directive] = field(default_factory=list)
    statements: List[Statement] = field(default_factory=list)

    @property
    def facts(self) -> List[Fact]:
        return [s for s in self.statements if isinstance(s, Fact)]

    @property
    def rules(self) -> List[Rule]:
        return [s for s in self.statements if isinstance(s, Rule)]

    @property
    def queries(self) -> List[ConjunctiveQueryNeg]:
        return [s for s in self.statements if isinstance(s, ConjunctiveQueryNeg)]

    def knowledge_base(self) -> KnowledgeBase:
        return KnowledgeBase.from_statements(self.statements)

    def ucq(self) -> Ucq:
        return Ucq(tuple(self.queries))

    def query(self, label: str) -> Optional[ConjunctiveQueryNeg]:
        for q in self.queries:
            if q.label == label:
                return q
        return None


class DlgpSyntaxError(ValueError):
    """Raised when a DLGP+ text has errors; carries every positioned diagnostic"""

    def __init__(self, diagnostics: List[Diagnostic]):
        self.diagnostics = list(diagnostics)
        first = self.diagnostics[0] if self.diagnostics else None
        more = len(self.diagnostics) - 1
        message = str(first) if first else 'syntax error'
        if more > 0:
            message += f' (+{more} more)'
        super().__init__(message)


class _Abort(Exception):
    def __init__(self, diagnostic: Diagnostic):
        self.diagnostic = diagnostic


def tokenize(text: str) -> Iterator[Token]:
    """
    Split DLGP+ text into tokens

    A bracketed label is recognised only where a statement starts, when it
    holds no parenthesis and is not followed by ':-' (that would be a
    disjunctive head). Whitespace and comments are dropped.
    """
    line, line_start = 1, 0
    position = 0
    at_start, directive_line = True, False
    while position < len(text):
        column = position - line_start + 1
        if at_start and text[position] == '[':
            label = LABEL_REGEX.match(text, position)
            if label and not IMPLIES_AHEAD.match(text, label.end()):
                yield Token('LABEL', label.group(1).strip(), line, column)
                position = label.end()
                at_start = False
                continue
        match = TOKEN_REGEX.match(text, position)
        kind, value = match.lastgroup, match.group()
        position = match.end()
        if kind == 'NEWLINE':
            line, line_start = line + 1, position
            directive_line = False
            continue
        if kind in ('SKIP', 'COMMENT'):
            continue
        yield Token(kind, value, line, column)
        if kind in ('DOT', 'DIRECTIVE'):
            at_start = True
            directive_line = kind == 'DIRECTIVE'
        elif not directive_line:
            at_start = False
    yield Token('EOF', '', line, position - line_start + 1)


class DlgpParser:
    """
    Recursive descent parser for DLGP+

    statement := [label]? (head ':-' body | '!' ':-' body
                 | '?' answervars? ':-' body | body) '.'
    head      := conjunction | '[' disjunct (',' disjunct)* ']'
    disjunct  := atom | '(' atom (',' atom)* ')'

    Negated atoms ('-' atom) are only allowed in query bodies. After an error
    the parser skips to the next '.' so every broken statement is reported.
    """

    def __init__(self, text: Union[str, bytes]):
        if isinstance(text, bytes):
            text = text.decode('utf-8', errors='replace')
        self.text = text
        self.tokens: List[Token] = []
        self.index = 0
        self.prefixes: Dict[str, str] = {}
        self.base: Optional[str] = None
        self.arities: Dict[str, Tuple[int, Token]] = {}
        self.diagnostics: List[Diagnostic] = []

    # token stream

    def peek(self) -> Token:
        return self.tokens[self.index]

    def pop(self, expected: Optional[str] = None, what: Optional[str] = None) -> Token:
        token = self.tokens[self.index]
        if expected and token.type != expected:
            self.fail(token, f"expected {what or expected}, found {self.describe(token)}")
        if token.type != 'EOF':
            self.index += 1
        return token

    def accept(self, kind: str) -> Optional[Token]:
        if self.peek().type == kind:
            return self.pop()
        return None

    @staticmethod
    def describe(token: Token) -> str:
        if token.type == 'EOF':
            return 'end of input'
        return f"'{token.value}'"

    def fail(self, token: Token, message: str, code: str = 'syntax'):
        if token.type == 'ERROR':
            message, code = f"invalid character {token.value!r}", 'invalid-character'
        raise _Abort(Diagnostic(message, code=code, line=token.line, column=token.column))

    def recover(self):
        """Skip past the next '.' (or to the end)"""
        while self.peek().type not in ('DOT', 'EOF'):
            self.index += 1
        self.accept('DOT')

    # entry point

    def parse(self) -> Document:
        """
        Parse the whole text

        Returns:
            Document

        Raises:
            DlgpSyntaxError: With one diagnostic per broken statement
        """
        self.tokens = list(tokenize(self.text))
        self.index = 0
        document = Document()
        while self.peek().type != 'EOF':
            try:
                if self.peek().type == 'DIRECTIVE':
                    document.directives.append(self.directive())
                else:
                    document.statements.append(self.statement())
            except _Abort as abort:
                self.diagnostics.append(abort.diagnostic)
                self.recover()
        if self.diagnostics:
            logger.debug('DLGP+ parse failed with %d diagnostics', len(self.diagnostics))
            raise DlgpSyntaxError(self.diagnostics)
        return document

    def directive(self) -> Directive:
        token = self.pop()
        name = token.value[1:].lower()
        if name not in DIRECTIVES:
            self.fail(token, f'unknown directive @{name}', code='unknown-directive')
        if name == 'prefix':
            namespace = self.peek()
            if namespace.type != 'PNAME_NS':
                self.fail(namespace, f"expected a prefix such as 'ex:', "
                                     f"found {self.describe(namespace)}")
            self.pop()
            iri = self.pop('IRI', 'an IRI')
            prefix = namespace.value[:-1]
            self.prefixes[prefix] = self.resolve(iri.value[1:-1])
            return Directive(name, (prefix, self.prefixes[prefix]))
        if name == 'base':
            iri = self.pop('IRI', 'an IRI')
            self.base = iri.value[1:-1]
            return Directive(name, (self.base,))
        return Directive(name)

    def statement(self) -> Statement:
        label_token = self.accept('LABEL')
        label = label_token.value if label_token and label_token.value else None
        token = self.peek()
        if token.type == 'BANG':
            self.pop()
            self.pop('IMPLIES', "':-'")
            body = self.conjunction('constraint body')
            self.pop('DOT', "'.'")
            return Rule(Csf(body), Dsf(), label)
        if token.type == 'QMARK':
            return self.query(label)
        if token.type == 'LB':
            head = self.disjunctive_head()
            self.pop('IMPLIES', "':-'")
            body = self.conjunction('rule body')
            self.pop('DOT', "'.'")
            return Rule(Csf(body), head, label)
        atoms = self.conjunction('fact or rule head')
        if self.accept('IMPLIES'):
            body = self.conjunction('rule body')
            self.pop('DOT', "'.'")
            return Rule(Csf(body), Dsf([Csf(atoms)]), label)
        self.pop('DOT', "'.' or ':-'")
        return Fact(Csf(atoms), label)

    def query(self, label: Optional[str]) -> ConjunctiveQueryNeg:
        self.pop('QMARK')
        answers: List[str] = []
        if self.accept('LP'):
            if not self.accept('RP'):
                while True:
                    answers.append(self.pop('VAR', 'an answer variable').value)
                    if self.accept('RP'):
                        break
                    self.pop('COMMA', "',' or ')'")
        self.pop('IMPLIES', "':-'")
        positives, negatives = [], []
        while True:
            if self.accept('MINUS'):
                negatives.append(self.atom())
            else:
                positives.append(self.atom('query body'))
            if not self.accept('COMMA'):
                break
        self.pop('DOT', "'.'")
        return ConjunctiveQueryNeg(Csf(positives), Csf(negatives), tuple(answers), label)

    def disjunctive_head(self) -> Dsf:
        self.pop('LB')
        disjuncts = []
        while True:
            if self.accept('LP'):
                atoms = [self.atom('disjunct')]
                while self.accept('COMMA'):
                    atoms.append(self.atom('disjunct'))
                self.pop('RP', "')'")
                disjuncts.append(Csf(atoms))
            else:
                disjuncts.append(Csf([self.atom('disjunct')]))
            if self.accept('RB'):
                return Dsf(disjuncts)
            self.pop('COMMA', "',' or ']'")

    def conjunction(self, where: str) -> List[Atom]:
        atoms = [self.atom(where)]
        while self.accept('COMMA'):
            atoms.append(self.atom(where))
        return atoms

    def atom(self, where: Optional[str] = None) -> Atom:
        token = self.peek()
        if where and token.type == 'MINUS':
            self.fail(token, f'negated atom in {where}; negation is only allowed in queries',
                      code='negation-outside-query')
        if where and token.type == 'LB':
            self.fail(token, f'disjunction in {where}; disjunction is only allowed in rule heads',
                      code='disjunction-outside-head')
        if token.type not in PREDICATE_TOKENS:
            if token.type == 'VAR' and self.tokens[self.index + 1].type == 'LP':
                self.fail(token, f"predicate '{token.value}' must not start with an uppercase "
                                 f"letter or '_'")
            self.fail(token, f'expected an atom, found {self.describe(token)}')
        self.pop()
        predicate = self.constant_name(token)
        args: List[Term] = []
        if self.accept('LP'):
            if not self.accept('RP'):
                while True:
                    args.append(self.term())
                    if self.accept('RP'):
                        break
                    self.pop('COMMA', "',' or ')'")
        self.check_arity(predicate, len(args), token)
        return Atom(predicate, tuple(args))

    def term(self) -> Term:
        token = self.peek()
        if token.type not in TERM_TOKENS:
            self.fail(token, f'expected a term, found {self.describe(token)}')
        self.pop()
        if token.type == 'VAR':
            return Term.var(token.value)
        if token.type == 'NULL':
            return Term.null(token.value[2:])
        return Term.const(self.constant_name(token))

    def constant_name(self, token: Token) -> str:
        if token.type == 'IRI':
            return self.resolve(token.value[1:-1])
        if token.type == 'PNAME':
            prefix, local = token.value.split(':', 1)
            if prefix not in self.prefixes:
                self.fail(token, f"unknown prefix '{prefix}:'", code='unknown-prefix')
            return self.prefixes[prefix] + local
        return token.value

    def resolve(self, iri: str) -> str:
        if self.base and ':' not in iri:
            return self.base + iri
        return iri

    def check_arity(self, predicate: str, arity: int, token: Token):
        known = self.arities.setdefault(predicate, (arity, token))
        if known[0] != arity:
            first = known[1]
            self.fail(token, f"predicate '{predicate}' used with arity {arity}, previously "
                             f"{known[0]} at {first.line}:{first.column}", code='arity-conflict')


class DlgpPrinter:
    """
    Canonical DLGP+ writer

    One statement per line, labels in brackets, disjuncts in input order.
    Inconsistency-witness queries are preceded by a comment line.
    """

    def __init__(self, witness_comments: bool = True):
        self.witness_comments = witness_comments

    @staticmethod
    def name(text: str) -> str:
        if SIMPLE_NAME.fullmatch(text) or NUMBER_NAME.fullmatch(text) \
                or STRING_NAME.fullmatch(text):
            return text
        return f'<{text}>'

    def term(self, t: Term) -> str:
        if t.kind is TermKind.VARIABLE:
            return t.name
        if t.kind is TermKind.NULL:
            return f'_:{t.name}'
        return self.name(t.name)

    def atom(self, a: Atom) -> str:
        if not a.args:
            return self.name(a.predicate)
        return f"{self.name(a.predicate)}({', '.join(self.term(t) for t in a.args)})"

    def conjunction(self, atoms: Iterable[Atom]) -> str:
        return ', '.join(self.atom(a) for a in atoms)

    @staticmethod
    def label(label: Optional[str]) -> str:
        if not label:
            return ''
        return '[' + re.sub(r'[\]\(\n]', '_', label) + '] '

    def rule(self, r: Rule) -> str:
        body = self.conjunction(r.body)
        if len(r.head) == 0:
            return f'{self.label(r.label)}! :- {body}.'
        if len(r.head) == 1:
            return f'{self.label(r.label)}{self.conjunction(r.head[0])} :- {body}.'
        disjuncts = []
        for d in r.head:
            disjuncts.append(self.atom(d.atoms[0]) if len(d) == 1
                             else f'({self.conjunction(d)})')
        return f"{self.label(r.label)}[{', '.join(disjuncts)}] :- {body}."

    def query(self, q: ConjunctiveQueryNeg) -> str:
        literals = [self.atom(a) for a in q.positives] + [f'-{self.atom(a)}' for a in q.negatives]
        head = f"?({', '.join(q.answer_vars)})" if q.answer_vars else '?'
        return f"{self.label(q.label)}{head} :- {', '.join(literals)}."

    def fact(self, f: Fact) -> str:
        return f'{self.label(f.label)}{self.conjunction(f.atoms)}.'

    def directive(self, d: Directive) -> str:
        if d.name == 'prefix':
            return f'@prefix {d.args[0]}: <{d.args[1]}>'
        if d.name == 'base':
            return f'@base <{d.args[0]}>'
        return f'@{d.name}'

    def statement_lines(self, s: Statement) -> List[str]:
        if isinstance(s, Rule):
            return [self.rule(s)]
        if isinstance(s, ConjunctiveQueryNeg):
            lines = [self.query(s)]
            if self.witness_comments and s.origin == ORIGIN_WITNESS:
                lines.insert(0, f'% {ORIGIN_WITNESS}')
            return lines
        if isinstance(s, Fact):
            return [self.fact(s)]
        raise TypeError(f'Cannot print {type(s).__name__}')

    def dumps(self, obj) -> str:
        """
        Print a document, a UCQ, a knowledge base, one statement or a list of statements

        Returns:
            DLGP+ text without a trailing newline ('' when there is nothing to print)
        """
        lines: List[str] = []
        if isinstance(obj, Document):
            lines.extend(self.directive(d) for d in obj.directives)
            statements = obj.statements
        elif isinstance(obj, KnowledgeBase):
            statements = ([Fact(obj.facts)] if len(obj.facts) else []) + list(obj.rules)
        elif isinstance(obj, (Rule, ConjunctiveQueryNeg, Fact)):
            statements = [obj]
        else:
            statements = list(obj)
        for s in statements:
            lines.extend(self.statement_lines(s))
        return '\n'.join(lines)


def parse(text: Union[str, bytes]) -> Document:
    """Parse DLGP+ text; raises DlgpSyntaxError with positioned diagnostics"""
    return DlgpParser(text).parse()


def dumps(obj, witness_comments: bool = True) -> str:
    """Print DLGP+ text for a document, UCQ, knowledge base or statements"""
    return DlgpPrinter(witness_comments).dumps(obj)


def read_file(path: Union[str, Path]) -> Document:
    """
    Read and parse a .dlgp file

    Raises:
        FileNotFoundError: If the file does not exist
        DlgpSyntaxError: If the text does not parse
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f'File not found: {path}')
    logger.debug('Reading %s', path)
    return parse(path.read_text(encoding='utf-8', errors='replace'))
