"""Seeded generators of stratified knowledge bases, queries, fact sets and documents"""

import random

from dlgp_io import parse
from reduction import normalize_problem

LEVELS = 4
# predicate name -> arity; 'a' predicates are unary, 'b' predicates binary
PREDICATES = {f"l{level}{kind}": 1 if kind == "a" else 2
              for level in range(LEVELS) for kind in "ab"}
BODY_VARS = ["X", "Y", "Z"]
QUERY_VARS = ["U", "V"]
CONSTANTS = ["a", "b"]


def predicates_at(level):
    return [p for p in PREDICATES if p.startswith(f"l{level}")]


def random_atom(rng, level, terms):
    predicate = rng.choice(predicates_at(level))
    args = [rng.choice(terms) for _ in range(PREDICATES[predicate])]
    return f"{predicate}({','.join(args)})"


def random_body(rng, below, size):
    return [random_atom(rng, rng.randrange(below), BODY_VARS) for _ in range(size)]


def body_vars(body):
    return sorted({v for a in body for v in BODY_VARS if v in a.split("(", 1)[1]})


def existential_rule(rng, label, max_body=2):
    level = rng.randint(1, LEVELS - 1)
    body = random_body(rng, level, rng.randint(1, max_body))
    terms = body_vars(body) + ["E"]
    head = [random_atom(rng, level, terms) for _ in range(rng.randint(1, 2))]
    return f"[{label}] {', '.join(head)} :- {', '.join(body)}."


def linear_rule(rng, label):
    return existential_rule(rng, label, max_body=1)


def disjunctive_rule(rng, label):
    level = rng.randint(1, LEVELS - 1)
    body = random_body(rng, level, 1)
    terms = body_vars(body) + ["E"]
    left, right = (random_atom(rng, level, terms) for _ in range(2))
    return f"[{label}] [{left}, {right}] :- {body[0]}."


def wide_disjunctive_rule(rng, label):
    """Two or three disjuncts of one or two atoms over a body of up to three atoms"""
    level = rng.randint(1, LEVELS - 1)
    body = random_body(rng, level, rng.randint(1, 3))
    terms = body_vars(body) + ["E"]
    disjuncts = []
    for _ in range(rng.randint(2, 3)):
        atoms = [random_atom(rng, level, terms) for _ in range(rng.randint(1, 2))]
        disjuncts.append(atoms[0] if len(atoms) == 1 else f"({', '.join(atoms)})")
    return f"[{label}] [{', '.join(disjuncts)}] :- {', '.join(body)}."


def rule_where(rng, make, label, accept, attempts=1000):
    """First generated rule text whose parsed rule passes every check in accept"""
    for _ in range(attempts):
        text = make(rng, label)
        rule = parse(text).rules[0]
        if all(check(rule) for check in accept):
            return text
    raise AssertionError(f"no rule from {make.__name__} passed the checks")


def positive_query(rng, label, max_size=2):
    atoms = [random_atom(rng, rng.randrange(LEVELS), QUERY_VARS + CONSTANTS[:1])
             for _ in range(rng.randint(1, max_size))]
    return f"[{label}] ? :- {', '.join(atoms)}."


def negated_query(rng, label):
    positive = random_atom(rng, rng.randrange(LEVELS - 1), QUERY_VARS)
    variables = [v for v in QUERY_VARS if v in positive.split("(", 1)[1]]
    negated = random_atom(rng, LEVELS - 1, variables)
    return f"[{label}] ? :- {positive}, -{negated}."


def constraint(rng):
    return f"[c] ! :- {random_atom(rng, LEVELS - 1, ['X', 'Y'])}."


def _normalized(lines):
    document = parse("\n".join(lines))
    return normalize_problem(document.knowledge_base(), document.ucq())


def random_problem(seed, disjunctive=True):
    """Stratified rules: every head predicate sits on a higher level than the body"""
    rng = random.Random(seed)
    lines = [existential_rule(rng, f"e{i}") for i in range(rng.randint(1, 3))]
    if disjunctive:
        lines += [disjunctive_rule(rng, f"d{i}") for i in range(rng.randint(1, 2))]
        if rng.random() < 0.3:
            lines.append(constraint(rng))
    lines += [positive_query(rng, f"q{i}") for i in range(rng.randint(1, 2))]
    if disjunctive and rng.random() < 0.3:
        lines.append(negated_query(rng, "n"))
    return _normalized(lines)


def linear_problem(seed):
    """Linear existential and disjunctive rules with atomic queries"""
    rng = random.Random(seed)
    lines = [linear_rule(rng, f"e{i}") for i in range(rng.randint(1, 3))]
    lines += [disjunctive_rule(rng, f"d{i}") for i in range(rng.randint(1, 2))]
    if rng.random() < 0.3:
        lines.append(constraint(rng))
    lines += [positive_query(rng, f"q{i}", max_size=1) for i in range(rng.randint(1, 2))]
    return _normalized(lines)


def restricted_problem(seed, accept):
    """Stratified rules that all pass the checks in accept, disjunctive ones with wide heads"""
    rng = random.Random(seed)
    lines = [rule_where(rng, existential_rule, f"e{i}", accept)
             for i in range(rng.randint(1, 3))]
    lines += [rule_where(rng, wide_disjunctive_rule, f"d{i}", accept)
              for i in range(rng.randint(1, 2))]
    lines += [positive_query(rng, f"q{i}") for i in range(rng.randint(1, 2))]
    return _normalized(lines)


def query_against(rng, rule, max_size=2):
    """Boolean CQ over the head predicates of a rule"""
    heads = list(rule.head.atoms())
    atoms = []
    for _ in range(rng.randint(1, max_size)):
        target = rng.choice(heads)
        args = [rng.choice(QUERY_VARS + CONSTANTS[:1]) for _ in range(target.arity)]
        atoms.append(f"{target.predicate}({','.join(args)})")
    return parse(f"? :- {', '.join(atoms)}.").queries[0].positives


def random_facts(rng):
    atoms = [random_atom(rng, rng.randrange(LEVELS), CONSTANTS)
             for _ in range(rng.randint(2, 5))]
    return parse(", ".join(atoms) + ".").facts[0].atoms


def random_document(seed):
    """DLGP+ text mixing every statement kind"""
    rng = random.Random(seed)
    lines = [existential_rule(rng, f"e{i}") for i in range(rng.randint(0, 2))]
    lines += [wide_disjunctive_rule(rng, f"d{i}") for i in range(rng.randint(0, 2))]
    if rng.random() < 0.5:
        lines.append(constraint(rng))
    lines += [positive_query(rng, f"q{i}") for i in range(rng.randint(0, 2))]
    if rng.random() < 0.5:
        lines.append(negated_query(rng, "n"))
    atoms = [random_atom(rng, rng.randrange(LEVELS), CONSTANTS) for _ in range(rng.randint(0, 3))]
    if atoms:
        lines.append(", ".join(atoms) + ".")
    rng.shuffle(lines)
    return "\n".join(lines)
