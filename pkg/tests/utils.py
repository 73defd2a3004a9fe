"""Builders for writing formulas in tests as DLGP+ text"""

from dlgp_io import parse
from formula import Csf, is_variant
from rule_model import rule_variant


def make_rule(text):
    return parse(text).rules[0]


def make_rules(text):
    return parse(text).rules


def make_query(text):
    return parse(text).queries[0]


def make_cq(text):
    """'p(X), q(X)' -> Csf"""
    return parse(f'? :- {text}.').queries[0].positives


def make_facts(text):
    """'p(a), q(X)' -> Csf"""
    return parse(f'{text}.').facts[0].atoms


def same_queries(actual, expected, frozen=()):
    """Both lists hold the same queries up to variable renaming"""
    actual = [q if isinstance(q, Csf) else q.positives for q in actual]
    if len(actual) != len(expected):
        return False
    return all(any(is_variant(a, e, frozen) for a in actual) for e in expected)


def has_rule(rules, expected):
    return any(rule_variant(r, expected) for r in rules)
