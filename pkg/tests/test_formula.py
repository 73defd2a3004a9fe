"""Set formulas, components, measures and homomorphisms"""

import random

import pytest

from formula import (Csf, Dsf, card, ccard, connected_components, cwidth, entails_facts, freeze,
                     homomorphism, is_null, is_variant, iter_homomorphisms, subsumes, width)
from logic_core import Substitution, Term, atom, parse_term
from utils import make_cq, make_facts


def test_csf_is_a_set():
    f = Csf([atom("p", "X"), atom("q", "X"), atom("p", "X")])
    assert len(f) == 2
    assert f == Csf([atom("q", "X"), atom("p", "X")])
    assert hash(f) == hash(Csf([atom("q", "X"), atom("p", "X")]))


def test_dsf_ignores_disjunct_order():
    d1 = Dsf([make_cq("a(X)"), make_cq("b(X), c(X)")])
    d2 = Dsf([make_cq("b(X), c(X)"), make_cq("a(X)")])
    assert d1 == d2
    assert len(Dsf()) == 0


@pytest.mark.parametrize(
    "text, sizes",
    [
        ("organism(X), organism(Y)", [1, 1]),
        ("p(X,Y), q(Y,Z), r(W)", [1, 2]),
        ("p(X,a), q(a)", [1, 1]),
        ("knows(X,X1), knows(X1,X2), knows(X2,Y)", [3]),
    ],
)
def test_connected_components(text, sizes):
    components = connected_components(make_cq(text))
    assert sorted(len(c) for c in components) == sizes
    assert Csf(a for c in components for a in c) == make_cq(text)


def test_constants_do_not_connect_atoms():
    assert len(connected_components(make_cq("p(X,a), q(Y,a)"))) == 2


def test_measures():
    f = make_cq("person(X), person(Y)")
    assert card(f) == 2
    assert ccard(f) == 1
    assert width(f) == 2
    assert cwidth(f) == 1
    assert width(make_cq("p(a), q(X)")) == 1


def test_chain_measures():
    head = make_cq("knows(X,X1), knows(X1,X2), knows(X2,X3), knows(X3,X4), knows(X4,X5), "
                   "knows(X5,Y)")
    assert ccard(head) == 7
    assert cwidth(head) == 6


def test_dsf_measures_take_the_largest_disjunct():
    d = Dsf([make_cq("a(X)"), make_cq("b(X,Y), c(Y)")])
    assert ccard(d) == 2
    assert cwidth(d) == 2


def test_subsumption():
    general = make_cq("diabetic(X1)")
    specific = make_cq("diabetic(Y2), parent(Y2,X2)")
    assert subsumes(general, specific)
    assert not subsumes(specific, general)


def test_frozen_variables_map_to_themselves():
    assert not subsumes(make_cq("p(X)"), make_cq("p(Y)"), frozen={"X"})
    assert subsumes(make_cq("p(X)"), make_cq("p(X), q(Y)"), frozen={"X"})
    assert subsumes(make_cq("p(Y)"), make_cq("p(X)"), frozen={"X"})


def test_homomorphism_keeps_constants():
    assert homomorphism(make_cq("p(a)"), make_cq("p(X)")) is None
    assert homomorphism(make_cq("p(X)"), make_cq("p(a)")) is not None


def test_iter_homomorphisms_counts_distinct_mappings():
    found = list(iter_homomorphisms(make_cq("p(X)"), make_cq("p(a), p(b)")))
    assert len(found) == 2
    assert {s[Term.var("X")] for s in found} == {Term.const("a"), Term.const("b")}


def test_injective_homomorphism():
    assert homomorphism(make_cq("p(X,Y)"), make_cq("p(Z,Z)"), injective=True) is None
    assert homomorphism(make_cq("p(X,Y)"), make_cq("p(Z,Z)")) is not None


@pytest.mark.parametrize(
    "f, g, expected",
    [
        ("p(X,Y)", "p(U,V)", True),
        ("p(X,X)", "p(U,V)", False),
        ("p(X), q(X)", "q(Z), p(Z)", True),
        ("p(X), q(Y)", "p(X), q(X)", False),
        ("p(X,a)", "p(Y,a)", True),
        ("p(X,a)", "p(Y,b)", False),
    ],
)
def test_is_variant(f, g, expected):
    assert is_variant(make_cq(f), make_cq(g)) is expected


def test_is_variant_with_frozen_variable():
    assert not is_variant(make_cq("p(X)"), make_cq("p(Y)"), frozen={"X", "Y"})
    assert is_variant(make_cq("p(X), q(Z)"), make_cq("p(X), q(W)"), frozen={"X"})


def test_freeze_turns_variables_into_nulls():
    frozen = freeze(make_cq("p(X,a)"))
    terms = frozen.atoms[0].args
    assert is_null(terms[0])
    assert terms[1] == Term.const("a")


def test_entails_facts_treats_fact_variables_as_unknowns():
    facts = make_facts("p(X)")
    assert entails_facts(facts, make_cq("p(Y)"))
    assert not entails_facts(facts, make_cq("p(a)"))
    assert entails_facts(make_facts("p(a), q(a,b)"), make_cq("p(Z), q(Z,W)"))


QUERY_TERMS = ["X", "Y", "Z", "W", "a"]


def random_cq(rng, size, terms=QUERY_TERMS):
    atoms = []
    for _ in range(size):
        if rng.random() < 0.5:
            atoms.append(atom("p", rng.choice(terms), rng.choice(terms)))
        else:
            atoms.append(atom("r", rng.choice(terms)))
    return Csf(atoms)


def specialize(rng, q):
    """q under a random substitution, plus a few extra atoms"""
    s = Substitution({Term.var(v): parse_term(rng.choice(QUERY_TERMS)) for v in q.variables()
                      if rng.random() < 0.5})
    return q.substitute(s).union(random_cq(rng, rng.randint(0, 2)))


@pytest.mark.parametrize("seed", range(100))
def test_connected_components_partition_the_atoms(seed):
    rng = random.Random(seed)
    q = random_cq(rng, rng.randint(1, 6))
    components = connected_components(q)
    atoms = [a for c in components for a in c]
    assert len(atoms) == len(set(atoms)) == len(q)
    assert set(atoms) == set(q)
    for i, c in enumerate(components):
        assert len(connected_components(c)) == 1
        for other in components[i + 1:]:
            assert not set(c.variables()) & set(other.variables())


@pytest.mark.parametrize("seed", range(100))
def test_entailment_is_the_conjunction_over_components(seed):
    rng = random.Random(seed)
    q = random_cq(rng, rng.randint(1, 4))
    facts = random_cq(rng, rng.randint(2, 6), terms=["a", "b", "c"])
    assert entails_facts(facts, q) == all(entails_facts(facts, c)
                                          for c in connected_components(q))


@pytest.mark.parametrize("seed", range(100))
def test_subsumption_is_reflexive_and_transitive(seed):
    rng = random.Random(seed)
    q1 = random_cq(rng, rng.randint(1, 3))
    q2 = specialize(rng, q1)
    q3 = specialize(rng, q2)
    assert subsumes(q1, q1)
    assert subsumes(q1, q2)
    assert subsumes(q2, q3)
    assert subsumes(q1, q3)


@pytest.mark.parametrize("seed", range(100))
def test_ground_atoms_leave_component_measures_unchanged(seed):
    rng = random.Random(seed)
    q = random_cq(rng, rng.randint(1, 5))
    extended = q.union([atom("p", rng.choice("ab"), rng.choice("ab")), atom("r", "c")])
    assert ccard(extended) == ccard(q)
    assert cwidth(extended) == cwidth(q)
