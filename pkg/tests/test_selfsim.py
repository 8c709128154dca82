import itertools

import numpy as np
import pytest

from algebra.linalg import FinGenAbGroup, RatMatrix
from algebra.selfsim import (GroupWord, degree01_homology, degree01_ktheory_free_group, phi1,
                             phi1_via_transfer, section_closure, sigma_surjective,
                             virtual_endomorphism_matrix, with_default_abelianization)
from inputs.documents import parse_document
from util.errors import HypothesisError, InputError, NotTransitiveError


def _automaton(generators, alphabet=2, **extra):
    doc = {"kind": "automaton", "alphabet": alphabet, "generators": generators}
    doc.update(extra)
    return parse_document(doc).payload


def test_grigorchuk_action(load):
    G = load("grigorchuk").payload
    assert G.act(G.word("a"), "0") == "1"
    assert G.act(G.word("b"), "00") == "01"
    assert G.act(G.word("b"), (1, 0)) == (1, 0)
    assert G.section(G.word("b"), (1,)) == G.word("c")
    assert G.word("a a").is_identity()
    assert G.perm_of(G.word("a b")) == (1, 0)


def test_word_parsing():
    w = GroupWord.parse("a b^-1 b a^2")
    assert w.letters == (("a", 1), ("a", 1), ("a", 1))
    assert str(GroupWord.parse("e")) == "e"
    with pytest.raises(InputError):
        GroupWord.parse("a x", names=["a"])


def test_orbits_and_stabilizer(load):
    G = load("grigorchuk").payload
    assert G.orbits() == [(0, 1)]
    assert G.is_transitive()
    st = G.stabilizer(0)
    assert set(st.transversal) == {0, 1}
    assert len(st.schreier_generators) == 6
    assert sigma_surjective(G)


def test_section_closure_is_the_nucleus(load):
    G = load("grigorchuk").payload
    closure = section_closure(G, G.names, 64)
    assert [str(w) for w in closure] == ["e", "a", "b", "c", "d"]
    assert section_closure(G, G.names, 3) is None


def test_phi1_routes_agree(load):
    for name in ("grigorchuk", "hanoi", "bs_2_3", "sausage3"):
        G = with_default_abelianization(load(name).payload)
        direct, via = phi1(G), phi1_via_transfer(G)
        pres = G.abelianization.presentation
        diff = direct.matrix - via.matrix
        for j in range(diff.cols):
            assert pres.contains([diff[i, j] for i in range(diff.rows)])


def test_aleshin_degree01(load):
    G = load("aleshin").payload
    report = degree01_homology(G, 4)
    assert report.homology[0].is_trivial()
    assert report.homology[1] == FinGenAbGroup.cyclic(2)
    assert all(report.homology[n].is_trivial() for n in (2, 3, 4))
    K = degree01_ktheory_free_group(G).k_theory
    assert K.K0.is_trivial()
    assert K.K1 == FinGenAbGroup.cyclic(2)
    assert K.unit_class.is_zero


@pytest.mark.parametrize("name,m,n", [("bs_2_3", 2, 3), ("bs_3_2", 3, 2), ("bs_2_5", 2, 5)])
def test_baumslag_solitar_degree01(load, name, m, n):
    report = degree01_homology(load(name).payload, 4)
    assert report.homology[0] == FinGenAbGroup.cyclic(n - 1)
    assert report.homology[1] == FinGenAbGroup.from_invariants([m - 1, n - 1])
    assert report.homology[2] == FinGenAbGroup.cyclic(m - 1)
    assert report.homology[3].is_trivial()


def test_grigorchuk_degree01_flags_higher_degrees(load):
    report = degree01_homology(load("grigorchuk").payload, 3)
    assert report.homology[1].is_trivial()
    assert 2 not in report.homology
    assert any("h2_vanishes" in f for f in report.flags)


def test_virtual_endomorphism_of_sausage(load):
    G = load("sausage3").payload
    A = virtual_endomorphism_matrix(G)
    assert A == RatMatrix.from_rows([[0, 1, 0], [0, 0, 1], ["1/2", 0, 0]])


def test_virtual_endomorphism_needs_mode(load):
    with pytest.raises(HypothesisError):
        virtual_endomorphism_matrix(load("grigorchuk").payload)


def test_not_transitive():
    G = _automaton({"a": {"perm": [0, 1], "sections": ["a", "a"]}},
                   abelianization={"invariants": [0], "images": {"a": [1]}})
    assert G.orbits() == [(0,), (1,)]
    with pytest.raises(NotTransitiveError):
        degree01_homology(G, 1)


def test_undeclared_section_symbol():
    with pytest.raises(InputError):
        _automaton({"a": {"perm": [1, 0], "sections": ["e", "z"]}})


def test_false_involution_rejected():
    with pytest.raises(InputError):
        _automaton({"a": {"perm": [1, 0], "sections": ["a", "e"], "involution": True}})


def test_letter_outside_alphabet(load):
    G = load("grigorchuk").payload
    with pytest.raises(InputError):
        G.act(G.word("a"), (2,))


def _random_word(G, rng, length):
    w = GroupWord()
    for _ in range(length):
        g = GroupWord.generator(G.names[int(rng.integers(len(G.names)))])
        if rng.integers(2):
            g = g.inverse(G.involutions)
        w = w.mul(g, G.involutions)
    return w


def _same_action(G, u, v, depth=4):
    return all(G.act(u, p) == G.act(v, p)
               for n in range(1, depth + 1) for p in itertools.product(range(G.alphabet_size), repeat=n))


@pytest.mark.parametrize("name", ["sausage3", "aleshin", "grigorchuk"])
def test_sections_of_inverse_words(load, name):
    G = load(name).payload
    rng = np.random.default_rng(11)
    for _ in range(15):
        w = _random_word(G, rng, int(rng.integers(1, 7)))
        w_inv = w.inverse(G.involutions)
        for n in range(1, 4):
            for p in itertools.product(range(G.alphabet_size), repeat=n):
                assert G.act(w_inv, G.act(w, p)) == p
                left = G.section(w_inv, G.act(w, p))
                right = G.section(w, p).inverse(G.involutions)
                assert _same_action(G, left, right), (str(w), p)


def test_sausage2_stabilizer(load):
    G = load("sausage2").payload
    st = G.stabilizer(0)
    sigma = {str(s): str(t) for s, t in zip(st.schreier_generators, st.sigma_images)}
    assert sigma["e0 e0"] == "e1"
    assert sigma["e1"] == "e0"
    assert all(G.act(s, (0,)) == (0,) for s in st.schreier_generators)


def test_aleshin_section_closure(load):
    G = load("aleshin").payload
    closure = section_closure(G, G.names, 64)
    assert [str(w) for w in closure] == ["e", "a", "a^-1", "b", "b^-1", "c", "c^-1"]
    assert section_closure(G, G.names, 6) is None
