import numpy as np
import pytest

from conftest import COVERINGS, make_cover
from indrep.covers import (
    Intransitive,
    NotInSubgroup,
    RelatorNotKilled,
    coset_action,
    cover_topology,
    covering_from_config,
    covering_to_config,
    expand,
    factorize,
    identity_covering,
    schreier,
    validate_covering,
)
from indrep.groups import Word, surface_presentation
from indrep.reps import random_word


def W(*ints):
    return Word.from_ints(ints)


def test_validate_examples():
    base = surface_presentation(1, 1)
    ident = validate_covering(base, 1, {})
    assert ident.perms == ((0,), (0,))
    cov = validate_covering(base, 2, {"a1": [2, 1]})
    assert cov.perms == ((1, 0), (0, 1))
    with pytest.raises(Intransitive):
        validate_covering(surface_presentation(0, 3), 2, {"c1": [1, 2], "c2": [1, 2]})


def test_relator_not_killed():
    # on a closed torus a and b must commute as permutations
    with pytest.raises(RelatorNotKilled):
        validate_covering(surface_presentation(1, 0), 3, {"a1": [2, 1, 3], "b1": [1, 3, 2]})


def test_coset_action_examples(torus_d2):
    cov = torus_d2.cov
    assert coset_action(cov, Word()) == (0, 1)
    assert coset_action(cov, W(1, 1)) == (0, 1)
    assert coset_action(cov, W(1, 2)) == (1, 0)


@pytest.mark.parametrize("name", sorted(COVERINGS))
def test_coset_action_homomorphism(name):
    cover = make_cover(name)
    rng = np.random.default_rng(1)
    k = cover.base.rank
    for _ in range(100):
        u, v = random_word(rng, k, 8), random_word(rng, k, 8)
        pu, pv = coset_action(cover.cov, u), coset_action(cover.cov, v)
        assert coset_action(cover.cov, u * v) == tuple(pu[j] for j in pv)


def test_schreier_identity_cover():
    base = surface_presentation(1, 1)
    cs = schreier(identity_covering(base))
    assert cs.transversal == (Word(),)
    assert cs.schreier_gens == (W(1), W(2))


def test_schreier_d2_example(torus_d2):
    cs = torus_d2.cs
    assert cs.transversal == (Word(), W(1))
    # s_{x,i} = gamma_{sigma(x)(i)}^-1 x gamma_i; the (b, sheet 2) generator is a^-1 b a
    assert set(cs.schreier_gens) == {W(2), W(-1, 2, 1), W(1, 1)}
    assert cs.rank == 3 == 1 + 2 * (2 - 1)


def test_nielsen_schreier_rank3():
    base = surface_presentation(0, 4)
    cov = validate_covering(base, 3, {"c1": [2, 3, 1], "c2": [1, 3, 2]})
    assert schreier(cov).rank == 1 + 3 * 2


@pytest.mark.parametrize("name", sorted(COVERINGS))
def test_schreier_generators_and_table(name):
    cover = make_cover(name)
    cov, cs = cover.cov, cover.cs
    assert cs.rank == 1 + cover.degree * (cover.base.rank - 1)
    # transversal is prefix-closed (Schreier)
    tset = set(cs.transversal)
    for g in cs.transversal:
        for t in range(len(g)):
            assert Word(g.letters[t + 1:]) in tset
    for (x, i), (j, s) in cs.table.items():
        delta = cs.transversal[j].inverse() * Word.gen(x) * cs.transversal[i]
        assert coset_action(cov, Word.gen(x))[i] == j
        if s is None:
            assert delta.is_identity()
        else:
            assert delta == cs.schreier_gens[s]


def test_factorize_examples(torus_d2):
    cover = torus_d2
    a2 = cover.cs.schreier_gens.index(W(1, 1)) + 1
    assert factorize(cover.cov, cover.cs, W(1, 1)) == Word.gen(a2)
    b = cover.cs.schreier_gens.index(W(2)) + 1
    assert factorize(cover.cov, cover.cs, W(2)) == Word.gen(b)
    with pytest.raises(NotInSubgroup):
        factorize(cover.cov, cover.cs, W(1))


@pytest.mark.parametrize("name", sorted(COVERINGS))
def test_factorize_roundtrip(name):
    cover = make_cover(name)
    rng = np.random.default_rng(2)
    found = 0
    while found < 50:
        w = random_word(rng, cover.base.rank, 10)
        if coset_action(cover.cov, w)[0] != 0:
            continue
        found += 1
        assert expand(cover.cs, cover.factorize(w)) == w


def test_topology_examples():
    pants = make_cover("pants_d2")
    assert pants.top.genus == 0 and len(pants.top.punctures) == 4
    assert [p.ramification for p in pants.top.punctures] == [2, 2, 1, 1]
    ident = make_cover("identity")
    assert ident.top.genus == 1
    assert [p.loop for p in ident.top.punctures] == list(ident.base.puncture_words)
    torus = make_cover("torus_d2")
    assert torus.top.genus == 1 and len(torus.top.punctures) == 2


@pytest.mark.parametrize("name", sorted(COVERINGS))
def test_riemann_hurwitz(name):
    cover = make_cover(name)
    top = cover.top
    d, base = cover.degree, cover.base
    assert 2 - 2 * top.genus - len(top.punctures) == d * base.euler_characteristic
    for j in range(base.punctures):
        assert sum(p.ramification for p in top.punctures if p.base_puncture == j) == d
    for p in top.punctures:
        assert coset_action(cover.cov, p.loop)[0] == 0
        assert min(p.cycle) == p.cycle[0]


def test_closed_cover_topology(genus2_d2):
    assert genus2_d2.top.genus == 3 and genus2_d2.top.punctures == ()
    assert cover_topology(genus2_d2.cov).euler_characteristic == -4


def test_config_roundtrip(torus_d2):
    cfg = covering_to_config(torus_d2.cov)
    assert cfg["perms"]["a1"] == [2, 1]
    assert covering_from_config(cfg) == torus_d2.cov
