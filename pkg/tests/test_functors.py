import numpy as np
import pytest

from conftest import COVERINGS, make_cover
from indrep.covers import coset_action, cycles, permutation_matrix
from indrep.functors import (
    NotOnClosedLocus,
    direct_sum,
    frobenius,
    induce,
    injectivity_experiment,
    local_monodromy_check,
    local_monodromy_prediction,
    mackey_orbits,
    res_image_check,
    restrict,
    tensor,
    trivial_direct_image,
    verify_lemma1,
    verify_lemma2,
    wreath_pattern_ok,
)
from indrep.groups import DomainError, Word
from indrep.reps import (
    LeafConstraint,
    MatrixRep,
    character_signature,
    charpoly,
    conjugacy_test,
    evaluate,
    random_rep,
    random_word,
    solve_relator,
)


def W(*ints):
    return Word.from_ints(ints)


def h_of(cover, r, seed):
    return random_rep(cover.cs.names, r, seed)


def test_induce_identity_cover():
    cover = make_cover("identity")
    h = h_of(cover, 2, 0)
    assert np.array_equal(induce(cover, h).rep.matrices, h.matrices)


def test_induce_d2_block_formula(torus_d2):
    cover = torus_d2
    h = h_of(cover, 2, 1)
    gens = cover.cs.schreier_gens
    ha2 = h.matrices[gens.index(W(1, 1))]
    hb = h.matrices[gens.index(W(2))]
    hb2 = h.matrices[gens.index(W(-1, 2, 1))]
    ind = induce(cover, h).rep
    zero, eye = np.zeros((2, 2)), np.eye(2)
    assert np.array_equal(ind.matrices[0], np.block([[zero, ha2], [eye, zero]]))
    assert np.array_equal(ind.matrices[1], np.block([[hb, zero], [zero, hb2]]))


@pytest.mark.parametrize("name", sorted(COVERINGS))
def test_trivial_induction_is_permutation(name):
    cover = make_cover(name)
    perm = trivial_direct_image(cover).rep
    for x in range(cover.base.rank):
        assert np.array_equal(perm.matrices[x], permutation_matrix(cover.cov.perms[x]))
    rng = np.random.default_rng(0)
    for _ in range(10):
        w = random_word(rng, cover.base.rank, 6)
        fixed = sum(1 for i, j in enumerate(coset_action(cover.cov, w)) if i == j)
        assert np.isclose(np.trace(evaluate(perm, w)).real, fixed)


def test_induce_alphabet_mismatch(torus_d2):
    with pytest.raises(DomainError):
        induce(torus_d2, random_rep(("a", "b"), 1, 0))


@pytest.mark.parametrize("name", sorted(COVERINGS))
def test_induce_and_restrict_are_homomorphisms(name):
    cover = make_cover(name)
    h = h_of(cover, 2, 3)
    ind = induce(cover, h)
    assert wreath_pattern_ok(ind)
    rho = random_rep(cover.base, 2, 4)
    res = restrict(cover, rho)
    rng = np.random.default_rng(5)
    for _ in range(30):
        u, v = random_word(rng, cover.base.rank, 6), random_word(rng, cover.base.rank, 6)
        lhs = evaluate(ind.rep, u * v)
        assert np.linalg.norm(lhs - evaluate(ind.rep, u) @ evaluate(ind.rep, v)) < 1e-10 * max(1, np.linalg.norm(lhs))
        s, t = random_word(rng, cover.cs.rank, 6), random_word(rng, cover.cs.rank, 6)
        lhs = evaluate(res, s * t)
        assert np.linalg.norm(lhs - evaluate(res, s) @ evaluate(res, t)) < 1e-10 * max(1, np.linalg.norm(lhs))


def test_restrict_examples(torus_d2):
    cover = torus_d2
    rho = MatrixRep(cover.base.names, np.array([[[2.0]], [[5.0]]]))
    res = restrict(cover, rho)
    vals = {cover.base.format(s): m[0, 0] for s, m in zip(cover.cs.schreier_gens, res.matrices)}
    assert vals == {"b1": 5.0, "A1 b1 a1": 5.0, "a1 a1": 4.0}
    ident = make_cover("identity")
    rho = random_rep(ident.base, 2, 0)
    assert np.array_equal(restrict(ident, rho).matrices, rho.matrices)
    assert restrict(cover, induce(cover, h_of(cover, 2, 0)).rep).n == 4


def test_res_image_and_frobenius(torus_d2):
    cover = torus_d2
    h = h_of(cover, 2, 6)
    assert not res_image_check(cover, h)
    with pytest.raises(NotOnClosedLocus):
        frobenius(cover, h)
    for seed in range(10):
        start = h_of(cover, 2, seed)
        hc, _ = solve_relator(start, relator=(), leaf=LeafConstraint.trivial(cover.y_loops()))
        assert res_image_check(cover, hc)
        assert np.array_equal(frobenius(cover, hc).rep.matrices, induce(cover, hc).rep.matrices)
    ident = make_cover("identity")
    base = ident.base
    # a torus rep with trivial puncture monodromy extends over the closed torus
    rho = MatrixRep(base.names, np.array([np.diag([2.0, 3.0]), np.diag([5.0, 7.0])]))
    assert res_image_check(ident, rho)
    assert np.array_equal(frobenius(ident, rho).rep.matrices, rho.matrices)


def test_tensor_and_direct_sum():
    rho = random_rep(("a", "b"), 2, 0)
    triv = MatrixRep(("a", "b"), np.ones((2, 1, 1)))
    assert np.allclose(tensor(rho, triv).matrices, rho.matrices)
    assert np.array_equal(direct_sum(rho, 1).matrices, rho.matrices)
    other = random_rep(("a", "b"), 3, 1)
    w = W(1, 2, -1, 2)
    t = np.trace(evaluate(tensor(rho, other), w))
    assert np.isclose(t, np.trace(evaluate(rho, w)) * np.trace(evaluate(other, w)))
    with pytest.raises(DomainError):
        tensor(rho, random_rep(("a",), 1, 0))


@pytest.mark.parametrize("name", [n for n, v in COVERINGS.items() if v[2] <= 3])
@pytest.mark.parametrize("r", [1, 2])
def test_lemma1(name, r):
    cover = make_cover(name)
    rep = verify_lemma1(cover, random_rep(cover.base, r, 10 + r), seed=r)
    assert rep["status"] == "pass", rep
    assert rep["residual"] <= 1e-8


def test_mackey_orbits_examples():
    assert mackey_orbits(make_cover("identity")) == [(0,)]
    assert mackey_orbits(make_cover("torus_d2")) == [(0,), (1,)]
    orbits = mackey_orbits(make_cover("pants_d3"))
    assert orbits[0] == (0,) and max(len(o) for o in orbits) > 1


@pytest.mark.parametrize("name", sorted(COVERINGS))
def test_lemma2_both_branches(name):
    cover = make_cover(name)
    rep = verify_lemma2(cover, h_of(cover, 2, 7), seed=0)
    assert rep["status"] == "pass", rep
    assert "direct_sum_holds" in rep["details"]
    if cover.degree == 1:
        assert rep["details"]["direct_sum_holds"]


def test_lemma2_normal_twist(torus_d2):
    """Restricting the induced rep gives h + h^a; it is h + h only if h^a ~ h."""
    cover = torus_d2
    h = h_of(cover, 1, 8)
    rep = verify_lemma2(cover, h)
    assert rep["status"] == "pass"
    assert not rep["details"]["direct_sum_holds"]
    # a character fixed by the twist: h(a^-1 b a) = h(b)
    gens = cover.cs.schreier_gens
    vals = np.ones((3, 1, 1), dtype=complex)
    vals[gens.index(W(1, 1))] = 2.0
    vals[gens.index(W(2))] = vals[gens.index(W(-1, 2, 1))] = 3.0
    fixed = MatrixRep(cover.cs.names, vals)
    assert verify_lemma2(cover, fixed)["details"]["direct_sum_holds"]


def test_injectivity_experiment(torus_d2):
    rep = injectivity_experiment(torus_d2, 50, seed=0)
    assert rep["status"] == "pass" and rep["details"]["tested"] == 50


def test_injectivity_sanity_conjugate(torus_d2):
    h = h_of(torus_d2, 2, 0)
    t = np.random.default_rng(0).standard_normal((2, 2))
    assert conjugacy_test(induce(torus_d2, h).rep, induce(torus_d2, h.conjugate(t)).rep) is not None


def test_injectivity_rank1_a2(torus_d2):
    cover = torus_d2
    gens = cover.cs.schreier_gens
    vals1 = np.array([[[2.0]], [[3.0]], [[5.0]]], dtype=complex)
    vals2 = vals1.copy()
    vals2[gens.index(W(1, 1))] *= -1.5
    i1 = induce(cover, MatrixRep(cover.cs.names, vals1)).rep
    i2 = induce(cover, MatrixRep(cover.cs.names, vals2)).rep
    assert not np.isclose(np.trace(evaluate(i1, W(1, 1))), np.trace(evaluate(i2, W(1, 1))))
    assert conjugacy_test(i1, i2) is None


def test_induction_identifies_twisted_characters(torus_d2):
    """On a normal cover, h and its twist by a sheet-swapping element have
    different characters but conjugate induced reps."""
    cover = torus_d2
    h = h_of(cover, 1, 4)
    gens = cover.cs.schreier_gens
    twisted = []
    for s in gens:
        twisted.append(evaluate(h, cover.factorize(W(-1) * s * W(1))))
    hg = MatrixRep(cover.cs.names, np.array(twisted))
    words = [Word.gen(i) for i in range(1, 4)]
    assert np.max(np.abs(character_signature(h, words) - character_signature(hg, words))) > 1e-3
    assert conjugacy_test(induce(cover, h).rep, induce(cover, hg).rep) is not None


@pytest.mark.parametrize("name", [n for n in COVERINGS])
@pytest.mark.parametrize("r", [1, 2])
def test_local_monodromy(name, r):
    cover = make_cover(name)
    rep = local_monodromy_check(cover, h_of(cover, r, 20 + r), seed=r)
    assert rep["status"] == "pass", rep
    assert rep["details"]["conjugation_residual"] <= 1e-10


def test_local_monodromy_examples():
    cover = make_cover("pants_d3")
    triv = MatrixRep(cover.cs.names, np.ones((cover.cs.rank, 1, 1)))
    for j, c in enumerate(cover.base.puncture_words):
        expected = np.array([1.0 + 0j])
        for cyc in cycles(coset_action(cover.cov, c)):
            poly = np.zeros(len(cyc) + 1)
            poly[0], poly[-1] = 1, -1
            expected = np.polymul(expected, poly)
        assert np.allclose(local_monodromy_prediction(cover, triv, j), expected)
    pants = make_cover("pants_d2")
    mu = 1.7 - 0.3j
    # over c1 the cycle (1 2) gives a single Y-puncture with loop lambda
    loop = pants.y_loops()[0]
    vals = np.ones((pants.cs.rank, 1, 1), dtype=complex)
    letter = loop.letters
    assert len(letter) == 1 and letter[0][1] == 1
    vals[letter[0][0] - 1] = mu
    h = MatrixRep(pants.cs.names, vals)
    ind = induce(pants, h).rep
    assert np.allclose(charpoly(evaluate(ind, pants.base.puncture_words[0])), [1, 0, -mu])
