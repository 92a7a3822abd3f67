"""Induction, restriction and Frobenius maps between representation spaces,
with verifiers for the projection formula, restriction of induced
representations, injectivity of induction and local monodromy.

Block layout of induced matrices: sheet index outer, fiber index inner,
sheets in BFS-transversal order.  Block ``(j, i)`` of ``ind(h)(x)`` is
``h(gamma_j^-1 x gamma_i)`` when ``j = sigma(x)(i)`` and zero otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .covers import (
    CoveringData,
    coset_action,
    cover_topology,
    cycles,
    factorize,
    permutation_matrix,
    schreier,
    surface_presentation,
    validate_covering,
)
from .groups import DomainError, Word
from .reps import (
    THRESHOLDS,
    MatrixRep,
    character_signature,
    charpoly,
    conjugacy_test,
    evaluate,
    random_rep,
    random_word,
)

__all__ = [
    "InducedRep",
    "NotOnClosedLocus",
    "Cover",
    "induce",
    "restrict",
    "trivial_direct_image",
    "res_image_check",
    "frobenius",
    "tensor",
    "direct_sum",
    "wreath_pattern_ok",
    "verify_lemma1",
    "mackey_orbits",
    "verify_lemma2",
    "injectivity_experiment",
    "local_monodromy_check",
    "twist",
]


class NotOnClosedLocus(DomainError):
    pass


class Cover:
    """A covering together with its coset structure and topology, computed once."""

    def __init__(self, cov):
        self.cov = cov
        self.cs = schreier(cov)
        self.top = cover_topology(cov, self.cs)

    @property
    def degree(self):
        return self.cov.degree

    @property
    def base(self):
        return self.cov.base

    def factorize(self, w, start=0):
        return factorize(self.cov, self.cs, w, start)

    def delta_relators(self):
        """Relators of Delta in the Schreier alphabet (closed base only)."""
        r = self.base.relator
        if r is None:
            return ()
        return tuple(self.factorize(g.inverse() * r * g) for g in self.cs.transversal)

    def y_loops(self):
        """Puncture loops of Y as Schreier-alphabet words."""
        return tuple(self.factorize(p.loop) for p in self.top.punctures)

    def delta_element(self, g, i):
        """``gamma_{sigma(g)(i)}^-1 g gamma_i`` rewritten in the Schreier alphabet."""
        j = coset_action(self.cov, g)[i]
        t = self.cs.transversal
        return self.factorize(t[j].inverse() * g * t[i])


def _as_cover(cov):
    return cov if isinstance(cov, Cover) else Cover(cov)


@dataclass(frozen=True, eq=False)
class InducedRep:
    rep: MatrixRep
    cover: Cover = field(repr=False)
    source: MatrixRep = field(repr=False)

    @property
    def blocks(self):
        d = self.cover.degree
        r = self.source.n
        return self.rep.matrices.reshape(self.rep.k, d, r, d, r).transpose(0, 1, 3, 2, 4)


def _check_alphabet(cover, h):
    if h.k != cover.cs.rank:
        raise DomainError(
            f"alphabet mismatch: rep has {h.k} generators, cover has {cover.cs.rank} Schreier generators"
        )


def induce(cov, h):
    """Induced representation of the base group from ``h`` on the Schreier alphabet."""
    cover = _as_cover(cov)
    _check_alphabet(cover, h)
    d, r = cover.degree, h.n
    base = cover.base
    mats = np.zeros((base.rank, d * r, d * r), dtype=complex)
    eye = np.eye(r, dtype=complex)
    for x in range(1, base.rank + 1):
        for i in range(d):
            j, s = cover.cs.table[(x, i)]
            block = eye if s is None else h.matrices[s]
            mats[x - 1, j * r:(j + 1) * r, i * r:(i + 1) * r] = block
    relators = () if base.relator is None else (base.relator,)
    rep = MatrixRep(base.names, mats, relators, h.tol)
    return InducedRep(rep, cover, h)


def restrict(cov, rho):
    """Restriction of a base-group representation to the Schreier generators."""
    cover = _as_cover(cov)
    mats = np.array([evaluate(rho, s) for s in cover.cs.schreier_gens])
    return MatrixRep(cover.cs.names, mats, cover.delta_relators(), rho.tol)


def trivial_direct_image(cov):
    """Permutation representation on sheets (induced from the trivial character)."""
    cover = _as_cover(cov)
    triv = MatrixRep(cover.cs.names, np.ones((cover.cs.rank, 1, 1)), cover.delta_relators())
    return induce(cover, triv)


def res_image_check(cov, h, tol=None):
    """True iff ``h`` kills every puncture loop of Y, i.e. extends over the closed surface."""
    cover = _as_cover(cov)
    tol = THRESHOLDS.decision if tol is None else tol
    return monodromy_residual(cover, h) <= tol


def monodromy_residual(cov, h):
    cover = _as_cover(cov)
    eye = np.eye(h.n)
    return max((np.linalg.norm(evaluate(h, w) - eye) for w in cover.y_loops()), default=0.0)


def frobenius(cov, h, tol=None):
    cover = _as_cover(cov)
    if not res_image_check(cover, h, tol):
        raise NotOnClosedLocus(
            f"NotOnClosedLocus: puncture monodromy residual {monodromy_residual(cover, h):.3e}"
        )
    return induce(cover, h)


def tensor(rho1, rho2):
    if rho1.k != rho2.k:
        raise DomainError("alphabet mismatch")
    mats = np.array([np.kron(a, b) for a, b in zip(rho1.matrices, rho2.matrices)])
    return MatrixRep(rho1.names, mats, rho1.relators, rho1.tol)


def direct_sum(rho, d):
    if isinstance(rho, (list, tuple)):
        reps = list(rho)
    else:
        reps = [rho] * d
    n = sum(r.n for r in reps)
    k = reps[0].k
    if any(r.k != k for r in reps):
        raise DomainError("alphabet mismatch")
    mats = np.zeros((k, n, n), dtype=complex)
    off = 0
    for r in reps:
        mats[:, off:off + r.n, off:off + r.n] = r.matrices
        off += r.n
    return MatrixRep(reps[0].names, mats, reps[0].relators, reps[0].tol)


def wreath_pattern_ok(ind, threshold=1e-12):
    """Exactly one nonzero block per block row/column, placed by sigma."""
    cov = ind.cover.cov
    blocks = ind.blocks
    for x in range(cov.base.rank):
        sigma = cov.perms[x]
        nz = np.abs(blocks[x]).max(axis=(2, 3)) > threshold
        expected = np.zeros_like(nz)
        expected[list(sigma), list(range(cov.degree))] = True
        if not np.array_equal(nz, expected):
            return False
    return True


# -- verifiers ------------------------------------------------------------


def _random_words(seed, rank, count, max_len=8):
    rng = np.random.default_rng(seed)
    return [random_word(rng, rank, max_len) for _ in range(count)]


def _compare(rep1, rep2, seed, words=20):
    ws = _random_words(seed, rep1.k, words)
    sig_gap = float(np.max(np.abs(character_signature(rep1, ws) - character_signature(rep2, ws))))
    scale = max(1.0, float(np.max(np.abs(character_signature(rep2, ws)))))
    out = {"character_gap": sig_gap / scale, "conjugate": False, "intertwiner_residual": None}
    if sig_gap / scale > THRESHOLDS.decision:
        return out
    s = conjugacy_test(rep1, rep2, seed=seed)
    if s is not None:
        sinv = np.linalg.inv(s)
        out["conjugate"] = True
        out["intertwiner_residual"] = float(
            max(np.linalg.norm(s @ a @ sinv - b) for a, b in zip(rep1.matrices, rep2.matrices))
        )
    return out


def verify_lemma1(cov, rho, seed=0):
    """Induced-from-restricted versus tensor with the permutation representation."""
    cover = _as_cover(cov)
    lhs = induce(cover, restrict(cover, rho)).rep
    rhs = tensor(rho, trivial_direct_image(cover).rep)
    cmp_ = _compare(lhs, rhs, seed)
    return {"check": "lemma1", "status": "pass" if cmp_["conjugate"] else "fail",
            "residual": cmp_["intertwiner_residual"], "details": cmp_}


def mackey_orbits(cov):
    """Orbits of the Schreier generators' sheet action; sheet 0's orbit is {0}."""
    cover = _as_cover(cov)
    d = cover.degree
    perms = [coset_action(cover.cov, s) for s in cover.cs.schreier_gens]
    seen, orbits = set(), []
    for start in range(d):
        if start in seen:
            continue
        orb, stack = {start}, [start]
        while stack:
            i = stack.pop()
            for p in perms:
                for j in (p[i], p.index(i)):
                    if j not in orb:
                        orb.add(j)
                        stack.append(j)
        seen |= orb
        orbits.append(tuple(sorted(orb)))
    return orbits


def twist(cov, h, g):
    """``h^g(delta) = h(g^-1 delta g)`` on the Schreier generators of the
    stabilizer of the sheet ``sigma(g)(0)``; returned as a function of
    base-alphabet words fixing that sheet."""
    cover = _as_cover(cov)

    def value(w):
        return evaluate(h, cover.factorize(g.inverse() * w * g))

    return value


def mackey_decomposition(cov, h):
    """Direct sum over Delta-orbits on sheets of the nested induced
    representations ``Ind_{Delta cap g Delta g^-1}^{Delta} h^g``.

    Built independently of :func:`induce` applied to the outer covering: each
    orbit gives a covering of the free group on the Schreier generators, and
    the stabilizer representation is evaluated through conjugation by the
    orbit's transversal word.
    """
    cover = _as_cover(cov)
    k = cover.cs.rank
    sheet_perms = [coset_action(cover.cov, s) for s in cover.cs.schreier_gens]
    parts = []
    for orb in mackey_orbits(cover):
        pos = {s: t for t, s in enumerate(orb)}
        inner_perms = {}
        for idx, p in enumerate(sheet_perms, start=1):
            inner_perms[idx] = [pos[p[s]] + 1 for s in orb]
        inner_base = surface_presentation(0, k + 1)
        inner = Cover(validate_covering(inner_base, len(orb), inner_perms))
        g = cover.cs.transversal[orb[0]]
        hg = twist(cover, h, g)
        # inner Schreier generators are words in Delta's generators; expand to base words
        mats = []
        for sw in inner.cs.schreier_gens:
            base_word = Word()
            for idx, sgn in sw.letters:
                s = cover.cs.schreier_gens[idx - 1]
                base_word = base_word * (s if sgn > 0 else s.inverse())
            mats.append(hg(base_word))
        stab = MatrixRep(inner.cs.names, np.array(mats))
        part = induce(inner, stab).rep
        parts.append(MatrixRep(cover.cs.names, part.matrices))
    return direct_sum(parts, None)


def verify_lemma2(cov, h, seed=0):
    """Restriction of the induced representation against ``h^{+d}`` and
    against the Mackey decomposition; both outcomes are reported."""
    cover = _as_cover(cov)
    res_ind = restrict(cover, induce(cover, h).rep)
    res_ind = MatrixRep(res_ind.names, res_ind.matrices)
    plain = _compare(res_ind, direct_sum(MatrixRep(h.names, h.matrices), cover.degree), seed)
    mackey = _compare(res_ind, mackey_decomposition(cover, h), seed)
    orbits = mackey_orbits(cover)
    return {
        "check": "lemma2",
        "status": "pass" if mackey["conjugate"] else "fail",
        "residual": mackey["intertwiner_residual"],
        "details": {
            "mackey_branch": mackey,
            "direct_sum_branch": plain,
            "direct_sum_holds": plain["conjugate"],
            "orbits": [[s + 1 for s in o] for o in orbits],
            "normal_subgroup": all(len(o) == 1 for o in orbits),
        },
    }


def injectivity_experiment(cov, trials, seed, r=1):
    """Induce independent random pairs with distinct characters and check
    that no pair becomes conjugate."""
    cover = _as_cover(cov)
    rng = np.random.default_rng(seed)
    failures = []
    tested = 0
    words = _random_words(int(rng.integers(2**31)), cover.cs.rank, 20)
    for t in range(trials):
        h1 = random_rep(cover.cs.names, r, rng)
        h2 = random_rep(cover.cs.names, r, rng)
        gap = np.max(np.abs(character_signature(h1, words) - character_signature(h2, words)))
        if gap <= THRESHOLDS.decision:
            continue
        tested += 1
        s = conjugacy_test(induce(cover, h1).rep, induce(cover, h2).rep, seed=t)
        if s is not None:
            failures.append({"trial": t, "h1": h1.matrices.tolist(), "h2": h2.matrices.tolist()})
    return {"check": "injectivity", "status": "pass" if not failures else "fail",
            "residual": float(len(failures)),
            "details": {"trials": trials, "tested": tested, "failures": failures}}


def _poly_in_power(coeffs, power):
    """Coefficients of p(t^power) from those of p(t) (highest degree first)."""
    deg = len(coeffs) - 1
    out = np.zeros(deg * power + 1, dtype=complex)
    out[::power] = coeffs
    return out


def local_monodromy_prediction(cov, h, j):
    """prod over cycles c of sigma(c_j) of det(t^|c| I - h(lambda_{j,c}))."""
    cover = _as_cover(cov)
    poly = np.array([1.0 + 0j])
    for p, loop in zip(cover.top.punctures, cover.y_loops()):
        if p.base_puncture != j:
            continue
        poly = np.polymul(poly, _poly_in_power(charpoly(evaluate(h, loop)), p.ramification))
    return poly


def local_monodromy_check(cov, h, seed=0, tol=None):
    cover = _as_cover(cov)
    tol = THRESHOLDS.decision if tol is None else tol
    if cover.base.closed:
        raise DomainError("local monodromy check needs a punctured base")
    ind = induce(cover, h).rep
    rng = np.random.default_rng(seed)
    t = rng.standard_normal((h.n, h.n)) + 1j * rng.standard_normal((h.n, h.n))
    ind_conj = induce(cover, h.conjugate(t)).rep
    worst, worst_conj = 0.0, 0.0
    per_puncture = []
    for j, c in enumerate(cover.base.puncture_words):
        actual = charpoly(evaluate(ind, c))
        predicted = local_monodromy_prediction(cover, h, j)
        scale = max(1.0, float(np.max(np.abs(predicted))))
        gap = float(np.max(np.abs(actual - predicted))) / scale
        gap_conj = float(np.max(np.abs(charpoly(evaluate(ind_conj, c)) - actual))) / scale
        worst, worst_conj = max(worst, gap), max(worst_conj, gap_conj)
        per_puncture.append({"puncture": j + 1, "charpoly_gap": gap, "conjugation_gap": gap_conj})
    ok = worst <= tol and worst_conj <= THRESHOLDS.residual
    return {"check": "local-monodromy", "status": "pass" if ok else "fail", "residual": worst,
            "details": {"conjugation_residual": worst_conj, "punctures": per_puncture}}
