"""Branched coverings encoded by permutation monodromy.

Sheets are 0-indexed internally (sheet 0 carries the base point and the
empty transversal word); the JSON config uses 1-indexed image arrays.

Cosets are left cosets ``gamma_i Delta`` and a word acts by
``w . gamma_i Delta = gamma_{sigma(w)(i)} Delta``, so
``sigma(w1 w2) = sigma(w1) o sigma(w2)``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .groups import DomainError, SurfacePresentation, Word, surface_presentation

__all__ = [
    "CoveringError",
    "Intransitive",
    "RelatorNotKilled",
    "NotInSubgroup",
    "CoveringData",
    "CosetStructure",
    "YPuncture",
    "CoverTopology",
    "validate_covering",
    "covering_from_config",
    "covering_to_config",
    "identity_covering",
    "coset_action",
    "schreier",
    "factorize",
    "cover_topology",
    "cycles",
]


class CoveringError(DomainError):
    pass


class Intransitive(CoveringError):
    pass


class RelatorNotKilled(CoveringError):
    pass


class NotInSubgroup(CoveringError):
    pass


def _compose(p, q):
    """``(p o q)(i) = p[q[i]]``."""
    return tuple(p[k] for k in q)


def _invert(p):
    out = [0] * len(p)
    for i, j in enumerate(p):
        out[j] = i
    return tuple(out)


def cycles(perm):
    """Cycles of a 0-indexed permutation, each starting at its minimal point."""
    seen = set()
    out = []
    for start in range(len(perm)):
        if start in seen:
            continue
        cyc = [start]
        seen.add(start)
        k = perm[start]
        while k != start:
            cyc.append(k)
            seen.add(k)
            k = perm[k]
        out.append(tuple(cyc))
    return out


@dataclass(frozen=True)
class CoveringData:
    base: SurfacePresentation
    degree: int
    perms: tuple  # perms[i-1] = image tuple (0-indexed) of generator i

    def perm(self, i, sign=1):
        p = self.perms[i - 1]
        return p if sign > 0 else _invert(p)


def validate_covering(base, d, perms):
    """Check and package monodromy data.

    ``perms`` maps generator names (or 1-based indices) to 1-indexed image
    arrays; generators left out act trivially.
    """
    if d < 1:
        raise CoveringError("degree must be >= 1")
    images = [tuple(range(d)) for _ in range(base.rank)]
    for key, arr in dict(perms).items():
        if isinstance(key, str):
            if key not in base.names:
                raise CoveringError(f"unknown generator {key!r}")
            idx = base.names.index(key)
        else:
            idx = int(key) - 1
            if not 0 <= idx < base.rank:
                raise CoveringError(f"generator index {key} out of range")
        arr = [int(v) for v in arr]
        if sorted(arr) != list(range(1, d + 1)):
            raise CoveringError(f"image array for {key} is not a permutation of 1..{d}")
        images[idx] = tuple(v - 1 for v in arr)
    cov = CoveringData(base, d, tuple(images))

    orbit = {0}
    queue = deque([0])
    while queue:
        i = queue.popleft()
        for p in images:
            for j in (p[i], _invert(p)[i]):
                if j not in orbit:
                    orbit.add(j)
                    queue.append(j)
    if len(orbit) != d:
        raise Intransitive(f"Intransitive: orbit of sheet 1 has {len(orbit)} of {d} sheets")
    if base.relator is not None:
        if coset_action(cov, base.relator) != tuple(range(d)):
            raise RelatorNotKilled("RelatorNotKilled: relator acts nontrivially on sheets")
    return cov


def identity_covering(base):
    return validate_covering(base, 1, {})


def covering_from_config(block):
    """Build a covering from ``{"surface": {...}, "degree": d, "perms": {...}}``."""
    try:
        surf = block["surface"]
        base = surface_presentation(int(surf["genus"]), int(surf["punctures"]))
        d = int(block.get("degree", 1))
    except (KeyError, TypeError) as exc:
        raise CoveringError(f"malformed covering block: {exc}") from None
    return validate_covering(base, d, block.get("perms", {}))


def covering_to_config(cov):
    return {
        "surface": {"genus": cov.base.genus, "punctures": cov.base.punctures},
        "degree": cov.degree,
        "perms": {name: [v + 1 for v in p] for name, p in zip(cov.base.names, cov.perms)},
    }


def coset_action(cov, w):
    """Permutation of sheets induced by ``w`` (0-indexed image tuple)."""
    out = tuple(range(cov.degree))
    for idx, sgn in w.letters:
        out = _compose(out, cov.perm(idx, sgn))
    return out


@dataclass(frozen=True)
class CosetStructure:
    transversal: tuple  # words gamma_i, gamma_0 = identity
    schreier_gens: tuple  # words in base generators
    schreier_keys: tuple  # (generator index, sheet) for each Schreier generator
    table: dict  # (generator index, sheet) -> (target sheet, Schreier index or None)
    names: tuple  # printable names, e.g. "a1_2" for (a1, sheet 2)

    @property
    def rank(self):
        return len(self.schreier_gens)

    def describe(self, base):
        lines = ["transversal:"]
        for i, g in enumerate(self.transversal, start=1):
            lines.append(f"  sheet {i}: {base.format(g)}")
        lines.append(f"schreier generators ({self.rank}):")
        for name, s in zip(self.names, self.schreier_gens):
            lines.append(f"  {name} = {base.format(s)}")
        return "\n".join(lines)


def schreier(cov):
    """BFS Schreier transversal and Reidemeister-Schreier generators.

    The generator for ``(x, i)`` is ``gamma_{sigma(x)(i)}^-1 x gamma_i``;
    the trivial ones (tree edges) are omitted.
    """
    d, k = cov.degree, cov.base.rank
    trans = [None] * d
    trans[0] = Word()
    queue = deque([0])
    while queue:
        i = queue.popleft()
        for sign in (1, -1):
            for x in range(1, k + 1):
                j = cov.perm(x, sign)[i]
                if trans[j] is None:
                    trans[j] = Word.gen(x, sign) * trans[i]
                    queue.append(j)
    gens, keys, names, table = [], [], [], {}
    for x in range(1, k + 1):
        for i in range(d):
            j = cov.perm(x)[i]
            s = trans[j].inverse() * Word.gen(x) * trans[i]
            if s.is_identity():
                table[(x, i)] = (j, None)
            else:
                table[(x, i)] = (j, len(gens))
                gens.append(s)
                keys.append((x, i))
                names.append(f"{cov.base.names[x - 1]}_{i + 1}")
    return CosetStructure(tuple(trans), tuple(gens), tuple(keys), table, tuple(names))


def factorize(cov, cs, w, start=0):
    """Reidemeister rewriting of ``w`` as a word in the Schreier generators.

    ``w`` must fix sheet ``start`` (sheet 0 by default, i.e. lie in Delta).
    Letters of the result are indexed 1..len(cs.schreier_gens).
    """
    letters = []
    i = start
    for idx, sgn in reversed(w.letters):
        if sgn > 0:
            j, s = cs.table[(idx, i)]
            if s is not None:
                letters.append((s + 1, 1))
        else:
            j = cov.perm(idx, -1)[i]
            _, s = cs.table[(idx, j)]
            if s is not None:
                letters.append((s + 1, -1))
        i = j
    if i != start:
        raise NotInSubgroup(f"NotInSubgroup: word moves sheet {start + 1} to sheet {i + 1}")
    return Word(tuple(reversed(letters))) * Word()


def expand(cs, s_word):
    """Evaluate a Schreier-alphabet word back in the base generators."""
    out = Word()
    for idx, sgn in s_word.letters:
        g = cs.schreier_gens[idx - 1]
        out = out * (g if sgn > 0 else g.inverse())
    return out


def coset_word(cov, cs, g, i):
    """``gamma_{sigma(g)(i)}^-1 g gamma_i`` as a word in Delta (base alphabet)."""
    j = coset_action(cov, g)[i]
    return cs.transversal[j].inverse() * g * cs.transversal[i]


@dataclass(frozen=True)
class YPuncture:
    base_puncture: int  # 0-based index j of c_{j+1}
    cycle: tuple  # sheets of the cycle of sigma(c_j), starting at its minimum
    ramification: int
    loop: Word  # gamma_{i0}^-1 c_j^L gamma_{i0}, base alphabet


@dataclass(frozen=True)
class CoverTopology:
    genus: int
    punctures: tuple
    euler_characteristic: int

    def describe(self, base):
        lines = [f"cover genus {self.genus}, {len(self.punctures)} punctures, "
                 f"euler characteristic {self.euler_characteristic}"]
        for p in self.punctures:
            sheets = ",".join(str(s + 1) for s in p.cycle)
            lines.append(
                f"  over c{p.base_puncture + 1}: cycle ({sheets}) n_y={p.ramification} "
                f"loop {base.format(p.loop)}"
            )
        return "\n".join(lines)


def cover_topology(cov, cs=None):
    """Punctures of ``Y`` above each base puncture and the genus of ``Y``."""
    cs = cs or schreier(cov)
    base = cov.base
    pts = []
    for j, c in enumerate(base.puncture_words):
        for cyc in cycles(coset_action(cov, c)):
            g = cs.transversal[cyc[0]]
            loop = g.inverse() * (c ** len(cyc)) * g
            pts.append(YPuncture(j, cyc, len(cyc), loop))
    chi = cov.degree * base.euler_characteristic
    twice_genus = 2 - len(pts) - chi
    if twice_genus % 2 or twice_genus < 0:
        raise CoveringError(f"inconsistent Riemann-Hurwitz data (2g = {twice_genus})")
    return CoverTopology(twice_genus // 2, tuple(pts), chi)


def permutation_matrix(perm):
    """Matrix with ``M[perm[i], i] = 1``, so ``M e_i = e_{perm(i)}``."""
    d = len(perm)
    m = np.zeros((d, d))
    m[list(perm), list(range(d))] = 1.0
    return m
