"""Words in free generators, surface group presentations and Fox calculus.

A word is a tuple of letters ``(index, sign)`` with ``index >= 1`` and
``sign in {+1, -1}``.  Generator names are only attached when a word is
printed or parsed; all arithmetic is on indices.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field

__all__ = [
    "Word",
    "reduce",
    "commutator",
    "SurfacePresentation",
    "surface_presentation",
    "GroupRingElement",
    "fox_derivative",
    "DomainError",
]


class DomainError(ValueError):
    """Raised for arguments outside the domain of an operation."""


def _reduce_letters(letters):
    out = []
    for idx, sgn in letters:
        if out and out[-1][0] == idx and out[-1][1] == -sgn:
            out.pop()
        else:
            out.append((idx, sgn))
    return tuple(out)


@dataclass(frozen=True)
class Word:
    """Immutable word in free generators ``x_1, x_2, ...``.

    Construction does not reduce; use :func:`reduce` or multiplication,
    which always returns a freely reduced word.
    """

    letters: tuple = ()

    def __post_init__(self):
        letters = tuple((int(i), int(s)) for i, s in self.letters)
        for i, s in letters:
            if i < 1 or s not in (1, -1):
                raise DomainError(f"bad letter ({i}, {s})")
        object.__setattr__(self, "letters", letters)

    @classmethod
    def gen(cls, i, sign=1):
        return cls(((i, sign),))

    @classmethod
    def from_ints(cls, ints):
        """Build from signed integers, e.g. ``[1, -2]`` for ``x1 x2^-1``."""
        return cls(tuple((abs(k), 1 if k > 0 else -1) for k in ints))

    def __len__(self):
        return len(self.letters)

    def __iter__(self):
        return iter(self.letters)

    def __mul__(self, other):
        return Word(_reduce_letters(self.letters + other.letters))

    def __pow__(self, k):
        if k < 0:
            return self.inverse() ** (-k)
        out = Word()
        for _ in range(k):
            out = out * self
        return out

    def inverse(self):
        return Word(tuple((i, -s) for i, s in reversed(self.letters)))

    def is_reduced(self):
        return _reduce_letters(self.letters) == self.letters

    def is_identity(self):
        return not self.letters

    def max_index(self):
        return max((i for i, _ in self.letters), default=0)

    def prefix(self, t):
        return Word(self.letters[:t])

    def exponent_sums(self, rank):
        sums = [0] * rank
        for i, s in self.letters:
            sums[i - 1] += s
        return sums

    def format(self, names=None):
        """Space separated tokens, uppercase meaning inverse.  ``'1'`` is the identity."""
        if not self.letters:
            return "1"
        toks = []
        for i, s in self.letters:
            name = names[i - 1] if names is not None else f"x{i}"
            toks.append(name if s > 0 else name.upper())
        return " ".join(toks)

    @classmethod
    def parse(cls, text, names):
        """Inverse of :meth:`format` for a given generator name list."""
        lookup = {}
        for k, name in enumerate(names, start=1):
            lookup[name] = (k, 1)
            lookup[name.upper()] = (k, -1)
        text = text.strip()
        if text in ("", "1"):
            return cls()
        letters = []
        for tok in text.split():
            if tok not in lookup:
                raise DomainError(f"unknown generator token {tok!r}")
            letters.append(lookup[tok])
        return cls(tuple(letters))

    def __repr__(self):
        return f"Word({self.format()})"


def reduce(w):
    """Freely reduce ``w``."""
    return Word(_reduce_letters(w.letters))


def commutator(u, v):
    """``[u, v] = u v u^-1 v^-1``."""
    return u * v * u.inverse() * v.inverse()


@dataclass(frozen=True)
class SurfacePresentation:
    """Fundamental group of a genus ``g`` surface with ``b`` punctures.

    Generators are ``a1, b1, ..., ag, bg, c1, ..., c_{b-1}`` (indices
    ``1..rank``).  The last puncture word ``c_b`` is derived so that the
    punctured group stays free.
    """

    genus: int
    punctures: int
    rank: int
    relator: Word | None
    puncture_words: tuple = field(default=())
    names: tuple = field(default=())

    @property
    def euler_characteristic(self):
        return 2 - 2 * self.genus - self.punctures

    @property
    def closed(self):
        return self.punctures == 0

    def commutator_product(self):
        w = Word()
        for i in range(self.genus):
            w = w * commutator(Word.gen(2 * i + 1), Word.gen(2 * i + 2))
        return w

    def boundary_letters(self):
        """Letters of ``prod [a_i, b_i] * c_1 ... c_b`` as (element, sign) pairs.

        Each puncture loop is one letter, so ``c_b`` appears as a single
        element even though it is not a generator.
        """
        letters = []
        for i in range(self.genus):
            a, b = 2 * i + 1, 2 * i + 2
            letters += [(Word.gen(a), 1), (Word.gen(b), 1), (Word.gen(a), -1), (Word.gen(b), -1)]
        letters += [(c, 1) for c in self.puncture_words]
        return letters

    def parse(self, text):
        return Word.parse(text, self.names)

    def format(self, w):
        return w.format(self.names)

    def describe(self):
        lines = [
            f"genus {self.genus}, punctures {self.punctures}, rank {self.rank}, "
            f"euler characteristic {self.euler_characteristic}",
            "generators: " + " ".join(self.names),
        ]
        if self.relator is not None:
            lines.append("relator: " + self.format(self.relator))
        for j, c in enumerate(self.puncture_words, start=1):
            lines.append(f"puncture c{j}: " + self.format(c))
        return "\n".join(lines)


def surface_presentation(g, b):
    """Standard presentation of pi_1 of the genus ``g`` surface minus ``b`` points."""
    if g < 0 or b < 0:
        raise DomainError("genus and punctures must be non-negative")
    if (g, b) in ((0, 0), (0, 1)):
        raise DomainError(f"(g={g}, b={b}) has trivial fundamental group")
    names = []
    for i in range(1, g + 1):
        names += [f"a{i}", f"b{i}"]
    names += [f"c{j}" for j in range(1, b)]
    rank = len(names)
    comm = Word()
    for i in range(g):
        comm = comm * commutator(Word.gen(2 * i + 1), Word.gen(2 * i + 2))
    if b == 0:
        return SurfacePresentation(g, 0, rank, comm, (), tuple(names))
    cs = [Word.gen(2 * g + j) for j in range(1, b)]
    prod = comm
    for c in cs:
        prod = prod * c
    cs.append(prod.inverse())
    return SurfacePresentation(g, b, rank, None, tuple(cs), tuple(names))


class GroupRingElement:
    """Finite integer combination of reduced words."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        acc = defaultdict(int)
        if terms:
            items = terms.items() if isinstance(terms, dict) else terms
            for a, b in items:
                # accept (coef, word) pairs as well as {word: coef}
                coef, w = (b, a) if isinstance(a, Word) else (a, b)
                acc[reduce(w)] += coef
        self.terms = {w: c for w, c in acc.items() if c != 0}

    @classmethod
    def of(cls, w, coef=1):
        return cls({w: coef})

    def __add__(self, other):
        out = dict(self.terms)
        for w, c in other.terms.items():
            out[w] = out.get(w, 0) + c
        return GroupRingElement(out)

    def __neg__(self):
        return GroupRingElement({w: -c for w, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, int):
            return GroupRingElement({w: c * other for w, c in self.terms.items()})
        out = defaultdict(int)
        for w1, c1 in self.terms.items():
            for w2, c2 in other.terms.items():
                out[w1 * w2] += c1 * c2
        return GroupRingElement(out)

    def left_mul(self, w):
        """``w * self`` for a group element ``w``."""
        return GroupRingElement({w * v: c for v, c in self.terms.items()})

    def __eq__(self, other):
        return isinstance(other, GroupRingElement) and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def is_zero(self):
        return not self.terms

    def augmentation(self):
        return sum(self.terms.values())

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = [f"{c:+d}*{w.format()}" for w, c in sorted(self.terms.items(), key=lambda t: t[0].letters)]
        return " ".join(parts)


def fox_derivative(w, i):
    """Fox derivative ``d w / d x_i`` as a group ring element.

    Uses ``d(uv) = du + u dv`` letter by letter: a letter ``x_i`` at
    position t contributes ``+p_{t-1}``, a letter ``x_i^-1`` contributes
    ``-p_t`` where ``p_t`` is the length-t prefix.
    """
    acc = defaultdict(int)
    prefix = Word()
    for idx, sgn in w.letters:
        step = Word(((idx, sgn),))
        if sgn > 0:
            if idx == i:
                acc[prefix] += 1
            prefix = prefix * step
        else:
            prefix = prefix * step
            if idx == i:
                acc[prefix] -= 1
    return GroupRingElement(acc)
