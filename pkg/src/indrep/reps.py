"""Matrix representations of free and surface groups into GL(n, C)."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .groups import DomainError, Word

__all__ = [
    "Thresholds",
    "THRESHOLDS",
    "MatrixRep",
    "LeafConstraint",
    "NoConvergence",
    "SingularJacobian",
    "evaluate",
    "random_rep",
    "solve_relator",
    "closed_surface_rep",
    "irreducible",
    "commutant_dimension",
    "conjugacy_test",
    "character_signature",
    "charpoly",
    "random_word",
    "rep_to_json",
    "rep_from_json",
    "read_rep",
    "write_rep",
]


@dataclass
class Thresholds:
    decision: float = 1e-8
    residual: float = 1e-10
    invertible: float = 1e-12


THRESHOLDS = Thresholds()


class NoConvergence(RuntimeError):
    pass


class SingularJacobian(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class MatrixRep:
    """Generator images ``matrices[i-1]`` for generator ``i``.

    ``relators`` are words that must evaluate to the identity (empty for a
    free group).
    """

    names: tuple
    matrices: np.ndarray
    relators: tuple = ()
    tol: float = 1e-10
    _inverses: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        mats = np.asarray(self.matrices, dtype=complex)
        if mats.ndim != 3 or mats.shape[1] != mats.shape[2]:
            raise DomainError("matrices must have shape (k, n, n)")
        if len(self.names) != mats.shape[0]:
            raise DomainError("one matrix per generator name required")
        for name, m in zip(self.names, mats):
            s = np.linalg.svd(m, compute_uv=False)
            if s[-1] <= THRESHOLDS.invertible * s[0]:
                raise DomainError(f"matrix for {name} is numerically singular")
        object.__setattr__(self, "matrices", mats)
        object.__setattr__(self, "relators", tuple(self.relators))
        object.__setattr__(self, "_inverses", np.linalg.inv(mats))

    @property
    def n(self):
        return self.matrices.shape[1]

    @property
    def k(self):
        return self.matrices.shape[0]

    def letter(self, idx, sgn):
        return self.matrices[idx - 1] if sgn > 0 else self._inverses[idx - 1]

    def __call__(self, w):
        return evaluate(self, w)

    def with_matrices(self, mats):
        return MatrixRep(self.names, mats, self.relators, self.tol)

    def relator_residual(self):
        eye = np.eye(self.n)
        return max((np.linalg.norm(evaluate(self, r) - eye) for r in self.relators), default=0.0)

    def conjugate(self, t):
        tinv = np.linalg.inv(t)
        return self.with_matrices(np.einsum("ij,kjl,lm->kim", t, self.matrices, tinv))


def evaluate(rep, w):
    """Product of generator matrices along ``w``; identity for the empty word."""
    out = np.eye(rep.n, dtype=complex)
    for idx, sgn in w.letters:
        out = out @ rep.letter(idx, sgn)
    return out


def _well_conditioned(rng, n, max_cond=1e3):
    while True:
        m = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
        if np.linalg.cond(m) < max_cond:
            return m


def random_rep(names, n, seed, relators=()):
    """Seeded random representation of the free group on ``names``.

    ``names`` may also be a presentation (its generator names are used).
    Entries are complex Gaussian, resampled until well conditioned.
    """
    names = tuple(getattr(names, "names", names))
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    mats = np.array([_well_conditioned(rng, n) for _ in names])
    return MatrixRep(names, mats, relators)


def random_word(rng, rank, max_len, min_len=0):
    """Freely reduced random word over ``rank`` generators."""
    length = int(rng.integers(min_len, max_len + 1))
    letters = []
    while len(letters) < length:
        idx = int(rng.integers(1, rank + 1))
        sgn = 1 if rng.random() < 0.5 else -1
        if letters and letters[-1] == (idx, -sgn):
            continue
        letters.append((idx, sgn))
    return Word(tuple(letters))


def charpoly(m):
    """Characteristic polynomial coefficients of ``m`` (leading 1 first)."""
    return np.poly(np.asarray(m))


# -- Gauss-Newton ---------------------------------------------------------


@dataclass(frozen=True)
class LeafConstraint:
    """Per-word monodromy targets: ``None`` for trivial, else a matrix whose
    conjugacy class (via its characteristic polynomial) is imposed."""

    words: tuple
    targets: tuple

    @classmethod
    def trivial(cls, words):
        words = tuple(words)
        return cls(words, (None,) * len(words))

    def __post_init__(self):
        if len(self.words) != len(self.targets):
            raise DomainError("one target per leaf word")
        for t in self.targets:
            if t is not None and abs(np.linalg.det(t)) < THRESHOLDS.invertible:
                raise DomainError("leaf targets must be invertible")


def _word_jacobian(rep, w):
    """Value of ``w`` and the derivative of vec(rep(w)) in the generator entries.

    Row-major vec throughout: ``vec(A dX B) = kron(A, B.T) vec(dX)``.
    """
    n, k = rep.n, rep.k
    mats = [rep.letter(i, s) for i, s in w.letters]
    suffix = [np.eye(n, dtype=complex)]
    for m in reversed(mats):
        suffix.append(m @ suffix[-1])
    suffix.reverse()
    jac = np.zeros((n * n, k * n * n), dtype=complex)
    left = np.eye(n, dtype=complex)
    for t, (idx, sgn) in enumerate(w.letters):
        right = suffix[t + 1]
        cols = slice((idx - 1) * n * n, idx * n * n)
        if sgn > 0:
            jac[:, cols] += np.kron(left, right.T)
        else:
            inv = mats[t]
            jac[:, cols] -= np.kron(left @ inv, (inv @ right).T)
        left = left @ mats[t]
    return left, jac


def _charpoly_jacobian(m, dm):
    """Coefficients e_1..e_n of det(tI - m) and their derivatives.

    Newton's identities on power sums; ``dm`` is d vec(m) / d params.
    """
    n = m.shape[0]
    powers = [np.eye(n, dtype=complex)]
    for _ in range(n):
        powers.append(powers[-1] @ m)
    p = [np.trace(powers[i]) for i in range(n + 1)]
    dp = [None] + [i * (powers[i - 1].T.reshape(-1) @ dm) for i in range(1, n + 1)]
    e = [1.0 + 0j]
    de = [np.zeros(dm.shape[1], dtype=complex)]
    for kk in range(1, n + 1):
        val = 0j
        dval = np.zeros(dm.shape[1], dtype=complex)
        for i in range(1, kk + 1):
            sg = (-1) ** (i - 1)
            val += sg * e[kk - i] * p[i]
            dval += sg * (de[kk - i] * p[i] + e[kk - i] * dp[i])
        e.append(val / kk)
        de.append(dval / kk)
    # det(tI - m) = t^n - e1 t^{n-1} + e2 t^{n-2} - ...
    sign = np.array([(-1) ** kk for kk in range(1, n + 1)])
    return sign * np.array(e[1:]), sign[:, None] * np.array(de[1:])


def _residual(rep, relators, leaf, with_jac=True):
    n = rep.n
    eye = np.eye(n).reshape(-1)
    res, jacs = [], []
    for r in relators:
        val, jac = _word_jacobian(rep, r)
        res.append(val.reshape(-1) - eye)
        jacs.append(jac)
    if leaf is not None:
        for w, target in zip(leaf.words, leaf.targets):
            val, jac = _word_jacobian(rep, w)
            if target is None:
                res.append(val.reshape(-1) - eye)
                jacs.append(jac)
            else:
                coeffs, dcoeffs = _charpoly_jacobian(val, jac)
                res.append(coeffs - charpoly(target)[1:])
                jacs.append(dcoeffs)
    if not res:
        return np.zeros(0, dtype=complex), np.zeros((0, rep.k * n * n), dtype=complex)
    return np.concatenate(res), np.vstack(jacs)


def solve_relator(seed_rep, relator=None, leaf=None, tol=None, max_iter=200, rank_tol=1e-10):
    """Gauss-Newton (minimum-norm steps, backtracking) onto the constraint set.

    Returns ``(rep, iterations)``.  ``relator`` may be a word, a list of
    words, or ``None`` to use ``seed_rep.relators``.
    """
    tol = THRESHOLDS.residual if tol is None else tol
    if relator is None:
        relators = seed_rep.relators
    elif isinstance(relator, Word):
        relators = (relator,)
    else:
        relators = tuple(relator)
    rep = seed_rep
    res, jac = _residual(rep, relators, leaf)
    norm = np.linalg.norm(res)
    for it in range(max_iter + 1):
        if norm <= tol:
            return rep.with_matrices(rep.matrices) if it else rep, it
        if it == max_iter:
            break
        u, s, vh = np.linalg.svd(jac, full_matrices=False)
        if s.size == 0 or s[0] == 0.0:
            raise SingularJacobian("Jacobian vanishes identically")
        keep = s > rank_tol * s[0]
        step = -(vh[keep].conj().T @ ((u[:, keep].conj().T @ res) / s[keep]))
        step = step.reshape(rep.matrices.shape)
        t = 1.0
        while t > 1e-6:
            try:
                trial = rep.with_matrices(rep.matrices + t * step)
            except DomainError:
                t *= 0.5
                continue
            tres, tjac = _residual(trial, relators, leaf)
            tnorm = np.linalg.norm(tres)
            if tnorm < norm:
                rep, res, jac, norm = trial, tres, tjac, tnorm
                break
            t *= 0.5
        else:
            raise SingularJacobian(f"no descent along Gauss-Newton step (residual {norm:.3e})")
    raise NoConvergence(f"residual {norm:.3e} after {max_iter} iterations")


def closed_surface_rep(pres, n, seed, attempts=5):
    """Random point of the closed-surface representation variety.

    Starts from a seeded random rep and projects onto ``relator = I``; a
    fresh start is drawn if the solver stalls.
    """
    rng = np.random.default_rng(seed)
    last = None
    for _ in range(attempts):
        start = random_rep(pres, n, rng, (pres.relator,))
        try:
            rep, _ = solve_relator(start)
            return rep
        except (NoConvergence, SingularJacobian) as exc:
            last = exc
    raise NoConvergence(f"no closed-surface rep found: {last}")


# -- commutants and conjugacy ---------------------------------------------


def _intertwiner_operator(mats1, mats2):
    """Stacked operator of ``S -> S A_i - B_i S`` on row-major vec(S)."""
    n1, n2 = mats1.shape[1], mats2.shape[1]
    blocks = [np.kron(np.eye(n2), a.T) - np.kron(b, np.eye(n1)) for a, b in zip(mats1, mats2)]
    if not blocks:
        return np.zeros((0, n1 * n2), dtype=complex)
    return np.vstack(blocks)


def _nullspace(op, rel_tol):
    ncols = op.shape[1]
    if op.shape[0] == 0:
        return np.eye(ncols, dtype=complex)
    _, s, vh = np.linalg.svd(op)
    smax = s[0] if s.size else 0.0
    if smax == 0.0:
        return np.eye(ncols, dtype=complex)
    rank = int(np.sum(s > rel_tol * smax))
    return vh[rank:].conj().T


def commutant_dimension(rep, rel_tol=None):
    rel_tol = THRESHOLDS.decision if rel_tol is None else rel_tol
    return _nullspace(_intertwiner_operator(rep.matrices, rep.matrices), rel_tol).shape[1]


def irreducible(rep, rel_tol=None):
    """True iff the commutant of the generator images is the scalars."""
    return commutant_dimension(rep, rel_tol) == 1


def conjugacy_test(rep1, rep2, seed=0, attempts=8, tol=None):
    """Invertible ``S`` with ``S rep1(x) S^-1 = rep2(x)`` for all generators, or None."""
    tol = THRESHOLDS.decision if tol is None else tol
    if rep1.n != rep2.n or rep1.k != rep2.k:
        raise DomainError("representations must share rank and alphabet size")
    n = rep1.n
    basis = _nullspace(_intertwiner_operator(rep1.matrices, rep2.matrices), THRESHOLDS.decision)
    if basis.shape[1] == 0:
        return None
    rng = np.random.default_rng(seed)
    for _ in range(attempts):
        coeffs = rng.standard_normal(basis.shape[1]) + 1j * rng.standard_normal(basis.shape[1])
        s = (basis @ coeffs).reshape(n, n)
        sv = np.linalg.svd(s, compute_uv=False)
        if sv[-1] <= THRESHOLDS.invertible * sv[0] * 1e4:
            continue
        s = s / sv[0]
        sinv = np.linalg.inv(s)
        resid = max(np.linalg.norm(s @ a @ sinv - b) for a, b in zip(rep1.matrices, rep2.matrices))
        if resid <= tol:
            return s
    return None


def character_signature(rep, words):
    return np.array([np.trace(evaluate(rep, w)) for w in words])


# -- JSON matrix files ----------------------------------------------------


def rep_to_json(rep):
    gens = {}
    for name, m in zip(rep.names, rep.matrices):
        gens[name] = [[[float(z.real), float(z.imag)] for z in row] for row in m]
    return {"format": 1, "rank": rep.n, "tol": rep.tol, "generators": gens}


def rep_from_json(data, names=None, relators=()):
    """Parse a matrix file; ``names`` fixes (and checks) the alphabet order."""
    if data.get("format", 1) != 1:
        raise DomainError(f"unsupported matrix file format {data.get('format')}")
    gens = data["generators"]
    names = tuple(gens) if names is None else tuple(names)
    if set(names) != set(gens):
        missing = sorted(set(names) - set(gens))
        extra = sorted(set(gens) - set(names))
        raise DomainError(f"alphabet mismatch: missing {missing}, unexpected {extra}")
    mats = []
    for name in names:
        arr = np.asarray(gens[name], dtype=float)
        mats.append(arr[..., 0] + 1j * arr[..., 1])
    mats = np.array(mats)
    n = int(data.get("rank", mats.shape[1]))
    if mats.shape[1:] != (n, n):
        raise DomainError(f"matrix file declares rank {n} but matrices are {mats.shape[1:]}")
    return MatrixRep(names, mats, relators, float(data.get("tol", 1e-10)))


def read_rep(path, names=None, relators=()):
    with open(path) as fh:
        return rep_from_json(json.load(fh), names, relators)


def write_rep(rep, path):
    with open(path, "w") as fh:
        json.dump(rep_to_json(rep), fh, indent=1)


def with_tol(rep, tol):
    return replace(rep, tol=tol, _inverses=None)
