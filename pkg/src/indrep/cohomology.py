"""Twisted group cohomology with coefficients in the adjoint local system.

Conventions
-----------
* A 1-cocycle ``u`` is stored as an array of shape ``(k, n, n)`` (one value
  per generator) and satisfies ``u(w1 w2) = u(w1) + Ad(w1) u(w2)`` with
  ``Ad(g) m = rho(g) m rho(g)^-1``.  Tangent vectors are left logarithmic
  derivatives: ``rho_t(w) = (I + t u(w)) rho(w) + O(t^2)``.
* Compactly supported classes are relative (mapping-cone) cocycles
  ``(u, a)`` for the peripheral words ``l_j``:  ``u(l_j) = Ad(l_j) a_j - a_j``.
  Relative coboundaries are ``(delta m, (m, ..., m))``.
* Pairings are complex bilinear, through ``Tr(A B)``, evaluated on a
  fundamental 2-chain whose bar boundary is ``sum_j [l_j]``:
  ``<(u, a), v> = sum_cells c Tr(u(g) Ad(g) v(h)) - sum_j Tr(a_j v(l_j))``.
* Vectors are row-major flattenings; a cocycle vector has ``k n^2`` entries
  and a relative cocycle vector ``(k + p) n^2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import NamedTuple

import numpy as np

from .covers import coset_action, cycles
from .functors import _as_cover, induce, restrict
from .groups import DomainError, Word
from .reps import THRESHOLDS, MatrixRep, evaluate, irreducible

__all__ = [
    "NotARep",
    "AdjointSolveSingular",
    "NotUnramifiedClosed",
    "RelCocycle",
    "CohomBasis",
    "FundamentalChain",
    "AdComplex",
    "coboundary",
    "cocycle_eval",
    "cocycle_eval_fox",
    "fundamental_chain",
    "transfer_chain",
    "chain_boundary",
    "pairing_closed",
    "pairing_rel",
    "natural_map",
    "CoverPoint",
    "d_psi",
    "d_psi_star",
    "d_phi",
    "d_phi_star",
    "transfer_sum",
    "transfer_spread",
    "verify_e17",
    "verify_phi_poisson",
    "verify_scaling",
    "bivector_rank",
    "bivector_matrix",
    "psi_ranks",
    "surface_chain",
    "PullbackPoint",
]


class NotARep(DomainError):
    pass


class AdjointSolveSingular(RuntimeError):
    pass


class NotUnramifiedClosed(DomainError):
    pass


class RelCocycle(NamedTuple):
    u: np.ndarray  # (k, n, n)
    a: np.ndarray  # (p, n, n)


def _ad(g, ginv=None):
    """Matrix of ``m -> g m g^-1`` on row-major vec."""
    ginv = np.linalg.inv(g) if ginv is None else ginv
    return np.kron(g, ginv.T)


def _trace_form(n):
    """``T`` with ``vec(A) @ T @ vec(B) = Tr(A B)``."""
    idx = np.arange(n * n)
    t = np.zeros((n * n, n * n))
    t[idx, (idx % n) * n + idx // n] = 1.0
    return t


def _rank(m, rel_tol=None):
    rel_tol = THRESHOLDS.decision if rel_tol is None else rel_tol
    if m.size == 0:
        return 0
    s = np.linalg.svd(m, compute_uv=False)
    return int(np.sum(s > rel_tol * max(s[0], 1.0)))


def _orth(m, rel_tol=None):
    """Orthonormal basis of the column space."""
    rel_tol = THRESHOLDS.decision if rel_tol is None else rel_tol
    if m.size == 0:
        return np.zeros((m.shape[0], 0), dtype=complex)
    u, s, _ = np.linalg.svd(m, full_matrices=False)
    return u[:, s > rel_tol * max(s[0], 1.0)]


def _null(m, rel_tol=None):
    rel_tol = THRESHOLDS.decision if rel_tol is None else rel_tol
    ncols = m.shape[1]
    if m.shape[0] == 0:
        return np.eye(ncols, dtype=complex)
    _, s, vh = np.linalg.svd(m)
    r = int(np.sum(s > rel_tol * max(s[0], 1.0))) if s.size else 0
    return vh[r:].conj().T


@dataclass(frozen=True)
class CohomBasis:
    """Cocycle representatives (columns) orthogonal to the coboundaries."""

    vectors: np.ndarray
    gram: np.ndarray
    dim: int
    cocycle_dim: int
    coboundary_dim: int


@dataclass(frozen=True)
class FundamentalChain:
    """Signed bar 2-cells ``(coef, g, h)`` plus the peripheral words making up its boundary."""

    cells: tuple
    peripherals: tuple = ()


class AdComplex:
    """Cochain-level model of H^0, H^1, H^2 and the relative H^1 for ``Ad rho``.

    ``peripherals`` are the boundary words for the relative complex (puncture
    loops), written in the same alphabet as ``rep``.
    """

    def __init__(self, rep, peripherals=(), check=True):
        self.rep = rep
        self.peripherals = tuple(peripherals)
        self.n, self.k = rep.n, rep.k
        self.N = self.n * self.n
        self._cache = {}
        if check and rep.relators:
            resid = rep.relator_residual()
            if resid > max(rep.tol, THRESHOLDS.decision):
                raise NotARep(f"NotARep: relator residual {resid:.3e} exceeds tolerance {rep.tol:.1e}")

    # -- evaluation -------------------------------------------------------

    def hol(self, w):
        return evaluate(self.rep, w)

    def ad(self, w):
        g = self.hol(w)
        return _ad(g)

    def eval_matrix(self, w):
        """Linear map ``u -> vec u(w)`` as an ``(n^2, k n^2)`` matrix."""
        key = w.letters
        if key in self._cache:
            return self._cache[key]
        N = self.N
        out = np.zeros((N, self.k * N), dtype=complex)
        p = np.eye(self.n, dtype=complex)
        pinv = np.eye(self.n, dtype=complex)
        for idx, sgn in w.letters:
            cols = slice((idx - 1) * N, idx * N)
            if sgn > 0:
                out[:, cols] += _ad(p, pinv)
                p = p @ self.rep.matrices[idx - 1]
                pinv = self.rep._inverses[idx - 1] @ pinv
            else:
                p = p @ self.rep._inverses[idx - 1]
                pinv = self.rep.matrices[idx - 1] @ pinv
                out[:, cols] -= _ad(p, pinv)
        self._cache[key] = out
        return out

    def cocycle_eval(self, u, w):
        u = np.asarray(u)
        out = np.zeros((self.n, self.n), dtype=complex)
        p = np.eye(self.n, dtype=complex)
        pinv = np.eye(self.n, dtype=complex)
        for idx, sgn in w.letters:
            if sgn > 0:
                out += p @ u[idx - 1] @ pinv
                p = p @ self.rep.matrices[idx - 1]
                pinv = self.rep._inverses[idx - 1] @ pinv
            else:
                p = p @ self.rep._inverses[idx - 1]
                pinv = self.rep.matrices[idx - 1] @ pinv
                out -= p @ u[idx - 1] @ pinv
        return out

    # -- complexes --------------------------------------------------------

    @cached_property
    def coboundary_matrix(self):
        """``m -> (x_i m x_i^-1 - m)_i`` as a ``(k n^2, n^2)`` matrix."""
        eye = np.eye(self.N)
        return np.vstack([_ad(m, mi) - eye for m, mi in zip(self.rep.matrices, self.rep._inverses)])

    @cached_property
    def relator_matrix(self):
        if not self.rep.relators:
            return np.zeros((0, self.k * self.N), dtype=complex)
        return np.vstack([self.eval_matrix(r) for r in self.rep.relators])

    @cached_property
    def h0_dim(self):
        return self.N - _rank(self.coboundary_matrix)

    @cached_property
    def h2_dim(self):
        if not self.rep.relators:
            return 0
        # one-relator surface presentation: C^2 = M
        return self.N - _rank(self.eval_matrix(self.rep.relators[0]))

    @cached_property
    def cone_constraint(self):
        """Rows expressing ``u(l_j) - (Ad(l_j) - 1) a_j = 0`` (and relators)."""
        p, N, K = len(self.peripherals), self.N, self.k * self.N
        rows = []
        if self.rep.relators:
            rows.append(np.hstack([self.relator_matrix, np.zeros((self.relator_matrix.shape[0], p * N))]))
        for j, w in enumerate(self.peripherals):
            row = np.zeros((N, K + p * N), dtype=complex)
            row[:, :K] = self.eval_matrix(w)
            row[:, K + j * N:K + (j + 1) * N] = -(self.ad(w) - np.eye(N))
            rows.append(row)
        if not rows:
            return np.zeros((0, K), dtype=complex)
        return np.vstack(rows)

    @cached_property
    def rel_coboundary_matrix(self):
        p = len(self.peripherals)
        return np.vstack([self.coboundary_matrix] + [np.eye(self.N)] * p)

    def _quotient_basis(self, zmat_null, bmat):
        z = _orth(zmat_null)
        b = _orth(bmat)
        comp = z - b @ (b.conj().T @ z)
        u, s, _ = np.linalg.svd(comp, full_matrices=False)
        vecs = u[:, s > 0.5]
        return CohomBasis(vecs, vecs.conj().T @ vecs, vecs.shape[1], z.shape[1], b.shape[1])

    @cached_property
    def h1(self):
        z = _null(self.relator_matrix) if self.rep.relators else np.eye(self.k * self.N, dtype=complex)
        return self._quotient_basis(z, self.coboundary_matrix)

    @cached_property
    def h1c(self):
        return self._quotient_basis(_null(self.cone_constraint), self.rel_coboundary_matrix)

    # -- conversions ------------------------------------------------------

    def unflat(self, v):
        return np.asarray(v).reshape(self.k, self.n, self.n)

    def unflat_rel(self, v):
        K = self.k * self.N
        v = np.asarray(v)
        return RelCocycle(v[:K].reshape(self.k, self.n, self.n),
                          v[K:].reshape(len(self.peripherals), self.n, self.n))

    @staticmethod
    def flat_rel(xi):
        return np.concatenate([np.asarray(xi.u).reshape(-1), np.asarray(xi.a).reshape(-1)])

    def cocycle_residual(self, u):
        v = np.asarray(u).reshape(-1)
        if not self.rep.relators:
            return 0.0
        return float(np.linalg.norm(self.relator_matrix @ v))

    def rel_residual(self, xi):
        return float(np.linalg.norm(self.cone_constraint @ self.flat_rel(xi)))

    # -- pairings ---------------------------------------------------------

    def cup_form(self, chain):
        """Bilinear form ``Omega`` with ``sum_cells c Tr(u(g) Ad(g) v(h)) = u @ Omega @ v``."""
        T = _trace_form(self.n)
        out = np.zeros((self.k * self.N, self.k * self.N), dtype=complex)
        for coef, g, h in chain.cells:
            lg = self.eval_matrix(g)
            lh = self.eval_matrix(h)
            out += coef * (lg.T @ (T @ (self.ad(g) @ lh)))
        return out

    def rel_form(self, chain):
        """Bilinear form of the relative pairing, shape ``((k+p) n^2, k n^2)``."""
        if len(chain.peripherals) != len(self.peripherals):
            raise DomainError("chain boundary does not match the peripheral words")
        T = _trace_form(self.n)
        rows = [self.cup_form(chain)]
        for w in chain.peripherals:
            rows.append(-(T @ self.eval_matrix(w)))
        return np.vstack(rows)


def coboundary(cx, m):
    """``(x_i m x_i^-1 - m)_i``."""
    return cx.unflat(cx.coboundary_matrix @ np.asarray(m).reshape(-1))


def cocycle_eval(cx, u, w):
    return cx.cocycle_eval(u, w)


def cocycle_eval_fox(cx, u, w):
    """Evaluate ``u(w) = sum_i (dw/dx_i) . u_i`` through Fox derivatives."""
    from .groups import fox_derivative

    out = np.zeros((cx.n, cx.n), dtype=complex)
    for i in range(1, cx.k + 1):
        for g, c in fox_derivative(w, i).terms.items():
            hg = cx.hol(g)
            out += c * hg @ u[i - 1] @ np.linalg.inv(hg)
    return out


# -- chains ---------------------------------------------------------------


def fundamental_chain(word_or_letters, peripherals=None):
    """Bar 2-chain of a relator or boundary word.

    A positive letter ``x`` at position t contributes ``+(p_{t-1} | x)``, a
    negative letter ``-(p_t | x)``, where ``p_t`` is the length-t prefix.
    Letters may be whole elements (pairs ``(word, sign)``) so that a derived
    puncture loop enters as a single letter.  By default the peripheral
    words are the positively occurring non-generator letters together with
    any generator letters left unbalanced, i.e. the boundary of the chain.
    """
    if isinstance(word_or_letters, Word):
        letters = [(Word.gen(i), s) for i, s in word_or_letters.letters]
    else:
        letters = list(word_or_letters)
    cells = []
    prefix = Word()
    for elem, sgn in letters:
        if sgn > 0:
            cells.append((1, prefix, elem))
            prefix = prefix * elem
        else:
            prefix = prefix * elem.inverse()
            cells.append((-1, prefix, elem))
    if peripherals is None:
        bd = chain_boundary(FundamentalChain(tuple(cells)))
        bd.pop(prefix, None)  # the full word itself (trivial in the group)
        peripherals = []
        for elem, sgn in letters:
            if bd.get(elem, 0) > 0 and elem not in peripherals:
                peripherals.extend([elem] * bd[elem])
    return FundamentalChain(tuple(cells), tuple(peripherals))


def chain_boundary(chain):
    """Formal bar boundary ``d[g|h] = [h] - [gh] + [g]`` over the free group,
    with the identity cell dropped."""
    out = {}
    for coef, g, h in chain.cells:
        for w, c in ((h, coef), (g * h, -coef), (g, coef)):
            if w.is_identity():
                continue
            out[w] = out.get(w, 0) + c
    return {w: c for w, c in out.items() if c != 0}


def surface_chain(pres):
    """Fundamental chain of a surface presentation: relator or boundary word."""
    if pres.closed:
        return fundamental_chain(pres.relator, peripherals=())
    return fundamental_chain(pres.boundary_letters(), peripherals=tuple(pres.puncture_words))


def transfer_chain(cover, chain):
    """Lift a base 2-chain to the cover, written in the Schreier alphabet.

    Each cell ``[g|h]`` lifts to ``sum_i [delta(g, sigma(h) i) | delta(h, i)]``
    with ``delta(g, i) = gamma_{sigma(g) i}^-1 g gamma_i``.  A peripheral
    word ``c`` lifts to one loop per cycle of ``sigma(c)``; correction cells
    merge the lifted 1-cells along each cycle into that loop.
    """
    cover = _as_cover(cover)
    cov, d = cover.cov, cover.degree
    cells = []
    for coef, g, h in chain.cells:
        sh = coset_action(cov, h)
        for i in range(d):
            cells.append((coef, cover.delta_element(g, sh[i]), cover.delta_element(h, i)))
    loops = []
    for c in chain.peripherals:
        for cyc in cycles(coset_action(cov, c)):
            q = cover.delta_element(c, cyc[0])
            for i in cyc[1:]:
                dk = cover.delta_element(c, i)
                cells.append((-1, dk, q))
                q = dk * q
            loops.append(q)
    return FundamentalChain(tuple(cells), tuple(loops))


def pairing_closed(cx, chain, u, v):
    """Cup product of two cocycles on the fundamental class."""
    return complex(np.asarray(u).reshape(-1) @ cx.cup_form(chain) @ np.asarray(v).reshape(-1))


def pairing_rel(cx, chain, xi, v):
    """Duality pairing of a relative cocycle with an absolute one."""
    return complex(AdComplex.flat_rel(xi) @ cx.rel_form(chain) @ np.asarray(v).reshape(-1))


def natural_map(xi):
    """Forget the witnesses: compactly supported class to ordinary class."""
    return np.asarray(xi.u)


# -- covering point -------------------------------------------------------


class CoverPoint:
    """A covering with a representation ``h`` of Delta (Schreier alphabet) and
    everything needed on both sides: the induced representation of Gamma, the
    two adjoint complexes and their fundamental chains."""

    def __init__(self, cover, h, check=True):
        self.cover = _as_cover(cover)
        cv = self.cover
        if h.k != cv.cs.rank:
            raise DomainError("alphabet mismatch between h and the Schreier generators")
        relators = cv.delta_relators()
        self.h = MatrixRep(h.names, h.matrices, relators, h.tol)
        self.ind = induce(cv, self.h).rep
        base = cv.base
        self.y = AdComplex(self.h, cv.y_loops(), check=check)
        self.x = AdComplex(self.ind, base.puncture_words, check=check)
        self.chain_x = surface_chain(base)
        self.chain_y = transfer_chain(cv, self.chain_x)
        self.d, self.r = cv.degree, h.n

    @cached_property
    def form_x(self):
        return self.x.cup_form(self.chain_x)

    @cached_property
    def form_y(self):
        return self.y.cup_form(self.chain_y)

    @cached_property
    def rel_form_x(self):
        return self.x.rel_form(self.chain_x)

    @cached_property
    def rel_form_y(self):
        return self.y.rel_form(self.chain_y)

    def block(self, m, j):
        r = self.r
        return m[j * r:(j + 1) * r, j * r:(j + 1) * r]

    def blockdiag(self, blocks):
        d, r = self.d, self.r
        out = np.zeros((d * r, d * r), dtype=complex)
        for j, b in enumerate(blocks):
            out[j * r:(j + 1) * r, j * r:(j + 1) * r] = b
        return out

    def project_diagonal(self, m):
        return self.blockdiag([self.block(m, j) for j in range(self.d)])

    def coinduce(self, u):
        """Shapiro inverse on cocycles: block ``j`` of ``U(x)`` is ``u(s_{x,i})``
        with ``j = sigma(x)(i)``."""
        cv = self.cover
        out = np.zeros((self.x.k, self.d * self.r, self.d * self.r), dtype=complex)
        for x in range(1, self.x.k + 1):
            for i in range(self.d):
                j, s = cv.cs.table[(x, i)]
                if s is not None:
                    out[x - 1, j * self.r:(j + 1) * self.r, j * self.r:(j + 1) * self.r] = u[s]
        return out

    def coinduce_rel(self, xi):
        """Shapiro inverse on relative cocycles (block-diagonal witnesses)."""
        cv = self.cover
        U = self.coinduce(xi.u)
        wit = []
        loop_iter = iter(zip(cv.top.punctures, xi.a))
        for j, c in enumerate(cv.base.puncture_words):
            uc = self.x.cocycle_eval(U, c)
            blocks = [None] * self.d
            for cyc in cycles(coset_action(cv.cov, c)):
                punct, a_lam = next(loop_iter)
                assert punct.base_puncture == j and punct.cycle == cyc
                i0 = cyc[0]
                ug = self.x.cocycle_eval(U, cv.cs.transversal[i0])
                cur = a_lam - self.block(ug, i0)
                blocks[i0] = cur
                sig = coset_action(cv.cov, c)
                i = i0
                for _ in range(len(cyc) - 1):
                    hd = evaluate(self.h, cv.delta_element(c, i))
                    nxt = sig[i]
                    cur = hd @ cur @ np.linalg.inv(hd) - self.block(uc, nxt)
                    blocks[nxt] = cur
                    i = nxt
            wit.append(self.blockdiag(blocks))
        return RelCocycle(U, np.array(wit).reshape(len(wit), self.d * self.r, self.d * self.r))

    def shapiro(self, U):
        """Restrict a block-diagonal Gamma-cocycle to Delta and read off block 0."""
        return np.array([self.block(self.x.cocycle_eval(U, s), 0) for s in self.cover.cs.schreier_gens])

    def shapiro_rel(self, xi):
        """Relative Shapiro map; witnesses are transported along transversal words."""
        cv = self.cover
        u = self.shapiro(xi.u)
        wit = []
        for p in cv.top.punctures:
            g = cv.cs.transversal[p.cycle[0]]
            A = xi.a[p.base_puncture]
            hg = evaluate(self.ind, g)
            B = np.linalg.inv(hg) @ (A + self.x.cocycle_eval(xi.u, g)) @ hg
            wit.append(self.block(B, 0))
        return RelCocycle(u, np.array(wit).reshape(len(wit), self.r, self.r))

    def project_rel(self, xi):
        return RelCocycle(np.array([self.project_diagonal(m) for m in xi.u]),
                          np.array([self.project_diagonal(m) for m in xi.a]))

    # coordinates of classes through the duality pairings

    def coords_x(self, v):
        """Pair an absolute class at Gamma against the H^1_c basis."""
        return self.x.h1c.vectors.T @ (self.rel_form_x @ np.asarray(v).reshape(-1))

    def coords_y(self, v):
        return self.y.h1c.vectors.T @ (self.rel_form_y @ np.asarray(v).reshape(-1))

    def coords_x_rel(self, xi):
        return (AdComplex.flat_rel(xi) @ self.rel_form_x) @ self.x.h1.vectors

    def coords_y_rel(self, xi):
        return (AdComplex.flat_rel(xi) @ self.rel_form_y) @ self.y.h1.vectors


# -- differentials --------------------------------------------------------


def d_psi(pt, u):
    """Tangent map of induction: H^1(Delta; Ad h) -> H^1(Gamma; Ad ind h)."""
    return pt.coinduce(np.asarray(u))


def d_psi_star(pt, Xi, method="direct"):
    """Cotangent map of induction: H^1_c(Gamma; Ad ind h) -> H^1_c(Delta; Ad h).

    ``direct``: keep the sheet-diagonal blocks, then the relative Shapiro map.
    ``adjoint``: solve ``<eta, u>_Y = <Xi, d_psi(u)>_X`` on an H^1 basis.
    """
    if method == "direct":
        return pt.shapiro_rel(pt.project_rel(Xi))
    if method != "adjoint":
        raise ValueError(method)
    hb = pt.y.h1.vectors
    flat = AdComplex.flat_rel(Xi) @ pt.rel_form_x
    rhs = np.array([flat @ d_psi(pt, pt.y.unflat(hb[:, k])).reshape(-1) for k in range(hb.shape[1])])
    return _adjoint_solve(pt.y, pt.rel_form_y, rhs)


def _adjoint_solve(cx, rel_form, rhs):
    E = cx.h1c.vectors
    M = E.T @ rel_form @ cx.h1.vectors  # (dim H^1_c, dim H^1)
    if M.shape[0] != M.shape[1] or M.size == 0:
        raise AdjointSolveSingular(f"pairing matrix has shape {M.shape}")
    s = np.linalg.svd(M, compute_uv=False)
    if s[-1] <= THRESHOLDS.decision * s[0]:
        raise AdjointSolveSingular(f"AdjointSolveSingular: pairing condition number {s[0] / s[-1]:.2e}")
    coeffs = np.linalg.solve(M.T, rhs)
    return cx.unflat_rel(E @ coeffs)


def d_phi(pt_or_cover, rho_cx, u):
    """Pullback of a Gamma-cocycle to the Schreier generators of Delta."""
    cover = pt_or_cover.cover if isinstance(pt_or_cover, (CoverPoint, PullbackPoint)) else _as_cover(pt_or_cover)
    return np.array([rho_cx.cocycle_eval(u, s) for s in cover.cs.schreier_gens])


def transfer_sum(blocks):
    """``H``: sum over the sheets of a fiber."""
    out = blocks[0]
    for b in blocks[1:]:
        out = out + b
    return out


def transfer_spread(v, d):
    """``G``: ``v -> (v/d, ..., v/d)`` (exact for Fraction entries)."""
    if isinstance(v, Fraction) or (isinstance(v, np.ndarray) and v.dtype == object):
        share = v * Fraction(1, d)
    else:
        share = v / d
    return [share] * d


class PullbackPoint:
    """A representation ``rho`` of Gamma, its restriction to Delta, and the
    complexes needed for pullback and transfer."""

    def __init__(self, cover, rho, check=True):
        self.cover = _as_cover(cover)
        cv = self.cover
        base = cv.base
        relators = () if base.relator is None else (base.relator,)
        self.rho = MatrixRep(rho.names, rho.matrices, relators, rho.tol)
        self.x = AdComplex(self.rho, base.puncture_words, check=check)
        self.res = restrict(cv, self.rho)
        self.pt = CoverPoint(cv, self.res, check=check)  # Y side, and induced-frame X side
        self.y = self.pt.y
        self.chain_x = surface_chain(base)
        self.d = cv.degree

    @cached_property
    def rel_form_x(self):
        return self.x.rel_form(self.chain_x)

    @cached_property
    def form_x(self):
        return self.x.cup_form(self.chain_x)

    @cached_property
    def untwist(self):
        """Frame change ``S = blockdiag(rho(gamma_j))`` from the induced frame."""
        return [evaluate(self.rho, g) for g in self.cover.cs.transversal]

    def compress(self, m, weight=None):
        """``H o T o G`` on a block-diagonal matrix in the induced frame."""
        weight = 1.0 / self.d if weight is None else weight
        r = self.rho.n
        blocks = []
        for j, s in enumerate(self.untwist):
            blocks.append(s @ m[j * r:(j + 1) * r, j * r:(j + 1) * r] @ np.linalg.inv(s))
        return weight * transfer_sum(blocks)


def d_phi_star(pp, xi, method="direct", weight=None):
    """Cotangent map of pullback: H^1_c(Delta) -> H^1_c(Gamma).

    ``direct``: relative Shapiro inverse, then the sheet-sum compression with
    weight ``1/d`` (so that ``H o G = Id``).  ``adjoint`` solves against the
    intrinsic pairings; it agrees with ``direct`` at ``weight=1``.
    """
    if method == "direct":
        Xi = pp.pt.coinduce_rel(xi)
        u = np.array([pp.compress(m, weight) for m in Xi.u])
        a = np.array([pp.compress(m, weight) for m in Xi.a]).reshape(len(Xi.a), pp.rho.n, pp.rho.n)
        return RelCocycle(u, a)
    if method != "adjoint":
        raise ValueError(method)
    hb = pp.x.h1.vectors
    flat = AdComplex.flat_rel(xi) @ pp.pt.rel_form_y
    rhs = np.array([flat @ d_phi(pp, pp.x, pp.x.unflat(hb[:, k])).reshape(-1) for k in range(hb.shape[1])])
    return _adjoint_solve(pp.x, pp.rel_form_x, rhs)


# -- verifiers ------------------------------------------------------------


def _rel_residual(a, b, floor=0.0):
    """``|a - b| / max(|b|, floor)``; ``floor`` guards against a vanishing bivector."""
    scale = max(np.linalg.norm(b), floor, 1e-300)
    return float(np.linalg.norm(a - b) / scale)


def _random_class(rng, basis):
    c = rng.standard_normal(basis.dim) + 1j * rng.standard_normal(basis.dim)
    return basis.vectors @ c


def _bivector_rank(cx, rel_form):
    """Rank of the Poisson bivector ``(xi, eta) -> <xi, natural(eta)>`` on H^1_c."""
    E = cx.h1c.vectors
    K = cx.k * cx.N
    return _rank(E.T @ rel_form @ E[:K])


def bivector_rank(cx, chain):
    return _bivector_rank(cx, cx.rel_form(chain))


def bivector_matrix(cx, chain):
    """Gram matrix of ``<xi_i, natural(xi_j)>`` on the H^1_c basis."""
    E = cx.h1c.vectors
    return E.T @ cx.rel_form(chain) @ E[:cx.k * cx.N]


def psi_ranks(pt):
    """Ranks of d_psi on H^1(Delta) and of d_psi_star on H^1_c(Gamma), with the target dimensions."""
    up = [pt.coords_x(d_psi(pt, pt.y.unflat(v))) for v in pt.y.h1.vectors.T]
    down = [pt.coords_y_rel(d_psi_star(pt, pt.x.unflat_rel(v))) for v in pt.x.h1c.vectors.T]
    return {
        "d_psi_rank": _rank(np.array(up).T) if up else 0,
        "dim_h1_y": pt.y.h1.dim,
        "d_psi_star_rank": _rank(np.array(down).T) if down else 0,
        "dim_h1c_y": pt.y.h1c.dim,
    }


def verify_e17(cover, h, trials=10, tol=1e-8, seed=0):
    """Compare ``d_psi . natural . d_psi_star`` with ``natural`` at ``ind(h)``."""
    cover = _as_cover(cover)
    rec = {"check": "e17", "seed": seed}
    if cover.base.closed:
        raise DomainError("e17 needs a punctured base")
    pt = CoverPoint(cover, h)
    if not (irreducible(pt.h) and irreducible(pt.ind)):
        rec.update(status="inconclusive", residual=None,
                   details={"reason": "reducible point (h or ind(h))"})
        return rec
    rng = np.random.default_rng(seed)
    worst = worst_diag = worst_ab = 0.0
    for _ in range(trials):
        Xi = pt.x.unflat_rel(_random_class(rng, pt.x.h1c))
        rhs = pt.coords_x(natural_map(Xi))
        eta = d_psi_star(pt, Xi)
        lhs = pt.coords_x(d_psi(pt, natural_map(eta)))
        worst = max(worst, _rel_residual(lhs, rhs, np.linalg.norm(pt.coords_x_rel(Xi))))
        eta_b = d_psi_star(pt, Xi, method="adjoint")
        worst_ab = max(worst_ab, _rel_residual(pt.coords_y_rel(eta), pt.coords_y_rel(eta_b)))
        # same comparison restricted to classes from the sheet-diagonal summand
        zeta = pt.y.unflat_rel(_random_class(rng, pt.y.h1c))
        Xd = pt.coinduce_rel(zeta)
        rhs_d = pt.coords_x(natural_map(Xd))
        lhs_d = pt.coords_x(d_psi(pt, natural_map(d_psi_star(pt, Xd))))
        worst_diag = max(worst_diag, _rel_residual(lhs_d, rhs_d, np.linalg.norm(pt.coords_x_rel(Xd))))
    rec.update(
        status="pass" if worst <= tol else "fail",
        residual=worst,
        details={
            "trials": trials,
            "tolerance": tol,
            "diagonal_summand_residual": worst_diag,
            "dual_implementations_gap": worst_ab,
            "rank_bivector_x": _bivector_rank(pt.x, pt.rel_form_x),
            "rank_bivector_y": _bivector_rank(pt.y, pt.rel_form_y),
            "dim_h1_x": pt.x.h1.dim,
            "dim_h1_y": pt.y.h1.dim,
        },
    )
    return rec


def verify_phi_poisson(cover, rho, trials=10, tol=1e-8, seed=0):
    """Compare ``d_phi . natural . d_phi_star`` with ``natural`` at ``res(rho)``."""
    cover = _as_cover(cover)
    rec = {"check": "phi-poisson", "seed": seed}
    if cover.base.closed:
        raise DomainError("phi-poisson needs a punctured base")
    pp = PullbackPoint(cover, rho)
    hg = _h_after_g_exact(pp.d, pp.rho.n, seed)
    if not (irreducible(pp.rho) and irreducible(pp.res)):
        rec.update(status="inconclusive", residual=None,
                   details={"reason": "reducible point (rho or its restriction)", "h_after_g_exact": hg})
        return rec
    rng = np.random.default_rng(seed)
    worst = worst_ab = 0.0
    ratio = []
    for _ in range(trials):
        xi = pp.y.unflat_rel(_random_class(rng, pp.y.h1c))
        rhs = pp.pt.coords_y(natural_map(xi))
        eta = d_phi_star(pp, xi)
        lhs = pp.pt.coords_y(d_phi(pp, pp.x, natural_map(eta)))
        worst = max(worst, _rel_residual(lhs, rhs, np.linalg.norm(pp.pt.coords_y_rel(xi))))
        eta_b = d_phi_star(pp, xi, method="adjoint")
        ca = (AdComplex.flat_rel(eta) @ pp.rel_form_x) @ pp.x.h1.vectors
        cb = (AdComplex.flat_rel(eta_b) @ pp.rel_form_x) @ pp.x.h1.vectors
        worst_ab = max(worst_ab, _rel_residual(pp.d * ca, cb))
        ratio.append(complex(np.vdot(ca, cb) / np.vdot(ca, ca)))
    rec.update(
        status="pass" if worst <= tol and hg else "fail",
        residual=worst,
        details={
            "trials": trials,
            "tolerance": tol,
            "h_after_g_exact": hg,
            "adjoint_over_direct": [abs(z) for z in ratio[:3]],
            "adjoint_vs_degree_times_direct_gap": worst_ab,
            "rank_bivector_x": _bivector_rank(pp.x, pp.rel_form_x),
            "rank_bivector_y": _bivector_rank(pp.y, pp.pt.rel_form_y),
        },
    )
    return rec


def _h_after_g_exact(d, n, seed):
    """``H(G(v)) == v`` with exact rational arithmetic."""
    rng = np.random.default_rng(seed)
    v = np.array([[Fraction(int(a), int(b)) for a, b in zip(row_a, row_b)]
                  for row_a, row_b in zip(rng.integers(-50, 50, (n, n)), rng.integers(1, 20, (n, n)))],
                 dtype=object)
    back = transfer_sum(transfer_spread(v, d))
    return bool(np.all(back == v))


def verify_scaling(cover, rho, trials=5, tol=1e-8, seed=0):
    """``omega_Y(f* a, f* b) = d omega_X(a, b)`` on a closed unramified cover.

    The cover side is computed twice: through the induced coefficient module
    on the base (sheet-summed trace) and intrinsically on Delta with the
    transferred fundamental chain.
    """
    cover = _as_cover(cover)
    if not cover.base.closed or cover.top.punctures:
        raise NotUnramifiedClosed("NotUnramifiedClosed: scaling needs a closed, unramified cover")
    pp = PullbackPoint(cover, rho)
    rng = np.random.default_rng(seed)
    d = cover.degree
    worst = 0.0
    ratios = []
    for _ in range(trials):
        a = pp.x.unflat(_random_class(rng, pp.x.h1))
        b = pp.x.unflat(_random_class(rng, pp.x.h1))
        wx = pairing_closed(pp.x, pp.chain_x, a, b)
        fa, fb = d_phi(pp, pp.x, a), d_phi(pp, pp.x, b)
        wy_intrinsic = pairing_closed(pp.y, pp.pt.chain_y, fa, fb)
        wy_shapiro = complex(pp.pt.coinduce(fa).reshape(-1) @ pp.pt.form_x @ pp.pt.coinduce(fb).reshape(-1))
        for wy in (wy_intrinsic, wy_shapiro):
            ratios.append(wy / wx)
            worst = max(worst, abs(wy - d * wx) / max(abs(d * wx), 1e-300))
    return {
        "check": "scaling", "seed": seed,
        "status": "pass" if worst <= tol else "fail",
        "residual": worst,
        "details": {"degree": d, "ratios": [[z.real, z.imag] for z in ratios], "trials": trials},
    }
