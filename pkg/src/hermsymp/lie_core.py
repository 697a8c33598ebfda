"""Real Lie algebras presented by dense structure constants, plus the subspace
arithmetic used everywhere else.

Conventions
-----------
A Lie algebra of dimension m is stored as a tensor ``f`` of shape (m, m, m)
with ``[b_i, b_j] = sum_k f[k, i, j] b_k`` for the standard basis ``b_i``.
Subspaces are given by basis columns inside R^m.
"""

import numpy as np

from ._linalg import RANK_RTOL, nullspace, orth_columns

DEFAULT_TOL = 1e-9


class RealLieAlgebra:
    """Finite-dimensional real Lie algebra with a fixed basis.

    Parameters
    ----------
    f : array_like, shape (m, m, m)
        Structure constants, ``f[k, i, j]`` = coefficient of the k-th basis
        vector in the bracket of basis vectors i and j.
    """

    def __init__(self, f):
        f = np.asarray(f, dtype=float)
        if f.ndim != 3 or len(set(f.shape)) != 1:
            raise ValueError("structure tensor must be cubic, got shape %r" % (f.shape,))
        self.f = f
        self.dim = f.shape[0]

    def bracket(self, x, y):
        return np.einsum("kij,i,j->k", self.f, x, y)

    def ad(self, x):
        """Matrix of ad_x acting on column vectors."""
        return np.einsum("kij,i->kj", self.f, x)

    def bracket_columns(self, X, Y):
        """Pairwise brackets of the columns of X with the columns of Y,
        returned as a (dim, X.shape[1] * Y.shape[1]) matrix."""
        B = np.einsum("kij,ia,jb->kab", self.f, X, Y)
        return B.reshape(self.dim, -1)

    def __repr__(self):
        return "RealLieAlgebra(dim=%d)" % self.dim


class Subspace:
    """Subspace of R^m spanned by linearly independent basis columns."""

    def __init__(self, ambient_dim, basis):
        basis = np.asarray(basis, dtype=float)
        if basis.ndim == 1:
            basis = basis[:, None]
        if basis.shape[0] != ambient_dim:
            raise ValueError("basis rows (%d) must match ambient dimension (%d)"
                             % (basis.shape[0], ambient_dim))
        onb = orth_columns(basis)
        if onb.shape[1] != basis.shape[1]:
            raise ValueError("basis columns are linearly dependent")
        self.ambient_dim = ambient_dim
        self.basis = basis
        self._onb = onb

    @classmethod
    def from_span(cls, ambient_dim, vectors):
        """Subspace spanned by possibly dependent columns (dependents dropped).

        Columns below RANK_RTOL relative to the largest column norm count as
        zero, so an all-noise input yields the zero subspace.
        """
        A = np.asarray(vectors, dtype=float).reshape(ambient_dim, -1)
        scale = float(np.max(np.linalg.norm(A, axis=0))) if A.shape[1] else 0.0
        onb = orth_columns(A, floor=RANK_RTOL * max(1.0, scale))
        sub = cls.__new__(cls)
        sub.ambient_dim = ambient_dim
        sub.basis = onb
        sub._onb = onb
        return sub

    @property
    def dim(self):
        return self._onb.shape[1]

    @property
    def onb(self):
        return self._onb

    def project(self, v):
        return self._onb @ (self._onb.T @ np.asarray(v, dtype=float))

    def residual_of(self, v):
        """Distance of v from this subspace."""
        v = np.asarray(v, dtype=float)
        return float(np.linalg.norm(v - self.project(v)))

    def contains_vector(self, v, tol=DEFAULT_TOL):
        return self.residual_of(v) <= tol

    def containment_residual(self, other):
        """max distance of the other subspace's unit basis from this one."""
        if other.dim == 0:
            return 0.0
        R = other.onb - self._onb @ (self._onb.T @ other.onb)
        return float(np.max(np.linalg.norm(R, axis=0)))

    def contains(self, other, tol=DEFAULT_TOL):
        return self.containment_residual(other) <= tol

    def intersect(self, other):
        if self.dim == 0 or other.dim == 0:
            return Subspace.from_span(self.ambient_dim, np.zeros((self.ambient_dim, 0)))
        A = np.hstack([self._onb, -other.onb])
        ns = nullspace(A)
        vecs = self._onb @ ns[: self.dim]
        return Subspace.from_span(self.ambient_dim, vecs)

    def add(self, other):
        return Subspace.from_span(self.ambient_dim, np.hstack([self._onb, other.onb]))

    def apply(self, M):
        """Image of this subspace under the linear map M."""
        return Subspace.from_span(self.ambient_dim, np.asarray(M, dtype=float) @ self._onb)

    def perp_within(self, other):
        """Orthogonal complement of self inside other (w.r.t. the dot product)."""
        resid = other.onb - self._onb @ (self._onb.T @ other.onb)
        return Subspace.from_span(self.ambient_dim, orth_columns(resid))

    def __repr__(self):
        return "Subspace(ambient=%d, dim=%d)" % (self.ambient_dim, self.dim)


# ---------------------------------------------------------------- validation


def validate_structure_constants(alg, tol=DEFAULT_TOL):
    """Antisymmetry and Jacobi residuals of the structure tensor.

    Returns a dict with ``antisymmetry_residual``, ``jacobi_residual`` and
    ``ok`` (both residuals within tol).
    """
    f = alg.f
    anti = float(np.max(np.abs(f + f.transpose(0, 2, 1)))) if f.size else 0.0
    # cyclic sum of [[x,y],z] over basis triples
    ff = np.einsum("mij,lmk->lijk", f, f)
    jac = ff + ff.transpose(0, 2, 3, 1) + ff.transpose(0, 3, 1, 2)
    jres = float(np.max(np.abs(jac))) if f.size else 0.0
    return {
        "antisymmetry_residual": anti,
        "jacobi_residual": jres,
        "ok": bool(anti <= tol and jres <= tol),
    }


def is_unimodular(alg, tol=DEFAULT_TOL):
    """Check tr(ad_x) = 0 for every x; the residual is the largest basis trace."""
    traces = np.einsum("kik->i", alg.f)
    res = float(np.max(np.abs(traces))) if traces.size else 0.0
    return {"flag": bool(res <= tol), "residual": res}


def verify_abelian_ideal(alg, s, tol=DEFAULT_TOL):
    """Check that the subspace ``s`` is an ideal and abelian.

    Returns ideal/abelian flags with their residuals and the codimension.
    """
    if s.ambient_dim != alg.dim:
        raise ValueError("subspace ambient dimension does not match the algebra")
    B = s.onb
    full = np.eye(alg.dim)
    # ideal: [g, s] lands back in s
    amb_brackets = alg.bracket_columns(full, B)
    P = B @ B.T
    ideal_res = float(np.max(np.abs(amb_brackets - P @ amb_brackets))) if B.size else 0.0
    inner = alg.bracket_columns(B, B)
    abelian_res = float(np.max(np.abs(inner))) if B.size else 0.0
    return {
        "is_ideal": bool(ideal_res <= tol),
        "is_abelian": bool(abelian_res <= tol),
        "ideal_residual": ideal_res,
        "abelian_residual": abelian_res,
        "codim": alg.dim - s.dim,
    }


def derived_subalgebra_span(alg, sub=None):
    """Span of all brackets of the given subspace (default: whole algebra)."""
    B = sub.onb if sub is not None else np.eye(alg.dim)
    return Subspace.from_span(alg.dim, alg.bracket_columns(B, B))


def derived_series(alg, tol=DEFAULT_TOL):
    """Dimensions along the derived series and the solvability step.

    ``step`` is the first index whose term vanishes; infinity when the series
    stabilizes at a nonzero dimension (non-solvable algebra).
    """
    dims = [alg.dim]
    current = Subspace.from_span(alg.dim, np.eye(alg.dim))
    step = np.inf
    for k in range(1, alg.dim + 2):
        nxt = derived_subalgebra_span(alg, current)
        dims.append(nxt.dim)
        if nxt.dim == 0:
            step = k
            break
        if nxt.dim == current.dim:
            break
        current = nxt
    return {"dims": dims, "step": step}
