"""Complex structures, Hermitian metrics, unitary frames and invariant forms.

A complex structure J on a 2n-dimensional real Lie algebra splits the
complexification into the +i and -i eigenspaces.  We work with frames
``e_1..e_n`` of the +i eigenspace (columns of a complex 2n x n matrix built
from real vectors as ``(x - i J x) / sqrt(2)``) and record the bracket data in
two complex tensors::

    [e_i, e_k]    = sum_j C[j, i, k] e_j
    [e_i, ebar_j] = sum_k ( conj(D[i, k, j]) e_k - D[j, k, i] ebar_k )

i.e. ``C[j, i, k]`` and ``D[j, i, k]`` carry the upper index first.  The dual
coframe ``phi_1..phi_n`` then satisfies the structure equations

    d phi_i  = -1/2 sum C[i,j,k] phi_j ^ phi_k - sum conj(D[j,i,k]) phi_j ^ phibar_k
    d phibar_i = conjugate of the above.

Invariant forms are stored as canonical coefficients on strictly increasing
wedge monomials ``phi_I ^ phibar_K``.
"""

import numpy as np

from .lie_core import RealLieAlgebra

DEFAULT_TOL = 1e-9


def _as_matrix(obj):
    if isinstance(obj, (ComplexStructure, HermitianMetric)):
        return obj.matrix
    return np.asarray(obj, dtype=float)


class ComplexStructure:
    """Almost complex structure: a real matrix J with J @ J = -I."""

    def __init__(self, J, tol=1e-10):
        J = np.asarray(J, dtype=float)
        m = J.shape[0]
        if J.shape != (m, m) or m % 2 != 0:
            raise ValueError("J must be square of even size")
        if np.max(np.abs(J @ J + np.eye(m))) > tol:
            raise ValueError("J squared is not -identity")
        self.matrix = J
        self.dim = m

    @property
    def J(self):
        return self.matrix


class HermitianMetric:
    """Positive-definite symmetric g, optionally checked against a J."""

    def __init__(self, g, J=None, tol=1e-10):
        g = np.asarray(g, dtype=float)
        if np.max(np.abs(g - g.T)) > tol:
            raise ValueError("metric matrix is not symmetric")
        if np.min(np.linalg.eigvalsh(0.5 * (g + g.T))) <= 0:
            raise ValueError("metric matrix is not positive definite")
        if J is not None:
            Jm = _as_matrix(J)
            if np.max(np.abs(Jm.T @ g @ Jm - g)) > max(tol, 1e-9):
                raise ValueError("metric is not compatible with J")
        self.matrix = g

    @property
    def g(self):
        return self.matrix


def standard_complex_structure(n):
    """J pairing coordinates (2i-1, 2i): J b_{2i-1} = b_{2i}."""
    J = np.zeros((2 * n, 2 * n))
    for i in range(n):
        J[2 * i + 1, 2 * i] = 1.0
        J[2 * i, 2 * i + 1] = -1.0
    return J


def check_integrability(alg, J, tol=DEFAULT_TOL):
    """Nijenhuis-type residual of J over all basis pairs.

    The residual is the largest norm of
    ``[x,y] - [Jx,Jy] + J[Jx,y] + J[x,Jy]`` over standard basis pairs.
    """
    Jm = _as_matrix(J)
    m = alg.dim
    if np.max(np.abs(Jm @ Jm + np.eye(m))) > 1e-8:
        raise ValueError("J squared is not -identity")
    f = alg.f
    t1 = f
    t2 = np.einsum("kij,ia,jb->kab", f, Jm, Jm)
    t3 = np.einsum("lk,kij,ia->laj", Jm, f, Jm)
    t4 = np.einsum("lk,kij,jb->lib", Jm, f, Jm)
    N = t1 - t2 + t3 + t4
    res = float(np.max(np.linalg.norm(N, axis=0))) if m else 0.0
    return {"flag": bool(res <= tol), "residual": res}


def hermitian_product(g, u, v):
    """h(u, v) = u^T g conj(v) for complex column vectors u, v."""
    return complex(np.asarray(u) @ _as_matrix(g) @ np.conj(np.asarray(v)))


# ---------------------------------------------------------------- frames


class UnitaryFrame:
    """Unitary frame of the +i eigenspace of J together with its bracket data.

    Attributes
    ----------
    e : complex (2n, n) array, frame columns
    C, D : complex (n, n, n) arrays, see the module docstring
    """

    def __init__(self, alg, J, g, e, tol=1e-8, _skip_checks=False):
        Jm = _as_matrix(J)
        gm = _as_matrix(g)
        e = np.asarray(e, dtype=complex)
        m = alg.dim
        n = m // 2
        if e.shape != (m, n):
            raise ValueError("frame must have shape (2n, n)")
        if not _skip_checks:
            if np.max(np.abs(Jm @ e - 1j * e)) > tol:
                raise ValueError("columns are not +i eigenvectors of J")
            gram = e.T @ gm @ np.conj(e)
            if np.max(np.abs(gram - np.eye(n))) > tol:
                raise ValueError("frame is not unitary for the given metric")
        self.alg = alg
        self.J = Jm
        self.g = gm
        self.e = e
        self.n = n
        C, D, holo_res = _frame_structure_tensors(alg, e)
        if holo_res > max(tol, 1e-8):
            raise ValueError("bracket of frame vectors leaves the +i eigenspace "
                             "(residual %.3e): J is not integrable" % holo_res)
        self.C = C
        self.D = D
        self.holomorphic_residual = holo_res
        self._dphi = None
        self._dphibar = None

    def coframe_differentials(self):
        """Cached term lists for d(phi_i) and d(phibar_i), 0-indexed by i."""
        if self._dphi is None:
            self._dphi, self._dphibar = _coframe_differentials(self.C, self.D)
        return self._dphi, self._dphibar

    def __repr__(self):
        return "UnitaryFrame(n=%d)" % self.n


def _frame_structure_tensors(alg, e):
    """C, D tensors of a frame plus the residual of holomorphic closure."""
    m = alg.dim
    n = m // 2
    Q = np.hstack([e, np.conj(e)])
    B = np.einsum("kij,ia->kaj", alg.f.astype(complex), Q)
    B = np.einsum("kaj,jb->kab", B, Q)
    X = np.linalg.solve(Q, B.reshape(m, -1)).reshape(m, m, m)
    C = X[:n, :n, :n].copy()
    D = X[n:, n:, :n].transpose(1, 0, 2).copy()
    holo = float(np.max(np.abs(X[n:, :n, :n]))) if n else 0.0
    return C, D, holo


def build_unitary_frame(alg, J, g, tol=1e-8):
    """Deterministic unitary frame from Gram-Schmidt over the standard basis.

    Seeds ``(b_k - i J b_k)/sqrt(2)`` are orthonormalized in order with respect
    to the Hermitian product of g; near-dependent seeds are dropped.
    """
    Jm = _as_matrix(J)
    gm = _as_matrix(g)
    m = alg.dim
    n = m // 2
    cols = []
    for k in range(m):
        b = np.zeros(m)
        b[k] = 1.0
        v = (b - 1j * (Jm @ b)) / np.sqrt(2.0)
        for _ in range(2):  # one re-orthogonalization pass
            for u in cols:
                v = v - hermitian_product(gm, v, u) * u
        nrm = np.sqrt(hermitian_product(gm, v, v).real)
        if nrm > 1e-10:
            cols.append(v / nrm)
        if len(cols) == n:
            break
    if len(cols) != n:
        raise ValueError("failed to assemble a full unitary frame")
    return UnitaryFrame(alg, Jm, gm, np.column_stack(cols), tol=tol)


def unitary_frame_from_real_pair_columns(alg, J, g, real_columns, tol=1e-8):
    """Frame from explicit real seed vectors x_i, as ``(x_i - i J x_i)/sqrt(2)``
    followed by the same Gram-Schmidt as `build_unitary_frame`."""
    Jm = _as_matrix(J)
    gm = _as_matrix(g)
    m = alg.dim
    n = m // 2
    cols = []
    X = np.asarray(real_columns, dtype=float)
    for k in range(X.shape[1]):
        b = X[:, k]
        v = (b - 1j * (Jm @ b)) / np.sqrt(2.0)
        for _ in range(2):
            for u in cols:
                v = v - hermitian_product(gm, v, u) * u
        nrm = np.sqrt(max(hermitian_product(gm, v, v).real, 0.0))
        if nrm > 1e-10:
            cols.append(v / nrm)
    if len(cols) != n:
        raise ValueError("seed columns did not span the +i eigenspace")
    return UnitaryFrame(alg, Jm, gm, np.column_stack(cols), tol=tol)


# ---------------------------------------------------------------- forms


def _merge_sorted(a, b):
    """Merge two strictly increasing index tuples; returns (sign, merged) or
    None when an index repeats."""
    out = []
    sign = 1
    i = j = 0
    while i < len(a) and j < len(b):
        if a[i] == b[j]:
            return None
        if a[i] < b[j]:
            out.append(a[i])
            i += 1
        else:
            # b[j] jumps over the remaining entries of a
            if (len(a) - i) % 2 == 1:
                sign = -sign
            out.append(b[j])
            j += 1
    out.extend(a[i:])
    out.extend(b[j:])
    return sign, tuple(out)


class InvariantForm:
    """Complex-valued invariant form, a sum of (p, q) pieces.

    ``coefficients`` maps ``(I, K)`` with strictly increasing 1-based tuples to
    the canonical coefficient of ``phi_I ^ phibar_K``.  All 1-form generators
    anticommute; within a key the phi factors come first.
    """

    def __init__(self, n, coefficients=None):
        self.n = n
        self.coefficients = {}
        if coefficients:
            for (I, K), c in coefficients.items():
                self._check_key(I, K)
                if c != 0:
                    self.coefficients[(tuple(I), tuple(K))] = complex(c)

    def _check_key(self, I, K):
        for T in (I, K):
            if any(not (1 <= t <= self.n) for t in T):
                raise ValueError("index out of range in %r" % (T,))
            if any(T[i] >= T[i + 1] for i in range(len(T) - 1)):
                raise ValueError("key tuples must be strictly increasing: %r" % (T,))

    @classmethod
    def zero(cls, n):
        return cls(n)

    def copy(self):
        out = InvariantForm(self.n)
        out.coefficients = dict(self.coefficients)
        return out

    def add_term(self, I, K, c):
        """Accumulate c on the canonical monomial (I, K); keys must be canonical."""
        if c == 0:
            return
        key = (tuple(I), tuple(K))
        cur = self.coefficients.get(key, 0.0)
        new = cur + complex(c)
        if new == 0:
            self.coefficients.pop(key, None)
        else:
            self.coefficients[key] = new

    def __add__(self, other):
        out = self.copy()
        for (I, K), c in other.coefficients.items():
            out.add_term(I, K, c)
        return out

    def __sub__(self, other):
        return self + other.scale(-1.0)

    def scale(self, c):
        out = InvariantForm(self.n)
        if c != 0:
            out.coefficients = {k: c * v for k, v in self.coefficients.items()}
        return out

    def conjugate(self):
        """Complex conjugate form: phi_I ^ phibar_K -> (-1)^(pq) phi_K ^ phibar_I."""
        out = InvariantForm(self.n)
        for (I, K), c in self.coefficients.items():
            sign = -1.0 if (len(I) * len(K)) % 2 == 1 else 1.0
            out.add_term(K, I, sign * np.conj(c))
        return out

    def bidegree(self, p, q):
        out = InvariantForm(self.n)
        for (I, K), c in self.coefficients.items():
            if len(I) == p and len(K) == q:
                out.add_term(I, K, c)
        return out

    def wedge(self, other):
        out = InvariantForm(self.n)
        for (I1, K1), c1 in self.coefficients.items():
            for (I2, K2), c2 in other.coefficients.items():
                mi = _merge_sorted(I1, I2)
                if mi is None:
                    continue
                mk = _merge_sorted(K1, K2)
                if mk is None:
                    continue
                # moving phi_I2 (p2 factors) past phibar_K1 (q1 factors)
                sign = -1.0 if (len(K1) * len(I2)) % 2 == 1 else 1.0
                out.add_term(mi[1], mk[1], sign * mi[0] * mk[0] * c1 * c2)
        return out

    def norm(self):
        """Frame-norm: l2 norm of the canonical coefficients."""
        if not self.coefficients:
            return 0.0
        return float(np.sqrt(sum(abs(c) ** 2 for c in self.coefficients.values())))

    def is_zero(self, tol=0.0):
        return self.norm() <= tol

    def terms(self):
        return sorted(self.coefficients.items())

    def to_json_terms(self):
        out = []
        for (I, K), c in self.terms():
            out.append({"p_indices": list(I), "q_indices": list(K),
                        "re": float(c.real), "im": float(c.imag)})
        return out

    @classmethod
    def from_json_terms(cls, n, terms):
        form = cls(n)
        for t in terms:
            form.add_term(tuple(t["p_indices"]), tuple(t["q_indices"]),
                          t["re"] + 1j * t["im"])
        return form

    def __repr__(self):
        return "InvariantForm(n=%d, terms=%d)" % (self.n, len(self.coefficients))


def _coframe_differentials(C, D):
    """Term lists of d(phi_i), d(phibar_i) as {(I, K): coeff} dicts, 0-indexed i."""
    n = C.shape[0]
    dphi = []
    dphibar = []
    Dc = np.conj(D)
    Cc = np.conj(C)
    for i in range(n):
        t = {}
        for j in range(n):
            for k in range(j + 1, n):
                c = -C[i, j, k]
                if c != 0:
                    t[((j + 1, k + 1), ())] = t.get(((j + 1, k + 1), ()), 0.0) + c
        for j in range(n):
            for k in range(n):
                c = -Dc[j, i, k]
                if c != 0:
                    key = ((j + 1,), (k + 1,))
                    t[key] = t.get(key, 0.0) + c
        dphi.append({k: v for k, v in t.items() if v != 0})
        tb = {}
        for j in range(n):
            for k in range(j + 1, n):
                c = -Cc[i, j, k]
                if c != 0:
                    tb[((), (j + 1, k + 1))] = tb.get(((), (j + 1, k + 1)), 0.0) + c
        for j in range(n):
            for k in range(n):
                c = D[j, i, k]
                if c != 0:
                    key = ((k + 1,), (j + 1,))
                    tb[key] = tb.get(key, 0.0) + c
        dphibar.append({k: v for k, v in tb.items() if v != 0})
    return dphi, dphibar


def ce_differential(form, frame):
    """Chevalley-Eilenberg differential of an invariant form in the given frame.

    Extends the coframe structure equations as a degree-1 anti-derivation.
    """
    dphi, dphibar = frame.coframe_differentials()
    n = form.n
    if n != frame.n:
        raise ValueError("form and frame sizes differ")
    out = InvariantForm(n)
    for (I, K), coeff in form.coefficients.items():
        factors = [("h", i) for i in I] + [("a", k) for k in K]
        for pos, (typ, idx) in enumerate(factors):
            sign = -1.0 if pos % 2 == 1 else 1.0
            if typ == "h":
                rest_I = tuple(x for x in I if x != idx)
                rest_K = K
                terms = dphi[idx - 1]
            else:
                rest_I = I
                rest_K = tuple(x for x in K if x != idx)
                terms = dphibar[idx - 1]
            for (I2, K2), c2 in terms.items():
                mi = _merge_sorted(I2, rest_I)
                if mi is None:
                    continue
                mk = _merge_sorted(K2, rest_K)
                if mk is None:
                    continue
                s2 = -1.0 if (len(K2) * len(rest_I)) % 2 == 1 else 1.0
                out.add_term(mi[1], mk[1], sign * s2 * mi[0] * mk[0] * coeff * c2)
    return out


def kahler_form(n):
    """Fundamental form of a unitary frame: i * sum phi_i ^ phibar_i."""
    w = InvariantForm(n)
    for i in range(1, n + 1):
        w.add_term((i,), (i,), 1j)
    return w


def torsion_tensor(frame):
    """T[j, i, k] = -C[j, i, k] - D[j, i, k] + D[j, k, i].

    These are the coefficients of the (2,1) obstruction to the fundamental
    form being closed: the canonical (i<k) coefficient of the (2,1) part of
    d(omega) equals i * T[j, i, k] on phi_i ^ phi_k ^ phibar_j.
    """
    C, D = frame.C, frame.D
    return -C - D + D.transpose(0, 2, 1)


def verify_jacobi_CD(frame, tol=DEFAULT_TOL):
    """Residuals of the three bracket-identity families satisfied by C and D.

    Returns (pure_C, C_with_D, conjugate_mixed) max-norm residuals.
    """
    C, D = frame.C, frame.D
    Dc = np.conj(D)
    # family 1: cyclic sum over (i, j, k) of C[r,i,j] C[l,r,k]
    t = np.einsum("rij,lrk->lijk", C, C)
    r1 = t + t.transpose(0, 2, 3, 1) + t.transpose(0, 3, 1, 2)
    res1 = float(np.max(np.abs(r1)))
    # family 2: C[r,i,k] D[l,j,r] + D[r,j,i] D[l,r,k] - D[r,j,k] D[l,r,i]
    a = np.einsum("rik,ljr->lijk", C, D)
    b = np.einsum("rji,lrk->lijk", D, D)
    r2 = a + b - b.transpose(0, 3, 2, 1)
    res2 = float(np.max(np.abs(r2)))
    # family 3: C[r,i,k] conj(D[r,j,l]) - C[j,r,k] conj(D[i,r,l])
    #           + C[j,r,i] conj(D[k,r,l]) - D[l,r,i] conj(D[k,j,r])
    #           + D[l,r,k] conj(D[i,j,r])
    u1 = np.einsum("rik,rjl->ijkl", C, Dc)
    u2 = np.einsum("jrk,irl->ijkl", C, Dc)
    u3 = np.einsum("jri,krl->ijkl", C, Dc)
    u4 = np.einsum("lri,kjr->ijkl", D, Dc)
    u5 = np.einsum("lrk,ijr->ijkl", D, Dc)
    r3 = u1 - u2 + u3 - u4 + u5
    res3 = float(np.max(np.abs(r3)))
    return (res1, res2, res3)


def unimodularity_residual_CD(C, D):
    """max_i |sum_r (C[r,r,i] + D[r,r,i])|; zero iff the algebra is unimodular."""
    tr = np.einsum("rri->i", C) + np.einsum("rri->i", D)
    return float(np.max(np.abs(tr))) if tr.size else 0.0


# ----------------------------------------------------- synthesis from C, D


def algebra_from_structure_constants(C, D, imag_tol=1e-10):
    """Real Lie algebra (with standard J and identity metric) whose canonical
    unitary frame reproduces the given C, D tensors.

    The real basis is ``b_{2i-1} = (e_i + ebar_i)/sqrt(2)``,
    ``b_{2i} = i (e_i - ebar_i)/sqrt(2)``; the returned structure tensor is
    checked for a vanishing imaginary part.

    Returns (alg, J, g).
    """
    C = np.asarray(C, dtype=complex)
    D = np.asarray(D, dtype=complex)
    n = C.shape[0]
    m = 2 * n
    Fc = np.zeros((m, m, m), dtype=complex)
    # [e_i, e_k] = C[j,i,k] e_j
    Fc[:n, :n, :n] = C
    # [e_a, ebar_j]: conj(D[a,k,j]) e_k - D[j,k,a] ebar_k
    for a in range(n):
        for j in range(n):
            for k in range(n):
                Fc[k, a, n + j] += np.conj(D[a, k, j])
                Fc[n + k, a, n + j] += -D[j, k, a]
    # [ebar_i, ebar_j] = conj(C[k,i,j]) ebar_k
    Fc[n:, n:, n:] = np.conj(C)
    # antisymmetric fill for the mixed block
    Fc[:, n:, :n] = -Fc[:, :n, n:].transpose(0, 2, 1)
    # change of basis: real column p in terms of complex basis entries a
    M = np.zeros((m, m), dtype=complex)
    for i in range(n):
        M[2 * i, i] = 1 / np.sqrt(2.0)
        M[2 * i, n + i] = 1 / np.sqrt(2.0)
        M[2 * i + 1, i] = 1j / np.sqrt(2.0)
        M[2 * i + 1, n + i] = -1j / np.sqrt(2.0)
    # kernel: [b_p, b_q] = sum over complex pairs, then re-expressed over b
    G = np.einsum("cab,pa,qb->cpq", Fc, M, M)
    Minv = np.linalg.inv(M)
    f = np.einsum("cr,cpq->rpq", Minv, G)
    imag = float(np.max(np.abs(f.imag))) if f.size else 0.0
    scale = max(1.0, float(np.max(np.abs(f.real))))
    if imag > imag_tol * scale:
        raise ValueError("synthesized structure tensor is not real "
                         "(imag residual %.3e)" % imag)
    alg = RealLieAlgebra(f.real)
    J = standard_complex_structure(n)
    g = np.eye(m)
    return alg, J, g


def canonical_frame_columns(n):
    """Frame columns of the synthesized coordinates: e_i from the (2i-1, 2i) pair."""
    e = np.zeros((2 * n, n), dtype=complex)
    for i in range(n):
        e[2 * i, i] = 1 / np.sqrt(2.0)
        e[2 * i + 1, i] = -1j / np.sqrt(2.0)
    return e
