"""Unimodular algebras with a codimension-two abelian ideal: constructors,
canonical frames, case classification and structure checks.

Setup
-----
``a`` denotes the abelian ideal (dimension 2n-2), ``a_J = a ∩ J a`` its
largest J-invariant subspace (dimension 2n-4 when the ideal itself is not
J-invariant).  Two real unit vectors x, y complete a_J to the ideal and carry
the interesting geometry; ``delta = <Jx, y>`` measures the tilt of the pair.

The canonical unitary frame puts e_1 on x, e_2 on the tilted y direction and
e_3..e_n on a_J.  In that frame D splits per last index alpha in {1, 2} into

    D_alpha = [[E_alpha, 0], [V_alpha, Y_alpha]]   (rows i, columns j of D[j,i,alpha])

with 2x2 corner E, (n-2)x2 column block V and (n-2)x(n-2) tail Y.  The case
split of the constructors:

* NA family ("non-abelianizing": brackets escape the ideal): sigma != 0.
  Sub-tags Generic / HalfGeneric / Degenerate by which bracket containments
  fail, equivalently by which of b, c vanish.
* AB family (brackets stay in the ideal): sigma = 0, split by the rank r0 of
  the derived algebra modulo a_J (0, 1 with two parameter branches, or 2).
"""

from dataclasses import dataclass, field

import numpy as np

from ._linalg import random_unitary
from .lie_core import (RealLieAlgebra, Subspace, derived_subalgebra_span,
                       is_unimodular, validate_structure_constants,
                       verify_abelian_ideal)
from .complex_frames import (UnitaryFrame, algebra_from_structure_constants,
                             canonical_frame_columns, check_integrability)

SQ2 = np.sqrt(2.0)

NA_GENERIC = "NA_Generic"
NA_HALF_GENERIC = "NA_HalfGeneric"
NA_DEGENERATE = "NA_Degenerate"
AB_R0 = "AB_r0"
AB_R1_SUB2 = "AB_r1_sub2"
AB_R1_SUB3 = "AB_r1_sub3"
AB_R2 = "AB_r2"

CASE_TAGS = (NA_GENERIC, NA_HALF_GENERIC, NA_DEGENERATE,
             AB_R0, AB_R1_SUB2, AB_R1_SUB3, AB_R2)
NA_TAGS = (NA_GENERIC, NA_HALF_GENERIC, NA_DEGENERATE)
AB_TAGS = (AB_R0, AB_R1_SUB2, AB_R1_SUB3, AB_R2)


class Codim2ParamError(ValueError):
    """Raised when constructor parameters violate a named relation."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("parameter relations violated: " + "; ".join(self.violations))


class Codim2BuildError(RuntimeError):
    """Raised when a parameter set fails the structural checks at build time."""


class Codim2InputError(ValueError):
    """Raised when an (algebra, ideal, J, g) input violates a precondition."""


class UnsupportedCaseError(RuntimeError):
    """Raised for the rank-two family, which has no constructor."""


class GenerationExhausted(RuntimeError):
    """Raised when rejection sampling fails to produce a valid instance."""


# ---------------------------------------------------------------- parameters


@dataclass
class Codim2Params:
    """Scalar constants and block data for the codimension-two constructors.

    V1, V2 are (n-2, 2) complex blocks; Y1, Y2 are (n-2, n-2).  Missing block
    entries default to zero.
    """

    n: int
    case_tag: str
    a: float = 0.0
    b: float = 0.0
    c: float = 0.0
    cp: float = 0.0
    dp: float = 0.0
    sigma: float = 0.0
    delta: float = 0.0
    V1: np.ndarray = None
    V2: np.ndarray = None
    Y1: np.ndarray = None
    Y2: np.ndarray = None

    def __post_init__(self):
        k = self.n - 2
        if self.V1 is None:
            self.V1 = np.zeros((k, 2), dtype=complex)
        if self.V2 is None:
            self.V2 = np.zeros((k, 2), dtype=complex)
        if self.Y1 is None:
            self.Y1 = np.zeros((k, k), dtype=complex)
        if self.Y2 is None:
            self.Y2 = np.zeros((k, k), dtype=complex)
        self.V1 = np.asarray(self.V1, dtype=complex)
        self.V2 = np.asarray(self.V2, dtype=complex)
        self.Y1 = np.asarray(self.Y1, dtype=complex)
        self.Y2 = np.asarray(self.Y2, dtype=complex)

    @property
    def delta_prime(self):
        return float(np.sqrt(1.0 - self.delta ** 2))

    @property
    def t(self):
        return 1j * self.delta / self.delta_prime

    def validate(self, rtol=1e-10):
        bad = []
        if self.n < 3:
            bad.append("n must be at least 3")
        if self.case_tag not in CASE_TAGS:
            bad.append("unknown case tag %r" % (self.case_tag,))
        if not abs(self.delta) < 1.0:
            bad.append("delta must lie in (-1, 1)")
        k = self.n - 2
        for name, arr, shape in (("V1", self.V1, (k, 2)), ("V2", self.V2, (k, 2)),
                                 ("Y1", self.Y1, (k, k)), ("Y2", self.Y2, (k, k))):
            if arr.shape != shape:
                bad.append("%s must have shape %r" % (name, shape))
        if bad:
            raise Codim2ParamError(bad)
        a, b, c, cp, dp, s = self.a, self.b, self.c, self.cp, self.dp, self.sigma
        scale = 1.0 + max(abs(a), abs(b), abs(c), abs(cp), abs(dp), abs(s))
        tol = rtol * scale * scale
        if self.case_tag in NA_TAGS:
            if abs(s) <= tol:
                bad.append("sigma must be nonzero for the NA family")
            if abs(a * a + b * c) > tol:
                bad.append("a^2 + b c = 0")
            if abs(b * cp + a * (c + s)) > tol:
                bad.append("b c' = -a (c + sigma)")
            if abs(b * dp - (2 * a * a + b * c - 2 * b * s)) > tol:
                bad.append("b d' = 2 a^2 + b c - 2 b sigma")
            if abs(2 * a * cp + c * dp - c * c) > tol:
                bad.append("2 a c' + c d' = c^2")
            if self.case_tag == NA_GENERIC and abs(b) <= tol:
                bad.append("generic tag requires b != 0")
            if self.case_tag == NA_HALF_GENERIC:
                if abs(a) > tol or abs(b) > tol:
                    bad.append("half-generic tag requires a = b = 0")
                if abs(c) <= tol:
                    bad.append("half-generic tag requires c != 0")
            if self.case_tag == NA_DEGENERATE and max(abs(a), abs(b), abs(c)) > tol:
                bad.append("degenerate tag requires a = b = c = 0")
        elif self.case_tag in AB_TAGS:
            if abs(s) > tol:
                bad.append("sigma must vanish for the AB family")
            if self.case_tag == AB_R0:
                if max(abs(a), abs(b), abs(c), abs(cp), abs(dp)) > tol:
                    bad.append("rank-0 tag requires a = b = c = c' = d' = 0")
            elif self.case_tag == AB_R1_SUB2:
                if abs(cp) > tol:
                    bad.append("sub2 tag requires c' = 0")
                if abs(b) <= tol:
                    bad.append("sub2 tag requires b != 0")
                if max(abs(a), abs(c), abs(dp)) > tol:
                    bad.append("sub2 tag requires b to be the only nonzero constant")
            elif self.case_tag == AB_R1_SUB3:
                if abs(cp) <= tol:
                    bad.append("sub3 tag requires c' != 0")
                else:
                    if abs(a - c * c / cp) > tol:
                        bad.append("sub3 tag requires a = c^2 / c'")
                    if abs(b + c ** 3 / cp ** 2) > tol:
                        bad.append("sub3 tag requires b = -c^3 / c'^2")
                    if abs(dp + c) > tol:
                        bad.append("sub3 tag requires d' = -c")
            elif self.case_tag == AB_R2:
                raise UnsupportedCaseError("no constructor: r0 = 2 unsupported")
        if bad:
            raise Codim2ParamError(bad)


@dataclass
class Codim2Blocks:
    """Frame blocks and derived scalars of an admissible frame."""

    E1: np.ndarray
    E2: np.ndarray
    V1: np.ndarray
    V2: np.ndarray
    Y1: np.ndarray
    Y2: np.ndarray
    delta: float
    a: float = 0.0
    b: float = 0.0
    c: float = 0.0
    cp: float = 0.0
    dp: float = 0.0
    sigma: float = 0.0

    @property
    def delta_prime(self):
        return float(np.sqrt(1.0 - self.delta ** 2))

    @property
    def t(self):
        return 1j * self.delta / self.delta_prime

    @property
    def q(self):
        return 1j * self.sigma / (SQ2 * self.delta_prime)

    @property
    def qp(self):
        return (1j * self.cp + 2 * self.sigma * self.delta) / (SQ2 * self.delta_prime ** 2)

    @property
    def qpp(self):
        return (1j * self.cp + 3 * self.sigma * self.delta) / (SQ2 * self.delta_prime ** 2)

    @property
    def kappa(self):
        return 1j * self.b * self.delta_prime / SQ2

    @property
    def mu(self):
        return 1j * self.cp - self.c * self.delta

    @property
    def lam(self):
        return float(np.sqrt(self.cp ** 2 + self.c ** 2))

    @property
    def n(self):
        return self.V1.shape[0] + 2


def blocks_from_params(params):
    """E blocks from the closed component formulas, V/Y copied through."""
    a, b, c, cp, dp, s = (params.a, params.b, params.c, params.cp,
                          params.dp, params.sigma)
    d = params.delta
    dpr = params.delta_prime
    E1 = np.array([
        [(b * d + 1j * a) / SQ2, (-2 * a * d + 1j * c + 1j * b * d * d) / (SQ2 * dpr)],
        [1j * b * dpr / SQ2, -(b * d + 1j * a) / SQ2],
    ], dtype=complex)
    E2 = np.array([
        [1j * (c - s - b * d * d) / (SQ2 * dpr),
         (1j * (cp + a * d * d) + d * (dp + b * d * d + s)) / (SQ2 * dpr ** 2)],
        [(b * d - 1j * a) / SQ2, 1j * (dp + b * d * d) / (SQ2 * dpr)],
    ], dtype=complex)
    return Codim2Blocks(E1=E1, E2=E2, V1=params.V1.copy(), V2=params.V2.copy(),
                        Y1=params.Y1.copy(), Y2=params.Y2.copy(), delta=d,
                        a=a, b=b, c=c, cp=cp, dp=dp, sigma=s)


def block_relation_residuals(blocks):
    """Residuals of the bracket identities tying the E, V, Y blocks together."""
    E1, E2, V1, V2, Y1, Y2 = (blocks.E1, blocks.E2, blocks.V1, blocks.V2,
                              blocks.Y1, blocks.Y2)
    q = blocks.q
    t = blocks.t
    r = {}
    r["Jacobi1_E"] = float(np.max(np.abs(E1 @ E2 - E2 @ E1 - q * E1)))
    if Y1.size:
        r["Jacobi1_Y"] = float(np.max(np.abs(Y1 @ Y2 - Y2 @ Y1 - q * Y1)))
        r["Jacobi2_V"] = float(np.max(np.abs(
            V1 @ E2 + Y1 @ V2 - V2 @ E1 - Y2 @ V1 - q * V1)))
    else:
        r["Jacobi1_Y"] = 0.0
        r["Jacobi2_V"] = 0.0
    tr1 = np.trace(Y1) if Y1.size else 0.0
    tr2 = np.trace(Y2) if Y2.size else 0.0
    want = 1j * (2 * blocks.sigma - blocks.dp - blocks.c) / (SQ2 * blocks.delta_prime)
    r["trace_unimodular"] = float(abs(tr2 - np.conj(tr2) + 2 * t * np.conj(tr1) - want))
    return r


def structure_tensors_from_blocks(blocks):
    """Assemble the full C, D tensors of the admissible frame from the blocks."""
    n = blocks.n
    k = n - 2
    D = np.zeros((n, n, n), dtype=complex)
    for alpha, (E, V, Y) in enumerate(((blocks.E1, blocks.V1, blocks.Y1),
                                       (blocks.E2, blocks.V2, blocks.Y2))):
        Dmat = np.zeros((n, n), dtype=complex)
        Dmat[:2, :2] = E
        if k:
            Dmat[2:, :2] = V
            Dmat[2:, 2:] = Y
        D[:, :, alpha] = Dmat.T
    t = blocks.t
    C = np.zeros((n, n, n), dtype=complex)
    Dc = np.conj(D)
    for i in range(2, n):
        C[:, 0, i] = Dc[i, :, 0]
        C[:, 1, i] = Dc[i, :, 1] - 2 * t * Dc[i, :, 0]
    C[:, 0, 1] = Dc[1, :, 0] - Dc[0, :, 1] + 2 * t * Dc[0, :, 0]
    # antisymmetric fill of the lower index pair
    C = C - C.transpose(0, 2, 1)
    return C, D


# ---------------------------------------------------------------- instances


@dataclass
class Codim2Instance:
    alg: RealLieAlgebra
    J: np.ndarray
    g: np.ndarray
    ideal: Subspace
    frame: UnitaryFrame
    blocks: Codim2Blocks
    params: Codim2Params


def canonical_ideal_subspace(n, delta):
    """Ideal basis in the synthesized coordinates: x, the tilted y, then a_J."""
    m = 2 * n
    dpr = float(np.sqrt(1.0 - delta ** 2))
    cols = np.zeros((m, m - 2))
    cols[0, 0] = 1.0
    cols[1, 1] = delta
    cols[2, 1] = dpr
    for j in range(4, m):
        cols[j, j - 2] = 1.0
    return Subspace(m, cols)


def _build_instance(params, check_tol=1e-9):
    params.validate()
    blocks = blocks_from_params(params)
    rel = block_relation_residuals(blocks)
    scale = 1.0 + max(float(np.max(np.abs(b))) if np.asarray(b).size else 0.0
                      for b in (blocks.E1, blocks.E2, blocks.V1, blocks.V2,
                                blocks.Y1, blocks.Y2))
    bad = [name for name, v in rel.items() if v > 1e-8 * scale * scale]
    if bad:
        raise Codim2BuildError("block relations violated: " +
                               ", ".join("%s=%.3e" % (bn, rel[bn]) for bn in bad))
    C, D = structure_tensors_from_blocks(blocks)
    alg, J, g = algebra_from_structure_constants(C, D)
    rep = validate_structure_constants(alg)
    if rep["jacobi_residual"] > check_tol * scale * scale:
        raise Codim2BuildError("structure tensor fails the Jacobi identity "
                               "(residual %.3e)" % rep["jacobi_residual"])
    frame = UnitaryFrame(alg, J, g, canonical_frame_columns(params.n))
    cd_res = max(float(np.max(np.abs(frame.C - C))), float(np.max(np.abs(frame.D - D))))
    if cd_res > 1e-10 * scale:
        raise Codim2BuildError("frame round trip mismatch %.3e" % cd_res)
    ideal = canonical_ideal_subspace(params.n, params.delta)
    chk = verify_abelian_ideal(alg, ideal, tol=1e-9 * scale * scale)
    if not (chk["is_ideal"] and chk["is_abelian"]):
        raise Codim2BuildError("canonical subspace is not an abelian ideal "
                               "(residuals %.3e / %.3e)" %
                               (chk["ideal_residual"], chk["abelian_residual"]))
    uni = is_unimodular(alg, tol=1e-9 * scale * scale)
    if not uni["flag"]:
        raise Codim2BuildError("algebra is not unimodular (residual %.3e)" % uni["residual"])
    return Codim2Instance(alg=alg, J=J, g=g, ideal=ideal, frame=frame,
                          blocks=blocks, params=params)


def build_case1(params):
    """Constructor for the NA family (sigma != 0)."""
    if params.case_tag not in NA_TAGS:
        raise Codim2ParamError(["build_case1 expects an NA tag, got %r" % params.case_tag])
    return _build_instance(params)


def build_case2(params):
    """Constructor for the AB family (sigma = 0)."""
    if params.case_tag == AB_R2:
        raise UnsupportedCaseError("no constructor: r0 = 2 unsupported")
    if params.case_tag not in AB_TAGS:
        raise Codim2ParamError(["build_case2 expects an AB tag, got %r" % params.case_tag])
    return _build_instance(params)


# ---------------------------------------------------- admissible frames


def _g_ip(g, u, v):
    return float(np.asarray(u) @ g @ np.asarray(v))


def _g_orthonormalize(g, cols, drop_tol=1e-8):
    out = []
    for v in np.asarray(cols, dtype=float).T:
        w = v.copy()
        for _ in range(2):
            for u in out:
                w = w - _g_ip(g, w, u) * u
        nrm = np.sqrt(max(_g_ip(g, w, w), 0.0))
        if nrm > drop_tol:
            out.append(w / nrm)
    return np.column_stack(out) if out else np.zeros((np.asarray(cols).shape[0], 0))


def _g_complement_line(g, inside, of_cols):
    """g-orthogonal complement of span(of_cols) inside span(inside), expected
    one-dimensional; returns a g-unit vector."""
    B = inside
    if of_cols.shape[1] == 0:
        M = np.zeros((0, B.shape[1]))
    else:
        M = of_cols.T @ g @ B
    _, s, Vh = np.linalg.svd(M) if M.size else (None, np.zeros(0), np.eye(B.shape[1]))
    r = int(np.sum(s > 1e-10 * (s[0] if s.size and s[0] > 0 else 1.0)))
    null = Vh[r:].T
    if null.shape[1] != 1:
        raise Codim2InputError("expected a one-dimensional complement, got %d"
                               % null.shape[1])
    v = B @ null[:, 0]
    return v / np.sqrt(_g_ip(g, v, v))


def _fix_sign_first_nonzero(v, tol=1e-12):
    for val in v:
        if abs(val) > tol:
            return v if val > 0 else -v
    return v


@dataclass
class CaseSubspaces:
    a_ideal: Subspace
    aJ: Subspace
    aprime: Subspace
    b_frak: Subspace
    gprime: Subspace
    na: bool


def _precondition_subspaces(alg, a_ideal, J, g, tol=1e-8):
    m = alg.dim
    if m % 2 != 0:
        raise Codim2InputError("algebra dimension must be even")
    chk = verify_abelian_ideal(alg, a_ideal, tol=tol)
    if not chk["is_ideal"]:
        raise Codim2InputError("subspace is not an ideal (residual %.3e)"
                               % chk["ideal_residual"])
    if not chk["is_abelian"]:
        raise Codim2InputError("ideal is not abelian (residual %.3e)"
                               % chk["abelian_residual"])
    if a_ideal.dim != m - 2:
        raise Codim2InputError("ideal must have codimension two, got %d"
                               % (m - a_ideal.dim))
    Ja = a_ideal.apply(J)
    aJ = a_ideal.intersect(Ja)
    if aJ.dim == a_ideal.dim:
        raise Codim2InputError("ideal is J-invariant: the construction requires "
                               "J a != a")
    if aJ.dim != m - 4:
        raise Codim2InputError("a ∩ J a has unexpected dimension %d" % aJ.dim)
    gprime = derived_subalgebra_span(alg)
    na = a_ideal.containment_residual(gprime) > max(tol, 1e-8)
    aprime = a_ideal.add(gprime)
    b_frak = a_ideal.intersect(aprime.apply(J))
    return CaseSubspaces(a_ideal=a_ideal, aJ=aJ, aprime=aprime,
                         b_frak=b_frak, gprime=gprime, na=na)


def _select_xy(alg, sub, J, g, tol=1e-8):
    """The distinguished real pair (x, y) completing a_J inside the ideal."""
    m = alg.dim
    aJ_onb_g = _g_orthonormalize(g, sub.aJ.onb)
    if sub.na:
        if sub.b_frak.dim != m - 3 or sub.aprime.dim != m - 1:
            raise Codim2InputError("NA chain dimensions are off: dim b = %d, "
                                   "dim a' = %d" % (sub.b_frak.dim, sub.aprime.dim))
        x = _g_complement_line(g, sub.b_frak.onb, aJ_onb_g)
        y = _g_complement_line(g, sub.a_ideal.onb,
                               _g_orthonormalize(g, sub.b_frak.onb))
    else:
        # x, y span the g-complement of a_J in a; x must kill the trace
        # functional v -> sum_k <[Jv, w_k], w_k>
        comp = []
        for kcol in range(m):
            b = np.zeros(m)
            b[kcol] = 1.0
            pa = sub.a_ideal.onb @ (sub.a_ideal.onb.T @ b)
            w = pa - aJ_onb_g @ (aJ_onb_g.T @ g @ pa)
            for u in comp:
                w = w - _g_ip(g, w, u) * u
            nrm = np.sqrt(max(_g_ip(g, w, w), 0.0))
            if nrm > 1e-8:
                comp.append(w / nrm)
            if len(comp) == 2:
                break
        if len(comp) != 2:
            raise Codim2InputError("failed to span the complement of a_J in a")
        W = np.column_stack(comp)
        # trace functional of ad_{Jv} projected to the complement
        ell = np.zeros(2)
        for j in range(2):
            Jv = J @ W[:, j]
            tr = 0.0
            for kcol in range(2):
                br = alg.bracket(Jv, W[:, kcol])
                tr += _g_ip(g, br, W[:, kcol])
            ell[j] = tr
        if np.linalg.norm(ell) > 1e-9 * (1.0 + float(np.max(np.abs(alg.f)))):
            kern = np.array([-ell[1], ell[0]])
            kern = kern / np.linalg.norm(kern)
            x = W @ kern
            x = x / np.sqrt(_g_ip(g, x, x))
        else:
            # trace functional vanishes identically; fall back to the first
            # standard-basis direction inside the complement
            x = W[:, 0]
        y = _g_complement_line(g, W, x[:, None])
    x = _fix_sign_first_nonzero(x)
    delta = _g_ip(g, J @ x, y)
    if abs(delta) > 1e-12:
        if delta < 0:
            y = -y
            delta = -delta
    else:
        y = _fix_sign_first_nonzero(y)
        delta = _g_ip(g, J @ x, y)
    if abs(delta) >= 1.0 - 1e-12:
        raise Codim2InputError("degenerate pair: |<Jx, y>| is not below one")
    return x, y, float(delta)


@dataclass
class AdmissibleFrameResult:
    frame: UnitaryFrame
    delta: float
    blocks: Codim2Blocks
    x: np.ndarray
    y: np.ndarray
    subspaces: CaseSubspaces


def admissible_frame(alg, a_ideal, J, g, tol=1e-8):
    """Canonical unitary frame adapted to the ideal.

    e_1 comes from x, e_2 from the tilted y, e_3..e_n from a_J; sign and order
    conventions make the result deterministic.  Raises `Codim2InputError` when
    the input violates a precondition (non-ideal, wrong codimension,
    J-invariant ideal).
    """
    J = np.asarray(J, dtype=float)
    g = np.asarray(g, dtype=float)
    sub = _precondition_subspaces(alg, a_ideal, J, g, tol=tol)
    x, y, delta = _select_xy(alg, sub, J, g, tol=tol)
    m = alg.dim
    n = m // 2
    dpr = float(np.sqrt(1.0 - delta ** 2))
    e1 = (x - 1j * (J @ x)) / SQ2
    ycol = (y - 1j * (J @ y)) / SQ2
    e2 = (ycol - 1j * delta * e1) / dpr
    cols = [e1, e2]
    PaJ = sub.aJ.onb @ sub.aJ.onb.T
    for kcol in range(m):
        if len(cols) == n:
            break
        b = np.zeros(m)
        b[kcol] = 1.0
        v = PaJ @ b
        if np.linalg.norm(v) < 1e-8:
            continue
        w = (v - 1j * (J @ v)) / SQ2
        for _ in range(2):
            for u in cols:
                w = w - (w @ g @ np.conj(u)) * u
        nrm = np.sqrt(max((w @ g @ np.conj(w)).real, 0.0))
        if nrm > 1e-8:
            cols.append(w / nrm)
    if len(cols) != n:
        raise Codim2InputError("failed to assemble the adapted frame")
    frame = UnitaryFrame(alg, J, g, np.column_stack(cols), tol=max(tol, 1e-8))
    blocks = _blocks_from_frame(alg, frame, J, g, x, y, delta)
    return AdmissibleFrameResult(frame=frame, delta=delta, blocks=blocks,
                                 x=x, y=y, subspaces=sub)


def frame_blocks_EVY(frame):
    """E, V, Y blocks read off a frame's D tensor (no scalar recovery)."""
    D = frame.D
    E1 = D[:2, :2, 0].T.copy()
    E2 = D[:2, :2, 1].T.copy()
    V1 = D[:2, 2:, 0].T.copy()
    V2 = D[:2, 2:, 1].T.copy()
    Y1 = D[2:, 2:, 0].T.copy()
    Y2 = D[2:, 2:, 1].T.copy()
    return E1, E2, V1, V2, Y1, Y2


def _blocks_from_frame(alg, frame, J, g, x, y, delta):
    E1, E2, V1, V2, Y1, Y2 = frame_blocks_EVY(frame)
    Jx = J @ x
    Jy = J @ y
    br_xx = alg.bracket(Jx, x)
    br_xy = alg.bracket(Jx, y)
    br_yx = alg.bracket(Jy, x)
    br_yy = alg.bracket(Jy, y)
    a = _g_ip(g, br_xx, x)
    b = _g_ip(g, br_xx, y)
    c = _g_ip(g, br_xy, x)
    sigma = c - _g_ip(g, br_yx, x)
    cp = _g_ip(g, br_yy, x)
    dp = _g_ip(g, br_yy, y)
    return Codim2Blocks(E1=E1, E2=E2, V1=V1, V2=V2, Y1=Y1, Y2=Y2, delta=delta,
                        a=a, b=b, c=c, cp=cp, dp=dp, sigma=sigma)


# ---------------------------------------------------------- classification


@dataclass
class CaseInfo:
    tag: str
    na: bool
    r0: int = None
    dims: dict = field(default_factory=dict)
    blocks: Codim2Blocks = None
    delta: float = None


def classify_case(alg, a_ideal, J, g, tol=1e-7):
    """Case tag of an admissible input, via bracket containments and the rank
    of the derived algebra modulo a_J."""
    J = np.asarray(J, dtype=float)
    g = np.asarray(g, dtype=float)
    sub = _precondition_subspaces(alg, a_ideal, J, g)
    dims = {"a": sub.a_ideal.dim, "aJ": sub.aJ.dim, "aprime": sub.aprime.dim,
            "b": sub.b_frak.dim, "gprime": sub.gprime.dim}
    adm = admissible_frame(alg, a_ideal, J, g)
    if sub.na:
        Bb = sub.b_frak.onb
        JB = J @ Bb
        span_bb = Subspace.from_span(alg.dim, alg.bracket_columns(JB, Bb))
        if sub.b_frak.containment_residual(span_bb) > tol:
            tag = NA_GENERIC
        else:
            span_ba = Subspace.from_span(
                alg.dim, alg.bracket_columns(JB, sub.a_ideal.onb))
            if sub.aJ.containment_residual(span_ba) > tol:
                tag = NA_HALF_GENERIC
            else:
                tag = NA_DEGENERATE
        return CaseInfo(tag=tag, na=True, r0=None, dims=dims,
                        blocks=adm.blocks, delta=adm.delta)
    r0 = sub.aJ.add(sub.gprime).dim - sub.aJ.dim
    if r0 == 0:
        tag = AB_R0
    elif r0 == 2:
        tag = AB_R2
    else:
        bl = adm.blocks
        pscale = 1.0 + max(abs(bl.a), abs(bl.b), abs(bl.c), abs(bl.cp), abs(bl.dp))
        tag = AB_R1_SUB3 if abs(bl.cp) > tol * pscale else AB_R1_SUB2
    return CaseInfo(tag=tag, na=False, r0=int(r0), dims=dims,
                    blocks=adm.blocks, delta=adm.delta)


# ------------------------------------------------------------- verification


def verify_lemma2(frame, blocks, t, tol=1e-9):
    """Residuals of the structural relations an admissible frame must satisfy:
    vanishing pattern, C-from-D relations, the E component formulas and the
    block bracket identities.  Returns a dict of named residuals plus "ok"."""
    C, D = frame.C, frame.D
    n = frame.n
    Dc = np.conj(D)
    r = {}
    r["vanish_C_tail"] = float(np.max(np.abs(C[:, 2:, 2:]))) if n > 2 else 0.0
    r["vanish_D_tail"] = float(np.max(np.abs(D[:, :, 2:]))) if n > 2 else 0.0
    r["vanish_C_cross"] = float(np.max(np.abs(C[:2, :2, 2:]))) if n > 2 else 0.0
    r["vanish_D_cross"] = float(np.max(np.abs(D[2:, :2, :2]))) if n > 2 else 0.0
    rel1 = rel2 = 0.0
    for i in range(2, n):
        rel1 = max(rel1, float(np.max(np.abs(C[:, 0, i] - Dc[i, :, 0]))))
        rel2 = max(rel2, float(np.max(np.abs(
            C[:, 1, i] - Dc[i, :, 1] + 2 * t * Dc[i, :, 0]))))
    r["C_from_D_1"] = rel1
    r["C_from_D_2"] = rel2
    r["C_from_D_12"] = float(np.max(np.abs(
        C[:, 0, 1] - (Dc[1, :, 0] - Dc[0, :, 1] + 2 * t * Dc[0, :, 0]))))
    r["C12_q"] = float(abs(C[0, 0, 1] + blocks.q))
    r["C12_zero"] = float(abs(C[1, 0, 1]))
    E1, E2, V1, V2, Y1, Y2 = frame_blocks_EVY(frame)
    formula = blocks_from_params(Codim2Params(
        n=n, case_tag=NA_GENERIC if abs(blocks.sigma) > 0 else AB_R0,
        a=blocks.a, b=blocks.b, c=blocks.c, cp=blocks.cp, dp=blocks.dp,
        sigma=blocks.sigma, delta=blocks.delta,
        V1=np.zeros((n - 2, 2)), V2=np.zeros((n - 2, 2)),
        Y1=np.zeros((n - 2, n - 2)), Y2=np.zeros((n - 2, n - 2))))
    r["E_formula"] = float(max(np.max(np.abs(E1 - formula.E1)),
                               np.max(np.abs(E2 - formula.E2))))
    r["blocks_match"] = float(max(
        np.max(np.abs(E1 - blocks.E1)), np.max(np.abs(E2 - blocks.E2)),
        np.max(np.abs(V1 - blocks.V1)) if V1.size else 0.0,
        np.max(np.abs(V2 - blocks.V2)) if V2.size else 0.0,
        np.max(np.abs(Y1 - blocks.Y1)) if Y1.size else 0.0,
        np.max(np.abs(Y2 - blocks.Y2)) if Y2.size else 0.0))
    r.update(block_relation_residuals(blocks))
    r["ok"] = bool(all(v <= tol for k, v in r.items() if k != "ok"))
    return r


# ---------------------------------------------------------------- generators


def _crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def _sample_delta(rng):
    if rng.random() < 0.25:
        return 0.0
    return float(rng.uniform(0.05, 0.8))


def _sample_na_scalars(rng, tag):
    sigma = float(rng.choice([-1.0, 1.0]) * rng.uniform(0.5, 1.5))
    if tag == NA_GENERIC:
        b = float(rng.choice([-1.0, 1.0]) * rng.uniform(0.5, 1.5))
        a = float(rng.uniform(-1.0, 1.0))
        c = -a * a / b
        cp = -a * (c + sigma) / b
        dp = -c - 2 * sigma
        return a, b, c, cp, dp, sigma
    if tag == NA_HALF_GENERIC:
        # normal form with c = d' = sigma keeps the torsion witness closed form
        c = sigma
        cp = 0.0 if rng.random() < 0.4 else float(rng.uniform(-1.0, 1.0))
        return 0.0, 0.0, c, cp, sigma, sigma
    # degenerate: a = b = c = 0, d' = 2 sigma
    cp = 0.0 if rng.random() < 0.4 else float(rng.uniform(-1.0, 1.0))
    return 0.0, 0.0, 0.0, cp, 2.0 * sigma, sigma


def _shift_imag_trace(vals, target):
    """Uniform imaginary shift so that Im(sum(vals)) == target."""
    vals = np.asarray(vals, dtype=complex)
    if vals.size == 0:
        return vals
    shift = (target - float(np.sum(vals.imag))) / vals.size
    return vals + 1j * shift


def _solve_V1(E1, E2, Y1, Y2, V2, q, rtol=1e-9):
    """Least-squares solve of V1 E2 - (Y2 + q) V1 = V2 E1 - Y1 V2."""
    k = Y1.shape[0]
    R = V2 @ E1 - Y1 @ V2
    M = np.kron(E2.T, np.eye(k)) - np.kron(np.eye(2), Y2 + q * np.eye(k))
    vec, *_ = np.linalg.lstsq(M, R.flatten(order="F"), rcond=None)
    resid = float(np.linalg.norm(M @ vec - R.flatten(order="F")))
    if resid > rtol * (1.0 + float(np.linalg.norm(R))):
        return None
    return vec.reshape((k, 2), order="F")


def _sample_na(rng, tag, n):
    a, b, c, cp, dp, sigma = _sample_na_scalars(rng, tag)
    delta = _sample_delta(rng)
    dpr = float(np.sqrt(1.0 - delta ** 2))
    q = 1j * sigma / (SQ2 * dpr)
    k = n - 2
    W = random_unitary(rng, k)
    use_nilpotent = k >= 2 and rng.random() < 0.6
    if use_nilpotent:
        N = np.zeros((k, k), dtype=complex)
        N[0, 1] = float(rng.uniform(0.5, 1.5))
        Y1 = W @ N @ W.conj().T
    else:
        Y1 = np.zeros((k, k), dtype=complex)
    mu = 0.6 * _crandn(rng, k)
    if use_nilpotent:
        mu[1] = mu[0] + q
    target = (2.0 * sigma - dp - c) / (2.0 * SQ2 * dpr)
    mu = _shift_imag_trace(mu, target)
    if use_nilpotent and abs(mu[1] - mu[0] - q) > 1e-12:
        return None
    Y2 = W @ np.diag(mu) @ W.conj().T
    params = Codim2Params(n=n, case_tag=tag, a=a, b=b, c=c, cp=cp, dp=dp,
                          sigma=sigma, delta=delta, Y1=Y1, Y2=Y2)
    blk = blocks_from_params(params)
    V2 = 0.6 * _crandn(rng, k, 2) if rng.random() < 0.8 else np.zeros((k, 2), dtype=complex)
    V1 = _solve_V1(blk.E1, blk.E2, Y1, Y2, V2, q)
    if V1 is None:
        return None
    params.V1 = V1
    params.V2 = V2
    return params


def _sample_ab_r0(rng, n):
    delta = _sample_delta(rng)
    dpr = float(np.sqrt(1.0 - delta ** 2))
    t = 1j * delta / dpr
    k = n - 2
    W = random_unitary(rng, k)
    lam1 = np.array([0.0 if rng.random() < 0.3 else
                     float(rng.choice([-1.0, 1.0]) * rng.uniform(0.4, 1.4))
                     for _ in range(k)])
    lam2 = np.array([0.0 if rng.random() < 0.3 else
                     float(rng.choice([-1.0, 1.0]) * rng.uniform(0.4, 1.4))
                     for _ in range(k)])
    Y1 = W @ np.diag(lam1 + 0j) @ W.conj().T
    Y2 = W @ np.diag(lam2 + 0j) @ W.conj().T - t * Y1
    # compatible coefficient data: hatted Y2 eigenvalue is lam2 - t lam1
    u1h = np.zeros(k, dtype=complex)
    u2h = np.zeros(k, dtype=complex)
    for i in range(k):
        if abs(lam1[i]) > 1e-12:
            u1h[i] = _crandn(rng)
            u2h[i] = (lam2[i] - t * lam1[i]) * u1h[i] / lam1[i]
        elif abs(lam2[i]) > 1e-12:
            u2h[i] = _crandn(rng)
        else:
            u1h[i] = _crandn(rng)
            u2h[i] = _crandn(rng)
    u1 = W @ u1h
    u2 = W @ u2h
    V1 = np.column_stack([-1j * Y1.conj().T @ u1, -1j * Y2.conj().T @ u1])
    V2 = np.column_stack([-1j * Y1.conj().T @ u2, -1j * Y2.conj().T @ u2])
    if np.linalg.norm(V1) + np.linalg.norm(V2) < 0.2:
        return None
    return Codim2Params(n=n, case_tag=AB_R0, delta=delta,
                        V1=V1, V2=V2, Y1=Y1, Y2=Y2)


def _sample_ab_r1(rng, tag, n, attempt):
    delta = _sample_delta(rng)
    dpr = float(np.sqrt(1.0 - delta ** 2))
    t = 1j * delta / dpr
    if tag == AB_R1_SUB2:
        b = float(rng.choice([-1.0, 1.0]) * rng.uniform(0.7, 1.7))
        a = c = cp = dp = 0.0
    else:
        cp = float(rng.choice([-1.0, 1.0]) * rng.uniform(0.7, 1.7))
        c = 0.0 if rng.random() < 0.3 else float(rng.uniform(-1.2, 1.2))
        a = c * c / cp
        b = -c ** 3 / cp ** 2
        dp = -c
    k = n - 2
    params = Codim2Params(n=n, case_tag=tag, a=a, b=b, c=c, cp=cp, dp=dp,
                          sigma=0.0, delta=delta)
    blk = blocks_from_params(params)
    if attempt >= 80 or k == 0:
        return params
    W = random_unitary(rng, k)
    rho1 = 0.7 * _crandn(rng, k)
    rho2 = np.array([rng.choice([-1.0, 1.0]) * rng.uniform(0.4, 1.2)
                     for _ in range(k)]) + 0.4j * rng.standard_normal(k)
    # unimodular trace pin: 2i Im(tr Y2) + 2t conj(tr Y1) = 0
    if abs(delta) > 1e-12:
        rho1 = rho1 - 1j * np.sum(rho1.imag) / k
        tau = delta / dpr
        rho2 = _shift_imag_trace(rho2, -tau * float(np.sum(rho1.real)))
    else:
        rho2 = _shift_imag_trace(rho2, 0.0)
    if np.min(np.abs(rho2)) < 0.25:
        return None
    Y1 = W @ np.diag(rho1) @ W.conj().T
    Y2 = W @ np.diag(rho2) @ W.conj().T
    if attempt >= 60:
        params.Y1 = Y1
        params.Y2 = Y2
        return params
    V2 = 0.6 * _crandn(rng, k, 2)
    V1 = _solve_V1(blk.E1, blk.E2, Y1, Y2, V2, 0.0)
    if V1 is None:
        return None
    params.Y1 = Y1
    params.Y2 = Y2
    params.V1 = V1
    params.V2 = V2
    return params


def gen_instance(case_tag, n=3, seed=0, max_tries=100):
    """Random valid instance of the requested case.

    Rejection sampling: candidate parameters are drawn, the closed-form blocks
    assembled, and the constructor's full structural validation acts as the
    accept/reject step.  Raises `UnsupportedCaseError` for the rank-two family
    and `GenerationExhausted` when no candidate passes.
    """
    if case_tag == AB_R2:
        raise UnsupportedCaseError("no constructor: r0 = 2 unsupported")
    if case_tag not in CASE_TAGS:
        raise Codim2ParamError(["unknown case tag %r" % (case_tag,)])
    if n < 3:
        raise Codim2ParamError(["n must be at least 3"])
    rng = np.random.default_rng(seed)
    for attempt in range(max_tries):
        if case_tag in NA_TAGS:
            params = _sample_na(rng, case_tag, n)
        elif case_tag == AB_R0:
            params = _sample_ab_r0(rng, n)
        else:
            params = _sample_ab_r1(rng, case_tag, n, attempt)
        if params is None:
            continue
        try:
            if case_tag in NA_TAGS:
                return build_case1(params)
            return build_case2(params)
        except (Codim2ParamError, Codim2BuildError):
            continue
    raise GenerationExhausted("no valid %s instance after %d tries"
                              % (case_tag, max_tries))
