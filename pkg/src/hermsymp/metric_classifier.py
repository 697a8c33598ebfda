"""Metric type flags and the skew-form feasibility solver.

The central question: given a unitary frame with bracket tensors C, D, does a
skew-symmetric complex matrix S exist making

    Omega = sum_{i<k} S_ik phi_i ^ phi_k  +  i sum_i phi_i ^ phibar_i  +  conj

closed?  Closure is equivalent to the complex-linear system

    (1) sum_r ( S_ri C[r,j,k] + S_rj C[r,k,i] + S_rk C[r,i,j] ) = 0
    (2) sum_r ( S_rk conj(D[i,r,j]) - S_ri conj(D[k,r,j]) ) = -i T[j,i,k]

with T the torsion tensor.  The solver works on the stacked real form of the
packed strict upper triangle of S and reports the minimum-norm solution.
"""

from dataclasses import dataclass, field

import numpy as np

from ._linalg import lstsq_min_norm
from .complex_frames import InvariantForm, ce_differential, kahler_form, torsion_tensor

DEFAULT_TOL = 1e-9
HS_DEFAULT_TOL = 1e-8


@dataclass
class MetricFlags:
    kahler: bool
    pluriclosed: bool
    balanced: bool
    residuals: dict = field(default_factory=dict)


def fundamental_form_differential(frame):
    return ce_differential(kahler_form(frame.n), frame)


def classify_metric(frame, tol=DEFAULT_TOL):
    """Kahler / pluriclosed / balanced flags of the frame's metric.

    Kahler forces the other two flags (the residuals still report the direct
    computation).  For n = 1 the balanced condition coincides with Kahler.
    """
    n = frame.n
    dw = fundamental_form_differential(frame)
    r_k = dw.norm()
    # ddbar omega: (2,2) part of d applied to the (1,2) part of d omega
    r_p = ce_differential(dw.bidegree(1, 2), frame).bidegree(2, 2).norm()
    if n == 1:
        r_b = r_k
    else:
        wn = kahler_form(n)
        power = wn
        for _ in range(n - 2):
            power = power.wedge(wn)
        r_b = ce_differential(power, frame).norm()
    kahler = r_k <= tol
    return MetricFlags(
        kahler=bool(kahler),
        pluriclosed=bool(kahler or r_p <= tol),
        balanced=bool(kahler or r_b <= tol),
        residuals={"kahler": r_k, "pluriclosed": r_p, "balanced": r_b},
    )


# ------------------------------------------------------------ feasibility


@dataclass
class HSCertificate:
    """Witness of feasibility: skew S with the achieved residuals."""
    S: np.ndarray
    eq_residual: float
    closure_residual: float
    tol: float = HS_DEFAULT_TOL

    @property
    def feasible(self):
        return True


@dataclass
class HSInfeasible:
    """Report that no skew S satisfies the closure system within tol."""
    min_residual: float
    rhs_norm: float
    tol: float = HS_DEFAULT_TOL

    @property
    def feasible(self):
        return False


def _pack_index(n):
    pairs = [(i, k) for i in range(n) for k in range(i + 1, n)]
    where = {p: a for a, p in enumerate(pairs)}
    return pairs, where


def _skew_coeff(r, i, where):
    """Value of S[r, i] as (sign, packed position); None when r == i."""
    if r == i:
        return None
    if r < i:
        return 1.0, where[(r, i)]
    return -1.0, where[(i, r)]


def hs_solve(frame, tol=HS_DEFAULT_TOL):
    """Minimum-norm solve of the closure system over skew S.

    Feasible when the least-squares residual is at most ``tol`` relative to
    ``max(1, |rhs|)``; returns an `HSCertificate` or an `HSInfeasible` report.
    """
    C, D = frame.C, frame.D
    n = frame.n
    T = torsion_tensor(frame)
    Dc = np.conj(D)
    pairs, where = _pack_index(n)
    m = len(pairs)
    rows = []
    rhs = []
    # family (1): one row per i < j < k
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(j + 1, n):
                row = np.zeros(m, dtype=complex)
                for r in range(n):
                    for (idx, cc) in ((i, C[r, j, k]), (j, C[r, k, i]), (k, C[r, i, j])):
                        sc = _skew_coeff(r, idx, where)
                        if sc is not None and cc != 0:
                            row[sc[1]] += sc[0] * cc
                rows.append(row)
                rhs.append(0.0)
    # family (2): one row per i < k and every j
    for i in range(n):
        for k in range(i + 1, n):
            for j in range(n):
                row = np.zeros(m, dtype=complex)
                for r in range(n):
                    sc = _skew_coeff(r, k, where)
                    if sc is not None:
                        row[sc[1]] += sc[0] * Dc[i, r, j]
                    sc = _skew_coeff(r, i, where)
                    if sc is not None:
                        row[sc[1]] -= sc[0] * Dc[k, r, j]
                rows.append(row)
                rhs.append(-1j * T[j, i, k])
    if m == 0:
        # n = 1: nothing to solve, closure needs zero torsion
        resid = float(np.linalg.norm(np.asarray(rhs)))
        rhs_norm = resid
        if resid <= tol * max(1.0, rhs_norm):
            S = np.zeros((n, n), dtype=complex)
            return HSCertificate(S, resid, hs_verify(frame, S), tol)
        return HSInfeasible(resid / max(1.0, rhs_norm), rhs_norm, tol)
    A = np.vstack(rows)
    b = np.asarray(rhs, dtype=complex)
    Ar = np.vstack([np.hstack([A.real, -A.imag]), np.hstack([A.imag, A.real])])
    br = np.concatenate([b.real, b.imag])
    x, resid = lstsq_min_norm(Ar, br)
    s = x[:m] + 1j * x[m:]
    rhs_norm = float(np.linalg.norm(b))
    rel = resid / max(1.0, rhs_norm)
    S = np.zeros((n, n), dtype=complex)
    for a, (i, k) in enumerate(pairs):
        S[i, k] = s[a]
        S[k, i] = -s[a]
    if rel <= tol:
        return HSCertificate(S, resid, hs_verify(frame, S), tol)
    return HSInfeasible(rel, rhs_norm, tol)


def hs_verify(frame, S):
    """Norm of d(Omega) for the candidate skew part S (independent check)."""
    n = frame.n
    S = np.asarray(S, dtype=complex)
    alpha = InvariantForm(n)
    for i in range(n):
        for k in range(i + 1, n):
            alpha.add_term((i + 1, k + 1), (), S[i, k])
    omega = alpha + kahler_form(n) + alpha.conjugate()
    return ce_differential(omega, frame).norm()


# ------------------------------------------------- exactness obstruction


@dataclass
class ExactnessWitness:
    """Real invariant 1-form beta with d(beta) = i phi_index ^ phibar_index."""
    index: int
    beta: InvariantForm
    residual: float


def positive_exact_obstruction(frame, tol=DEFAULT_TOL):
    """Search for the first diagonal (1,1) monomial i phi_i ^ phibar_i that is
    the differential of a real invariant 1-form.

    Such a form pairs positively against the fundamental form, which is the
    classical obstruction to any closed completion.  Returns an
    `ExactnessWitness` for the lowest solvable index, else None.
    """
    n = frame.n
    dphi, dphibar = frame.coframe_differentials()
    # collect the support keys of all candidate differentials
    keys = set()
    for t in dphi:
        keys.update(t.keys())
    for t in dphibar:
        keys.update(t.keys())
    for i in range(1, n + 1):
        keys.add(((i,), (i,)))
    keys = sorted(keys)
    pos = {k: a for a, k in enumerate(keys)}
    rows = len(keys)
    Acols = np.zeros((rows, 2 * n), dtype=complex)
    for j in range(n):
        for key, c in dphi[j].items():
            Acols[pos[key], j] += c
            Acols[pos[key], n + j] += 1j * c
        for key, c in dphibar[j].items():
            Acols[pos[key], j] += c
            Acols[pos[key], n + j] += -1j * c
    Ar = np.vstack([Acols.real, Acols.imag])
    for i in range(1, n + 1):
        b = np.zeros(rows, dtype=complex)
        b[pos[((i,), (i,))]] = 1j
        br = np.concatenate([b.real, b.imag])
        x, resid = lstsq_min_norm(Ar, br)
        if resid <= tol:
            z = x[:n] + 1j * x[n:]
            beta = InvariantForm(n)
            for j in range(n):
                beta.add_term((j + 1,), (), z[j])
                beta.add_term((), (j + 1,), np.conj(z[j]))
            return ExactnessWitness(index=i, beta=beta, residual=resid)
    return None
