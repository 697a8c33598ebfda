"""Decision pipeline: given a unimodular algebra with codimension-two abelian
ideal and compatible Hermitian data, decide whether the closure system has a
solution, and produce either a certified Kahler deformation or a named
obstruction witness.

Outcomes
--------
* "AlreadyKahler"       the input metric is closed as it stands.
* "KahlerDeformation"   the closure system is solvable; the certificate is
                        converted into a frame deformation whose induced
                        metric is Kahler (only the rank-zero AB case).
* "NoHS"                the system is infeasible; where the case theory
                        provides one, a concrete witness is attached.
"""

from dataclasses import dataclass, field

import numpy as np

from .lie_core import is_unimodular
from .complex_frames import UnitaryFrame, torsion_tensor
from .metric_classifier import (classify_metric, hs_solve, hs_verify,
                                positive_exact_obstruction)
from .codim2_models import (AB_R0, AB_R1_SUB2, AB_R1_SUB3, AB_R2, NA_DEGENERATE,
                            NA_GENERIC, NA_HALF_GENERIC, SQ2, admissible_frame,
                            classify_case, frame_blocks_EVY)


class PipelineError(RuntimeError):
    """A decide/deform precondition failed."""


# ------------------------------------------------------------ certificates


@dataclass
class Lemma3Certificate:
    """Partition of a closure certificate into the blocks the tail geometry
    sees: scalar p, coefficient vectors u1, u2, tail skew block S, and the
    distinguished column xi of the first V block."""

    S: np.ndarray
    p: complex
    u1: np.ndarray
    u2: np.ndarray
    xi: np.ndarray


def partition_certificate(S_full, blocks):
    S_full = np.asarray(S_full, dtype=complex)
    return Lemma3Certificate(
        S=S_full[2:, 2:].copy(),
        p=complex(S_full[1, 0]),
        u1=S_full[2:, 0].copy(),
        u2=S_full[2:, 1].copy(),
        xi=blocks.V1[:, 1].copy(),
    )


def lemma3_residuals(blocks, cert, t, tol=1e-8):
    """Residuals of the six block equations equivalent to the closure system
    on an admissible frame.  Keys L1..L6 plus "ok"."""
    E = (blocks.E1, blocks.E2)
    V = (blocks.V1, blocks.V2)
    Y = (blocks.Y1, blocks.Y2)
    S, p, u1, u2 = cert.S, cert.p, cert.u1, cert.u2
    u = (u1, u2)
    q = blocks.q
    Y1h = Y[0].conj().T
    Y2h = Y[1].conj().T
    r = {}
    r["L1"] = float(max(np.max(np.abs(Y[0] - Y1h)) if Y[0].size else 0.0,
                        np.max(np.abs(Y[1] - Y2h + 2 * t * Y1h)) if Y[1].size else 0.0))
    r["L2"] = float(np.max(np.abs(V[0][:, 1] - V[1][:, 0] - 2 * t * V[0][:, 0]))
                    if V[0].size else 0.0)
    r["L3"] = float(max((np.max(np.abs(Ya.conj().T @ S + S @ np.conj(Ya)))
                         if S.size else 0.0) for Ya in Y))
    l4 = 0.0
    for a in range(2):
        for b in range(2):
            lhs = Y[a].conj().T @ u[b] if u[b].size else u[b]
            for gma in range(2):
                lhs = lhs + np.conj(E[a][gma, b]) * u[gma]
            lhs = lhs + (S @ np.conj(V[a][:, b]) if S.size else 0.0)
            rhs = 1j * V[b][:, a]
            if np.size(lhs):
                l4 = max(l4, float(np.max(np.abs(lhs - rhs))))
    r["L4"] = l4
    T112 = q - blocks.E2[0, 0] + blocks.E1[1, 0]
    T212 = -blocks.E2[0, 1] + blocks.E1[1, 1]
    l5 = 0.0
    for a, Ta in ((0, T112), (1, T212)):
        lhs = -p * np.conj(np.trace(E[a]))
        if u2.size:
            lhs = lhs + u2 @ np.conj(V[a][:, 0]) - u1 @ np.conj(V[a][:, 1])
        l5 = max(l5, float(abs(lhs + 1j * Ta)))
    r["L5"] = l5
    if u1.size:
        lhs6 = (-q) * u1 - (Y2h - 2 * t * Y1h) @ u1 + Y1h @ u2
        r["L6"] = float(np.max(np.abs(lhs6)))
    else:
        r["L6"] = 0.0
    r["ok"] = bool(all(v <= tol for k, v in r.items() if k != "ok"))
    return r


# ------------------------------------------------------- unitary subcase map


def subcase_unitary_change(frame, blocks, subcase_tag):
    """Constant unitary mix of the first two frame legs that compresses the
    corner blocks of the rank-one AB subcases to a single entry."""
    dpr = blocks.delta_prime
    t = blocks.t
    if subcase_tag == AB_R1_SUB2:
        U2 = dpr * np.array([[1.0, t], [t, 1.0]], dtype=complex)
    elif subcase_tag == AB_R1_SUB3:
        mu = blocks.mu
        lam = blocks.lam
        if lam <= 1e-12:
            raise PipelineError("degenerate parameters: the unitary change "
                                "is undefined when c = c' = 0")
        U2 = np.array([[1j * blocks.c * dpr, mu],
                       [-np.conj(mu), -1j * blocks.c * dpr]], dtype=complex) / lam
    else:
        raise PipelineError("no unitary change for case %r" % (subcase_tag,))
    err = float(np.max(np.abs(U2 @ U2.conj().T - np.eye(2))))
    if err > 1e-8:
        raise PipelineError("frame change is not unitary (residual %.3e)" % err)
    new_e = frame.e.copy()
    new_e[:, :2] = frame.e[:, :2] @ U2.T
    return UnitaryFrame(frame.alg, frame.J, frame.g, new_e)


# ------------------------------------------------------------- deformation


@dataclass
class DeformationResult:
    a1: np.ndarray
    a2: np.ndarray
    Lambda1: np.ndarray
    Lambda2: np.ndarray
    U_diag: np.ndarray
    new_frame: UnitaryFrame
    kahler_residual: float
    vtilde_residual: float


def _simdiag_commuting_hermitian(A, B, tol=1e-8):
    """Common unitary diagonalizer of two commuting Hermitian matrices.

    Eigendecompose A, then rediagonalize B inside each eigenvalue cluster.
    Column phases are fixed so the first sizable entry is real positive.
    """
    k = A.shape[0]
    scale = 1.0 + float(np.max(np.abs(A)) + np.max(np.abs(B)))
    comm = float(np.max(np.abs(A @ B - B @ A)))
    if comm > tol * scale:
        raise PipelineError("tail blocks do not commute (residual %.3e)" % comm)
    wA, W = np.linalg.eigh(A)
    gap = 1e-8 * scale
    start = 0
    for stop in range(1, k + 1):
        if stop < k and wA[stop] - wA[stop - 1] <= gap:
            continue
        if stop - start > 1:
            sub = W[:, start:stop]
            H = sub.conj().T @ B @ sub
            H = 0.5 * (H + H.conj().T)
            _, Q = np.linalg.eigh(H)
            W[:, start:stop] = sub @ Q
        start = stop
    for j in range(k):
        col = W[:, j]
        idx = int(np.argmax(np.abs(col) > 1e-8 * np.max(np.abs(col))))
        ph = col[idx] / abs(col[idx])
        W[:, j] = col / ph
    offA = W.conj().T @ A @ W
    offB = W.conj().T @ B @ W
    dA = np.diag(offA).real.copy()
    dB = np.diag(offB).real.copy()
    offres = max(float(np.max(np.abs(offA - np.diag(np.diag(offA))))),
                 float(np.max(np.abs(offB - np.diag(np.diag(offB))))))
    if offres > tol * scale:
        raise PipelineError("simultaneous diagonalization failed (residual %.3e)"
                            % offres)
    return dA, dB, W


def deform_to_kahler(frame, blocks, cert, tol=1e-8):
    """Turn a closure certificate into a Kahler metric by tilting the first
    two frame legs into the tail.

    Requires vanishing corner blocks (rank-zero AB case) and the block
    equations of the certificate; solves for tail coefficient vectors a1, a2
    with V_alpha columns in the range of the tail maps, then rebuilds the
    metric that makes the tilted frame unitary.
    """
    n = frame.n
    k = n - 2
    if k == 0:
        raise PipelineError("deformation needs a nontrivial tail")
    scale = 1.0 + float(max(np.max(np.abs(blocks.Y1)) if blocks.Y1.size else 0.0,
                            np.max(np.abs(blocks.Y2)) if blocks.Y2.size else 0.0,
                            np.max(np.abs(blocks.V1)) if blocks.V1.size else 0.0,
                            np.max(np.abs(blocks.V2)) if blocks.V2.size else 0.0))
    corner = float(max(np.max(np.abs(blocks.E1)), np.max(np.abs(blocks.E2))))
    if corner > tol * scale:
        raise PipelineError("deformation requires vanishing corner blocks "
                            "(max entry %.3e)" % corner)
    l3 = lemma3_residuals(blocks, cert, blocks.t, tol=max(tol, 1e-8) * scale)
    if not l3["ok"]:
        raise PipelineError("certificate fails the block equations: " +
                            ", ".join("%s=%.3e" % (kk, vv) for kk, vv in
                                      l3.items() if kk != "ok" and vv > tol))
    t = blocks.t
    Lam2 = blocks.Y2 + t * blocks.Y1
    Lam2 = 0.5 * (Lam2 + Lam2.conj().T)
    Y1h = 0.5 * (blocks.Y1 + blocks.Y1.conj().T)
    d1, d2, W = _simdiag_commuting_hermitian(Y1h, Lam2, tol=max(tol, 1e-8))
    y2d = d2 - t * d1
    Vh = (W.conj().T @ blocks.V1, W.conj().T @ blocks.V2)
    Z = np.zeros((k, 2), dtype=complex)
    for i in range(k):
        rowA = np.array([d1[i], y2d[i]], dtype=complex)
        anorm = np.linalg.norm(rowA)
        for b in range(2):
            rhs = np.array([Vh[0][i, b], Vh[1][i, b]], dtype=complex)
            if anorm <= 1e-10 * scale:
                if np.linalg.norm(rhs) > max(tol, 1e-8) * scale:
                    raise PipelineError(
                        "coefficient data outside the range of the tail maps "
                        "(index %d, residual %.3e)" % (i + 1, np.linalg.norm(rhs)))
                continue
            z = (np.conj(rowA) @ rhs) / (anorm * anorm)
            res = float(np.linalg.norm(rowA * z - rhs))
            if res > max(tol, 1e-8) * scale:
                raise PipelineError("inconsistent coefficient data at tail "
                                    "index %d (residual %.3e)" % (i + 1, res))
            Z[i, b] = z
    # V_alpha[:, beta] + Y_alpha conj(a_beta) must vanish in the tilted frame
    a1 = -np.conj(W @ Z[:, 0])
    a2 = -np.conj(W @ Z[:, 1])
    new_e = frame.e.copy()
    new_e[:, 0] = new_e[:, 0] + frame.e[:, 2:] @ a1
    new_e[:, 1] = new_e[:, 1] + frame.e[:, 2:] @ a2
    m = 2 * n
    B = np.zeros((m, m))
    for i in range(n):
        B[:, 2 * i] = SQ2 * new_e[:, i].real
        B[:, 2 * i + 1] = -SQ2 * new_e[:, i].imag
    Jres = float(np.max(np.abs(frame.J @ B[:, 0::2] - B[:, 1::2])))
    if Jres > 1e-9 * (1.0 + float(np.max(np.abs(B)))):
        raise PipelineError("tilted frame lost J-compatibility (residual %.3e)" % Jres)
    Binv = np.linalg.inv(B)
    g_new = Binv.T @ Binv
    g_new = 0.5 * (g_new + g_new.T)
    new_frame = UnitaryFrame(frame.alg, frame.J, g_new, new_e)
    E1n, E2n, V1n, V2n, _, _ = frame_blocks_EVY(new_frame)
    vres = float(max(np.max(np.abs(V1n)) if V1n.size else 0.0,
                     np.max(np.abs(V2n)) if V2n.size else 0.0,
                     np.max(np.abs(E1n)), np.max(np.abs(E2n))))
    flags = classify_metric(new_frame)
    return DeformationResult(a1=a1, a2=a2, Lambda1=d1, Lambda2=d2, U_diag=W,
                             new_frame=new_frame,
                             kahler_residual=flags.residuals["kahler"],
                             vtilde_residual=vres)


# ------------------------------------------------------------------ verdict


@dataclass
class Witness:
    kind: str
    data: dict


@dataclass
class Verdict:
    outcome: str
    case_tag: str = None
    witness: Witness = None
    deformation: DeformationResult = None
    metric_flags: object = None
    certificate: object = None
    lemma3: dict = None
    notes: tuple = ()


def _complex_pair(z):
    return [float(np.real(z)), float(np.imag(z))]


def _na_witness(tag, frame, blocks, hs):
    if tag == NA_GENERIC:
        required = 2.0 * blocks.sigma - blocks.c
        return Witness(kind="GenericTraceClash", data={
            "sigma": blocks.sigma,
            "dp": blocks.dp,
            "dp_required": required,
            "mismatch": abs(required - blocks.dp),
            "min_residual": hs.min_residual,
        })
    T = torsion_tensor(frame)
    T112 = complex(T[0, 0, 1])
    factor = 1.0 if tag == NA_HALF_GENERIC else 2.0
    closed = factor * abs(blocks.sigma) / (SQ2 * blocks.delta_prime)
    return Witness(kind="TorsionNonvanishing", data={
        "T112": _complex_pair(T112),
        "abs": abs(T112),
        "closed_form_abs": closed,
        "min_residual": hs.min_residual,
    })


def decide(alg, a_ideal, J, g, tol=1e-8):
    """Run the full decision pipeline.  See the module docstring for the
    outcome contract; raises `PipelineError` / `Codim2InputError` with a
    named message when a precondition fails."""
    J = np.asarray(J, dtype=float)
    g = np.asarray(g, dtype=float)
    uni = is_unimodular(alg, tol=max(tol, 1e-8))
    if not uni["flag"]:
        raise PipelineError("input algebra is not unimodular (residual %.3e)"
                            % uni["residual"])
    info = classify_case(alg, a_ideal, J, g)
    adm = admissible_frame(alg, a_ideal, J, g, tol=tol)
    frame = adm.frame
    blocks = adm.blocks
    flags = classify_metric(frame)
    if flags.kahler:
        return Verdict(outcome="AlreadyKahler", case_tag=info.tag,
                       metric_flags=flags)
    hs = hs_solve(frame, tol=tol)
    if hs.feasible:
        cert = partition_certificate(hs.S, blocks)
        l3 = lemma3_residuals(blocks, cert, blocks.t)
        notes = ()
        if info.tag != AB_R0:
            notes = ("closure certificate found outside the rank-zero case",)
        dres = deform_to_kahler(frame, blocks, cert, tol=tol)
        return Verdict(outcome="KahlerDeformation", case_tag=info.tag,
                       deformation=dres, metric_flags=flags, certificate=hs,
                       lemma3=l3, notes=notes)
    if info.tag in (NA_GENERIC, NA_HALF_GENERIC, NA_DEGENERATE):
        wit = _na_witness(info.tag, frame, blocks, hs)
        return Verdict(outcome="NoHS", case_tag=info.tag, witness=wit,
                       metric_flags=flags, certificate=hs)
    if info.tag in (AB_R1_SUB2, AB_R1_SUB3):
        changed = subcase_unitary_change(frame, blocks, info.tag)
        wit = None
        obstruction = positive_exact_obstruction(changed, tol=max(1e-9, 0.1 * tol))
        if obstruction is not None:
            E1c, E2c, _, _, _, _ = frame_blocks_EVY(changed)
            pattern = float(max(np.max(np.abs(E2c)), abs(E1c[0, 0]),
                                abs(E1c[0, 1]), abs(E1c[1, 1])))
            wit = Witness(kind="PositiveExactForm", data={
                "index": obstruction.index,
                "residual": obstruction.residual,
                "beta_terms": obstruction.beta.to_json_terms(),
                "subcase": info.tag,
                "frame_change_pattern_residual": pattern,
            })
        notes = () if wit is not None else (
            "no exact positive combination was found at this tolerance",)
        return Verdict(outcome="NoHS", case_tag=info.tag, witness=wit,
                       metric_flags=flags, certificate=hs, notes=notes)
    note = ("rank-two AB case: infeasibility reported without a witness"
            if info.tag == AB_R2 else
            "rank-zero AB case with infeasible system: no witness attached")
    return Verdict(outcome="NoHS", case_tag=info.tag, witness=None,
                   metric_flags=flags, certificate=hs, notes=(note,))