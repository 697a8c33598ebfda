import numpy as np
import pytest

from hermsymp.codim2_models import (
    AB_R0,
    AB_R1_SUB2,
    AB_R1_SUB3,
    NA_DEGENERATE,
    NA_GENERIC,
    NA_HALF_GENERIC,
    admissible_frame,
    frame_blocks_EVY,
    gen_instance,
)
from hermsymp.lie_core import Subspace
from hermsymp.metric_classifier import hs_solve
from hermsymp.st_pipeline import (
    Lemma3Certificate,
    deform_to_kahler,
    decide,
    lemma3_residuals,
    partition_certificate,
    subcase_unitary_change,
)
from instances import abelian
from test_codim2_models import hand_built_rank_two, params

SQ2 = np.sqrt(2.0)


def solved_instance(tag=AB_R0, n=4, seed=0):
    inst = gen_instance(tag, n=n, seed=seed)
    adm = admissible_frame(inst.alg, inst.ideal, inst.J, inst.g)
    cert = hs_solve(adm.frame)
    assert cert.feasible
    return inst, adm, cert


def test_partition_lines_up_with_blocks():
    inst, adm, cert = solved_instance()
    part = partition_certificate(cert.S, adm.blocks)
    k = inst.alg.dim // 2 - 2
    assert part.S.shape == (k, k)
    assert part.u1.shape == (k,) and part.u2.shape == (k,)
    assert part.p == cert.S[1, 0]
    assert np.allclose(part.u1, cert.S[2:, 0])
    assert np.allclose(part.xi, adm.blocks.V1[:, 1])


def test_residual_system_accepts_solver_output():
    for seed in range(3):
        _, adm, cert = solved_instance(seed=seed)
        part = partition_certificate(cert.S, adm.blocks)
        res = lemma3_residuals(adm.blocks, part, adm.blocks.t)
        assert res["ok"], res
        assert max(res[k] for k in ("L1", "L2", "L3", "L4", "L5", "L6")) < 1e-9


def test_residual_system_rejects_corruption():
    _, adm, cert = solved_instance()
    part = partition_certificate(cert.S, adm.blocks)
    part.u1 = part.u1 + 0.1
    res = lemma3_residuals(adm.blocks, part, adm.blocks.t)
    assert not res["ok"]


def test_deformation_on_pinned_instance():
    # diagonal family with V1 = [1 2], V2 = [2 4], Y1 = 1, Y2 = 2
    from hermsymp.codim2_models import build_case2

    p = params(
        AB_R0,
        V1=np.array([[1.0, 2.0]], dtype=complex),
        V2=np.array([[2.0, 4.0]], dtype=complex),
        Y1=np.array([[1.0 + 0j]]),
        Y2=np.array([[2.0 + 0j]]),
    )
    inst = build_case2(p)
    adm = admissible_frame(inst.alg, inst.ideal, inst.J, inst.g)
    cert = Lemma3Certificate(
        S=np.zeros((1, 1), complex),
        p=0.0 + 0j,
        u1=np.array([1j]),
        u2=np.array([2j]),
        xi=adm.blocks.V1[:, 1].copy(),
    )
    assert lemma3_residuals(adm.blocks, cert, adm.blocks.t)["ok"]
    result = deform_to_kahler(adm.frame, adm.blocks, cert)
    assert result.a1 == pytest.approx(np.array([-1.0 + 0j]), abs=1e-12)
    assert result.a2 == pytest.approx(np.array([-2.0 + 0j]), abs=1e-12)
    assert result.kahler_residual < 1e-12
    assert result.vtilde_residual < 1e-12


def test_deformation_clears_generated_instances():
    for seed in (0, 1, 2):
        _, adm, cert = solved_instance(n=5, seed=seed)
        part = partition_certificate(cert.S, adm.blocks)
        result = deform_to_kahler(adm.frame, adm.blocks, part)
        assert result.kahler_residual < 1e-9
        assert result.vtilde_residual < 1e-10


def test_unitary_change_pins_first_block_column():
    for tag in (AB_R1_SUB2, AB_R1_SUB3):
        for seed in (0, 5):
            inst = gen_instance(tag, n=3, seed=seed)
            adm = admissible_frame(inst.alg, inst.ideal, inst.J, inst.g)
            changed = subcase_unitary_change(adm.frame, adm.blocks, tag)
            assert changed.holomorphic_residual < 1e-9
            E1t, E2t = frame_blocks_EVY(changed)[:2]
            assert np.max(np.abs(E2t)) < 1e-10
            for idx in ((0, 0), (0, 1), (1, 1)):
                assert abs(E1t[idx]) < 1e-10
            if tag == AB_R1_SUB2:
                b = adm.blocks
                assert E1t[1, 0] == pytest.approx(
                    b.kappa / b.delta_prime**3, abs=1e-10
                )


def test_unitary_change_frozen_rotation():
    # pinned instance: c = 0, cp = 1 gives the off-diagonal rotation
    from hermsymp.codim2_models import build_case2

    built = build_case2(params(AB_R1_SUB3, cp=1.0))
    adm = admissible_frame(built.alg, built.ideal, built.J, built.g)
    changed = subcase_unitary_change(adm.frame, adm.blocks, AB_R1_SUB3)
    U2T = np.linalg.lstsq(adm.frame.e[:, :2], changed.e[:, :2], rcond=None)[0]
    assert np.allclose(U2T.T, [[0.0, 1j], [1j, 0.0]], atol=1e-10)


def test_sub2_change_is_identity_without_shear():
    built_params = params(AB_R1_SUB2, b=SQ2)  # delta = 0
    from hermsymp.codim2_models import build_case2

    inst = build_case2(built_params)
    adm = admissible_frame(inst.alg, inst.ideal, inst.J, inst.g)
    changed = subcase_unitary_change(adm.frame, adm.blocks, AB_R1_SUB2)
    assert np.allclose(changed.e, adm.frame.e, atol=1e-12)


# ---------------------------------------------------------------- decide


def test_decide_generic_trace_clash():
    inst = gen_instance(NA_GENERIC, n=4, seed=2)
    v = decide(inst.alg, inst.ideal, inst.J, inst.g)
    assert v.outcome == "NoHS"
    assert v.witness.kind == "GenericTraceClash"
    data = v.witness.data
    assert data["mismatch"] == pytest.approx(4.0 * abs(data["sigma"]), rel=1e-9)


def test_decide_torsion_witnesses():
    for tag, factor in ((NA_HALF_GENERIC, 1.0), (NA_DEGENERATE, 2.0)):
        inst = gen_instance(tag, n=3, seed=1)
        v = decide(inst.alg, inst.ideal, inst.J, inst.g)
        assert v.outcome == "NoHS"
        assert v.witness.kind == "TorsionNonvanishing"
        data = v.witness.data
        sigma = inst.params.sigma
        dpr = np.sqrt(1.0 - inst.params.delta**2)
        expect = factor * abs(sigma) / (SQ2 * dpr)
        assert data["abs"] == pytest.approx(expect, abs=1e-9)
        assert data["closed_form_abs"] == pytest.approx(expect, abs=1e-12)


def test_decide_positive_exact_witness():
    for tag in (AB_R1_SUB2, AB_R1_SUB3):
        inst = gen_instance(tag, n=4, seed=4)
        v = decide(inst.alg, inst.ideal, inst.J, inst.g)
        assert v.outcome == "NoHS"
        assert v.witness.kind == "PositiveExactForm"
        data = v.witness.data
        assert data["index"] == 1
        assert data["residual"] < 1e-9
        assert data["frame_change_pattern_residual"] < 1e-10
        assert data["subcase"] == tag


def test_decide_constructs_deformation():
    inst = gen_instance(AB_R0, n=4, seed=6)
    v = decide(inst.alg, inst.ideal, inst.J, inst.g)
    assert v.outcome == "KahlerDeformation"
    assert v.deformation.kahler_residual < 1e-9
    assert v.deformation.vtilde_residual < 1e-10
    assert v.lemma3["ok"]


def test_decide_already_kahler_on_flat_instance():
    alg, J, g = abelian(3)
    ideal = Subspace.from_span(6, np.eye(6)[:, [0, 2, 4, 5]])
    v = decide(alg, ideal, J, g)
    assert v.outcome == "AlreadyKahler"


def test_decide_rank_two_reports_without_witness():
    alg, ideal, J, g = hand_built_rank_two()
    v = decide(alg, ideal, J, g)
    assert v.outcome == "NoHS"
    assert v.witness is None
    assert any("rank-two" in note for note in v.notes)
