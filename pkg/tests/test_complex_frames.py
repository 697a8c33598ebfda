import numpy as np
import pytest

from hermsymp.complex_frames import (
    ComplexStructure,
    HermitianMetric,
    InvariantForm,
    UnitaryFrame,
    algebra_from_structure_constants,
    canonical_frame_columns,
    ce_differential,
    check_integrability,
    kahler_form,
    standard_complex_structure,
    torsion_tensor,
    unimodularity_residual_CD,
    verify_jacobi_CD,
)
from hermsymp.lie_core import is_unimodular
from instances import (
    abelian,
    aff_plane_pair,
    algebra_from_pairs,
    circle_su2,
    frame_of,
    kodaira_thurston,
    random_compatible_metric,
    rotate_instance,
    torsion_identity_residual,
)

SQ2 = np.sqrt(2.0)


def test_standard_complex_structure_squares():
    for n in (1, 2, 4):
        J = standard_complex_structure(n)
        assert np.allclose(J @ J, -np.eye(2 * n))
    with pytest.raises(ValueError):
        ComplexStructure(np.eye(4))


def test_metric_validation():
    J = standard_complex_structure(2)
    with pytest.raises(ValueError):
        HermitianMetric(np.diag([1.0, -1.0, 1.0, 1.0]))
    g = np.eye(4)
    g[0, 1] = g[1, 0] = 0.3
    # compatible by construction
    HermitianMetric(g + J.T @ g @ J, J=J)
    bad = np.diag([2.0, 1.0, 1.0, 1.0])
    with pytest.raises(ValueError):
        HermitianMetric(bad, J=J)


def test_integrability_flags():
    alg, J, _ = kodaira_thurston()
    assert check_integrability(alg, J)["flag"]
    # swap the pairing (b1, b3), (b2, b4): no longer integrable
    P = np.zeros((4, 4))
    P[0, 0] = P[1, 2] = P[2, 1] = P[3, 3] = 1.0
    Jp = P @ J @ P.T
    res = check_integrability(alg, Jp)
    assert not res["flag"]
    assert res["residual"] == pytest.approx(1.0)
    with pytest.raises(ValueError):
        UnitaryFrame(alg, Jp, np.eye(4), canonical_frame_columns(2))


def test_affine_line_frame_constant():
    # [b1, b2] = b1 with J b1 = b2:  D[0,0,0] = -i / sqrt(2), no (2,0) part
    alg = algebra_from_pairs(2, [(0, 0, 1, 1.0)])
    fr = frame_of(alg, standard_complex_structure(1), np.eye(2))
    assert abs(fr.D[0, 0, 0] - (-1j / SQ2)) < 1e-14
    assert np.max(np.abs(fr.C)) < 1e-14


def test_frame_bracket_closure():
    alg, J, g = kodaira_thurston()
    fr = frame_of(alg, J, g)
    assert fr.holomorphic_residual < 1e-12


def test_torsion_matches_differential():
    for alg, J, g in (kodaira_thurston(), aff_plane_pair(), circle_su2()):
        fr = frame_of(alg, J, g)
        assert torsion_identity_residual(fr) < 1e-12


def test_kodaira_thurston_fundamental_norm():
    alg, J, g = kodaira_thurston()
    fr = frame_of(alg, J, g)
    dw = ce_differential(kahler_form(2), fr)
    assert dw.norm() == pytest.approx(1.0, abs=1e-12)
    T = torsion_tensor(fr)
    assert np.max(np.abs(T)) == pytest.approx(1.0 / SQ2, abs=1e-12)


def test_differential_squares_to_zero():
    alg, J, g = kodaira_thurston()
    fr = frame_of(alg, J, g)
    rng = np.random.default_rng(3)
    forms = [kahler_form(2)]
    phi = InvariantForm(2)
    phi.add_term((1,), (), 1.0)
    forms.append(phi)
    mixed = InvariantForm(2)
    for i in (1, 2):
        for k in (1, 2):
            mixed.add_term((i,), (k,), rng.standard_normal() + 1j * rng.standard_normal())
    forms.append(mixed)
    for w in forms:
        assert ce_differential(ce_differential(w, fr), fr).norm() < 1e-12


def test_invariant_form_algebra():
    a = InvariantForm(3)
    a.add_term((1,), (), 1.0)
    b = InvariantForm(3)
    b.add_term((2,), (), 1.0)
    ab = a.wedge(b)
    ba = b.wedge(a)
    assert (ab + ba).norm() == 0.0
    assert ab.coefficients[((1, 2), ())] == 1.0

    w = kahler_form(3)
    assert (w.conjugate() - w).norm() < 1e-15  # real form
    conj2 = a.conjugate().conjugate()
    assert (conj2 - a).norm() < 1e-15

    assert w.bidegree(1, 1).norm() == w.norm()
    assert w.bidegree(2, 0).norm() == 0.0

    round_trip = InvariantForm.from_json_terms(3, w.to_json_terms())
    assert (round_trip - w).norm() == 0.0


def test_synthesis_round_trip():
    rng = np.random.default_rng(7)
    n = 3
    C = rng.standard_normal((n, n, n)) + 1j * rng.standard_normal((n, n, n))
    C = C - C.transpose(0, 2, 1)
    D = rng.standard_normal((n, n, n)) + 1j * rng.standard_normal((n, n, n))
    alg, J, g = algebra_from_structure_constants(C, D)
    fr = UnitaryFrame(alg, J, g, canonical_frame_columns(n))
    assert np.max(np.abs(fr.C - C)) < 1e-12
    assert np.max(np.abs(fr.D - D)) < 1e-12


def test_structure_tensors_are_basis_invariant():
    alg, J, g = kodaira_thurston()
    fr = frame_of(alg, J, g)
    rng = np.random.default_rng(11)
    alg2, J2, g2, R = rotate_instance(rng, alg, J, g)
    fr2 = UnitaryFrame(alg2, J2, g2, R.T @ fr.e)
    assert np.max(np.abs(fr2.C - fr.C)) < 1e-12
    assert np.max(np.abs(fr2.D - fr.D)) < 1e-12


def test_jacobi_in_frame_coordinates():
    alg, J, g = circle_su2()
    fr = frame_of(alg, J, g)
    assert max(verify_jacobi_CD(fr)) < 1e-12


def test_unimodularity_criteria_agree():
    for alg, J, g in (kodaira_thurston(), circle_su2(), aff_plane_pair(), abelian(2)):
        fr = frame_of(alg, J, g)
        direct = is_unimodular(alg)
        cd = unimodularity_residual_CD(fr.C, fr.D)
        assert direct["flag"] == (cd < 1e-9)


def test_compatible_random_metric_builds():
    alg, J, _ = kodaira_thurston()
    rng = np.random.default_rng(5)
    g = random_compatible_metric(rng, J, 4)
    from hermsymp.complex_frames import build_unitary_frame

    fr = build_unitary_frame(alg, J, g)
    assert fr.holomorphic_residual < 1e-10
    assert torsion_identity_residual(fr) < 1e-10
