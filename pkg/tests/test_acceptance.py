"""Randomized acceptance battery for the whole pipeline.

Each criterion prints one ``[ACCEPTANCE]`` line.  The structural criteria at
the end re-examine every instance the earlier ones generated, so the file is
meant to run as a whole and in order.
"""

import time

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
from hermsymp.complex_frames import (
    InvariantForm,
    build_unitary_frame,
    ce_differential,
    check_integrability,
    kahler_form,
    unimodularity_residual_CD,
)
from hermsymp.lie_core import derived_series, is_unimodular, validate_structure_constants
from hermsymp.metric_classifier import classify_metric, hs_solve, positive_exact_obstruction
from hermsymp.st_pipeline import (
    decide,
    lemma3_residuals,
    partition_certificate,
    subcase_unitary_change,
)
from instances import (
    abelian,
    circle_su2,
    kodaira_thurston,
    random_compatible_metric,
    rotate_instance,
    skew_completion_oracle,
    torsion_identity_residual,
)

NA_TAGS = (NA_GENERIC, NA_HALF_GENERIC, NA_DEGENERATE)
ALL_GEN_TAGS = NA_TAGS + (AB_R0, AB_R1_SUB2, AB_R1_SUB3)
SIZES = (3, 4, 5)

# every instance the battery produces, for the structural criteria:
# rows are dicts with keys label, alg, J, frame, and for generated
# codim-2 instances also tag and inst
_REGISTRY = []


def _register(label, alg, J, frame, tag=None, inst=None):
    _REGISTRY.append(
        {"label": label, "alg": alg, "J": J, "frame": frame, "tag": tag, "inst": inst}
    )


def _announce(capsys, k, label, ok):
    with capsys.disabled():
        print("\n[ACCEPTANCE] criterion %d (%s): %s" % (k, label, "PASS" if ok else "FAIL"))


def _run(capsys, k, label, body):
    ok = False
    try:
        body()
        ok = True
    finally:
        _announce(capsys, k, label, ok)


# ---------------------------------------------------------------- criterion 1


def _oracle_pool():
    """100 deterministic unimodular Hermitian instances with n in {2, 3}."""
    pool = []

    def add(label, alg, J, g):
        pool.append((label, alg, J, build_unitary_frame(alg, J, g), None, None))

    for n in (2, 3):
        alg, J, g = abelian(n)
        add("abelian%d" % n, alg, J, g)
    base = {"kt": kodaira_thurston(), "hopf": circle_su2()}
    for name, (alg, J, g) in base.items():
        add(name, alg, J, g)
    for name, (alg, J, g) in base.items():
        for seed in range(12):
            rng = np.random.default_rng(1000 + seed)
            add("%s-metric%d" % (name, seed), alg, J,
                random_compatible_metric(rng, J, alg.dim))
        for seed in range(8):
            rng = np.random.default_rng(2000 + seed)
            alg2, J2, g2, _ = rotate_instance(rng, alg, J, g)
            add("%s-rot%d" % (name, seed), alg2, J2, g2)
        for seed in range(3):
            rng = np.random.default_rng(3000 + seed)
            g2 = random_compatible_metric(rng, J, alg.dim)
            alg2, J2, g3, _ = rotate_instance(rng, alg, J, g2)
            add("%s-mixed%d" % (name, seed), alg2, J2, g3)
    for n in (2, 3):
        for seed in range(4):
            alg, J, _ = abelian(n)
            rng = np.random.default_rng(4000 + 10 * n + seed)
            add("abelian%d-metric%d" % (n, seed), alg, J,
                random_compatible_metric(rng, J, alg.dim))
    for ti, tag in enumerate(ALL_GEN_TAGS):
        for seed in range(5):
            inst = gen_instance(tag, n=3, seed=7000 + seed)
            pool.append(("%s-s%d" % (tag, seed), inst.alg, inst.J, inst.frame,
                         tag, inst))
        inst = gen_instance(tag, n=3, seed=7100)
        rng = np.random.default_rng(5000 + ti)
        add(tag + "-metric", inst.alg, inst.J,
            random_compatible_metric(rng, inst.J, inst.alg.dim))
        inst = gen_instance(tag, n=3, seed=7200)
        rng = np.random.default_rng(6000 + ti)
        alg2, J2, g2, _ = rotate_instance(rng, inst.alg, inst.J, inst.g)
        add(tag + "-rot", alg2, J2, g2)
    return pool


def test_criterion_1_oracle_agreement(capsys):
    def body():
        start = time.monotonic()
        pool = _oracle_pool()
        assert len(pool) == 100
        for label, alg, J, frame, tag, inst in pool:
            _register(label, alg, J, frame, tag=tag, inst=inst)
            structured = hs_solve(frame).feasible
            direct, residual = skew_completion_oracle(frame)
            assert structured == direct, (label, structured, residual)
        elapsed = time.monotonic() - start
        assert elapsed < 10.0, elapsed

    _run(capsys, 1, "closure solver agrees with the direct oracle on 100 instances", body)


# ---------------------------------------------------------------- criterion 2


def test_criterion_2_torsion_obstructions(capsys):
    def body():
        start = time.monotonic()
        for i in range(1000):
            tag = NA_TAGS[i % 3]
            n = SIZES[(i // 3) % 3]
            inst = gen_instance(tag, n=n, seed=i)
            v = decide(inst.alg, inst.ideal, inst.J, inst.g)
            assert v.outcome == "NoHS", (tag, n, i, v.outcome)
            _register("c2-%s-n%d-s%d" % (tag, n, i), inst.alg, inst.J,
                      inst.frame, tag=tag, inst=inst)
            if tag == NA_GENERIC:
                continue
            assert v.witness is not None and v.witness.kind == "TorsionNonvanishing"
            factor = 1.0 if tag == NA_HALF_GENERIC else 2.0
            sigma = inst.params.sigma
            dprime = np.sqrt(1.0 - inst.params.delta ** 2)
            closed_form = factor * abs(sigma) / (np.sqrt(2.0) * dprime)
            assert abs(v.witness.data["abs"] - closed_form) <= 1e-9, (tag, n, i)
        elapsed = time.monotonic() - start
        assert elapsed < 60.0, elapsed

    _run(capsys, 2, "1000 nonabelian-complement instances refuse a certificate", body)


# ---------------------------------------------------------------- criterion 3


def test_criterion_3_subcase_witnesses(capsys):
    def body():
        start = time.monotonic()
        for i in range(200):
            tag = AB_R1_SUB2 if i < 100 else AB_R1_SUB3
            n = SIZES[i % 3]
            inst = gen_instance(tag, n=n, seed=i)
            v = decide(inst.alg, inst.ideal, inst.J, inst.g)
            assert v.outcome == "NoHS", (tag, n, i, v.outcome)
            assert v.witness is not None and v.witness.kind == "PositiveExactForm"
            data = v.witness.data
            assert data["index"] == 1
            _register("c3-%s-n%d-s%d" % (tag, n, i), inst.alg, inst.J,
                      inst.frame, tag=tag, inst=inst)
            # independent re-verification in the rotated frame
            adm = admissible_frame(inst.alg, inst.ideal, inst.J, inst.g)
            changed = subcase_unitary_change(adm.frame, adm.blocks, tag)
            beta = InvariantForm.from_json_terms(n, data["beta_terms"])
            target = InvariantForm(n)
            target.add_term((1,), (1,), 1j)
            gap = (ce_differential(beta, changed) - target).norm()
            assert gap <= 1e-9, (tag, n, i, gap)
            E1t, E2t = frame_blocks_EVY(changed)[:2]
            assert np.max(np.abs(E2t)) <= 1e-10
            for idx in ((0, 0), (0, 1), (1, 1)):
                assert abs(E1t[idx]) <= 1e-10
        elapsed = time.monotonic() - start
        assert elapsed < 30.0, elapsed

    _run(capsys, 3, "200 rank-one subcase instances carry positive exact witnesses", body)


# ---------------------------------------------------------------- criterion 4


def test_criterion_4_deformations(capsys):
    def body():
        start = time.monotonic()
        for i in range(200):
            n = SIZES[i % 3]
            inst = gen_instance(AB_R0, n=n, seed=i)
            v = decide(inst.alg, inst.ideal, inst.J, inst.g)
            assert v.outcome == "KahlerDeformation", (n, i, v.outcome)
            assert v.deformation.vtilde_residual <= 1e-10, (n, i)
            flags = classify_metric(v.deformation.new_frame)
            assert flags.kahler
            assert flags.residuals["kahler"] <= 1e-8, (n, i)
            _register("c4-n%d-s%d" % (n, i), inst.alg, inst.J,
                      inst.frame, tag=AB_R0, inst=inst)
        elapsed = time.monotonic() - start
        assert elapsed < 30.0, elapsed

    _run(capsys, 4, "200 rank-zero instances deform to a closed metric", body)


# ---------------------------------------------------------------- criterion 5


def test_criterion_5_structural_suite(capsys):
    def body():
        assert len(_REGISTRY) > 1300, "battery must run in file order"
        for row in _REGISTRY:
            alg, J, frame = row["alg"], row["J"], row["frame"]
            label = row["label"]
            checks = validate_structure_constants(alg)
            assert checks["antisymmetry_residual"] <= 1e-11, label
            assert checks["jacobi_residual"] <= 1e-11, label
            assert check_integrability(alg, J)["residual"] <= 1e-11, label
            uni = is_unimodular(alg)
            assert uni["residual"] <= 1e-11, label
            assert uni["flag"] == (unimodularity_residual_CD(frame.C, frame.D) <= 1e-9), label

            n = frame.n
            w = kahler_form(n)
            assert ce_differential(ce_differential(w, frame), frame).norm() <= 1e-10, label
            phi1 = InvariantForm(n)
            phi1.add_term((1,), (), 1.0)
            assert ce_differential(ce_differential(phi1, frame), frame).norm() <= 1e-10, label
            assert torsion_identity_residual(frame) <= 1e-10, label

            res = hs_solve(frame)
            flags = classify_metric(frame)
            witness = positive_exact_obstruction(frame)
            if res.feasible:
                assert flags.pluriclosed, label
                assert witness is None, label  # certificates and witnesses exclude each other
            if flags.kahler:
                assert res.feasible, label
                assert np.max(np.abs(res.S)) <= 1e-8, label

    _run(capsys, 5, "structural identities hold on every generated instance", body)


# ---------------------------------------------------------------- criterion 6


def test_criterion_6_solvability_bound(capsys):
    def body():
        rows = [r for r in _REGISTRY if r["inst"] is not None]
        assert len(rows) > 1300, "battery must run in file order"
        exact = 0
        for row in rows:
            step = derived_series(row["alg"])["step"]
            assert step <= 3, (row["label"], step)
            if step == 3:
                exact += 1
        assert exact >= 1

    _run(capsys, 6, "derived series of codim-2 instances stops within three steps", body)


# ---------------------------------------------------------------- criterion 7


def test_criterion_7_partition_consistency(capsys):
    def body():
        rows = [r for r in _REGISTRY if r["tag"] == AB_R0]
        assert len(rows) >= 200, "battery must run in file order"
        for row in rows:
            inst = row["inst"]
            adm = admissible_frame(inst.alg, inst.ideal, inst.J, inst.g)
            cert = hs_solve(adm.frame)
            assert cert.feasible, row["label"]
            part = partition_certificate(cert.S, adm.blocks)
            res = lemma3_residuals(adm.blocks, part, adm.blocks.t)
            worst = max(res[k] for k in ("L1", "L2", "L3", "L4", "L5", "L6"))
            assert worst <= 1e-9, (row["label"], worst)

    _run(capsys, 7, "every certificate partitions into a consistent block solution", body)
