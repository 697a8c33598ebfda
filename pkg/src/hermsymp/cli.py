"""Command line interface.

Subcommands
-----------
gen       write a generated instance document
check     validate a document (structure constants, ideal, complex structure)
classify  case tag, subspace dimensions, metric type flags
decide    run the decision pipeline, print the verdict
deform    like decide, but emit the deformed document when one exists
batch     run gen+decide over a task list, write per-task and aggregate files

Documents are JSON with real arrays as nested lists and complex numbers as
[re, im] pairs.  Exit codes: 0 success (including "AlreadyKahler" and
"KahlerDeformation"), 1 input or validation errors, 2 unsupported case or
generator exhaustion, 3 infeasible closure system.
"""

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .lie_core import (RealLieAlgebra, Subspace, derived_series, is_unimodular,
                       validate_structure_constants, verify_abelian_ideal)
from .complex_frames import check_integrability
from .metric_classifier import classify_metric
from .codim2_models import (CASE_TAGS, Codim2ParamError, GenerationExhausted,
                            UnsupportedCaseError, Codim2InputError,
                            admissible_frame, classify_case, gen_instance)
from .st_pipeline import PipelineError, decide

SCHEMA_VERSION = 1


class DocumentError(ValueError):
    pass


# ------------------------------------------------------------- serialization


def _complex_to_json(arr):
    arr = np.asarray(arr, dtype=complex)
    if arr.ndim == 0:
        return [float(arr.real), float(arr.imag)]
    return [_complex_to_json(sub) for sub in arr]


def _complex_from_json(data):
    a = np.asarray(data, dtype=float)
    if a.ndim < 1 or a.shape[-1] != 2:
        raise DocumentError("complex data must use [re, im] pairs")
    return a[..., 0] + 1j * a[..., 1]


def document_from_instance(inst, seed=None):
    p = inst.params
    doc = {
        "schema_version": SCHEMA_VERSION,
        "dim": inst.alg.dim,
        "f": inst.alg.f.tolist(),
        "J": np.asarray(inst.J, dtype=float).tolist(),
        "g": np.asarray(inst.g, dtype=float).tolist(),
        "ideal_basis": inst.ideal.basis.tolist(),
        "params": {
            "n": p.n,
            "case_tag": p.case_tag,
            "a": p.a, "b": p.b, "c": p.c, "cp": p.cp, "dp": p.dp,
            "sigma": p.sigma, "delta": p.delta,
            "V1": _complex_to_json(p.V1), "V2": _complex_to_json(p.V2),
            "Y1": _complex_to_json(p.Y1), "Y2": _complex_to_json(p.Y2),
        },
    }
    if seed is not None:
        doc["provenance"] = {"generator": "hermsymp-gen", "seed": int(seed),
                             "case": p.case_tag}
    return doc


def load_document(data):
    """Parse and shape-check a document dict; returns (alg, ideal, J, g, doc).

    The ideal subspace is optional (None when absent)."""
    if not isinstance(data, dict):
        raise DocumentError("document must be a JSON object")
    for key in ("dim", "f", "J", "g"):
        if key not in data:
            raise DocumentError("missing required field %r" % key)
    ver = data.get("schema_version", SCHEMA_VERSION)
    if ver != SCHEMA_VERSION:
        raise DocumentError("unsupported schema_version %r" % (ver,))
    m = int(data["dim"])
    f = np.asarray(data["f"], dtype=float)
    if f.shape != (m, m, m):
        raise DocumentError("f must have shape (%d, %d, %d)" % (m, m, m))
    try:
        alg = RealLieAlgebra(f)
    except ValueError as exc:
        raise DocumentError("bad structure constants: %s" % exc)
    J = np.asarray(data["J"], dtype=float)
    g = np.asarray(data["g"], dtype=float)
    if J.shape != (m, m) or g.shape != (m, m):
        raise DocumentError("J and g must be %d x %d matrices" % (m, m))
    ideal = None
    if data.get("ideal_basis") is not None:
        basis = np.asarray(data["ideal_basis"], dtype=float)
        if basis.ndim != 2 or basis.shape[0] != m:
            raise DocumentError("ideal_basis must be a %d x k column matrix" % m)
        try:
            ideal = Subspace(m, basis)
        except ValueError as exc:
            raise DocumentError("bad ideal basis: %s" % exc)
    return alg, ideal, J, g, data


def _read_json(path):
    try:
        if path == "-":
            return json.load(sys.stdin)
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise DocumentError("cannot read %s: %s" % (path, exc))


def _emit(obj, out=None):
    text = json.dumps(obj, indent=2, sort_keys=True)
    if out in (None, "-"):
        print(text)
    else:
        with open(out, "w") as fh:
            fh.write(text + "\n")


# ------------------------------------------------------------ verdict json


def _witness_json(w):
    if w is None:
        return None
    return {"kind": w.kind, "data": w.data}


def _flags_json(flags):
    if flags is None:
        return None
    return {"kahler": flags.kahler, "pluriclosed": flags.pluriclosed,
            "balanced": flags.balanced, "residuals": flags.residuals}


def _certificate_json(cert):
    if cert is None:
        return None
    if cert.feasible:
        return {"feasible": True, "S": _complex_to_json(cert.S),
                "eq_residual": cert.eq_residual,
                "closure_residual": cert.closure_residual, "tol": cert.tol}
    return {"feasible": False, "min_residual": cert.min_residual,
            "rhs_norm": cert.rhs_norm, "tol": cert.tol}


def verdict_to_json(v):
    out = {
        "outcome": v.outcome,
        "case_tag": v.case_tag,
        "metric": _flags_json(v.metric_flags),
        "hs": _certificate_json(v.certificate),
        "witness": _witness_json(v.witness),
        "deformation": None,
        "notes": list(v.notes),
    }
    if v.deformation is not None:
        d = v.deformation
        out["deformation"] = {
            "a1": _complex_to_json(d.a1),
            "a2": _complex_to_json(d.a2),
            "Lambda1": list(map(float, d.Lambda1)),
            "Lambda2": list(map(float, d.Lambda2)),
            "kahler_residual": d.kahler_residual,
            "vtilde_residual": d.vtilde_residual,
        }
    if v.lemma3 is not None:
        out["lemma3"] = v.lemma3
    return out


# ---------------------------------------------------------------- commands


def cmd_gen(args):
    try:
        inst = gen_instance(args.case, n=args.n, seed=args.seed)
    except (UnsupportedCaseError, GenerationExhausted) as exc:
        print(str(exc), file=sys.stderr)
        return 2
    except Codim2ParamError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    _emit(document_from_instance(inst, seed=args.seed), args.out)
    return 0


def cmd_check(args):
    alg, ideal, J, g, _ = load_document(_read_json(args.file))
    tol = args.tol
    report = {"dim": alg.dim}
    sc = validate_structure_constants(alg, tol=tol)
    report["structure_constants"] = sc
    uni = is_unimodular(alg, tol=tol)
    report["unimodular"] = uni
    gsym = float(np.max(np.abs(g - g.T)))
    eigs = np.linalg.eigvalsh(0.5 * (g + g.T))
    report["metric"] = {"symmetry_residual": gsym, "min_eigenvalue": float(eigs[0]),
                        "positive_definite": bool(eigs[0] > 0)}
    j2 = float(np.max(np.abs(J @ J + np.eye(alg.dim))))
    report["complex_structure"] = {"square_residual": j2}
    report["complex_structure"].update(check_integrability(alg, J, tol=tol))
    comp = float(np.max(np.abs(J.T @ g @ J - g)))
    report["metric"]["J_compatibility_residual"] = comp
    ok = (sc["ok"] and uni["flag"] and gsym <= tol and eigs[0] > 0
          and j2 <= tol and report["complex_structure"]["flag"] and comp <= tol)
    if ideal is not None:
        chk = verify_abelian_ideal(alg, ideal, tol=tol)
        report["ideal"] = chk
        ok = ok and chk["is_ideal"] and chk["is_abelian"]
    report["ok"] = bool(ok)
    _emit(report, args.out)
    return 0 if ok else 1


def cmd_classify(args):
    alg, ideal, J, g, _ = load_document(_read_json(args.file))
    if ideal is None:
        raise DocumentError("classify needs an ideal_basis field")
    info = classify_case(alg, ideal, J, g)
    adm = admissible_frame(alg, ideal, J, g, tol=args.tol)
    flags = classify_metric(adm.frame)
    ds = derived_series(alg)
    out = {
        "case_tag": info.tag,
        "r0": info.r0,
        "dims": info.dims,
        "delta": adm.delta,
        "metric": _flags_json(flags),
        "derived_series": {"dims": ds["dims"],
                           "step": (None if ds["step"] == float("inf")
                                    else ds["step"])},
    }
    _emit(out, args.out)
    return 0


def cmd_decide(args):
    alg, ideal, J, g, _ = load_document(_read_json(args.file))
    if ideal is None:
        raise DocumentError("decide needs an ideal_basis field")
    verdict = decide(alg, ideal, J, g, tol=args.tol)
    _emit(verdict_to_json(verdict), args.out)
    return 0 if verdict.outcome in ("AlreadyKahler", "KahlerDeformation") else 3


def cmd_deform(args):
    doc_in = _read_json(args.file)
    alg, ideal, J, g, raw = load_document(doc_in)
    if ideal is None:
        raise DocumentError("deform needs an ideal_basis field")
    verdict = decide(alg, ideal, J, g, tol=args.tol)
    if verdict.outcome == "NoHS":
        _emit(verdict_to_json(verdict), args.out)
        return 3
    doc = {k: raw[k] for k in ("schema_version", "dim", "f", "J", "ideal_basis")}
    if verdict.outcome == "AlreadyKahler":
        doc["g"] = raw["g"]
        doc["deformation"] = None
        doc["note"] = "input metric is already closed"
    else:
        d = verdict.deformation
        doc["g"] = np.asarray(d.new_frame.g, dtype=float).tolist()
        doc["deformation"] = verdict_to_json(verdict)["deformation"]
    doc["provenance"] = {"generator": "hermsymp-deform",
                         "outcome": verdict.outcome}
    _emit(doc, args.out)
    return 0


def _batch_worker(task):
    case, n, seed, tol = task
    row = {"case": case, "n": n, "seed": seed}
    try:
        inst = gen_instance(case, n=n, seed=seed)
        verdict = decide(inst.alg, inst.ideal, inst.J, inst.g, tol=tol)
        row["verdict"] = verdict_to_json(verdict)
        row["outcome"] = verdict.outcome
    except Exception as exc:
        row["error"] = "%s: %s" % (type(exc).__name__, exc)
    return row


def cmd_batch(args):
    spec = _read_json(args.spec)
    tasks = spec["tasks"] if isinstance(spec, dict) else spec
    if not isinstance(tasks, list) or not tasks:
        raise DocumentError("batch spec must contain a nonempty task list")
    parsed = []
    for entry in tasks:
        try:
            case = entry["case"]
            n = int(entry.get("n", 3))
            seeds = entry.get("seeds")
            if seeds is None:
                seeds = [int(entry.get("seed", 0))]
            for seed in seeds:
                parsed.append((case, n, int(seed), args.tol))
        except (KeyError, TypeError, ValueError) as exc:
            raise DocumentError("bad batch entry %r: %s" % (entry, exc))
    parsed.sort(key=lambda t: (t[0], t[1], t[2]))
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_batch_worker, parsed))
    else:
        rows = [_batch_worker(t) for t in parsed]
    os.makedirs(args.out_dir, exist_ok=True)
    outcomes = {}
    failures = []
    for row in rows:
        name = "%s_n%d_s%d.json" % (row["case"], row["n"], row["seed"])
        with open(os.path.join(args.out_dir, name), "w") as fh:
            fh.write(json.dumps(row, indent=2, sort_keys=True) + "\n")
        if "error" in row:
            failures.append({"case": row["case"], "n": row["n"],
                             "seed": row["seed"], "error": row["error"]})
        else:
            outcomes[row["outcome"]] = outcomes.get(row["outcome"], 0) + 1
    aggregate = {
        "total": len(rows),
        "outcomes": outcomes,
        "failures": failures,
        "tasks": [{"case": c, "n": n, "seed": s} for c, n, s, _ in parsed],
    }
    with open(os.path.join(args.out_dir, "aggregate.json"), "w") as fh:
        fh.write(json.dumps(aggregate, indent=2, sort_keys=True) + "\n")
    print(json.dumps({"total": len(rows), "outcomes": outcomes,
                      "failed": len(failures)}, sort_keys=True))
    return 1 if failures else 0


# -------------------------------------------------------------------- main


def _build_parser():
    ap = argparse.ArgumentParser(prog="hermsymp",
                                 description="Hermitian structures on unimodular "
                                             "Lie algebras with codimension-two "
                                             "abelian ideals")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate an instance document")
    p.add_argument("--case", required=True, choices=list(CASE_TAGS))
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_gen)

    for name, fn, needs_out in (("check", cmd_check, True),
                                ("classify", cmd_classify, True),
                                ("decide", cmd_decide, True),
                                ("deform", cmd_deform, True)):
        p = sub.add_parser(name)
        p.add_argument("file")
        p.add_argument("--tol", type=float, default=1e-8)
        if needs_out:
            p.add_argument("--out", default=None)
        p.set_defaults(func=fn)

    p = sub.add_parser("batch", help="run gen+decide over a task list")
    p.add_argument("--spec", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--tol", type=float, default=1e-8)
    p.set_defaults(func=cmd_batch)
    return ap


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (DocumentError, Codim2ParamError, Codim2InputError,
            PipelineError, ValueError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1
    except UnsupportedCaseError as exc:
        print(str(exc), file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())