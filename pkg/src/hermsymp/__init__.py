"""Hermitian structures on unimodular Lie algebras with a codimension-two
abelian ideal: constructors, invariants, the closure linear system, and the
Kahler deformation / obstruction pipeline."""

from .lie_core import (DEFAULT_TOL, RealLieAlgebra, Subspace,
                       derived_series, derived_subalgebra_span, is_unimodular,
                       validate_structure_constants, verify_abelian_ideal)
from .complex_frames import (ComplexStructure, HermitianMetric, InvariantForm,
                             UnitaryFrame, algebra_from_structure_constants,
                             build_unitary_frame, canonical_frame_columns,
                             ce_differential, check_integrability, kahler_form,
                             standard_complex_structure, torsion_tensor,
                             unimodularity_residual_CD, verify_jacobi_CD)
from .metric_classifier import (HSCertificate, HSInfeasible, MetricFlags,
                                classify_metric, fundamental_form_differential,
                                hs_solve, hs_verify, positive_exact_obstruction)
from .codim2_models import (AB_R0, AB_R1_SUB2, AB_R1_SUB3, AB_R2, CASE_TAGS,
                            Codim2BuildError, Codim2Blocks, Codim2InputError,
                            Codim2Instance, Codim2ParamError, Codim2Params,
                            GenerationExhausted, NA_DEGENERATE, NA_GENERIC,
                            NA_HALF_GENERIC, UnsupportedCaseError,
                            admissible_frame, block_relation_residuals,
                            blocks_from_params, build_case1, build_case2,
                            classify_case, frame_blocks_EVY, gen_instance,
                            structure_tensors_from_blocks, verify_lemma2)
from .st_pipeline import (DeformationResult, Lemma3Certificate, PipelineError,
                          Verdict, Witness, decide, deform_to_kahler,
                          lemma3_residuals, partition_certificate,
                          subcase_unitary_change)

__version__ = "0.1.0"