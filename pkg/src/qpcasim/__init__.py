"""Classical simulator for PCA-style quantum data compression.

The package builds the classical singular-value analysis of a data matrix,
mirrors it in an explicit multi-register statevector simulation (tree-based
amplitude encoding, eigenvalue labeling, conditional rotation, postselection),
and layers small classifier and regression demos on top of the compressed
representation.
"""

from .errors import (
    ContractViolationError,
    DegenerateRegressionError,
    DegenerateSpectrumError,
    InvalidInputError,
    InvalidRotationError,
    NumericalFailureError,
    OutOfRangeError,
    ParseError,
    QpcaError,
    SingularSystemError,
    UnderSampledError,
    UnknownRegisterError,
    VanishingSuccessError,
    WeakAnchorError,
)
from .pca_oracle import (
    CompressedMatrix,
    DataMatrix,
    OverlapReport,
    SpectralModel,
    expected_compressed_state,
    expected_row_state,
    pairwise_overlap_report,
    project,
    select_dimension,
    svd_decompose,
)
from .qram_store import (
    QramTree,
    apply_norm_prep,
    apply_row_prep,
    build_tree,
    norm_prep_unitary,
    prepare_anchor,
    prepare_data_state,
    prepare_row_state,
    row_prep_unitary,
)
from .statevector import Register, StateVector
from .sv_engine import (
    LABEL_MODE_IDEAL,
    LABEL_MODE_QUANTIZED,
    PHASE_SCALE,
    PhaseConfig,
    PostselectResult,
    RegisterSample,
    RhoSpec,
    SwapTestResult,
    amplification_repetitions,
    apply_cr_beta,
    apply_cu_lambda,
    check_label_distinctness,
    decode_label,
    eigen_labels,
    inverse_phase_estimate,
    measure_register,
    phase_estimate,
    postselect,
    swap_test,
)
from .qpca_pipeline import (
    MODE_IDEAL,
    MODE_QUANTIZED,
    MODE_SAMPLED,
    PERTURB_ALTERNATING,
    PERTURB_UNIFORM_RELATIVE,
    SCOPE_FULL,
    SCOPE_SINGLE,
    SCOPE_SUBSET,
    AnchorProfile,
    CompressResult,
    CompressionReport,
    LedgerConstants,
    ResourceLedger,
    RunResult,
    ScalingResult,
    SpectrumSample,
    compress,
    error_scaling_experiment,
    estimate_anchor,
    exact_anchor_profile,
    exact_spectrum,
    extract_spectrum,
    ledger_predict,
    perturb_beta,
    run_compression,
)
from .qml_apps import (
    LabeledDataset,
    LssvmModel,
    OverlapDemoResult,
    QlrDemoResult,
    QlrPrediction,
    lssvm_classify,
    lssvm_decision_value,
    lssvm_train,
    qlr_predict,
    qlr_state_demo,
    qsvm_state_demo,
)

__all__ = [
    "QpcaError",
    "InvalidInputError",
    "ParseError",
    "OutOfRangeError",
    "NumericalFailureError",
    "ContractViolationError",
    "UnknownRegisterError",
    "DegenerateSpectrumError",
    "InvalidRotationError",
    "VanishingSuccessError",
    "WeakAnchorError",
    "UnderSampledError",
    "SingularSystemError",
    "DegenerateRegressionError",
    "Register",
    "StateVector",
    "DataMatrix",
    "SpectralModel",
    "CompressedMatrix",
    "OverlapReport",
    "svd_decompose",
    "select_dimension",
    "project",
    "expected_compressed_state",
    "expected_row_state",
    "pairwise_overlap_report",
    "QramTree",
    "build_tree",
    "norm_prep_unitary",
    "row_prep_unitary",
    "apply_norm_prep",
    "apply_row_prep",
    "prepare_data_state",
    "prepare_row_state",
    "prepare_anchor",
    "PHASE_SCALE",
    "LABEL_MODE_IDEAL",
    "LABEL_MODE_QUANTIZED",
    "RhoSpec",
    "PhaseConfig",
    "eigen_labels",
    "decode_label",
    "check_label_distinctness",
    "phase_estimate",
    "inverse_phase_estimate",
    "apply_cu_lambda",
    "apply_cr_beta",
    "PostselectResult",
    "amplification_repetitions",
    "postselect",
    "SwapTestResult",
    "swap_test",
    "RegisterSample",
    "measure_register",
    "MODE_IDEAL",
    "MODE_QUANTIZED",
    "MODE_SAMPLED",
    "SCOPE_FULL",
    "SCOPE_SUBSET",
    "SCOPE_SINGLE",
    "PERTURB_ALTERNATING",
    "PERTURB_UNIFORM_RELATIVE",
    "SpectrumSample",
    "AnchorProfile",
    "LedgerConstants",
    "ResourceLedger",
    "ledger_predict",
    "exact_spectrum",
    "extract_spectrum",
    "exact_anchor_profile",
    "estimate_anchor",
    "CompressionReport",
    "CompressResult",
    "RunResult",
    "compress",
    "run_compression",
    "perturb_beta",
    "ScalingResult",
    "error_scaling_experiment",
    "LabeledDataset",
    "LssvmModel",
    "lssvm_train",
    "lssvm_decision_value",
    "lssvm_classify",
    "OverlapDemoResult",
    "qsvm_state_demo",
    "QlrPrediction",
    "qlr_predict",
    "QlrDemoResult",
    "qlr_state_demo",
]
