"""Writer-dependent signature verification.

Per-user spectral feature selection, fuzzy clustering of training signatures
into interval-valued references, and acceptance-count verification, with a
FAR/FRR/EER evaluation harness.
"""

__version__ = "0.1.0"

from .dataset import (Dataset, GeneratorConfig, Protocol, SignatureSample,
                      SyntheticGroundTruth, generate_synthetic, load_dataset,
                      make_trial_split, write_dataset)
from .errors import SigVerifyError
from .evaluation import (ErrorCurve, EvaluationConfig, ProtocolReport, compute_eer,
                         run_protocol, sweep_feature_counts, sweep_thresholds)
from .fuzzy_cluster import FuzzyPartition, fuzzy_c_means, harden
from .knowledgebase import Knowledgebase, load_knowledgebase, save_knowledgebase
from .lars import lars_path, lars_regression
from .spectral_select import (FeatureSelection, SelectionParams, build_affinity_graph,
                              degree_and_laplacian, select_user_features,
                              spectral_embedding)
from .symbolic_model import (EnrollmentParams, ReferenceInterval, UserModel,
                             VerificationResult, build_reference, enroll_user, verify)

__all__ = [
    "Dataset", "GeneratorConfig", "Protocol", "SignatureSample", "SyntheticGroundTruth",
    "generate_synthetic", "load_dataset", "make_trial_split", "write_dataset",
    "SigVerifyError", "ErrorCurve", "EvaluationConfig", "ProtocolReport", "compute_eer",
    "run_protocol", "sweep_feature_counts", "sweep_thresholds", "FuzzyPartition",
    "fuzzy_c_means", "harden", "Knowledgebase", "load_knowledgebase", "save_knowledgebase",
    "lars_path", "lars_regression", "FeatureSelection", "SelectionParams",
    "build_affinity_graph", "degree_and_laplacian", "select_user_features",
    "spectral_embedding", "EnrollmentParams", "ReferenceInterval", "UserModel",
    "VerificationResult", "build_reference", "enroll_user", "verify",
]
