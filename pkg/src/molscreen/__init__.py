"""molscreen: structure-based virtual screening at desk scale.

Molecular graphs in, screening reports out: hashed and learnable graph
fingerprints, a dual-tower binding predictor trained with a noise-contrastive
objective against randomly paired negatives, per-target AUC evaluation, a
compound-only baseline for exposing dataset bias, and a seeded synthetic
benchmark generator with a planted pairwise binding rule.
"""

from .baselines import CompoundOnlyLogisticRegression, train_logreg_compound_only
from .ecfp import (
    EcfpConfig,
    EcfpFingerprint,
    EcfpFingerprinter,
    ecfp,
    ecfp_identifiers,
    fingerprint_hex,
    fnv1a64,
    tanimoto,
)
from .errors import (
    DanglingBond,
    DegenerateLabels,
    DegreeExceeded,
    EmptyBatch,
    ExhaustedNegativeSpace,
    GraphError,
    KindMismatch,
    MalformedCounts,
    MalformedLine,
    MalformedRecord,
    ManifestError,
    MolScreenError,
    NonFiniteLoss,
    ParseError,
    SdfError,
    ShapeMismatch,
    SpecInfeasible,
    TapeMismatch,
    UnresolvedId,
    UnsupportedVersion,
    WidthMismatch,
)
from .evaluation import EvalReport, TargetResult, auc, evaluate, evaluate_scores
from .gradcheck import GradCheckResult, gradient_check
from .graphs import (
    ELEMENTS,
    FEATURE_WIDTH,
    AtomRecord,
    Bond,
    MolGraph,
    adjacency,
    adjacency_matrix,
    encode_features,
)
from .io import (
    PairSample,
    ScreeningDataset,
    graph_to_dict,
    load_manifest,
    parse_graph_jsonl,
    parse_sdf_v2000,
    write_graphs_jsonl,
    write_manifest,
)
from .neuralfp import (
    ConvLayerParams,
    FpTape,
    NeuralFingerprint,
    NeuralFingerprinter,
    NeuralFpParams,
    atom_convolution_layer,
    init_neural_fp_params,
    neural_fingerprint,
    neural_fingerprint_backward,
)
from .params_io import read_model_params, write_model_params
from .predictor import (
    GraphCache,
    MlpLayer,
    MlpParams,
    ModelGrads,
    ModelParams,
    Prediction,
    init_mlp_params,
    init_model_params,
    mlp_backward,
    mlp_forward,
    nce_loss,
    predict,
    predict_logits,
    predict_many,
)
from .synthetic import (
    SynthSpec,
    contains_element_path,
    extract_motif,
    generate_synthetic,
    random_graph,
)
from .training import (
    DualTowerBindingModel,
    TrainConfig,
    TrainResult,
    sample_negatives,
    split_targets,
    train,
)

__version__ = "0.1.0"
