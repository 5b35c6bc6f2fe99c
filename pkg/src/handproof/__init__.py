"""handproof: tell human handwriting from machine-generated forgeries.

The package covers the full loop: lognormal stroke modeling (synthesis and
extraction), affine/geometric forgery generation, a from-scratch GRU verifier
trained on velocity or delta sequences, evaluation protocols with ranking
metrics, dataset I/O, and an HTTP verification service with a CLI.
"""

from .errors import (
    CorruptFile,
    DegenerateDuration,
    DimensionMismatch,
    EmptyDataset,
    EmptyPlan,
    EmptyTrainingSet,
    ExtractionFailed,
    HandproofError,
    LengthMismatch,
    MalformedXml,
    MissingDataset,
    NonFiniteValue,
    NonMonotonicTime,
    NonPositiveDuration,
    NotFound,
    ParseError,
    SingleClassDataset,
    SingleClassLabels,
    SingleClassScores,
    SingleClassTrainingSet,
    StaleCache,
    TooFewPoints,
    UnsupportedVersion,
)
from .trajectory import (
    HUMAN,
    LABELS,
    SEQ_CAPACITY,
    SYNTHETIC,
    ChannelStats,
    FeatureSequence,
    LabeledSample,
    Point,
    Trajectory,
    apply_standardizer,
    fit_standardizer,
    pad_or_truncate,
    resample_uniform,
    to_deltas,
    to_features,
    to_velocity,
    validate,
)
from .lognormal import (
    ActionPlan,
    LognormalComponent,
    component_angle,
    component_speed,
    compute_snr,
    extract_plan,
    kinematic_synthesize,
    nblog_rate,
    perturb_plan,
    plan_speed,
    random_plan,
    reconstruct,
    synthesize_trajectory,
)
from .affine import (
    AffineParams,
    affine_synthesize,
    segment_components,
    sinusoidal_warp,
    slant_skew,
)
from .gru import (
    GruModel,
    TrainConfig,
    adam_update,
    backward,
    bce_loss,
    forward,
    gradient_check,
    gru_step,
    init_model,
    load_model,
    predict,
    prepare_sequence,
    save_model,
    train,
)
from .metrics import (
    MetricsReport,
    balanced_accuracy_fscore,
    eer,
    roc_auc,
    stratified_split,
    weighted_fscore,
)
from .experiments import (
    load_dataset_files,
    run_experiment,
    score_samples,
    write_report,
)
from .datasets import (
    GdsLoadResult,
    dataset_stats,
    load_gds_xml,
    read_jsonl,
    write_jsonl,
)
from .service import ModelHolder, create_app, serve

__version__ = "0.1.0"
