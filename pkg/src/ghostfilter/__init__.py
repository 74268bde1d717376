"""ghostfilter: predict developer acceptance of AI code suggestions.

Pipeline pieces: interaction-log model and synthetic generator, trailing-
window feature extraction, accepted-vs-rejected significance analysis,
a small weighted-loss classifier, the evaluation protocol with baselines,
and a live filtering service.
"""

__version__ = "0.1.0"

from .logs import (
    InteractionLog,
    LogParseError,
    PlantedEffects,
    SyntheticConfig,
    generate_synthetic,
    generate_with_truth,
    parse_logs,
    read_logs,
    serialize_log,
    synthetic_manifest,
    write_logs,
)
from .features import (
    CATALOG,
    CategoricalEncoders,
    FeatureMatrix,
    FeatureMismatchError,
    FeatureVector,
    assemble_matrix,
    build_developer_features,
    build_in_situ_features,
    build_project_features,
    read_matrix_csv,
    write_matrix_csv,
)
from .stats import (
    CorrelationReport,
    SignificanceEntry,
    adjust_p_values,
    cliffs_delta,
    correlation_prune,
    mann_whitney_u,
    significance_pipeline,
    spearman_rho,
)
from .model import (
    Normalizer,
    TrainConfig,
    TrainedModel,
    class_balanced_bce,
    decide,
    load_model,
    read_model,
    save_model,
    train,
    write_model,
)
from .evaluation import (
    EvalReport,
    ablate,
    balance_test_set,
    compute_metrics,
    threshold_sweep,
    time_split,
)
from .baselines import (
    HttpTransport,
    LlmPrompt,
    RecordedTransport,
    build_llm_prompt,
    circuit_breaker_train,
    llm_evaluate,
    llm_predict,
)
from .service import PredictionService, make_server
