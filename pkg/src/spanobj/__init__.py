"""Span-extraction objectives, decoding, and evaluation for extractive QA.

A numpy library for studying how the training objective of a span
extractor shapes its behaviour: independent boundary classifiers, a joint
distribution over spans, their compound, a conditional start-then-end
factorization, and shared normalization across multi-passage contexts —
plus the decoding heuristics, metrics, retrieval utilities, significance
protocol, and synthetic corpus generator needed to compare them end to
end on one machine.
"""

from .data import (
    ContextPassage,
    ContextSet,
    EmbeddingTable,
    EncodedContext,
    EncodedExample,
    Example,
    GENERATOR_MODES,
    GeneratorConfig,
    MODE_GROUPED,
    MODE_QUOTED,
    MODE_TWIN,
    Passage,
    SyntheticDataset,
    Vocabulary,
    annotate_gt,
    build_context,
    char_span_to_token_span,
    encode_contexts,
    encode_examples,
    generate_synthetic,
    load_contexts,
    load_dataset,
    load_embeddings,
    retrieval_loss,
    save_contexts,
    save_dataset,
    save_embeddings,
    score_passages,
    tokenize,
)
from .decoding import (
    CrossBoundaryReport,
    DEFAULT_BEAM_WIDTH,
    DEFAULT_MAX_SPAN_LENGTH,
    DEFAULT_SURFACE_TOP_K,
    Prediction,
    SpanDistribution,
    apply_filters,
    beam_decode,
    cross_boundary_check,
    independent_distribution,
    joint_distribution,
    length_filter,
    span_crosses,
    span_text,
    surface_form_filter,
    top_k,
    two_region_fixture,
)
from .errors import (
    ConfigError,
    DegenerateInputError,
    DegeneratePairsError,
    DegenerateSampleError,
    DivergenceError,
    InvalidInputError,
    InvalidTargetError,
    NoSupervisionError,
    OracleFailureError,
    SpanObjError,
    VocabularyError,
)
from .evaluation import (
    MetricReport,
    SpanLengthReport,
    avg_topk_span_length,
    em_f1,
    normalize_answer,
    score_dataset,
    score_pairs,
)
from .model import (
    AdamW,
    Checkpoint,
    EvalReport,
    ForwardCache,
    ModelParams,
    TrainConfig,
    TrainResult,
    backward,
    context_loss_and_grads,
    evaluate_model,
    example_loss,
    forward,
    init_params,
    load_checkpoint,
    loss_and_grads,
    predict_distribution,
    save_checkpoint,
    train,
    train_dss,
)
from .numerics import (
    MASK_FULL,
    MASK_POLICIES,
    MASK_VALID,
    ScoreMatrix,
    finite_diff_gradient,
    log_softmax,
    logsumexp,
    softmax,
    span_mask,
    vectorize,
)
from .objectives import (
    BOUNDARIES,
    BOUNDARY_END,
    BOUNDARY_JOINT,
    BOUNDARY_START,
    ConditionalParams,
    LossResult,
    OBJ_COMPOUND,
    OBJ_COMPOUND_SHARED,
    OBJ_CONDITIONAL,
    OBJ_INDEPENDENT,
    OBJ_JOINT,
    OBJECTIVE_KINDS,
    SharedNormTarget,
    SpanTarget,
    compound_loss,
    conditional_end_scores,
    conditional_loss,
    independent_loss,
    joint_loss,
    shared_norm_loss,
)
from .similarity import (
    BoundaryRepresentations,
    KIND_ADDITIVE,
    KIND_ADDITIVE_WEIGHTED_DOT,
    KIND_DOT,
    KIND_MULTIPLICATIVE_ADDITIVE,
    KIND_WEIGHTED_DOT,
    SIMILARITY_KINDS,
    SimilarityParams,
    joint_boundary_reps,
    bidaf_similarity,
    span_scores,
    span_scores_grad,
    weight_length,
)
from .stats import (
    AD_CRITICAL_5PCT,
    ADResult,
    ALPHA,
    ComparisonRow,
    RunSample,
    SignificanceReport,
    anderson_darling,
    paired_t_test_one_tailed,
    regularized_incomplete_beta,
    significance_report,
    student_t_tail,
)

__version__ = "1.0.0"
