"""Similarity spaces from dissimilarity data, and learned mappings into them."""

from .core import (
    DissimilarityMatrix,
    Embedding,
    FeatureTable,
    LabeledDataset,
    SimilarityMatrix,
    derive_seed,
    load_dissimilarity_matrix,
    load_embedding,
    load_feature_table,
    make_rng,
    similarity_to_dissimilarity,
    write_embedding,
    write_feature_table,
)
from .mds import (
    SmacofConfig,
    StressCurve,
    classical_init,
    dimension_scan,
    guttman_step,
    procrustes_align,
    raw_stress,
    smacof,
    stress1,
)
from .augment import AugmentSpec, RasterImage, augment_dataset, augment_image, propagate_labels
from .mapping import (
    BaselineModel,
    DomainPartition,
    LinearMap,
    baseline_predict,
    conceptual_distance,
    fit_baseline,
    fit_linear_map,
    predict,
    triangulate,
)
from .evaluation import (
    FoldPlan,
    PredictorSpec,
    StudyReport,
    label_features,
    make_folds,
    rmse,
    run_loocv,
    run_study,
    shuffle_targets,
)

__version__ = "0.1.0"
