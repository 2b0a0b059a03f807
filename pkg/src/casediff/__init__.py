"""Estimate how hard image cases are for humans to classify.

Works on precomputed embeddings and class labels: centroid and neighbour
based scores without training data, extra-trees regression when ground-truth
difficulties exist, panel aggregation of rater answers, and rank-correlation
evaluation with a paired bootstrap.
"""
from .baselines import classification_margin, classification_uncertainty, entropy_score, self_taught_score
from .dataset import (
    AnnotationTable,
    DataError,
    DifficultyVector,
    EmbeddingDataset,
    ProbabilityMatrix,
    load_annotations,
    load_embeddings,
    load_probabilities,
    load_scores,
    write_scores,
)
from .geometry import (
    compute_centroids,
    cosine_similarity,
    inverse_similarity,
    inverse_softmax_similarity,
    normalize_per_class,
)
from .regression import ExtraTreesParams, cross_val_predict, fit_extra_trees, predict
from .scp import rank_neighbors, sample_classification_power, weighted_roc_auc
from .stats import bootstrap_compare, kendall_tau, tau_to_concordance
from .truth import CertaintyScale, aggregate_truth, leave_one_annotator_out

__version__ = "0.1.0"
