"""lcprune: training-free dataset pruning over exported feature packs.

Scores fine-tuning samples by learning complexity (weighted-KNN confidence
averaged over layers, or reciprocal perplexity averaged over dropout
subnets), selects easy-and-diverse subsets under a budget, and evaluates
scoring functions by rank correlation and diversity.
"""

from .clustering import ClusterModel, diversity, kmeans
from .errors import DataValidationError, LcpruneError, NumericalError, UsageError
from .evaluation import EvalReport, rank_vector, selection_jaccard, spearman, summarize
from .feature_store import (FeaturePack, LayerMatrix, load_pack,
                            load_text_matrix, validate_pack, write_pack)
from .knn_scoring import (KnnConfig, ScoreVector, entropy_score, knn_confidence,
                          knn_val_accuracy, layer_confidences,
                          lc_classification_score, lc_regression_score,
                          least_confidence_score, load_score_vector,
                          margin_score, save_score_vector, select_cluster_layer,
                          tune_k)
from .selection import (LevelSet, SelectionResult, apply_level_set, apportion,
                        budget_size, cd_select, easy_diverse_select,
                        herding_select, kcenter_greedy_select, load_selection,
                        random_select, save_selection, threshold_from_budget,
                        top_k_select)
from .synthetic import (GmmComponent, GmmSpec, SyntheticPack, gmm_density,
                        prop31_check, reference_spec, sample_gmm)

__version__ = "0.1.0"
