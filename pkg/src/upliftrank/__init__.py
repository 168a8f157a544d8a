"""Treatment-effect ranking toolkit.

Evaluate uplift rankings with the Qini/uplift curve family, score them
with learning-to-rank metrics, and train models that optimise those
metrics directly: pointwise uplift baselines and a listwise boosted-tree
ranker. A batch CLI (``upliftrank``) drives simulation, training,
evaluation and repeated experiments.
"""

from ._kernels import BACKEND as kernel_backend
from .baselines import (ScorerKind, UpliftScorer, fit_dummy_treatment,
                        fit_flipped_label, fit_two_model, score)
from .data import (Category, Partition, RankedDataset, UpliftDataset,
                   UpliftInstance, categorize, count_control,
                   count_responders_joint, count_responders_separate,
                   count_treated, load_csv, rank_by_scores,
                   split_train_test)
from .evaluation import (AUUCResult, CountMode, Curve, CurveKind,
                         CurvePoint, ValueFunctionSpec, auuc,
                         auuc_at_cutoff, build_curve,
                         equivalence_check_qini_uplift_separate,
                         paired_t_test, random_baseline, spec_from_label,
                         value_at)
from .gbrt import BoostedEnsemble, GbrtConfig, Loss, Tree, fit, fit_tree, \
    predict, predict_proba
from .lambdamart import LambdaBatch, LambdaConfig, compute_lambdas, \
    predict_scores, train
from .metrics import (MetricKind, Query, average_precision,
                      cumulative_gain, dcg, mean_average_precision, ndcg,
                      pcg, pcg_separate, precision_at_k,
                      read_ranking_file, swap_delta, write_ranking_file)
from .relevance import (RelevanceScheme, assign_relevance, flipped_label,
                        relevance_of, scheme_values)
from .simulate import ScenarioSpec, simulate, standard_scenarios

__version__ = "0.1.0"
