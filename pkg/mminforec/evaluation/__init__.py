from .metrics import hr_at_k, ndcg_at_k, rank_of_target, ranks_of_targets
from .ranking import SPLITS, Evaluation, MetricsRecord, RankResult, evaluate_full_ranking, evaluate_scorer, summarize
from .baselines import evaluate_oracle, evaluate_popularity, popularity_scores, random_expectation
