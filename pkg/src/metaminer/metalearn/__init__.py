from .database import MetaDatabase, MetaRow, build_meta_database, quality_rows
from .evaluation import EvaluationReport, accuracy, evaluate_meta_model, holdout_split, macro_f_score
from .forest import Hyperparameters, RandomForest
from .model import FeatureImportance, MetaModel, Recommendation, train_random_forest
from .ranking import DIRECTION, QUALITY_METRICS, Ranking, RankRow, metric_set, rank_algorithms

__all__ = [
    "MetaDatabase", "MetaRow", "build_meta_database", "quality_rows",
    "EvaluationReport", "accuracy", "evaluate_meta_model", "holdout_split", "macro_f_score",
    "Hyperparameters", "RandomForest", "FeatureImportance", "MetaModel", "Recommendation",
    "train_random_forest", "DIRECTION", "QUALITY_METRICS", "Ranking", "RankRow", "metric_set",
    "rank_algorithms",
]
