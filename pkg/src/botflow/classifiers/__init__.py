"""From-scratch classifiers behind a uniform fit/predict interface."""

from .bayes import GaussianNB, gaussian_density
from .ensemble import AdaBoost, RandomForest
from .model import TrainedModel, feature_importances, fit, predict, predict_batch
from .neighbors import BallTree, KDTree, KNeighbors, knn_distance
from .params import ClassifierSpec, Kind, Param, defaults, genes, schema, validate
from .serialize import FORMAT_VERSION, deserialize_model, load_model, save_model, serialize_model
from .svm import LinearSVM, svm_objective
from .tree import DecisionTree, Tree, TreeBuilder, impurity

__all__ = [
    "AdaBoost", "BallTree", "ClassifierSpec", "DecisionTree", "FORMAT_VERSION", "GaussianNB",
    "KDTree", "KNeighbors", "Kind", "LinearSVM", "Param", "RandomForest", "TrainedModel", "Tree",
    "TreeBuilder", "defaults", "deserialize_model", "feature_importances", "fit", "gaussian_density",
    "genes", "impurity", "knn_distance", "load_model", "predict", "predict_batch", "save_model",
    "schema", "serialize_model", "svm_objective", "validate",
]
