"""Flow-based botnet detection: flow extraction, classifiers, hyperparameter
search and a streaming detection engine."""

__version__ = "0.1.0"
