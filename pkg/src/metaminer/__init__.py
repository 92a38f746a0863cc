"""Meta-learning recommender for process discovery algorithms."""

__version__ = "0.1.0"
