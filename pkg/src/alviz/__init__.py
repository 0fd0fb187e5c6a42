"""Active-learning experiment engine with a prediction-change panel backend."""

__version__ = "0.1.0"
