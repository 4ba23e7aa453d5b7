"""Keypoint-argument match scoring toolkit.

Scores (argument, keypoint) candidate pairs with a trainable dense head over
precomputed contextual embeddings plus optional syntactic or lexical feature
vectors, and evaluates rankings with mAP strict/relaxed under two evaluation
methods.
"""

from kpmatch.errors import ConfigError, DataError, KpmatchError

__version__ = "0.1.0"

__all__ = ["ConfigError", "DataError", "KpmatchError", "__version__"]
