"""Speaker verification toolkit: x-vector embeddings, similarity scoring,
a PLDA backend, and detection metrics over synthetic corpora."""

try:
    from ._svkit_core import *  # noqa: F401,F403  (installed layout)
except ImportError:
    from _svkit_core import *  # noqa: F401,F403  (build-tree layout)
