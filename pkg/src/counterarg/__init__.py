"""Counter-argument generation pipeline.

Retrieval over a built-in BM25 index, keyphrase memory extraction, and a
two-step neural generator (sentence planner + token realizer) trained with a
small reverse-mode autodiff core.
"""

__version__ = "0.1.0"
