"""Graph-of-records summarization toolkit (C++ core)."""

try:
    from gor._gor import *  # noqa: F401,F403
    from gor._gor import __doc__ as _core_doc
except ImportError:  # running against a bare build tree
    from _gor import *  # noqa: F401,F403
    from _gor import __doc__ as _core_doc

__all__ = [
    "tokenize",
    "split_chunks",
    "bertscore_f1",
    "rouge_scores",
    "lr_at",
    "grad_check",
    "run_pipeline",
]
