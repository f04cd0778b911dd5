"""Deterministic multi-scenario reasoning engine and simulation harness.

Submodules follow the pipeline order: dataset (synthetic corpus), ingest
(trust filter + normalization), scenario (candidate generation), attention
(relevance + refinement), memory (STM/LTM retrieval), decision (utility
argmax), sim2real (gridworld policies + alignment), executor (action
emission), evaluation (per-step confusion metrics), pipeline (the runner),
cli (gen / run / report).
"""

__version__ = "0.1.0"
