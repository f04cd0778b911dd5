"""Task decomposition and context-weighted decision scoring.

Templates expand depth-first into flat subtask lists; a template may embed
references to other templates, and expansion aborts on cycles. Decision
scoring is a weighted sum of context factors with an argmax selection; the
feedback channel keeps a per-decision running mean of past outcomes.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConfigError,
    EmptyInputError,
    ShapeError,
    TemplateCycleError,
    TemplateLookupError,
)


@dataclass(frozen=True)
class Subtask:
    id: str
    weights: tuple

    def weight_vector(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=float)


@dataclass(frozen=True)
class TaskRef:
    """Reference to another template, expanded in place."""

    task_id: str


@dataclass(frozen=True)
class TaskTemplate:
    id: str
    steps: tuple  # Subtask | TaskRef, in execution order

    def __post_init__(self):
        if not self.steps:
            raise ConfigError(f"template {self.id!r} has no subtasks")
        ids = [s.id for s in self.steps if isinstance(s, Subtask)]
        if len(ids) != len(set(ids)):
            raise ConfigError(f"duplicate subtask ids in template {self.id!r}")


def decompose(registry: dict, task_id: str) -> list:
    """Flat, ordered subtask list for a task; nested references expand
    depth-first and a template may appear at most once per path."""

    def expand(tid, path):
        if tid not in registry:
            raise TemplateLookupError(f"unknown task template {tid!r}")
        if tid in path:
            raise TemplateCycleError(f"template cycle through {tid!r}")
        out = []
        for step in registry[tid].steps:
            if isinstance(step, TaskRef):
                out.extend(expand(step.task_id, path | {tid}))
            else:
                out.append(step)
        return out

    return expand(task_id, frozenset())


def subtask_priority(subtask: Subtask, context) -> float:
    """Dot product of the subtask's weight vector with the context vector."""
    w = subtask.weight_vector()
    c = np.asarray(context, dtype=float)
    if w.shape != c.shape:
        raise ShapeError(f"weights {w.shape} vs context {c.shape} for {subtask.id!r}")
    return float(np.dot(w, c))


@dataclass
class DecisionCandidate:
    id: int
    context: np.ndarray
    predicted_outcome: float = 0.0
    historical_feedback: float = 0.0


@dataclass(frozen=True)
class ContextWeights:
    w: tuple
    lam: float = 0.4

    def __post_init__(self):
        arr = np.asarray(self.w, dtype=float)
        if arr.size == 0 or not np.any(arr):
            raise ConfigError("context weights must not be all zero")
        if np.any(arr < 0.0):
            raise ConfigError("context weights must be >= 0")
        if self.lam < 0.0:
            raise ConfigError("lambda must be >= 0")

    def vector(self) -> np.ndarray:
        return np.asarray(self.w, dtype=float)


def decision_utility(candidate: DecisionCandidate, weights: ContextWeights) -> float:
    """Weighted sum of the candidate's context factors."""
    w = weights.vector()
    c = np.asarray(candidate.context, dtype=float)
    if w.shape != c.shape:
        raise ShapeError(f"weights {w.shape} vs context factors {c.shape}")
    return float(np.dot(w, c))


def select_decision(candidates, weights: ContextWeights) -> DecisionCandidate:
    """Candidate with maximal utility; ties go to the lowest list index."""
    if not candidates:
        raise EmptyInputError("no decision candidates")
    best = None
    best_u = -np.inf
    for cand in candidates:
        u = decision_utility(cand, weights)
        if u > best_u:
            best = cand
            best_u = u
    return best


def feedback_adjusted_utility(candidate: DecisionCandidate, lam: float) -> float:
    return candidate.predicted_outcome + lam * candidate.historical_feedback


@dataclass
class FeedbackHistory:
    """Append-only outcome log per decision id with running means."""

    outcomes: dict = field(default_factory=dict)

    def add(self, decision_id: int, outcome: float) -> None:
        self.outcomes.setdefault(int(decision_id), []).append(float(outcome))

    def count(self, decision_id: int) -> int:
        return len(self.outcomes.get(int(decision_id), ()))

    def mean(self, decision_id: int) -> float:
        """Running mean of past outcomes; 0.0 for an unseen decision id."""
        seen = self.outcomes.get(int(decision_id))
        if not seen:
            return 0.0
        return sum(seen) / len(seen)
