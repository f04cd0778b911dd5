"""Final action emission and feedback routing.

The executor turns the winning decision plus the refined policy into one
ActionCommand per surviving record, then routes the observed outcome back:
the outcome joins the decision's feedback history and the episode's scenario
vector lands in short-term memory.
"""

from dataclasses import dataclass

import numpy as np

from .decision import DecisionCandidate, FeedbackHistory
from .errors import ConfigError
from .memory import MemoryStore
from .sim2real import PolicyTable


@dataclass(frozen=True)
class ActionCommand:
    record_id: int
    action: int
    decision_id: int
    state: tuple
    confidence: float

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ConfigError(f"confidence must be in [0, 1], got {self.confidence}")


@dataclass(frozen=True)
class FeedbackRecord:
    record_id: int
    outcome: float
    matched: bool


def select_optimal_action(decision: DecisionCandidate, policy: PolicyTable,
                          state, confidence: float, record_id: int) -> ActionCommand:
    """Command for the policy's greedy action at `state` with the relevance
    confidence carried from scenario selection."""
    action = policy.action(state)  # raises StateLookupError when out of bounds
    return ActionCommand(record_id=record_id, action=action,
                         decision_id=decision.id, state=tuple(state),
                         confidence=confidence)


def route_feedback(fb: FeedbackRecord, decision_id: int,
                   history: FeedbackHistory, store: MemoryStore,
                   scenario_vector) -> None:
    """Append-only feedback routing: outcome into the decision history,
    episode scenario vector into STM labeled with the outcome match."""
    history.add(decision_id, fb.outcome)
    store.stm_append(np.asarray(scenario_vector, dtype=float), int(fb.matched))
