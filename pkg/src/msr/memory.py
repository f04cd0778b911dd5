"""Short- and long-term memory with cosine retrieval and attention readout.

The store is single-writer: appends and promotions mutate it, retrieval and
readout are read-only. STM is a bounded FIFO; entries evicted at capacity are
always promoted to LTM with their original timestamp. When the scored entry
set grows past `sparse_readout_threshold`, the readout keeps only the
`sparse_readout_top_n` best-scoring entries and renormalizes over them.
"""

from dataclasses import dataclass
from collections import deque

import numpy as np

from .errors import ConfigError, EmptyMemoryError, InvalidEntryError

STM = "stm"
LTM = "ltm"


@dataclass
class MemoryEntry:
    vector: np.ndarray
    label: int
    timestamp: int
    tier: str


def cosine_score(query, entry) -> float:
    """Standard cosine similarity in [-1, 1]; rejects zero vectors."""
    q = np.asarray(query, dtype=float)
    e = np.asarray(entry, dtype=float)
    qn = np.linalg.norm(q)
    en = np.linalg.norm(e)
    if qn == 0.0 or en == 0.0:
        raise InvalidEntryError("cosine undefined for a zero vector")
    return float(np.dot(q, e) / (qn * en))


class MemoryStore:
    def __init__(self, stm_capacity: int = 32, sparse_readout_top_n: int = 8,
                 sparse_readout_threshold: int = 64):
        if stm_capacity < 1:
            raise ConfigError(f"stm_capacity must be >= 1, got {stm_capacity}")
        if sparse_readout_top_n < 1:
            raise ConfigError("sparse_readout_top_n must be >= 1")
        self.stm_capacity = stm_capacity
        self.sparse_readout_top_n = sparse_readout_top_n
        self.sparse_readout_threshold = sparse_readout_threshold
        self.stm = deque()
        self.ltm = []
        self.clock = 0

    def _next_timestamp(self) -> int:
        t = self.clock
        self.clock += 1
        return t

    def stm_append(self, vector, label: int) -> None:
        """Append to STM; at capacity the oldest entry moves to LTM."""
        v = np.asarray(vector, dtype=float)
        if not np.any(v):
            raise InvalidEntryError("cannot store an all-zero vector")
        self.stm.append(MemoryEntry(v.copy(), int(label), self._next_timestamp(), STM))
        if len(self.stm) > self.stm_capacity:
            self.promote_to_ltm(self.stm.popleft())

    def promote_to_ltm(self, entry: MemoryEntry) -> None:
        """Append an entry to LTM, keeping its original timestamp. No dedup."""
        entry.tier = LTM
        self.ltm.append(entry)
        if entry.timestamp >= self.clock:
            self.clock = entry.timestamp + 1

    def ltm_retrieve(self, query) -> MemoryEntry:
        """The LTM entry with maximal cosine score; ties go to the earliest
        timestamp."""
        if not self.ltm:
            raise EmptyMemoryError("LTM is empty")
        best = None
        best_score = -np.inf
        for entry in sorted(self.ltm, key=lambda e: e.timestamp):
            score = cosine_score(query, entry.vector)
            if score > best_score:
                best = entry
                best_score = score
        return best

    def _gather(self, tiers):
        tier_set = set(tiers)
        unknown = tier_set - {STM, LTM}
        if unknown:
            raise ConfigError(f"unknown memory tiers {sorted(unknown)}")
        entries = []
        if LTM in tier_set:
            entries.extend(self.ltm)
        if STM in tier_set:
            entries.extend(self.stm)
        return entries

    def attention_readout(self, query, tiers=(STM, LTM)) -> np.ndarray:
        """Softmax-over-cosine weighted average of entries in the given tiers.

        Weights are positive and sum to 1, so each output coordinate stays
        inside the range spanned by the entries.
        """
        entries = self._gather(tiers)
        if not entries:
            raise EmptyMemoryError(f"no entries in tiers {tuple(tiers)}")
        scores = np.asarray([cosine_score(query, e.vector) for e in entries])
        if len(entries) > self.sparse_readout_threshold:
            keep = np.argsort(-scores, kind="stable")[: self.sparse_readout_top_n]
            keep.sort()
            entries = [entries[i] for i in keep]
            scores = scores[keep]
        z = np.exp(scores - scores.max())
        weights = z / z.sum()
        vectors = np.stack([e.vector for e in entries])
        return weights @ vectors
