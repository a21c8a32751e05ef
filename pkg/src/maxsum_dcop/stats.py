"""Search-effort counters shared by the response-message maximizers."""

from __future__ import annotations

from dataclasses import dataclass

__all__ = ["SearchStats"]


@dataclass
class SearchStats:
    """Work done while maximizing response messages.

    leaves_evaluated counts full assignments whose utility was computed,
    expansions counts interior/leaf nodes whose bound was evaluated, prunes
    counts subtrees discarded by a bound test, and total_leaves is the size
    of the full assignment space the search ranged over (summed across
    calls).  A plain exhaustive pass has ``leaves_evaluated == total_leaves``
    and no prunes.
    """

    leaves_evaluated: int = 0
    expansions: int = 0
    prunes: int = 0
    total_leaves: int = 0

    def merge(self, other: "SearchStats") -> "SearchStats":
        self.leaves_evaluated += other.leaves_evaluated
        self.expansions += other.expansions
        self.prunes += other.prunes
        self.total_leaves += other.total_leaves
        return self

    def __iadd__(self, other: "SearchStats") -> "SearchStats":
        return self.merge(other)

    @property
    def pruned_fraction(self) -> float:
        """Share of the assignment space never priced, in [0, 1]."""
        if self.total_leaves <= 0:
            return 0.0
        return 1.0 - self.leaves_evaluated / self.total_leaves
