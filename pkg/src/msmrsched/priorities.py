"""Priority orderings, pairwise priority assignments and the pairwise delay bound."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence

from .dca import BoundMode, DelayBound, ModeError, check_mode, evaluate
from .model import JobSet, competitor_sets, overlap_filter

OPTIMISTIC = "optimistic"
PESSIMISTIC = "pessimistic"


@dataclass(frozen=True)
class PriorityOrdering:
    """``rho[i]`` is the priority level of job ``i``; 1 is the highest."""

    rho: tuple[int, ...]

    def __post_init__(self) -> None:
        if sorted(self.rho) != list(range(1, len(self.rho) + 1)):
            raise ValueError(f"not a permutation of 1..{len(self.rho)}: {self.rho}")

    @classmethod
    def from_order(cls, order: Sequence[int]) -> "PriorityOrdering":
        """From job ids listed highest priority first."""
        rho = [0] * len(order)
        for level, i in enumerate(order, start=1):
            rho[i] = level
        return cls(tuple(rho))

    def order(self) -> list[int]:
        return sorted(range(len(self.rho)), key=lambda i: self.rho[i])

    def higher(self, i: int) -> list[int]:
        return [k for k in range(len(self.rho)) if self.rho[k] < self.rho[i]]

    def lower(self, i: int) -> list[int]:
        return [k for k in range(len(self.rho)) if self.rho[k] > self.rho[i]]


def _key(a: int, b: int) -> tuple[int, int]:
    if a == b:
        raise ValueError("a job has no priority relative to itself")
    return (a, b) if a < b else (b, a)


class PairwiseAssignment:
    """Winner of every decided competing pair; undecided pairs are simply absent."""

    def __init__(self, winners: Mapping[tuple[int, int], int] | None = None):
        self._winner: dict[tuple[int, int], int] = {}
        for (a, b), w in (winners or {}).items():
            if w not in (a, b):
                raise ValueError(f"winner {w} is not part of pair {(a, b)}")
            self.set(w, b if w == a else a)

    @classmethod
    def from_ordering(cls, jobset: JobSet, ordering: PriorityOrdering) -> "PairwiseAssignment":
        pa = cls()
        for a, b in competitor_sets(jobset).pairs():
            pa.set(a, b) if ordering.rho[a] < ordering.rho[b] else pa.set(b, a)
        return pa

    def set(self, hi: int, lo: int) -> None:
        """Record ``hi`` ≻ ``lo``."""
        self._winner[_key(hi, lo)] = hi

    def unset(self, a: int, b: int) -> None:
        self._winner.pop(_key(a, b), None)

    def winner(self, a: int, b: int) -> int | None:
        return self._winner.get(_key(a, b))

    def is_higher(self, a: int, b: int) -> bool | None:
        w = self.winner(a, b)
        return None if w is None else w == a

    def copy(self) -> "PairwiseAssignment":
        pa = PairwiseAssignment()
        pa._winner = dict(self._winner)
        return pa

    def pairs(self) -> list[tuple[int, int]]:
        return sorted(self._winner)

    def edges(self) -> Iterator[tuple[int, int]]:
        """(higher, lower) for every decided pair, in pair order."""
        for a, b in self.pairs():
            w = self._winner[(a, b)]
            yield (w, b if w == a else a)

    def covers(self, jobset: JobSet) -> bool:
        return set(competitor_sets(jobset).pairs()) <= set(self._winner)

    def restricted(self, keep: Sequence[int]) -> "PairwiseAssignment":
        """Re-indexed assignment over the jobs in ``keep`` (new id = position)."""
        new_id = {old: new for new, old in enumerate(keep)}
        pa = PairwiseAssignment()
        for hi, lo in self.edges():
            if hi in new_id and lo in new_id:
                pa.set(new_id[hi], new_id[lo])
        return pa

    def to_list(self) -> list[list[int]]:
        return [[hi, lo] for hi, lo in self.edges()]

    @classmethod
    def from_list(cls, edges: Iterable[Sequence[int]]) -> "PairwiseAssignment":
        pa = cls()
        for hi, lo in edges:
            pa.set(int(hi), int(lo))
        return pa

    def __len__(self) -> int:
        return len(self._winner)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, PairwiseAssignment) and self._winner == other._winner

    def __repr__(self) -> str:
        return "PairwiseAssignment(" + ", ".join(f"{h}>{l}" for h, l in self.edges()) + ")"


def check_pairwise_mode(jobset: JobSet, mode: BoundMode) -> None:
    if not mode.pairwise:
        raise ModeError(f"{mode.value} is not a pairwise-assignment mode")
    check_mode(jobset, mode)


def pairwise_sets(jobset: JobSet, assignment: PairwiseAssignment, i: int,
                  polarity: str = PESSIMISTIC) -> tuple[frozenset[int], frozenset[int]]:
    higher, lower = set(), set()
    for k in competitor_sets(jobset).all[i]:
        hi = assignment.is_higher(k, i)
        if hi is None:
            if polarity == PESSIMISTIC:
                higher.add(k)
                lower.add(k)
            elif polarity != OPTIMISTIC:
                raise ValueError(f"unknown polarity {polarity!r}")
        elif hi:
            higher.add(k)
        else:
            lower.add(k)
    return overlap_filter(jobset, i, higher), overlap_filter(jobset, i, lower)


def pairwise_bound(jobset: JobSet, assignment: PairwiseAssignment, i: int, mode: BoundMode,
                   polarity: str = PESSIMISTIC) -> DelayBound:
    """Delay bound of ``i`` with its higher/lower sets induced by ``assignment``.

    Undecided pairs are left out of both sets (optimistic, a lower bound on
    every completion) or put into both (pessimistic, an upper bound).
    """
    check_pairwise_mode(jobset, mode)
    jobset.check_id(i)
    higher, lower = pairwise_sets(jobset, assignment, i, polarity)
    return evaluate(jobset, i, higher, lower, mode)


def pairwise_bounds(jobset: JobSet, assignment: PairwiseAssignment, mode: BoundMode,
                    polarity: str = PESSIMISTIC) -> list[DelayBound]:
    return [pairwise_bound(jobset, assignment, i, mode, polarity) for i in range(jobset.n)]


def all_meet_deadlines(jobset: JobSet, bounds: Sequence[DelayBound]) -> bool:
    return all(b.total <= jobset.jobs[b.job].deadline and not b.saturated for b in bounds)
