"""Forward memory-length estimation along stopping times.

Two schemes, both committing to an estimate only at times n belonging to a
stopping set of guaranteed lower density 1 - epsilon:

* scheme P enumerates observed words (shortest first, then lexicographic, so
  no word precedes its own suffix), tests each with the shift-conjugated
  memory-word test, and accumulates their occurrence sets until the target
  coverage 1 - epsilon/2 is reached;
* scheme R rebuilds backward-distributed sample paths from forward data via
  block recurrence times, runs a backward estimator on each reconstruction,
  and covers time with the occurrence sets of the reconstructed memory words.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import _kernels
from .backward import TestVerdict, backward_memory_estimate, discrepancy_by_length, memory_word_test
from .counting import CountIndex
from .errors import OutOfRangeError
from .sequence import EstimatorParams, Sample, Word, shift_view


# ---------------------------------------------------------------------------
# Canonical word enumeration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WordList:
    """Enumeration of all words over a finite alphabet: the empty word first,
    then by length and lexicographically within a length.  Every proper
    suffix of a word is shorter, hence listed earlier."""

    alphabet: tuple[int, ...]

    def __post_init__(self):
        if len(self.alphabet) == 0 or tuple(sorted(set(self.alphabet))) != self.alphabet:
            raise ValueError("alphabet must be nonempty, sorted and duplicate-free")

    def word_at(self, index: int) -> Word:
        if index < 0:
            raise OutOfRangeError("negative word index")
        a = len(self.alphabet)
        length = 0
        block = 1
        while index >= block:
            index -= block
            length += 1
            block *= a
        letters = []
        for _ in range(length):
            letters.append(self.alphabet[index % a])
            index //= a
        return Word(tuple(reversed(letters)))

    def index_of(self, w: Word) -> int:
        a = len(self.alphabet)
        pos = {s: i for i, s in enumerate(self.alphabet)}
        idx = sum(a**m for m in range(len(w)))
        rank = 0
        for s in w:
            rank = rank * a + pos[s]
        return idx + rank


# ---------------------------------------------------------------------------
# Decisions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StoppingDecision:
    """Per-time verdict of a forward scheme.

    ``word_index`` is the selected index into the scheme's enumeration (the
    observed word list for scheme P, the anchor index for scheme R) and
    ``coverage_index`` the enumeration prefix needed to reach the coverage
    target; both map onto the kappa/theta CSV columns.
    """

    time: int
    scheme: str
    in_stopping_set: bool
    coverage_index: int
    coverage: float
    memory_length: Optional[int] = None
    word_index: Optional[int] = None

    def __post_init__(self):
        if self.in_stopping_set != (self.memory_length is not None):
            raise ValueError("memory_length must be present exactly when in the stopping set")
        if self.in_stopping_set != (self.word_index is not None):
            raise ValueError("word_index must be present exactly when in the stopping set")


def forward_index(sample: Sample) -> CountIndex:
    """Count index over the backward view of a forward sample; array
    positions coincide with forward time indices."""
    return CountIndex(shift_view(sample, sample.n))


def memory_word_test_forward(
    sample: Sample, w: Word, params: EstimatorParams, index: CountIndex | None = None
) -> TestVerdict:
    """The memory-word test read off the forward sample: identical, bit for
    bit, to the backward test applied to the reindexed sample."""
    if index is None:
        index = forward_index(sample)
    return memory_word_test(index, w, params)


def occurrence_set(sample: Sample, w: Word) -> np.ndarray:
    """All indices j in [|w|-1, n] where ``w`` ends at j; the empty word
    occurs everywhere."""
    if sample.orientation != "forward":
        raise ValueError("occurrence sets are defined over forward samples")
    return _kernels.occurrence_positions(sample.symbols, w.as_array(), 0, sample.n)


def decide_p(
    sample: Sample, params: EstimatorParams, index: CountIndex | None = None
) -> StoppingDecision:
    """Scheme P decision at the endpoint of ``sample``.

    Words are enumerated over the observed sample only: unobserved words have
    empty occurrence sets and cannot contribute coverage, so dropping them
    changes neither the stopping set nor the selected word.  The enumeration
    is capped at the observed words no longer than the maximal frequent
    length; when the coverage target is unreachable within the cap the
    decision is taken with the capped union.
    """
    n = sample.n
    if index is None:
        index = forward_index(sample)
    elif index.n != n:
        raise OutOfRangeError("supplied index does not cover exactly X_0..X_n")
    thr = params.test_threshold(n)
    target = 1.0 - params.epsilon / 2.0
    covered = np.zeros(n + 1, dtype=bool)
    n_covered = 0

    coverage_idx: Optional[int] = None
    selected_idx: Optional[int] = None
    selected_len: Optional[int] = None
    coverage = 0.0

    list_index = -1
    l_max = index.max_frequent_length(params.gamma)
    for length in range(0, l_max + 1):
        n_words = 1 if length == 0 else index.n_ids(length)
        if length >= 1 and length - 1 > n:
            break
        disc = discrepancy_by_length(index, length, params.gamma)
        ids = index.ids(length) if length >= 1 else None
        for u in range(n_words):
            list_index += 1
            if disc[u] > thr:
                continue
            # occurrence set of this word
            if length == 0:
                pos = np.arange(0, n + 1)
                ends_at_n = True
            else:
                pos = index.id_positions(length, u)
                ends_at_n = ids[n] == u
            if selected_idx is None and ends_at_n:
                selected_idx = list_index
                selected_len = length
            new = pos[~covered[pos]]
            if len(new):
                covered[new] = True
                n_covered += len(new)
            coverage = n_covered / (n + 1)
            if coverage >= target:
                coverage_idx = list_index
                break
        if coverage_idx is not None:
            break
    if coverage_idx is None:
        coverage_idx = list_index if list_index >= 0 else 0
    in_set = selected_idx is not None and selected_idx <= coverage_idx
    return StoppingDecision(
        time=n,
        scheme="forward-p",
        in_stopping_set=in_set,
        coverage_index=coverage_idx,
        coverage=coverage,
        memory_length=selected_len if in_set else None,
        word_index=selected_idx if in_set else None,
    )


# ---------------------------------------------------------------------------
# Reconstruction of backward-distributed paths (scheme R)
# ---------------------------------------------------------------------------


@dataclass
class Reconstruction:
    """Backward path rebuilt from forward data at one anchor.

    ``recurrence_times[m]`` is the cumulative offset at which the length-m
    block around the anchor recurs (entry 0 is 0); ``symbols[m]`` is the
    rebuilt value m steps into the past, so ``symbols[0]`` is the anchor
    value itself.
    """

    anchor: int
    recurrence_times: list[int] = field(default_factory=lambda: [0])
    symbols: list[int] = field(default_factory=list)

    @property
    def depth(self) -> int:
        return len(self.recurrence_times) - 1

    def backward_array(self, depth: int | None = None) -> np.ndarray:
        """Symbols in time order (oldest first) down to the given depth."""
        d = self.depth if depth is None else depth
        return np.asarray(self.symbols[: d + 1][::-1], dtype=np.int64)


class _AnchorState:
    """Incremental recurrence scanning for one anchor; scans resume where
    they stopped when the horizon advances."""

    __slots__ = ("anchor", "rec", "pending_t")

    def __init__(self, data: np.ndarray, anchor: int):
        self.anchor = anchor
        self.rec = Reconstruction(anchor=anchor, symbols=[int(data[anchor])])
        self.pending_t = 1

    def ensure(self, data: np.ndarray, horizon: int) -> None:
        while True:
            m = self.rec.depth + 1  # level being materialized
            end = self.anchor + self.rec.recurrence_times[-1]
            t = _kernels.first_recurrence_after(data, end, m, self.pending_t, horizon)
            if t == 0:
                self.pending_t = max(self.pending_t, horizon - end + 1)
                return
            z = self.rec.recurrence_times[-1] + t
            self.rec.recurrence_times.append(z)
            self.rec.symbols.append(int(data[self.anchor + z - m]))
            self.pending_t = 1

    def depth_at(self, n: int) -> int:
        """max j >= -1 with anchor + recurrence_times[j] <= n (after ensure)."""
        if self.anchor > n:
            return -1
        d = self.rec.depth
        while d >= 0 and self.anchor + self.rec.recurrence_times[d] > n:
            d -= 1
        return d


def reconstruct_past(sample: Sample, anchor: int, max_depth: int) -> Reconstruction:
    """Materialize the reconstruction at one anchor as far as the data allow,
    up to ``max_depth`` levels."""
    if sample.orientation != "forward":
        raise ValueError("reconstruction reads a forward sample")
    if not 0 <= anchor <= sample.n:
        raise OutOfRangeError(f"anchor {anchor} outside sample")
    state = _AnchorState(sample.symbols, anchor)
    while state.rec.depth < max_depth:
        before = state.rec.depth
        state.ensure(sample.symbols, sample.n)
        if state.rec.depth == before:
            break
    rec = state.rec
    if rec.depth > max_depth:
        rec = Reconstruction(
            anchor=anchor,
            recurrence_times=rec.recurrence_times[: max_depth + 1],
            symbols=rec.symbols[: max_depth + 1],
        )
    return rec


def available_depth(sample: Sample, n: int, anchor: int) -> int:
    """Deepest reconstruction level whose defining recurrence completes by
    time n; -1 when the anchor lies beyond n."""
    if anchor > n:
        return -1
    state = _AnchorState(sample.symbols, anchor)
    state.ensure(sample.symbols, min(n, sample.n))
    return state.depth_at(n)


def _default_backward_estimator(params: EstimatorParams) -> Callable[[np.ndarray], int]:
    def estimate(backward_symbols: np.ndarray) -> int:
        index = CountIndex(Sample.backward(backward_symbols))
        return backward_memory_estimate(index, params)

    return estimate


class ReconstructionScheme:
    """Scheme R driver over one growing forward sample.

    Any consistent backward estimator can be plugged in; the default is the
    shortest-passing-suffix estimator.  Anchor reconstructions are cached and
    extended incrementally as the decision time advances.
    """

    def __init__(
        self,
        sample: Sample,
        params: EstimatorParams,
        backward_estimator: Callable[[np.ndarray], int] | None = None,
    ):
        if sample.orientation != "forward":
            raise ValueError("scheme R reads a forward sample")
        self.sample = sample
        self.params = params
        self.estimator = backward_estimator or _default_backward_estimator(params)
        self._anchors: dict[int, _AnchorState] = {}

    def _anchor(self, i: int) -> _AnchorState:
        state = self._anchors.get(i)
        if state is None:
            state = _AnchorState(self.sample.symbols, i)
            self._anchors[i] = state
        return state

    def decide(self, n: int | None = None, index: CountIndex | None = None) -> StoppingDecision:
        if n is None:
            n = self.sample.n
        if n > self.sample.n:
            raise OutOfRangeError(f"decision time {n} beyond sample end {self.sample.n}")
        params = self.params
        data = self.sample.symbols
        if index is None:
            index = forward_index(Sample.forward(data[: n + 1]))
        elif index.n != n:
            raise OutOfRangeError("supplied index does not cover exactly X_0..X_n")
        n_anchors = min(n, params.anchor_cap) + 1
        target = 1.0 - params.epsilon / 2.0
        covered = np.zeros(n + 1, dtype=bool)
        n_covered = 0

        coverage_idx: Optional[int] = None
        selected_idx: Optional[int] = None
        selected_len: Optional[int] = None
        coverage = 0.0

        for i in range(n_anchors):
            state = self._anchor(i)
            state.ensure(data, n)
            depth = state.depth_at(n)
            if depth < 0:
                mem_len = 0
            else:
                mem_len = int(self.estimator(state.rec.backward_array(depth)))
                if mem_len < 0 or mem_len > depth + 1:
                    raise OutOfRangeError(
                        f"backward estimator returned {mem_len} on a depth-{depth} reconstruction"
                    )
            if mem_len == 0:
                pos = np.arange(0, n + 1)
                ends_at_n = True
            else:
                end = i + state.rec.recurrence_times[mem_len - 1]
                u = index.ids(mem_len)[end]
                pos = index.id_positions(mem_len, u)
                pos = pos[pos >= mem_len]
                ends_at_n = index.ids(mem_len)[n] == u
            if coverage_idx is None:
                new = pos[~covered[pos]]
                if len(new):
                    covered[new] = True
                    n_covered += len(new)
                coverage = n_covered / n if n else 1.0
                if coverage >= target:
                    coverage_idx = i
            if coverage_idx is not None and selected_idx is not None:
                break
            if ends_at_n and selected_idx is None:
                selected_idx = i
                selected_len = mem_len
        if coverage_idx is None:
            coverage_idx = n_anchors - 1
        in_set = selected_idx is not None and selected_idx <= coverage_idx
        return StoppingDecision(
            time=n,
            scheme="forward-r",
            in_stopping_set=in_set,
            coverage_index=coverage_idx,
            coverage=coverage,
            memory_length=selected_len if in_set else None,
            word_index=selected_idx if in_set else None,
        )


def decide_r(
    sample: Sample,
    params: EstimatorParams,
    backward_estimator: Callable[[np.ndarray], int] | None = None,
) -> StoppingDecision:
    """One-shot scheme R decision at the endpoint of ``sample``."""
    return ReconstructionScheme(sample, params, backward_estimator).decide()


__all__ = [
    "WordList",
    "StoppingDecision",
    "forward_index",
    "memory_word_test_forward",
    "occurrence_set",
    "decide_p",
    "Reconstruction",
    "reconstruct_past",
    "available_depth",
    "ReconstructionScheme",
    "decide_r",
]
