"""Occurrence counting, empirical conditional probabilities and frequent sets.

All statistics are computed from a backward sample X_-n..X_0 stored as an
array d[0..n] (array index j holds time j-n).  Two deliberate off-by-one
conventions coexist and are pinned by tests:

* conditional-probability counts range over end positions j in [k-1, n-1]
  (time t <= -1: the successor must be visible), with the empty-word context
  counting exactly n positions;
* frequent-set counts range over j in [m-1, n] (time t <= 0, the final
  position included).

The numerator of a conditional probability for (word, successor) equals the
frequent-set count of the extended string word+successor, which is why a
single per-length count table serves both.
"""

from __future__ import annotations

import numpy as np

from . import _kernels
from .errors import UndefinedConditionalError
from .sequence import EMPTY_WORD, Sample, Word


class CountIndex:
    """Lazy per-length block statistics over one backward sample.

    For each materialized block length L the index holds a dense id array
    (ids assigned in lexicographic order of block content, -1 where the block
    does not fit) and the occurrence count of every id.  Built single-threaded,
    immutable afterwards; reads are thread-safe.
    """

    def __init__(self, sample: Sample):
        if sample.orientation != "backward":
            raise ValueError("CountIndex is defined over a backward sample")
        self.sample = sample
        self.data = sample.symbols
        self.n = sample.n
        values, sym_ids = np.unique(self.data, return_inverse=True)
        self.symbol_values = values.astype(np.int64)
        self._sym_ids = sym_ids.astype(np.int32)
        self._ids: dict[int, np.ndarray] = {1: self._sym_ids}
        self._n_ids: dict[int, int] = {1: len(values)}
        self._l_count: dict[int, np.ndarray] = {}
        self._ctx_count: dict[int, np.ndarray] = {}
        self._csr: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    # -- per-length tables -------------------------------------------------

    def ids(self, length: int) -> np.ndarray:
        if length < 1:
            raise ValueError("block ids are defined for length >= 1")
        have = max(self._ids)
        while have < length:
            have += 1
            prev = self._ids[have - 1]
            ids, n_ids = _kernels.extend_block_ids(
                self._sym_ids, prev, self._n_ids[have - 1], have
            )
            self._ids[have] = ids
            self._n_ids[have] = n_ids
        return self._ids[length]

    def n_ids(self, length: int) -> int:
        self.ids(length)
        return self._n_ids[length]

    def l_count(self, length: int) -> np.ndarray:
        """Occurrence count per id over end positions [length-1, n]."""
        if length not in self._l_count:
            ids = self.ids(length)
            if length - 1 > self.n:
                self._l_count[length] = np.zeros(0, dtype=np.int64)
            else:
                valid = ids[length - 1 :]
                self._l_count[length] = np.bincount(
                    valid, minlength=self._n_ids[length]
                ).astype(np.int64)
        return self._l_count[length]

    def ctx_count(self, length: int) -> np.ndarray:
        """Occurrence count per id over end positions [length-1, n-1]."""
        if length not in self._ctx_count:
            cnt = self.l_count(length).copy()
            ids = self.ids(length)
            if self.n >= length - 1 and len(cnt):
                cnt[ids[self.n]] -= 1
            self._ctx_count[length] = cnt
        return self._ctx_count[length]

    def successor_count(self, length: int) -> np.ndarray:
        """Per-id numerator counts for conditional probabilities whose
        context has length ``length - 1``: identical to l_count except for
        length 1, where the first cell (nobody's successor) is dropped."""
        cnt = self.l_count(length)
        if length != 1:
            return cnt
        cnt = cnt.copy()
        if len(cnt):
            cnt[self._sym_ids[0]] -= 1
        return cnt

    def positions_by_id(self, length: int) -> tuple[np.ndarray, np.ndarray]:
        """CSR layout: (end positions sorted by id, offsets per id) over the
        full end range [length-1, n]."""
        if length not in self._csr:
            ids = self.ids(length)
            valid = ids[length - 1 :]
            order = np.argsort(valid, kind="stable")
            positions = order.astype(np.int64) + (length - 1)
            offsets = np.zeros(self._n_ids[length] + 1, dtype=np.int64)
            np.cumsum(np.bincount(valid, minlength=self._n_ids[length]), out=offsets[1:])
            self._csr[length] = (positions, offsets)
        return self._csr[length]

    def id_positions(self, length: int, u: int) -> np.ndarray:
        positions, offsets = self.positions_by_id(length)
        return positions[offsets[u] : offsets[u + 1]]

    def word_id(self, word: Word) -> int:
        """Dense id of the word at its length, or -1 if absent."""
        k = len(word)
        if k == 0 or k - 1 > self.n:
            return -1
        pos = _kernels.occurrence_positions(self.data, word.as_array(), k - 1, self.n)
        if len(pos) == 0:
            return -1
        return int(self.ids(k)[pos[0]])

    def decode(self, length: int, u: int) -> Word:
        """The word carried by dense id ``u`` at the given length."""
        j = int(self.id_positions(length, u)[0])
        return Word(tuple(int(s) for s in self.data[j - length + 1 : j + 1]))

    def max_frequent_length(self, gamma: float) -> int:
        """Largest length at which some string occurs more than n^(1-gamma)
        times; 0 if none does.  No longer string can pass the cutoff."""
        thr = float(self.n) ** (1.0 - gamma)
        length = 0
        while length + 1 - 1 <= self.n:
            cnt = self.l_count(length + 1)
            if len(cnt) == 0 or cnt.max() <= thr:
                break
            length += 1
        return length


# ---------------------------------------------------------------------------
# Spec operations
# ---------------------------------------------------------------------------


def count_context(index: CountIndex, w: Word) -> int:
    """Occurrences of ``w`` at positions whose successor is visible."""
    k = len(w)
    if k == 0:
        return index.n
    if k > index.n:
        return 0
    u = index.word_id(w)
    if u < 0:
        return 0
    return int(index.ctx_count(k)[u])


def count_transition(index: CountIndex, w: Word, x: int) -> int:
    """Occurrences of ``w`` followed by symbol ``x``; sums over x to
    count_context.

    For nonempty words this is exactly the frequent-set count of the string
    w+x (the two ranges coincide); the empty context must additionally drop
    the first sample cell, which is nobody's successor.
    """
    k = len(w)
    if k + 1 > index.n + 1:
        return 0
    u = index.word_id(w.extended_by(x))
    if u < 0:
        return 0
    cnt = int(index.l_count(k + 1)[u])
    if k == 0 and index.data[0] == x:
        cnt -= 1
    return cnt


def empirical_cond_prob(index: CountIndex, w: Word, x: int) -> float:
    denom = count_context(index, w)
    if denom == 0:
        raise UndefinedConditionalError(f"context {w.letters} never occurs before time 0")
    return count_transition(index, w, x) / denom


def is_frequent(index: CountIndex, v: Word, gamma: float) -> bool:
    """Whether ``v`` occurs strictly more than n^(1-gamma) times (final
    position included)."""
    if len(v) == 0:
        raise ValueError("frequency is defined for nonempty words")
    u = index.word_id(v)
    if u < 0:
        return False
    return bool(index.l_count(len(v))[u] > float(index.n) ** (1.0 - gamma))


def frequent_extensions(
    index: CountIndex, w: Word, i: int, gamma: float
) -> set[tuple[Word, int]]:
    """All pairs (z, x) with |z| = i such that z + w + x is frequent.

    Enumerated by scanning the occurrence positions of ``w`` and reading the
    i preceding symbols and one following symbol, never by enumerating the
    alphabet.
    """
    if i < 1:
        raise ValueError("extension depth must be >= 1")
    k = len(w)
    m = k + i + 1
    if m - 1 > index.n:
        return set()
    thr = float(index.n) ** (1.0 - gamma)
    data = index.data
    # w must sit with i symbols before it and one after: ends j with
    # j - k - i + 1 >= 0 and j + 1 <= n
    pos = _kernels.occurrence_positions(data, w.as_array(), k + i - 1, index.n - 1)
    ids_m = index.ids(m)
    cnt_m = index.l_count(m)
    out: set[tuple[Word, int]] = set()
    for j in pos:
        trip = ids_m[j + 1]
        if cnt_m[trip] > thr:
            z = Word(tuple(int(s) for s in data[j - k - i + 1 : j - k + 1]))
            out.add((z, int(data[j + 1])))
    return out


__all__ = [
    "CountIndex",
    "count_context",
    "count_transition",
    "empirical_cond_prob",
    "is_frequent",
    "frequent_extensions",
]
