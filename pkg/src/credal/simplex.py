"""
Probability simplex primitives.

Value types for label spaces, categorical distributions and label subsets,
plus Shannon entropy and precise highest-density sets. Labels are 0-indexed
everywhere in the library; only rendered output uses 1-based labels.
"""

from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import entropy as _scipy_entropy

from src.utils.exceptions import DimensionMismatch, ValidationError

# Sum-to-one tolerance of a stored vector.
SIMPLEX_TOL = 1e-9
# Inputs whose sum is within this band of 1 are renormalized, others rejected.
RENORMALIZE_TOL = 1e-6
# Probabilities closer than this are ties in highest-density sets.
TIE_TOL = 1e-12


@dataclass(frozen=True)
class LabelSpace:
    """The label set {0, ..., K-1} with optional display names."""

    k_count: int
    names: Optional[Tuple[str, ...]] = None

    def __post_init__(self):
        if int(self.k_count) != self.k_count or self.k_count < 2:
            raise ValidationError(f"a label space needs at least 2 classes, got {self.k_count}")
        if self.names is not None:
            names = tuple(str(n) for n in self.names)
            if len(names) != self.k_count:
                raise ValidationError(f"expected {self.k_count} label names, got {len(names)}")
            if len(set(names)) != len(names):
                raise ValidationError("label names must be distinct")
            object.__setattr__(self, 'names', names)

    def display_name(self, label: int) -> str:
        """1-based label for rendered output, or the configured name."""
        if self.names is not None:
            return self.names[label]
        return str(label + 1)


@dataclass(frozen=True)
class ProbabilityVector:
    """A point on the (K-1)-simplex, stored as an immutable tuple."""

    entries: Tuple[float, ...]

    def __post_init__(self):
        entries = tuple(float(x) for x in self.entries)
        if len(entries) < 2:
            raise ValidationError("a probability vector needs at least 2 entries")
        arr = np.asarray(entries)
        if not np.all(np.isfinite(arr)):
            raise ValidationError("probability entries must be finite")
        if np.any(arr < 0):
            raise ValidationError(f"negative probability in {entries}")
        total = float(arr.sum())
        if abs(total - 1.0) > SIMPLEX_TOL:
            raise ValidationError(f"probabilities sum to {total!r}, not 1")
        object.__setattr__(self, 'entries', entries)

    @classmethod
    def from_values(cls, values: Iterable[float]) -> "ProbabilityVector":
        """Build a vector, renormalizing sums within RENORMALIZE_TOL of 1."""
        arr = np.asarray(list(values), dtype=float)
        if arr.ndim != 1 or arr.size < 2:
            raise ValidationError("a probability vector needs a flat list of at least 2 entries")
        if not np.all(np.isfinite(arr)):
            raise ValidationError("probability entries must be finite")
        if np.any(arr < 0):
            raise ValidationError(f"negative probability in {arr.tolist()}")
        total = float(arr.sum())
        if abs(total - 1.0) > RENORMALIZE_TOL:
            raise ValidationError(f"probabilities sum to {total!r}, outside 1 +/- {RENORMALIZE_TOL}")
        return cls(tuple((arr / total).tolist()))

    @classmethod
    def uniform(cls, k_count: int) -> "ProbabilityVector":
        return cls(tuple([1.0 / k_count] * k_count))

    @classmethod
    def one_hot(cls, k_count: int, label: int) -> "ProbabilityVector":
        values = [0.0] * k_count
        values[label] = 1.0
        return cls(tuple(values))

    @property
    def k(self) -> int:
        return len(self.entries)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.entries, dtype=float)

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, index: int) -> float:
        return self.entries[index]

    def __iter__(self) -> Iterator[float]:
        return iter(self.entries)


@dataclass(frozen=True)
class LabelSet:
    """A subset of {0, ..., K-1} stored as a K-bit mask (bit k <=> label k)."""

    mask: int
    k_count: int

    def __post_init__(self):
        if self.mask < 0 or self.mask >= (1 << self.k_count):
            raise ValidationError(f"mask {self.mask} outside a {self.k_count}-label space")

    @classmethod
    def from_members(cls, members: Iterable[int], k_count: int) -> "LabelSet":
        mask = 0
        for label in members:
            if not 0 <= int(label) < k_count:
                raise ValidationError(f"label {label} outside 0..{k_count - 1}")
            mask |= 1 << int(label)
        return cls(mask, k_count)

    @classmethod
    def empty(cls, k_count: int) -> "LabelSet":
        return cls(0, k_count)

    @classmethod
    def full(cls, k_count: int) -> "LabelSet":
        return cls((1 << k_count) - 1, k_count)

    @property
    def members(self) -> Tuple[int, ...]:
        return tuple(k for k in range(self.k_count) if self.mask >> k & 1)

    def complement(self) -> "LabelSet":
        return LabelSet(((1 << self.k_count) - 1) ^ self.mask, self.k_count)

    def union(self, other: "LabelSet") -> "LabelSet":
        self._check_space(other)
        return LabelSet(self.mask | other.mask, self.k_count)

    def issubset(self, other: "LabelSet") -> bool:
        self._check_space(other)
        return self.mask & ~other.mask == 0

    def indicator(self) -> np.ndarray:
        """0/1 float vector of membership."""
        return np.array([float(self.mask >> k & 1) for k in range(self.k_count)])

    def rendered(self) -> Tuple[int, ...]:
        """1-based members for display."""
        return tuple(k + 1 for k in self.members)

    def _check_space(self, other: "LabelSet"):
        if other.k_count != self.k_count:
            raise DimensionMismatch(f"label sets over {self.k_count} and {other.k_count} labels")

    def __contains__(self, label: int) -> bool:
        return 0 <= label < self.k_count and bool(self.mask >> label & 1)

    def __len__(self) -> int:
        return bin(self.mask).count("1")

    def __iter__(self) -> Iterator[int]:
        return iter(self.members)


def shannon_entropy(p: ProbabilityVector) -> float:
    """Entropy in bits with 0 * log 0 = 0, clipped to [0, log2 K]."""
    value = float(_scipy_entropy(p.array, base=2))
    return min(max(value, 0.0), float(np.log2(p.k)))


def descending_sort_permutation(p: ProbabilityVector) -> Tuple[int, ...]:
    """Labels ordered by decreasing probability, ties by ascending index."""
    arr = p.array
    order = np.lexsort((np.arange(arr.size), -arr))
    return tuple(int(i) for i in order)


def highest_density_set(p: ProbabilityVector, delta: float) -> LabelSet:
    """
    Smallest cutoff set {y : p_y >= c} whose mass reaches 1 - delta.

    Takes the shortest prefix of the descending order reaching the mass
    target, then adds every label tied with the last one included.
    """
    mask = highest_density_masks(p.array[np.newaxis, :], delta)[0]
    return LabelSet(int(mask), p.k)


def highest_density_masks(probs: np.ndarray, delta: float) -> np.ndarray:
    """
    Vectorised highest-density sets for a batch of distributions (rows).

    Returns one integer bitmask per row. The mass target 1 - delta is compared
    with a slack of K machine epsilons relative to the row total, enough to
    absorb rounding in the cumulative sum and nothing more.
    """
    probs = np.atleast_2d(np.asarray(probs, dtype=float))
    n_rows, k_count = probs.shape
    target = 1.0 - float(delta)
    if target <= 0.0:
        return np.zeros(n_rows, dtype=np.int64)

    order = np.argsort(-probs, axis=1, kind='stable')
    sorted_probs = np.take_along_axis(probs, order, axis=1)
    cumulative = np.cumsum(sorted_probs, axis=1)
    slack = k_count * np.finfo(float).eps * cumulative[:, -1:]
    reached = cumulative >= target - slack
    # Rounding can leave a full row just under target; the last label then closes it.
    reached[:, -1] = True
    last = np.argmax(reached, axis=1)
    cutoff = sorted_probs[np.arange(n_rows), last]
    members = probs >= (cutoff - TIE_TOL)[:, np.newaxis]
    weights = np.left_shift(np.int64(1), np.arange(k_count, dtype=np.int64))
    return members.astype(np.int64) @ weights


def check_dimensions(*vectors: Sequence[float]) -> int:
    """Common length of the given vectors, or DimensionMismatch."""
    sizes = {len(v) for v in vectors}
    if len(sizes) != 1:
        raise DimensionMismatch(f"vectors of different lengths: {sorted(sizes)}")
    return sizes.pop()
