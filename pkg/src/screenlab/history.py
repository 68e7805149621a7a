"""Working-status histories and path probabilities on the work/shirk tree.

A history of length ``t`` is stored as ``(t, mask)`` where the oldest decision
is the most significant bit, so ascending masks enumerate histories in
lexicographic order of their bit strings (``00, 01, 10, 11``).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterator

import numpy as np

if TYPE_CHECKING:
    from .dist import CostDistribution
    from .mechanism import ThresholdProfile

__all__ = [
    "WorkHistory",
    "histories_of_length",
    "children",
    "node_index",
    "node_count",
    "path_probability",
    "leaf_probabilities",
    "MissingThresholdError",
]


class MissingThresholdError(LookupError):
    pass


@dataclass(frozen=True, order=True)
class WorkHistory:
    length: int
    mask: int = 0

    def __post_init__(self):
        if self.length < 0:
            raise ValueError(f"negative history length {self.length}")
        if not 0 <= self.mask < (1 << self.length) or (self.length == 0 and self.mask != 0):
            raise ValueError(f"mask {self.mask} does not fit a history of length {self.length}")

    @classmethod
    def from_bits(cls, bits) -> "WorkHistory":
        if isinstance(bits, str):
            if any(ch not in "01" for ch in bits):
                raise ValueError(f"history string must be binary, got {bits!r}")
            return cls(len(bits), int(bits, 2) if bits else 0)
        mask = 0
        for b in bits:
            mask = (mask << 1) | (1 if b else 0)
        return cls(len(bits), mask)

    @classmethod
    def empty(cls) -> "WorkHistory":
        return cls(0, 0)

    @classmethod
    def zeros(cls, n: int) -> "WorkHistory":
        return cls(n, 0)

    @classmethod
    def ones(cls, n: int) -> "WorkHistory":
        return cls(n, (1 << n) - 1)

    @property
    def bits(self) -> tuple[int, ...]:
        return tuple((self.mask >> (self.length - 1 - i)) & 1 for i in range(self.length))

    @property
    def n_work(self) -> int:
        return bin(self.mask).count("1")

    @property
    def started(self) -> bool:
        return self.mask != 0

    def prefix(self, k: int) -> "WorkHistory":
        if not 0 <= k <= self.length:
            raise ValueError(f"prefix length {k} outside [0, {self.length}]")
        return WorkHistory(k, self.mask >> (self.length - k))

    def append(self, work: int | bool) -> "WorkHistory":
        return WorkHistory(self.length + 1, (self.mask << 1) | (1 if work else 0))

    def __str__(self) -> str:
        return format(self.mask, f"0{self.length}b") if self.length else ""

    def __repr__(self) -> str:
        return f"WorkHistory({str(self)!r})"


def node_count(N: int) -> int:
    """Number of decision nodes (thresholds) in an ``N``-period tree."""
    return (1 << N) - 1


def node_index(w: WorkHistory) -> int:
    """Flat index of the node that decides period ``w.length + 1``."""
    return (1 << w.length) - 1 + w.mask


def histories_of_length(t: int, N: int | None = None) -> Iterator[WorkHistory]:
    if t < 0 or (N is not None and t > N):
        raise ValueError(f"history length {t} outside [0, {N}]")
    for mask in range(1 << t):
        yield WorkHistory(t, mask)


def children(w: WorkHistory, N: int) -> tuple[WorkHistory, WorkHistory]:
    """``(w+work, w+shirk)``."""
    if w.length >= N:
        raise ValueError(f"history {w} is already a leaf of the {N}-period tree")
    return w.append(1), w.append(0)


def path_probability(profile: "ThresholdProfile", d: "CostDistribution", w: WorkHistory) -> float:
    if w.length > profile.N:
        raise ValueError(f"history {w} longer than horizon {profile.N}")
    prob = 1.0
    for t, x in enumerate(w.bits):
        node = w.prefix(t)
        c = profile.cutoff(node)
        Fc = float(d.F(c))
        prob *= Fc if x else 1.0 - Fc
    return prob


def leaf_probabilities(cutoffs: np.ndarray, d: "CostDistribution", N: int) -> np.ndarray:
    """Probabilities of all ``2**N`` leaves, vectorised over leading axes of ``cutoffs``.

    ``cutoffs`` has shape ``(..., 2**N - 1)`` in flat node order.
    """
    Fc = np.asarray(d.F(cutoffs), dtype=float)
    probs = np.ones(Fc.shape[:-1] + (1,))
    for t in range(N):
        level = Fc[..., (1 << t) - 1 : (1 << (t + 1)) - 1]
        # children of mask m are 2m (shirk) and 2m+1 (work)
        nxt = np.empty(Fc.shape[:-1] + (1 << (t + 1),))
        nxt[..., 0::2] = probs * (1.0 - level)
        nxt[..., 1::2] = probs * level
        probs = nxt
    return probs
