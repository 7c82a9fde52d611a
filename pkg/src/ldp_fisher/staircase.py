"""Staircase patterns: the vertices of the hyperrectangle [1, e^alpha]^d.

A pattern is indexed by an integer ``beta`` in ``[0, 2**d)``; bit ``j`` of
``beta`` set means coordinate ``j`` takes the value ``e**alpha``, otherwise 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

DEFAULT_MAX_DIM = 20


class StaircaseError(ValueError):
    pass


def _check_dim(d: int, max_dim: int = DEFAULT_MAX_DIM) -> None:
    if not isinstance(d, (int, np.integer)) or d < 1:
        raise StaircaseError(f"alphabet size must be a positive integer, got {d!r}")
    if d > max_dim:
        raise StaircaseError(f"alphabet size {d} exceeds the cap of {max_dim} (2**d patterns)")


def _check_alpha(alpha: float) -> None:
    if not math.isfinite(alpha) or alpha < 0:
        raise StaircaseError(f"privacy budget must be finite and non-negative, got {alpha!r}")


@dataclass(frozen=True)
class PatternIndex:
    beta: int
    d: int

    def __post_init__(self):
        _check_dim(self.d, max_dim=63)
        if not 0 <= self.beta < (1 << self.d):
            raise StaircaseError(f"pattern index {self.beta} out of range [0, {1 << self.d})")

    def digits(self) -> tuple[int, ...]:
        """Binary digits d_0, ..., d_{d-1} (least significant first)."""
        return tuple((self.beta >> j) & 1 for j in range(self.d))

    def f_plus(self) -> frozenset[int]:
        return frozenset(j for j in range(self.d) if (self.beta >> j) & 1)


@dataclass(frozen=True)
class StaircasePattern:
    index: PatternIndex
    alpha: float
    values: np.ndarray = field(repr=False, compare=False)

    @property
    def beta(self) -> int:
        return self.index.beta

    @property
    def f_plus(self) -> frozenset[int]:
        return self.index.f_plus()

    @property
    def f_minus(self) -> frozenset[int]:
        return frozenset(range(self.index.d)) - self.f_plus


def bits(beta: int, d: int) -> np.ndarray:
    """0/1 vector of the dyadic digits of ``beta``."""
    return (beta >> np.arange(d)) & 1


def pattern(d: int, beta: int, alpha: float, *, max_dim: int = DEFAULT_MAX_DIM) -> StaircasePattern:
    _check_dim(d, max_dim)
    _check_alpha(alpha)
    idx = PatternIndex(int(beta), d)
    ea = math.exp(alpha)
    values = np.where(bits(idx.beta, d) == 1, ea, 1.0)
    values.setflags(write=False)
    return StaircasePattern(idx, float(alpha), values)


def pattern_for_set(d: int, f_plus: Iterable[int], alpha: float, *,
                    max_dim: int = DEFAULT_MAX_DIM) -> StaircasePattern:
    """Pattern equal to e^alpha exactly on ``f_plus``."""
    _check_dim(d, max_dim)
    beta = 0
    for j in set(f_plus):
        if not 0 <= j < d:
            raise StaircaseError(f"element {j} outside the alphabet {{0..{d - 1}}}")
        beta |= 1 << int(j)
    return pattern(d, beta, alpha, max_dim=max_dim)


def index_for_set(f_plus: Iterable[int]) -> int:
    return sum(1 << int(j) for j in set(f_plus))


def iter_patterns(d: int, alpha: float, *, max_dim: int = DEFAULT_MAX_DIM) -> Iterator[StaircasePattern]:
    """All 2**d patterns in index order, generated on demand."""
    _check_dim(d, max_dim)
    _check_alpha(alpha)
    for beta in range(1 << d):
        yield pattern(d, beta, alpha, max_dim=max_dim)


@dataclass(frozen=True)
class StaircaseMatrix:
    """The d x 2**d matrix whose columns are the staircase patterns.

    Columns are produced lazily; :meth:`dense` materializes the full matrix.
    """

    d: int
    alpha: float
    max_dim: int = DEFAULT_MAX_DIM

    def __post_init__(self):
        _check_dim(self.d, self.max_dim)
        _check_alpha(self.alpha)

    @property
    def n_columns(self) -> int:
        return 1 << self.d

    def column(self, beta: int) -> np.ndarray:
        return pattern(self.d, beta, self.alpha, max_dim=self.max_dim).values

    @property
    def columns(self) -> Iterator[StaircasePattern]:
        return iter_patterns(self.d, self.alpha, max_dim=self.max_dim)

    def dense(self) -> np.ndarray:
        betas = np.arange(self.n_columns)
        digit = (betas[None, :] >> np.arange(self.d)[:, None]) & 1
        return np.where(digit == 1, math.exp(self.alpha), 1.0)
