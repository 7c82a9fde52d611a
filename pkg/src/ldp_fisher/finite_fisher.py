"""Fisher information of privatized finite models and its maximization.

For an extremal channel with weights omega over staircase patterns the
privatized information is ``(e^a - 1)^2 * sum_beta omega_beta * i_beta``, so
maximizing over all alpha-LDP channels reduces to the linear program

    M* = max_omega  omega . i   subject to  R omega = 1,  omega >= 0

with R the staircase pattern matrix.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np

from . import simplex
from .channel import Channel, push_forward
from .staircase import DEFAULT_MAX_DIM, StaircaseMatrix, index_for_set

CENTER_TOL = 1e-10
LP_MAX_DIM = 12
FEAS_TOL = 1e-9


class ModelError(ValueError):
    pass


class HypothesisError(ModelError):
    """The closed form needs a score that never vanishes."""


@dataclass(frozen=True)
class FiniteModel:
    """A scalar-parameter model on {0..d-1} frozen at theta_0."""

    p0: np.ndarray
    score: np.ndarray

    def __post_init__(self):
        p = np.array(self.p0, dtype=float)
        s = np.array(self.score, dtype=float)
        if p.ndim != 1 or p.shape != s.shape or p.size < 1:
            raise ModelError(f"p0 and score must be 1-d of equal length, got {p.shape} and {s.shape}")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise ModelError("p0 must be a probability vector")
        if not np.all(np.isfinite(s)):
            raise ModelError("score must be finite")
        if abs(float(s @ p)) > CENTER_TOL:
            raise ModelError(f"score is not centered: E[s] = {float(s @ p)!r}")
        p.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "p0", p)
        object.__setattr__(self, "score", s)

    @property
    def d(self) -> int:
        return self.p0.size

    @classmethod
    def bernoulli(cls, theta: float) -> "FiniteModel":
        """Bernoulli(theta) on {0, 1} with score -1/(1-theta), 1/theta."""
        return cls([1 - theta, theta], [-1.0 / (1 - theta), 1.0 / theta])

    @classmethod
    def binomial(cls, m: int, theta: float) -> "FiniteModel":
        from scipy.stats import binom

        k = np.arange(m + 1)
        p = binom.pmf(k, m, theta)
        p = p / p.sum()
        s = k / theta - (m - k) / (1 - theta)
        s = s - s @ p
        return cls(p, s)

    def information(self) -> float:
        return float(self.p0 @ self.score ** 2)

    def mean_abs_score(self) -> float:
        return float(self.p0 @ np.abs(self.score))

    def n_max(self) -> float:
        return float(self.p0[self.score > 0].sum())

    def to_dict(self) -> dict:
        return {"p0": self.p0.tolist(), "score": self.score.tolist()}

    @classmethod
    def from_dict(cls, obj: dict) -> "FiniteModel":
        missing = {"p0", "score"} - set(obj)
        if missing:
            raise ModelError(f"model JSON is missing {sorted(missing)}")
        return cls(obj["p0"], obj["score"])


def _check_dims(m: FiniteModel, c: Channel) -> None:
    if c.d != m.d:
        raise ModelError(f"channel has {c.d} inputs, model has {m.d} symbols")


def privatized_density(m: FiniteModel, c: Channel) -> np.ndarray:
    _check_dims(m, c)
    return push_forward(c, m.p0)


def privatized_score(m: FiniteModel, c: Channel) -> np.ndarray:
    """t(z) = E[s(X) | Z = z]; outputs with zero mass get t = 0."""
    _check_dims(m, c)
    pt = privatized_density(m, c)
    num = (m.score * m.p0) @ c.kernel
    t = np.zeros(c.l)
    live = pt > 0
    if not np.all(live):
        warnings.warn(f"outputs {np.flatnonzero(~live).tolist()} have zero mass and are dropped",
                      stacklevel=2)
    t[live] = num[live] / pt[live]
    return t


def fisher_info(m: FiniteModel, c: Channel) -> float:
    _check_dims(m, c)
    pt = privatized_density(m, c)
    num = (m.score * m.p0) @ c.kernel
    live = pt > 0
    return float(np.sum(num[live] ** 2 / pt[live]))


@dataclass(frozen=True)
class UtilityVector:
    """Lazy map beta -> i_beta together with n_beta^+."""

    model: FiniteModel
    alpha: float
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def _mask(self, beta: int) -> np.ndarray:
        return ((beta >> np.arange(self.model.d)) & 1).astype(bool)

    def numerator(self, beta: int) -> float:
        """sum over F+ of s * p0 (before squaring)."""
        return float((self.model.score * self.model.p0)[self._mask(beta)].sum())

    def n_plus(self, beta: int) -> float:
        return float(self.model.p0[self._mask(beta)].sum())

    def __getitem__(self, beta: int) -> float:
        if not 0 <= beta < len(self):
            raise IndexError(beta)
        if beta == 0 or beta == len(self) - 1:
            return 0.0
        return self.numerator(beta) ** 2 / (1 + math.expm1(self.alpha) * self.n_plus(beta))

    def __len__(self) -> int:
        return 1 << self.model.d

    def __iter__(self) -> Iterator[float]:
        for beta in range(len(self)):
            yield self[beta]

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(i, numerator, n_plus) for all betas, built by subset-sum doubling."""
        key = "arrays"
        if key not in self._cache:
            sp = self.model.score * self.model.p0
            num = np.zeros(1)
            npl = np.zeros(1)
            for j in range(self.model.d):
                num = np.concatenate([num, num + sp[j]])
                npl = np.concatenate([npl, npl + self.model.p0[j]])
            i = num ** 2 / (1 + math.expm1(self.alpha) * npl)
            i[0] = 0.0
            i[-1] = 0.0
            self._cache[key] = (i, num, npl)
        return self._cache[key]


def utility_vector(m: FiniteModel, alpha: float, max_dim: int = DEFAULT_MAX_DIM) -> UtilityVector:
    if m.d > max_dim:
        raise ModelError(f"alphabet size {m.d} exceeds the cap {max_dim}")
    if alpha < 0:
        raise ModelError("budget must be non-negative")
    return UtilityVector(m, float(alpha))


@dataclass(frozen=True)
class MaxInfoResult:
    alpha: float
    M_star: float
    I_max: float
    omega_opt: dict[int, float]
    n_max: float
    alpha_bar_check: Optional[bool] = None
    lp_vs_closed_form_gap: Optional[float] = None
    method: str = "lp"

    @property
    def support(self) -> list[int]:
        return sorted(self.omega_opt)

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "method": self.method,
            "M_star": self.M_star,
            "I_max": self.I_max,
            "support": self.support,
            "omega": {str(b): w for b, w in sorted(self.omega_opt.items())},
            "n_max": self.n_max,
            "alpha_bar_check": self.alpha_bar_check,
            "lp_vs_closed_form_gap": self.lp_vs_closed_form_gap,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "MaxInfoResult":
        return cls(
            alpha=float(obj["alpha"]),
            M_star=float(obj["M_star"]),
            I_max=float(obj["I_max"]),
            omega_opt={int(b): float(w) for b, w in obj["omega"].items()},
            n_max=float(obj["n_max"]),
            alpha_bar_check=obj.get("alpha_bar_check"),
            lp_vs_closed_form_gap=obj.get("lp_vs_closed_form_gap"),
            method=obj.get("method", "lp"),
        )


def solve_lp(m: FiniteModel, alpha: float, max_dim: int = LP_MAX_DIM) -> MaxInfoResult:
    """Maximize omega . i over the staircase polytope by simplex."""
    if m.d > max_dim:
        raise ModelError(f"alphabet size {m.d} exceeds the LP cap {max_dim}")
    uv = utility_vector(m, alpha)
    i, _, _ = uv.arrays()
    ea1 = math.expm1(alpha)
    if alpha == 0:
        # every pattern is the all-ones vector: any single pattern with weight 1 is optimal
        beta = int(np.argmax(i))
        return MaxInfoResult(float(alpha), float(i[beta]), 0.0, {beta: 1.0}, m.n_max())
    R = StaircaseMatrix(m.d, alpha, max_dim=max_dim).dense()
    res = simplex.solve(i, R, np.ones(m.d))
    w = res.x
    resid = float(np.max(np.abs(R @ w - 1.0)))
    if resid > FEAS_TOL:
        raise simplex.LPError(f"LP solution violates R w = 1 by {resid!r}")
    omega = {int(b): float(w[b]) for b in np.flatnonzero(w > 1e-12)}
    M = float(i @ w)
    return MaxInfoResult(float(alpha), M, ea1 ** 2 * M, omega, m.n_max())


def _max_indices(m: FiniteModel) -> tuple[int, int]:
    pos = np.flatnonzero(m.score > 0)
    neg = np.flatnonzero(m.score < 0)
    return index_for_set(pos), index_for_set(neg)


def closed_form_value(m: FiniteModel, alpha: float) -> float:
    """(e^a-1)^2/4 * E|s|^2 / ([(1-n)+e^a n][n+(1-n)e^a]) with n = P(s > 0)."""
    if np.any(m.score == 0):
        raise HypothesisError("closed-form hypothesis violated: the score vanishes at some symbol; use solve_lp")
    ea = math.exp(alpha)
    n = m.n_max()
    den = ((1 - n) + ea * n) * (n + (1 - n) * ea)
    return math.expm1(alpha) ** 2 / 4 * m.mean_abs_score() ** 2 / den


def small_alpha_condition(m: FiniteModel, alpha: float) -> bool:
    """Sufficient condition for i_beta to peak exactly at the two sign-set patterns.

    Holds when e^alpha < min over other beta of num_max^2 / num_beta^2, where
    num_beta is the s*p0 mass on F+_beta.
    """
    if m.d > DEFAULT_MAX_DIM:
        raise ModelError("alphabet too large for the exhaustive check")
    b1, b2 = _max_indices(m)
    _, num, _ = utility_vector(m, alpha).arrays()
    sq = num ** 2
    top = 0.25 * m.mean_abs_score() ** 2
    others = np.ones(sq.size, dtype=bool)
    others[[b1, b2]] = False
    worst = sq[others].max() if np.any(others) else 0.0
    if worst == 0:
        return True
    return bool(math.exp(alpha) < top / worst)


def closed_form_max(m: FiniteModel, alpha: float, check_lp: bool = True) -> MaxInfoResult:
    I = closed_form_value(m, alpha)
    ea = math.exp(alpha)
    b1, b2 = _max_indices(m)
    omega = {b1: 1 / (1 + ea), b2: 1 / (1 + ea)}
    M = I / math.expm1(alpha) ** 2 if alpha > 0 else 0.25 * m.mean_abs_score() ** 2
    check = None
    gap = None
    if check_lp and m.d <= LP_MAX_DIM:
        lp = solve_lp(m, alpha)
        gap = abs(lp.I_max - I)
        check = bool(gap <= 1e-9 * (1 + I))
    return MaxInfoResult(float(alpha), M, I, omega, m.n_max(), check, gap, method="closed_form")


def optimal_two_point_channel(m: FiniteModel, alpha: float) -> Channel:
    """Binary channel reporting z_1 with odds e^alpha when s(x) > 0."""
    if np.any(m.score == 0):
        raise HypothesisError("closed-form hypothesis violated: the score vanishes at some symbol")
    ea = math.exp(alpha)
    hi, lo = ea / (1 + ea), 1 / (1 + ea)
    pos = m.score > 0
    kern = np.where(pos[:, None], [[hi, lo]], [[lo, hi]])
    return Channel(kern)
