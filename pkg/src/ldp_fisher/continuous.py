"""Extremal mechanisms for one-dimensional continuous models.

Extremal functions are ``r = 1 + (e^a - 1) 1_F`` with F a finite union of
half-open intervals, so point evaluation is exact away from endpoints. A
mechanism is a finitely supported measure ``sum_k w_k delta_{r_k}`` with
``sum_k w_k r_k(x) = 1`` for every x.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import optimize

from .quadrature import ABS_TOL, QuadratureError, integrate_panels

NORM_TOL = 1e-8
NORM_ERROR_TOL = 1e-6
GRID_POINTS = 10_000
MAX_SIGN_CHANGES = 64


class ContinuousError(ValueError):
    pass


@dataclass(frozen=True)
class IntervalSet:
    """Sorted disjoint half-open intervals [a_k, b_k)."""

    intervals: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        ivs = tuple((float(a), float(b)) for a, b in self.intervals if b > a)
        for (a0, b0), (a1, b1) in zip(ivs, ivs[1:]):
            if a1 < b0:
                raise ContinuousError(f"intervals [{a0}, {b0}) and [{a1}, {b1}) overlap or are unsorted")
        # merge touching pieces
        merged: list[tuple[float, float]] = []
        for a, b in ivs:
            if merged and merged[-1][1] == a:
                merged[-1] = (merged[-1][0], b)
            else:
                merged.append((a, b))
        object.__setattr__(self, "intervals", tuple(merged))
        object.__setattr__(self, "_starts", [a for a, _ in merged])

    def __contains__(self, x: float) -> bool:
        k = bisect.bisect_right(self._starts, x) - 1
        return k >= 0 and x < self.intervals[k][1]

    def indicator(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        starts = np.array(self._starts)
        ends = np.array([b for _, b in self.intervals])
        if starts.size == 0:
            return np.zeros(x.shape)
        k = np.searchsorted(starts, x, side="right") - 1
        inside = (k >= 0) & (x < ends[np.clip(k, 0, None)])
        return inside.astype(float)

    def complement(self, support: tuple[float, float]) -> "IntervalSet":
        lo, hi = support
        out = []
        cur = lo
        for a, b in self.intervals:
            a, b = max(a, lo), min(b, hi)
            if b <= a:
                continue
            if a > cur:
                out.append((cur, a))
            cur = max(cur, b)
        if cur < hi:
            out.append((cur, hi))
        return IntervalSet(tuple(out))

    def endpoints(self) -> list[float]:
        return [e for iv in self.intervals for e in iv if math.isfinite(e)]

    def to_list(self) -> list[list[float]]:
        return [[a, b] for a, b in self.intervals]


@dataclass(frozen=True)
class ExtremalFunction:
    alpha: float
    f_plus: IntervalSet

    def __call__(self, x) -> np.ndarray:
        return 1.0 + math.expm1(self.alpha) * self.f_plus.indicator(x)


@dataclass(frozen=True)
class ExtremalMeasure:
    atoms: tuple[tuple[ExtremalFunction, float], ...]

    def __post_init__(self):
        atoms = tuple((r, float(w)) for r, w in self.atoms)
        if any(w < 0 for _, w in atoms):
            raise ContinuousError("atom weights must be non-negative")
        object.__setattr__(self, "atoms", atoms)

    @property
    def mass(self) -> float:
        return sum(w for _, w in self.atoms)

    def evaluate(self, x) -> np.ndarray:
        """x -> sum_k w_k r_k(x); equal to 1 for a valid mechanism."""
        x = np.asarray(x, dtype=float)
        return sum((w * r(x) for r, w in self.atoms), np.zeros(x.shape))

    def check_points(self, support: tuple[float, float], n: int = GRID_POINTS) -> np.ndarray:
        eps = 1e-9
        pts = [_grid(support, n)]
        for r, _ in self.atoms:
            for e in r.f_plus.endpoints():
                pts.append(np.array([e - eps * max(1, abs(e)), e, e + eps * max(1, abs(e))]))
        x = np.concatenate(pts)
        lo, hi = support
        return x[(x >= lo) & (x < hi)]

    def normalization_error(self, support: tuple[float, float]) -> tuple[float, float]:
        """Largest |sum_k w_k r_k(x) - 1| over the check grid and where it occurs."""
        x = self.check_points(support)
        dev = np.abs(self.evaluate(x) - 1.0)
        k = int(np.argmax(dev))
        return float(dev[k]), float(x[k])


def _grid(support: tuple[float, float], n: int) -> np.ndarray:
    lo, hi = support
    u = (np.arange(n) + 0.5) / n
    if math.isfinite(lo) and math.isfinite(hi):
        return lo + (hi - lo) * u
    if math.isfinite(lo):
        return lo + u / (1 - u)
    if math.isfinite(hi):
        return hi - (1 - u) / u
    return np.tan(np.pi * (u - 0.5))


@dataclass(frozen=True)
class ContinuousModel:
    """Scalar model on an interval frozen at theta_0: density and score callables.

    ``score_roots`` lists the points where the score changes sign; ``kinks``
    lists other non-smooth points of the integrands. Both become panel breaks.
    """

    support: tuple[float, float]
    density: Callable[[float], float]
    score: Callable[[float], float]
    score_roots: Optional[tuple[float, ...]] = None
    kinks: tuple[float, ...] = ()
    name: str = "custom"
    abs_tol: float = ABS_TOL
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        lo, hi = self.support
        if not lo < hi:
            raise ContinuousError(f"empty support {self.support}")

    # integration helpers
    def breakpoints(self) -> list[float]:
        return sorted({*self.sign_changes(), *self.kinks})

    def integrate(self, f: Callable[[float], float], a: Optional[float] = None,
                  b: Optional[float] = None, extra: Sequence[float] = ()) -> float:
        lo, hi = self.support
        a = lo if a is None else max(a, lo)
        b = hi if b is None else min(b, hi)
        if b <= a:
            return 0.0
        return integrate_panels(f, a, b, [*self.breakpoints(), *extra], abs_tol=self.abs_tol)

    def integrate_over(self, f: Callable[[float], float], s: IntervalSet) -> float:
        return sum(self.integrate(f, a, b) for a, b in s.intervals)

    # sign structure
    def sign_changes(self) -> list[float]:
        if self.score_roots is not None:
            return list(self.score_roots)
        if "roots" not in self._cache:
            self._cache["roots"] = _find_sign_changes(self.score, self.support)
        return self._cache["roots"]

    def positive_set(self) -> IntervalSet:
        """{x : s(x) > 0} as intervals between consecutive sign changes."""
        lo, hi = self.support
        edges = [lo, *[r for r in self.sign_changes() if lo < r < hi], hi]
        out = []
        for a, b in zip(edges[:-1], edges[1:]):
            if self.score(_interior_point(a, b)) > 0:
                out.append((a, b))
        return IntervalSet(tuple(out))

    # moments
    def total_mass(self) -> float:
        return self.integrate(self.density)

    def mean_score(self) -> float:
        return self.integrate(lambda x: self.score(x) * self.density(x))

    def mean_abs_score(self) -> float:
        if "mean_abs" not in self._cache:
            self._cache["mean_abs"] = self.integrate(lambda x: abs(self.score(x)) * self.density(x))
        return self._cache["mean_abs"]

    def information(self) -> float:
        return self.integrate(lambda x: self.score(x) ** 2 * self.density(x))

    def validate(self, tol: float = 1e-8) -> None:
        mass = self.total_mass()
        if abs(mass - 1) > tol:
            raise ContinuousError(f"density integrates to {mass!r}")
        ms = self.mean_score()
        if abs(ms) > tol:
            raise ContinuousError(f"score is not centered: {ms!r}")
        info = self.information()
        if not math.isfinite(info):
            raise ContinuousError("score is not square integrable")

    def prob(self, s: IntervalSet) -> float:
        return self.integrate_over(self.density, s)

    def score_mass(self, s: IntervalSet) -> float:
        """Integral of s * p over the set."""
        return self.integrate_over(lambda x: self.score(x) * self.density(x), s)


def _interior_point(a: float, b: float) -> float:
    if math.isfinite(a) and math.isfinite(b):
        return 0.5 * (a + b)
    if math.isfinite(a):
        return a + 1.0
    if math.isfinite(b):
        return b - 1.0
    return 0.0


def _find_sign_changes(score, support, n: int = 4001, cap: int = MAX_SIGN_CHANGES) -> list[float]:
    x = _grid(support, n)
    s = np.array([score(v) for v in x])
    sg = np.sign(s)
    roots = []
    for k in range(n - 1):
        if sg[k] == 0:
            continue
        j = k + 1
        if sg[j] == 0 or sg[j] == sg[k]:
            continue
        roots.append(optimize.brentq(score, x[k], x[j], xtol=1e-14, rtol=1e-14))
    # zeros landing exactly on grid points
    for k in np.flatnonzero(sg == 0):
        if 0 < k < n - 1 and sg[k - 1] * sg[k + 1] < 0:
            roots.append(float(x[k]))
    roots = sorted(roots)
    if len(roots) > cap:
        raise ContinuousError(f"score changes sign more than {cap} times; supply score_roots")
    return roots


# built-in models ------------------------------------------------------------

def _positive(name: str, value: float) -> None:
    if not (math.isfinite(value) and value > 0):
        raise ContinuousError(f"{name} must be positive and finite, got {value!r}")


def gaussian(mu: float = 0.0, sigma: float = 1.0) -> ContinuousModel:
    """N(theta, sigma^2) at theta_0 = mu; score (x - mu) / sigma^2."""
    _positive("sigma", sigma)
    if not math.isfinite(mu):
        raise ContinuousError(f"mu must be finite, got {mu!r}")
    c = 1.0 / (sigma * math.sqrt(2 * math.pi))
    return ContinuousModel(
        support=(-math.inf, math.inf),
        density=lambda x: c * math.exp(-0.5 * ((x - mu) / sigma) ** 2),
        score=lambda x: (x - mu) / sigma ** 2,
        score_roots=(mu,),
        name="gaussian",
    )


def exponential(rate: float = 1.0) -> ContinuousModel:
    """Exp(theta) at theta_0 = rate; score 1/rate - x."""
    _positive("rate", rate)
    return ContinuousModel(
        support=(0.0, math.inf),
        density=lambda x: rate * math.exp(-rate * x),
        score=lambda x: 1.0 / rate - x,
        score_roots=(1.0 / rate,),
        name="exponential",
    )


def logistic(loc: float = 0.0, scale: float = 1.0) -> ContinuousModel:
    """Logistic location family; score tanh((x - loc) / (2 scale)) / scale."""
    _positive("scale", scale)
    def dens(x):
        z = (x - loc) / scale
        return math.exp(-abs(z)) / (scale * (1 + math.exp(-abs(z))) ** 2)

    return ContinuousModel(
        support=(-math.inf, math.inf),
        density=dens,
        score=lambda x: math.tanh((x - loc) / (2 * scale)) / scale,
        score_roots=(loc,),
        name="logistic",
    )


def piecewise(breaks: Sequence[float], density: Sequence[float], score: Sequence[float]) -> ContinuousModel:
    """Density and score constant on each [breaks[k], breaks[k+1])."""
    br = np.asarray(breaks, dtype=float)
    dv = np.asarray(density, dtype=float)
    sv = np.asarray(score, dtype=float)
    if br.ndim != 1 or br.size < 2 or np.any(np.diff(br) <= 0):
        raise ContinuousError("breaks must be strictly increasing with at least two entries")
    if dv.shape != (br.size - 1,) or sv.shape != dv.shape:
        raise ContinuousError("density and score need one value per piece")
    if not (math.isfinite(br[0]) and math.isfinite(br[-1])):
        raise ContinuousError("piecewise models need a bounded support")
    if np.any(dv < 0):
        raise ContinuousError("density must be non-negative")

    def piece(x):
        return min(max(int(np.searchsorted(br, x, side="right")) - 1, 0), dv.size - 1)

    roots = [float(br[k + 1]) for k in range(dv.size - 1) if (sv[k] > 0) != (sv[k + 1] > 0)]
    return ContinuousModel(
        support=(float(br[0]), float(br[-1])),
        density=lambda x: float(dv[piece(x)]),
        score=lambda x: float(sv[piece(x)]),
        score_roots=tuple(roots),
        kinks=tuple(float(b) for b in br),
        name="custom-piecewise",
    )


# privatized quantities ------------------------------------------------------

def tilde_density(m: ContinuousModel, r: ExtremalFunction, method: str = "mass") -> float:
    """Integral of r * p: 1 + (e^a - 1) P(F+)."""
    if method == "mass":
        return 1.0 + math.expm1(r.alpha) * m.prob(r.f_plus)
    if method == "direct":
        return m.integrate(lambda x: float(r(x)) * m.density(x), extra=r.f_plus.endpoints())
    raise ContinuousError(f"unknown method {method!r}")


def tilde_score(m: ContinuousModel, r: ExtremalFunction) -> float:
    return math.expm1(r.alpha) * m.score_mass(r.f_plus) / tilde_density(m, r)


def fisher_info_extremal(m: ContinuousModel, mu: ExtremalMeasure) -> float:
    """(e^a-1)^2 * sum_k w_k (int_{F_k} s p)^2 / p~(r_k)."""
    err, where = mu.normalization_error(m.support)
    if err > NORM_ERROR_TOL:
        raise ContinuousError(f"measure violates normalization by {err:.3g} at x = {where!r}")
    total = 0.0
    for r, w in mu.atoms:
        if w == 0:
            continue
        num = m.score_mass(r.f_plus)
        total += w * math.expm1(r.alpha) ** 2 * num ** 2 / tilde_density(m, r)
    return total


def info_bounds(m: ContinuousModel, alpha: float) -> tuple[float, float]:
    """Lower and upper bounds on the best privatized information at budget alpha."""
    if alpha < 0:
        raise ContinuousError("budget must be non-negative")
    e1 = math.expm1(alpha)
    ea = math.exp(alpha)
    a = m.mean_abs_score()
    if not math.isfinite(a):
        raise QuadratureError("E|s| is not finite")
    return e1 ** 2 / (2 * ea * (1 + ea)) * a ** 2, e1 ** 2 / 4 * a ** 2


def two_point_mechanism(m: ContinuousModel, alpha: float) -> ExtremalMeasure:
    """Weights 1/(1+e^a) on the indicator patterns of {s > 0} and {s <= 0}."""
    pos = m.positive_set()
    neg = pos.complement(m.support)
    w = 1.0 / (1.0 + math.exp(alpha))
    return ExtremalMeasure(((ExtremalFunction(alpha, pos), w), (ExtremalFunction(alpha, neg), w)))


def small_alpha_limit(m: ContinuousModel, alpha: float) -> float:
    """alpha^2 / 4 * (E|s|)^2, the common small-budget equivalent of both bounds."""
    return alpha ** 2 / 4 * m.mean_abs_score() ** 2


def gaussian_reference(alpha: float) -> float:
    """2/pi * ((e^a - 1)/(e^a + 1))^2, the best information for a unit Gaussian mean."""
    return 2 / math.pi * math.tanh(alpha / 2) ** 2


__all__ = [
    "ContinuousError", "ContinuousModel", "ExtremalFunction", "ExtremalMeasure", "IntervalSet",
    "exponential", "fisher_info_extremal", "gaussian", "gaussian_reference", "info_bounds",
    "logistic", "piecewise", "small_alpha_limit", "tilde_density", "tilde_score",
    "two_point_mechanism",
]
