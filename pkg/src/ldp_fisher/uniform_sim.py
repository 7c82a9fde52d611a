"""Private estimation of the range of a uniform[0, theta] sample.

Each record is privatized by a binary extremal channel that reports 1 with
odds e^alpha when the record lies below a deterministic preliminary estimate
``theta_p``. The mean of the public bits is inverted into an estimate of
theta.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .rng import stream

BLOCK = 4096


class SimulationError(ValueError):
    pass


@dataclass(frozen=True)
class UniformChannel:
    alpha: float
    theta_p: float

    def __post_init__(self):
        if self.alpha < 0 or not math.isfinite(self.alpha):
            raise SimulationError("alpha must be finite and non-negative")
        if not self.theta_p > 0:
            raise SimulationError("theta_p must be positive")

    def prob_one(self, x) -> np.ndarray:
        """P(Z = 1 | X = x)."""
        ea = math.exp(self.alpha)
        x = np.asarray(x, dtype=float)
        return np.where(x < self.theta_p, ea / (1 + ea), 1 / (1 + ea))

    def privatize(self, x, rng: np.random.Generator) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return (rng.random(x.shape) < self.prob_one(x)).astype(np.int8)


def _check_pos(**kw):
    for k, v in kw.items():
        if not (isinstance(v, (int, float)) and v > 0 and math.isfinite(v)):
            raise SimulationError(f"{k} must be positive and finite, got {v!r}")


def tilde_p1(theta: float, theta_p: float, alpha: float) -> float:
    """P_theta(Z = 1) = 1/(1+e^a) + (e^a-1)/(1+e^a) * min(theta_p/theta, 1)."""
    _check_pos(theta=theta, theta_p=theta_p)
    ea = math.exp(alpha)
    return 1 / (1 + ea) + (ea - 1) / (1 + ea) * min(theta_p / theta, 1.0)


@dataclass(frozen=True)
class UniformEstimate:
    theta_hat: float
    z_bar: float
    n: int

    @property
    def valid(self) -> bool:
        return math.isfinite(self.theta_hat)


def invert(z_bar, theta_p: float, alpha: float) -> np.ndarray:
    """theta_p (e^a - 1) / ((1 + e^a) z_bar - 1); NaN where the denominator is <= 0."""
    z = np.asarray(z_bar, dtype=float)
    e1 = math.expm1(alpha)
    # (1 + e^a) z - 1 regrouped: 2z - 1 is exact near z = 1/2, which limits cancellation
    den = e1 * z + (2 * z - 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = theta_p * e1 / den
    return np.where(den > 0, out, np.nan)


def estimate(zs, theta_p: float, alpha: float) -> UniformEstimate:
    zs = np.asarray(zs)
    if zs.size == 0:
        raise SimulationError("no public bits to estimate from")
    z_bar = float(zs.mean())
    return UniformEstimate(float(invert(z_bar, theta_p, alpha)), z_bar, int(zs.size))


def asymptotic_variance(theta0: float, theta_p: float, alpha: float) -> float:
    """Limit variance of sqrt(n)(theta_hat - theta0), valid for theta_p <= theta0."""
    _check_pos(theta0=theta0, theta_p=theta_p)
    if theta_p > theta0:
        raise SimulationError("the variance formula requires theta_p <= theta0")
    ea = math.exp(alpha)
    e1 = math.expm1(alpha)
    ratio = theta_p / theta0
    return theta0 ** 4 / theta_p ** 2 / e1 ** 2 * (1 + e1 * ratio) * (ea - e1 * ratio)


def fisher_upper_bound(theta0: float, alpha: float) -> float:
    """(e^a - 1)^2 / theta0^2: no private channel carries more information."""
    return math.expm1(alpha) ** 2 / theta0 ** 2


def fisher_floor_std(theta0: float, alpha: float, n: int) -> float:
    """Smallest standard deviation allowed by the information bound."""
    return theta0 / (math.expm1(alpha) * math.sqrt(n))


def channel_information(theta0: float, theta_p: float, alpha: float) -> float:
    """Information about theta carried by one public bit at theta0, for theta_p <= theta0.

    Equals 1 / asymptotic_variance, so the plug-in estimator is efficient for
    its channel.
    """
    _check_pos(theta0=theta0, theta_p=theta_p)
    if theta_p > theta0:
        raise SimulationError("the bit carries no local information when theta_p > theta0")
    e1 = math.expm1(alpha)
    r = theta_p / theta0
    return e1 ** 2 * r ** 2 / (theta0 ** 2 * (1 + e1 * r) * (math.exp(alpha) - e1 * r))


def two_point_information(theta0: float, alpha: float) -> float:
    """Channel information as theta_p rises to theta0: (e^a-1)^2 / (e^a theta0^2)."""
    return math.expm1(alpha) ** 2 / (math.exp(alpha) * theta0 ** 2)


def uniform_bounds(theta0: float, alpha: float) -> dict:
    """Best private information for the uniform range, bracketed.

    The lower end is attained by the two-point channel; the upper end holds
    for every alpha-LDP channel. Both behave like alpha^2 / theta0^2.
    """
    _check_pos(theta0=theta0)
    tp = two_point_information(theta0, alpha)
    limit = alpha ** 2 / theta0 ** 2
    return {
        "alpha": float(alpha),
        "lower": tp,
        "upper": fisher_upper_bound(theta0, alpha),
        "two_point_info": tp,
        "ratio_to_limit": tp / limit if limit > 0 else math.nan,
    }


def exact_moments(theta0: float, theta_p: float, alpha: float, n: int) -> dict:
    """Exact mean/std of theta_hat given it is defined, by enumerating the binomial law of sum Z."""
    from scipy.stats import binom

    p = tilde_p1(theta0, theta_p, alpha)
    k = np.arange(n + 1)
    pm = binom.pmf(k, n, p)
    est = invert(k / n, theta_p, alpha)
    ok = np.isfinite(est)
    w = pm[ok] / pm[ok].sum()
    mean = float(w @ est[ok])
    var = float(w @ (est[ok] - mean) ** 2)
    return {"mean": mean, "std": math.sqrt(var), "invalid_prob": float(pm[~ok].sum())}


# Monte Carlo -----------------------------------------------------------------

@dataclass(frozen=True)
class SimConfig:
    theta0: float = 1.0
    n: int = 1000
    alpha: float = 0.3
    grid: tuple[float, ...] = tuple(round(0.5 + 0.05 * k, 10) for k in range(17))
    mc_iters: int = 100_000
    seed: int = 0
    workers: int = 1
    method: str = "counts"
    two_stage: bool = False
    pilot_fraction: float = 0.1
    pilot_shrink: float = 0.95

    def __post_init__(self):
        _check_pos(theta0=self.theta0, n=self.n, mc_iters=self.mc_iters)
        if self.alpha < 0 or not math.isfinite(self.alpha):
            raise SimulationError("alpha must be finite and non-negative")
        if not self.grid:
            raise SimulationError("grid must be non-empty")
        if any(not g > 0 for g in self.grid):
            raise SimulationError("grid values must be positive")
        object.__setattr__(self, "grid", tuple(sorted(float(g) for g in self.grid)))
        if self.method not in ("counts", "records"):
            raise SimulationError(f"unknown method {self.method!r}")
        if self.workers < 1:
            raise SimulationError("workers must be >= 1")
        if self.two_stage and not 0 < self.pilot_fraction < 1:
            raise SimulationError("pilot_fraction must lie in (0, 1)")


def _public_sums(n: int, theta0: float, theta_p: float, alpha: float, size: int,
                 rng: np.random.Generator, method: str) -> np.ndarray:
    """Number of public ones in each of ``size`` samples of ``n`` records."""
    ea = math.exp(alpha)
    if method == "records":
        x = rng.uniform(0.0, theta0, size=(size, n))
        return UniformChannel(alpha, theta_p).privatize(x, rng).sum(axis=1)
    # same law, drawn through the count of records falling below theta_p
    below = rng.binomial(n, min(theta_p / theta0, 1.0), size=size)
    return rng.binomial(below, ea / (1 + ea)) + rng.binomial(n - below, 1 / (1 + ea))


def _block(args) -> np.ndarray:
    cfg, g_idx, b_idx = args
    size = min(BLOCK, cfg.mc_iters - b_idx * BLOCK)
    rng = stream(cfg.seed, g_idx, b_idx)
    tp = cfg.grid[g_idx]
    if not cfg.two_stage:
        s = _public_sums(cfg.n, cfg.theta0, tp, cfg.alpha, size, rng, cfg.method)
        return invert(s / cfg.n, tp, cfg.alpha)
    n1 = max(1, int(round(cfg.pilot_fraction * cfg.n)))
    n2 = cfg.n - n1
    s1 = _public_sums(n1, cfg.theta0, tp, cfg.alpha, size, rng, cfg.method)
    pilot = invert(s1 / n1, tp, cfg.alpha)
    out = np.full(size, np.nan)
    for i in np.flatnonzero(np.isfinite(pilot)):
        tp2 = cfg.pilot_shrink * pilot[i]
        s2 = _public_sums(n2, cfg.theta0, tp2, cfg.alpha, 1, rng, cfg.method)
        out[i] = invert(s2 / n2, tp2, cfg.alpha)[0]
    return out


@dataclass
class GridPoint:
    theta_p: float
    emp_mean: float
    emp_std: float
    theory_std: Optional[float]
    fisher_floor: float
    invalid_frac: float


@dataclass
class UniformSimReport:
    config: dict
    points: list[GridPoint] = field(default_factory=list)

    CSV_COLUMNS = ("theta_p", "emp_mean", "emp_std", "theory_std", "fisher_floor", "invalid_frac")

    @property
    def grid(self) -> list[float]:
        return [p.theta_p for p in self.points]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.CSV_COLUMNS)
        for p in self.points:
            w.writerow(["" if getattr(p, c) is None else repr(float(getattr(p, c))) for c in self.CSV_COLUMNS])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"config": self.config, "points": [asdict(p) for p in self.points]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=True)

    @classmethod
    def from_dict(cls, obj: dict) -> "UniformSimReport":
        return cls(config=dict(obj["config"]), points=[GridPoint(**p) for p in obj["points"]])


def simulate_estimates(cfg: SimConfig) -> list[np.ndarray]:
    """Per grid point, the ``mc_iters`` estimates in replication order (NaN = invalid)."""
    n_blocks = -(-cfg.mc_iters // BLOCK)
    tasks = [(cfg, g, b) for g in range(len(cfg.grid)) for b in range(n_blocks)]
    if cfg.workers == 1:
        blocks = [_block(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers) as ex:
            blocks = list(ex.map(_block, tasks, chunksize=max(1, len(tasks) // (4 * cfg.workers))))
    return [np.concatenate(blocks[g * n_blocks:(g + 1) * n_blocks]) for g in range(len(cfg.grid))]


def run_simulation(cfg: SimConfig) -> UniformSimReport:
    estimates = simulate_estimates(cfg)
    conf = asdict(cfg)
    conf["grid"] = list(cfg.grid)
    conf.pop("workers")  # results do not depend on it
    report = UniformSimReport(config=conf)
    floor = fisher_floor_std(cfg.theta0, cfg.alpha, cfg.n)
    for tp, est in zip(cfg.grid, estimates):
        ok = np.isfinite(est)
        vals = est[ok]
        mean = float(vals.mean()) if vals.size else math.nan
        std = float(vals.std(ddof=1)) if vals.size > 1 else math.nan
        theory = None
        if tp <= cfg.theta0 and not cfg.two_stage:
            theory = math.sqrt(asymptotic_variance(cfg.theta0, tp, cfg.alpha) / cfg.n)
        report.points.append(GridPoint(tp, mean, std, theory, floor, float((~ok).sum() / ok.size)))
    return report


def make_grid(start: float, end: float, step: float) -> tuple[float, ...]:
    if step <= 0 or end < start:
        raise SimulationError("grid needs step > 0 and end >= start")
    k = int(math.floor((end - start) / step + 1e-9))
    return tuple(round(start + i * step, 12) for i in range(k + 1))
