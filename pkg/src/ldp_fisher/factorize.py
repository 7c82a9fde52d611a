"""Factor a finite alpha-LDP channel through staircase patterns.

Any alpha-LDP channel q can be written q = q2 o q1 where
``q1_x(beta) = omega_beta * r_beta(x)`` is extremal and q2 is a
post-randomization. The per-output convex decomposition of the normalized
column u(z) onto the cube vertices is not unique; two constructions are
offered:

* ``product``: independent per-coordinate split, closed form, up to 2**d atoms.
* ``sparse``: vertex peeling, at most d + 1 atoms per output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .channel import LDP_SLACK, Channel, ChannelError, effective_alpha
from .staircase import DEFAULT_MAX_DIM, bits

Mode = Literal["product", "sparse"]

PRUNE_FLOOR = 1e-14
_SNAP = 1e-13


class FactorizationError(ValueError):
    pass


def min_mass(c: Channel) -> np.ndarray:
    return c.kernel.min(axis=0)


def normalized_ratios(c: Channel, alpha: float) -> np.ndarray:
    """u_x(z) = q_x(z) / min_x q_x(z), or 1 on columns with zero minimum."""
    k = c.kernel
    qmin = min_mass(c)
    pos = qmin > 0
    u = np.ones_like(k)
    u[:, pos] = k[:, pos] / qmin[pos]
    bad_zero = (~pos) & (k.max(axis=0) > 0)
    if np.any(bad_zero):
        raise FactorizationError(
            f"column {int(np.flatnonzero(bad_zero)[0])} is zero for some inputs only; "
            "the channel is not alpha-LDP for any finite alpha")
    ceiling = math.exp(alpha) * (1 + LDP_SLACK)
    if np.any(u > ceiling):
        x, z = np.unravel_index(int(np.argmax(u)), u.shape)
        raise FactorizationError(
            f"ratio u[{x},{z}]={u[x, z]!r} exceeds e^alpha={math.exp(alpha)!r}: budget violated")
    return u


def _cube_coords(u: np.ndarray, alpha: float) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    ea = math.exp(alpha)
    hi = ea * (1 + LDP_SLACK)
    if np.any(u < 1 - LDP_SLACK) or np.any(u > hi):
        raise FactorizationError(f"vector {u.tolist()} lies outside [1, e^alpha]^d")
    if ea == 1.0:
        return np.zeros_like(u)
    return np.clip((u - 1.0) / (ea - 1.0), 0.0, 1.0)


def _index(v: np.ndarray) -> int:
    return int(np.dot(v.astype(np.int64), 1 << np.arange(v.size, dtype=np.int64)))


def _product_weights(lam: np.ndarray) -> dict[int, float]:
    d = lam.size
    betas = np.arange(1 << d)
    digit = (betas[:, None] >> np.arange(d)[None, :]) & 1
    w = np.prod(np.where(digit == 1, lam, 1.0 - lam), axis=1)
    keep = w >= PRUNE_FLOOR
    w = w[keep] / w[keep].sum()
    return {int(b): float(x) for b, x in zip(betas[keep], w)}


def _sparse_weights(lam: np.ndarray) -> dict[int, float]:
    y = lam.copy()
    remaining = 1.0
    out: dict[int, float] = {}
    for _ in range(lam.size + 1):
        y[y < _SNAP] = 0.0
        y[y > 1 - _SNAP] = 1.0
        v = (y >= 0.5).astype(float)
        on_vertex = np.all((y == 0.0) | (y == 1.0))
        if on_vertex:
            t = 1.0
        else:
            t = float(np.min(np.where(v == 1.0, y, 1.0 - y)))
        b = _index(v)
        out[b] = out.get(b, 0.0) + remaining * t
        if t >= 1.0:
            break
        y = (y - t * v) / (1.0 - t)
        remaining *= 1.0 - t
    out = {b: w for b, w in out.items() if w >= PRUNE_FLOOR}
    total = sum(out.values())
    return {b: w / total for b, w in out.items()}


def vertex_decompose(u, alpha: float, mode: Mode = "sparse") -> dict[int, float]:
    """Convex weights c_beta with sum_beta c_beta r_beta = u."""
    lam = _cube_coords(u, alpha)
    if lam.size > DEFAULT_MAX_DIM:
        raise FactorizationError(f"alphabet size {lam.size} exceeds the cap {DEFAULT_MAX_DIM}")
    if mode == "product":
        return _product_weights(lam)
    if mode == "sparse":
        return _sparse_weights(lam)
    raise FactorizationError(f"unknown mode {mode!r}")


def patterns_matrix(betas, d: int, alpha: float) -> np.ndarray:
    """d x len(betas) matrix with columns r_beta."""
    ea = math.exp(alpha)
    return np.stack([np.where(bits(b, d) == 1, ea, 1.0) for b in betas], axis=1)


@dataclass(frozen=True)
class ExtremalFactorization:
    alpha: float
    omega: dict[int, float]
    q1: Channel
    q2: Channel
    min_mass: np.ndarray
    coefficients: dict[tuple[int, int], float]
    mode: str

    @property
    def support(self) -> list[int]:
        return list(self.omega)

    def omega_mass(self) -> float:
        return float(sum(self.omega.values()))

    def checks(self, original: Channel) -> dict:
        from .channel import compose, is_extremal

        d = self.q1.d
        R = patterns_matrix(self.support, d, self.alpha)
        w = np.array([self.omega[b] for b in self.support])
        return {
            "roundtrip_max_abs_error": float(np.max(np.abs(compose(self.q1, self.q2).kernel - original.kernel))),
            "omega_mass": self.omega_mass(),
            "omega_mass_window": [math.exp(-self.alpha), 1.0],
            "normalization_max_error": float(np.max(np.abs(R @ w - 1.0))),
            "q1_extremal": is_extremal(self.q1, self.alpha),
        }

    def to_dict(self, original: Channel | None = None) -> dict:
        out = {
            "alpha": self.alpha,
            "mode": self.mode,
            "omega": {str(b): w for b, w in self.omega.items()},
            "q1": self.q1.to_dict(),
            "q2": self.q2.to_dict(),
            "min_mass": self.min_mass.tolist(),
        }
        if original is not None:
            out["checks"] = self.checks(original)
        return out

    @classmethod
    def from_dict(cls, obj: dict) -> "ExtremalFactorization":
        """Rebuild from :meth:`to_dict` output; per-output coefficients are not stored."""
        return cls(
            alpha=float(obj["alpha"]),
            omega={int(b): float(w) for b, w in obj["omega"].items()},
            q1=Channel.from_dict(obj["q1"]),
            q2=Channel.from_dict(obj["q2"]),
            min_mass=np.asarray(obj["min_mass"], dtype=float),
            coefficients={},
            mode=obj["mode"],
        )


def factorize(c: Channel, alpha: float, mode: Mode = "sparse") -> ExtremalFactorization:
    """Split ``c`` into an extremal first stage and a post-randomization."""
    a_eff, _, _ = effective_alpha(c)
    if a_eff > alpha + LDP_SLACK:
        raise FactorizationError(f"channel needs budget {a_eff!r} > {alpha!r}")
    if c.d > DEFAULT_MAX_DIM:
        raise FactorizationError(f"alphabet size {c.d} exceeds the cap {DEFAULT_MAX_DIM}")
    qmin = min_mass(c)
    u = normalized_ratios(c, alpha)

    coeffs: dict[tuple[int, int], float] = {}
    omega: dict[int, float] = {}
    for z in range(c.l):
        if qmin[z] == 0:
            continue
        for b, w in vertex_decompose(u[:, z], alpha, mode).items():
            coeffs[(z, b)] = w
            omega[b] = omega.get(b, 0.0) + qmin[z] * w
    support = sorted(b for b, w in omega.items() if w > 0)
    omega = {b: omega[b] for b in support}
    col = {b: i for i, b in enumerate(support)}

    R = patterns_matrix(support, c.d, alpha)
    w = np.array([omega[b] for b in support])
    q1 = R * w[None, :]
    q2 = np.zeros((len(support), c.l))
    for (z, b), cw in coeffs.items():
        q2[col[b], z] += qmin[z] * cw
    q2 /= w[:, None]
    # absorb rounding so each row is a distribution to machine precision
    q1 /= q1.sum(axis=1, keepdims=True)
    q2 /= q2.sum(axis=1, keepdims=True)
    try:
        ch1, ch2 = Channel(q1), Channel(q2)
    except ChannelError as exc:  # pragma: no cover - guards numerical breakdown
        raise FactorizationError(f"factorization lost normalization: {exc}") from exc
    return ExtremalFactorization(float(alpha), omega, ch1, ch2, qmin, coeffs, mode)
