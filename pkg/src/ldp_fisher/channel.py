"""Finite randomization mechanisms q_x(z) and their privacy certificates."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

ROW_SUM_TOL = 1e-12
LDP_SLACK = 1e-10
EXTREMAL_TOL = 1e-8


class ChannelError(ValueError):
    pass


@dataclass(frozen=True)
class Channel:
    """Row-stochastic kernel: ``kernel[x, z] = P(Z = z | X = x)``."""

    kernel: np.ndarray

    def __post_init__(self):
        k = np.array(self.kernel, dtype=float)
        if k.ndim != 2 or k.shape[0] < 1 or k.shape[1] < 1:
            raise ChannelError(f"kernel must be a non-empty 2-d array, got shape {k.shape}")
        if not np.all(np.isfinite(k)):
            raise ChannelError("kernel contains non-finite entries")
        if np.any(k < 0):
            raise ChannelError("kernel contains negative entries")
        dev = np.abs(k.sum(axis=1) - 1.0)
        if np.any(dev > ROW_SUM_TOL):
            x = int(np.argmax(dev))
            raise ChannelError(f"row {x} sums to {k[x].sum()!r}, not 1 (tolerance {ROW_SUM_TOL})")
        k.setflags(write=False)
        object.__setattr__(self, "kernel", k)

    @property
    def d(self) -> int:
        return self.kernel.shape[0]

    @property
    def l(self) -> int:  # noqa: E743
        return self.kernel.shape[1]

    @classmethod
    def identity(cls, d: int) -> "Channel":
        return cls(np.eye(d))

    @classmethod
    def constant(cls, d: int, row=None) -> "Channel":
        row = np.array([1.0]) if row is None else np.asarray(row, dtype=float)
        return cls(np.tile(row, (d, 1)))

    @classmethod
    def randomized_response(cls, k: int, alpha: float) -> "Channel":
        """k-ary randomized response, exactly alpha-LDP."""
        ea = math.exp(alpha)
        kern = np.full((k, k), 1.0 / (ea + k - 1))
        np.fill_diagonal(kern, ea / (ea + k - 1))
        return cls(kern)

    def to_dict(self) -> dict:
        return {"d": self.d, "l": self.l, "kernel": self.kernel.tolist()}

    @classmethod
    def from_dict(cls, obj: dict) -> "Channel":
        try:
            kern = np.array(obj["kernel"], dtype=float)
        except KeyError as exc:
            raise ChannelError("channel JSON needs a 'kernel' field") from exc
        if kern.ndim != 2:
            raise ChannelError("'kernel' must be a list of rows")
        for key, size in (("d", kern.shape[0]), ("l", kern.shape[1])):
            if key in obj and int(obj[key]) != size:
                raise ChannelError(f"'{key}'={obj[key]} does not match kernel shape {kern.shape}")
        return cls(kern)


@dataclass(frozen=True)
class LdpCertificate:
    alpha_effective: float
    alpha: float
    is_extremal: bool
    witness: Optional[tuple[int, int, int]] = None  # (z, x, x') attaining the max ratio
    zero_columns: tuple[int, ...] = ()
    note: str = ""

    @property
    def passes(self) -> bool:
        return self.alpha_effective <= self.alpha + LDP_SLACK

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "alpha_effective": self.alpha_effective if math.isfinite(self.alpha_effective) else "inf",
            "passes": self.passes,
            "is_extremal": self.is_extremal,
            "witness": list(self.witness) if self.witness is not None else None,
            "zero_columns": list(self.zero_columns),
            "note": self.note,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "LdpCertificate":
        a_eff = obj["alpha_effective"]
        return cls(
            alpha_effective=math.inf if a_eff == "inf" else float(a_eff),
            alpha=float(obj["alpha"]),
            is_extremal=bool(obj["is_extremal"]),
            witness=tuple(obj["witness"]) if obj.get("witness") is not None else None,
            zero_columns=tuple(obj.get("zero_columns", ())),
            note=obj.get("note", ""),
        )


def effective_alpha(c: Channel) -> tuple[float, Optional[tuple[int, int, int]], tuple[int, ...]]:
    """Smallest budget satisfied by ``c`` with its witness and all-zero columns.

    A column that vanishes on some rows but not all makes the budget infinite.
    """
    k = c.kernel
    col_max = k.max(axis=0)
    col_min = k.min(axis=0)
    zero_cols = tuple(int(z) for z in np.flatnonzero(col_max == 0))
    live = col_max > 0
    if not np.any(live):
        return 0.0, None, zero_cols
    partial = live & (col_min == 0)
    if np.any(partial):
        z = int(np.flatnonzero(partial)[0])
        return math.inf, (z, int(np.argmax(k[:, z])), int(np.argmin(k[:, z]))), zero_cols
    with np.errstate(divide="ignore"):
        log_ratio = np.where(live, np.log(col_max) - np.log(np.where(live, col_min, 1.0)), -np.inf)
    z = int(np.argmax(log_ratio))
    a_eff = max(float(log_ratio[z]), 0.0)
    return a_eff, (z, int(np.argmax(k[:, z])), int(np.argmin(k[:, z]))), zero_cols


def is_extremal(c: Channel, alpha: float, tol: float = EXTREMAL_TOL) -> bool:
    """True iff every ratio q_x'(z)/q_x(z) is within ``tol`` of e^-alpha, 1 or e^alpha."""
    k = c.kernel
    targets = np.array([math.exp(-alpha), 1.0, math.exp(alpha)])
    for z in range(c.l):
        col = k[:, z]
        if np.all(col == 0):
            continue
        if np.any(col == 0):
            return False
        ratios = col[:, None] / col[None, :]
        gap = np.min(np.abs(ratios[..., None] - targets), axis=-1)
        if np.any(gap > tol):
            return False
    return True


def verify_ldp(c: Channel, alpha: float) -> LdpCertificate:
    if alpha < 0 or not math.isfinite(alpha):
        raise ChannelError(f"budget must be finite and non-negative, got {alpha!r}")
    a_eff, witness, zero_cols = effective_alpha(c)
    notes = []
    if zero_cols:
        notes.append(f"all-zero output columns {list(zero_cols)} are removable")
    if math.isinf(a_eff):
        notes.append(f"removable output: column {witness[0]} is zero for some inputs but not all")
    extremal = math.isfinite(a_eff) and a_eff <= alpha + LDP_SLACK and is_extremal(c, alpha)
    return LdpCertificate(a_eff, float(alpha), extremal, witness, zero_cols, "; ".join(notes))


def compose(first: Channel, second: Channel) -> Channel:
    """Apply ``first`` then ``second``: q_x(z) = sum_y first_x(y) second_y(z)."""
    if first.l != second.d:
        raise ChannelError(f"cannot compose {first.d}x{first.l} with {second.d}x{second.l}")
    return Channel(first.kernel @ second.kernel)


def push_forward(c: Channel, p) -> np.ndarray:
    """Output distribution sum_x p(x) q_x(.)."""
    p = np.asarray(p, dtype=float)
    if p.shape != (c.d,):
        raise ChannelError(f"input distribution has shape {p.shape}, expected ({c.d},)")
    if np.any(p < 0) or abs(p.sum() - 1.0) > ROW_SUM_TOL:
        raise ChannelError("input distribution must be non-negative and sum to 1")
    return p @ c.kernel


def sample(c: Channel, x, rng: np.random.Generator):
    """Draw output symbols for input symbol(s) ``x`` by inverse-CDF sampling."""
    xs = np.asarray(x)
    if not np.issubdtype(xs.dtype, np.integer):
        raise ChannelError("input symbols must be integers")
    if np.any((xs < 0) | (xs >= c.d)):
        raise ChannelError(f"input symbol out of range [0, {c.d})")
    cdf = np.cumsum(c.kernel, axis=1)
    cdf[:, -1] = 1.0
    u = rng.random(xs.shape)
    rows = cdf[xs]
    out = (u[..., None] >= rows).sum(axis=-1)
    # zero-probability trailing symbols can never be selected
    out = np.minimum(out, c.l - 1)
    if xs.ndim == 0:
        return int(out)
    return out
