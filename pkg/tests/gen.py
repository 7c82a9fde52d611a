"""Random instances shared by the property tests and the acceptance run."""

from __future__ import annotations

import math

import numpy as np

from ldp_fisher.channel import Channel
from ldp_fisher.factorize import factorize
from ldp_fisher.finite_fisher import FiniteModel


def random_ldp_channel(rng: np.random.Generator, d: int, l: int, alpha: float) -> Channel:  # noqa: E741
    """A channel that is alpha-LDP by construction, drawn from a few families.

    Generic kernels use q_x(z) proportional to b_z u_x(z) with u in
    [1, e^(alpha/2)], which keeps every likelihood ratio below e^alpha.
    """
    kind = rng.integers(5)
    half = math.exp(alpha / 2)
    if kind == 0 and d == l:
        return Channel.randomized_response(d, alpha)
    if kind == 1:
        # two-level columns: ratios hit e^alpha exactly where rows agree on the normalizer
        u = np.where(rng.random((d, l)) < 0.5, 1.0, half)
    else:
        u = rng.uniform(1.0, half, size=(d, l))
    b = rng.dirichlet(np.ones(l))
    k = b[None, :] * u
    if kind == 3 and l > 2:
        k[:, rng.integers(l)] = 0.0  # an all-zero output is allowed
    k /= k.sum(axis=1, keepdims=True)
    ch = Channel(k)
    if kind == 4:
        # the extremal first stage of a generic channel is itself a valid, sharper instance
        q1 = factorize(ch, alpha).q1
        if q1.l <= l:
            return q1
    return ch


def random_model(rng: np.random.Generator, d: int, nonzero: bool = True) -> FiniteModel:
    """Centered score with both signs present; zeros allowed when ``nonzero`` is False."""
    p = rng.dirichlet(2 * np.ones(d))
    s = np.concatenate([[1.0, -1.0], rng.choice([-1.0, 1.0], size=d - 2)])
    s *= rng.uniform(0.5, 2.0, size=d)
    if not nonzero and d > 2:
        s[rng.integers(2, d)] = 0.0
    s = s[rng.permutation(d)]
    pos = s > 0
    neg = s < 0
    s[pos] *= -(s[neg] @ p[neg]) / (s[pos] @ p[pos])
    s -= s @ p
    if not nonzero:
        s[np.abs(s) < 1e-15] = 0.0
    return FiniteModel(p, s)
