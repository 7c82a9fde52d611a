import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gen import random_ldp_channel
from ldp_fisher.channel import (
    Channel, ChannelError, LdpCertificate, compose, effective_alpha, is_extremal, push_forward,
    sample, verify_ldp,
)


def _brute_alpha(k: np.ndarray) -> float:
    best = 0.0
    d, l = k.shape
    for z, x, y in itertools.product(range(l), range(d), range(d)):
        if k[x, z] == 0:
            continue
        if k[y, z] == 0:
            return math.inf
        best = max(best, math.log(k[x, z] / k[y, z]))
    return best


@pytest.mark.parametrize("k", [2, 3, 5])
@pytest.mark.parametrize("alpha", [0.1, 1.0, 2.5])
def test_randomized_response_is_exactly_alpha(k, alpha):
    cert = verify_ldp(Channel.randomized_response(k, alpha), alpha)
    assert cert.alpha_effective == pytest.approx(alpha, abs=1e-12)
    assert cert.passes
    assert cert.is_extremal


def test_identity_needs_infinite_budget():
    cert = verify_ldp(Channel.identity(3), 1.0)
    assert math.isinf(cert.alpha_effective)
    assert not cert.passes
    assert not cert.is_extremal
    assert "removable output" in cert.note
    z, x, y = cert.witness
    assert Channel.identity(3).kernel[y, z] == 0 < Channel.identity(3).kernel[x, z]


def test_constant_channel_is_free():
    c = Channel.constant(4, [0.2, 0.8])
    cert = verify_ldp(c, 0.0)
    assert cert.alpha_effective == 0.0
    assert cert.passes and cert.is_extremal


def test_zero_columns_are_reported_and_ignored():
    k = np.array([[0.5, 0.0, 0.5], [0.25, 0.0, 0.75]])
    cert = verify_ldp(Channel(k), 1.0)
    assert cert.zero_columns == (1,)
    assert cert.alpha_effective == pytest.approx(math.log(2))
    assert "removable" in cert.note


def test_witness_locates_worst_ratio():
    k = np.array([[0.6, 0.4], [0.2, 0.8]])
    a, (z, x, y), _ = effective_alpha(Channel(k))
    assert a == pytest.approx(math.log(3))
    assert (z, x, y) == (0, 0, 1)


def test_extremal_detection():
    ea = math.exp(0.5)
    k = np.array([[ea, 1.0], [1.0, 1.0]])
    k /= k.sum(axis=1, keepdims=True)
    # ratios are (e^a (2)/(1+e^a)), not in the extremal set
    assert not is_extremal(Channel(k), 0.5)
    assert is_extremal(Channel.randomized_response(2, 0.5), 0.5)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_effective_alpha_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    d, l = rng.integers(2, 5), rng.integers(2, 6)
    k = rng.dirichlet(np.ones(l), size=d)
    if rng.random() < 0.3:
        k[0, 0] = 0.0
        k[0] /= k[0].sum()
    assert effective_alpha(Channel(k))[0] == pytest.approx(_brute_alpha(k), rel=1e-12, abs=1e-15)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([0.1, 0.5, 1.0, 2.0]))
def test_post_processing_never_increases_budget(seed, alpha):
    rng = np.random.default_rng(seed)
    d, l = int(rng.integers(2, 6)), int(rng.integers(2, 6))
    q = random_ldp_channel(rng, d, l, alpha)
    assert verify_ldp(q, alpha).passes
    post = Channel(rng.dirichlet(np.ones(3), size=q.l))
    assert effective_alpha(compose(q, post))[0] <= effective_alpha(q)[0] + 1e-12


def test_compose_matches_explicit_sum():
    rng = np.random.default_rng(0)
    a = Channel(rng.dirichlet(np.ones(3), size=2))
    b = Channel(rng.dirichlet(np.ones(4), size=3))
    c = compose(a, b).kernel
    for x, z in itertools.product(range(2), range(4)):
        assert c[x, z] == pytest.approx(sum(a.kernel[x, y] * b.kernel[y, z] for y in range(3)))
    with pytest.raises(ChannelError):
        compose(b, a)


def test_push_forward():
    c = Channel.randomized_response(2, math.log(3))
    np.testing.assert_allclose(push_forward(c, [1.0, 0.0]), [0.75, 0.25])
    with pytest.raises(ChannelError):
        push_forward(c, [0.5, 0.6])


@pytest.mark.parametrize("kernel", [
    [[0.5, 0.6]],
    [[-0.1, 1.1]],
    [[np.nan, 1.0]],
    [0.5, 0.5],
    [[]],
])
def test_rejects_invalid_kernels(kernel):
    with pytest.raises(ChannelError):
        Channel(kernel)


def test_kernel_is_read_only():
    c = Channel.identity(2)
    with pytest.raises(ValueError):
        c.kernel[0, 0] = 0.5


def test_sampling_frequencies():
    c = Channel(np.array([[0.1, 0.2, 0.7], [0.5, 0.25, 0.25]]))
    rng = np.random.default_rng(11)
    n = 200_000
    for x in range(2):
        z = sample(c, np.full(n, x), rng)
        freq = np.bincount(z, minlength=3) / n
        se = np.sqrt(c.kernel[x] * (1 - c.kernel[x]) / n)
        assert np.all(np.abs(freq - c.kernel[x]) < 5 * se)
    assert isinstance(sample(c, 1, rng), int)
    with pytest.raises(ChannelError):
        sample(c, 2, rng)


def test_json_round_trip():
    c = Channel.randomized_response(3, 0.4)
    obj = c.to_dict()
    assert (obj["d"], obj["l"]) == (3, 3)
    np.testing.assert_array_equal(Channel.from_dict(obj).kernel, c.kernel)
    with pytest.raises(ChannelError):
        Channel.from_dict({**obj, "d": 4})
    with pytest.raises(ChannelError):
        Channel.from_dict({"d": 3})


def test_certificate_round_trip():
    for c in (Channel.identity(2), Channel.randomized_response(3, 0.2)):
        cert = verify_ldp(c, 0.2)
        assert LdpCertificate.from_dict(cert.to_dict()) == cert


def test_negative_budget_rejected():
    with pytest.raises(ChannelError):
        verify_ldp(Channel.identity(2), -1.0)
