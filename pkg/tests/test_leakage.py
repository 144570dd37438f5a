import numpy as np
import pytest
from hypothesis import given, strategies as st

from artnoise.leakage import (DeviceNoise, LeakageModel, Secret, TraceSet, binary_expand,
                              bit_matrix, hamming_weight, make_synthetic_model, synth_trace,
                              synth_traceset)


def popcount_loop(x):
    n = 0
    while x:
        n += x & 1
        x >>= 1
    return n


@pytest.mark.parametrize("x, expected", [(0, 0), (255, 8), (0b10110010, popcount_loop(0b10110010))])
def test_hamming_weight(x, expected):
    assert hamming_weight(x) == expected


def test_hamming_weight_negative():
    with pytest.raises(ValueError):
        hamming_weight(-1)


@pytest.mark.parametrize("x, B, expected", [
    (0, 8, [1, 0, 0, 0, 0, 0, 0, 0, 0]),
    (255, 8, [1] * 9),
    (5, 3, [1, 1, 0, 1]),
])
def test_binary_expand(x, B, expected):
    np.testing.assert_array_equal(binary_expand(x, B), expected)


def test_binary_expand_out_of_range():
    with pytest.raises(ValueError):
        binary_expand(8, 3)
    with pytest.raises(ValueError):
        Secret(256, 8)


@pytest.mark.parametrize("B", range(1, 9))
def test_binary_expand_is_injective(B):
    rows = {tuple(binary_expand(x, B)) for x in range(2**B)}
    assert len(rows) == 2**B
    np.testing.assert_array_equal(bit_matrix(B), [binary_expand(x, B) for x in range(2**B)])


@given(st.integers(1, 16).flatmap(lambda B: st.tuples(st.just(B), st.integers(0, 2**B - 1))))
def test_secret_bits_roundtrip(args):
    B, x = args
    bits = Secret(x, B).bits
    assert bits[0] == 1
    assert sum(int(b) << i for i, b in enumerate(bits[1:])) == x


def test_linear_noiseless_limit(rng):
    model = make_synthetic_model(12, 4, [1, 5, 9], rng)
    key = Secret(11, 4)
    trace = synth_trace(key, model, DeviceNoise(0.0, 1e-12), rng)
    np.testing.assert_allclose(trace.samples, model.W @ key.bits, atol=1e-9)


def test_hw_zero_key_gives_zero_trace(rng):
    model = LeakageModel.hamming_weight(6, 8, [0, 3])
    trace = synth_trace(Secret(0), model, DeviceNoise(0.0, 1e-12), rng)
    np.testing.assert_allclose(trace.samples, 0.0, atol=1e-9)


def test_linear_replay_oracle():
    model = make_synthetic_model(10, 3, [2, 7], np.random.default_rng(3))
    trace = synth_trace(Secret(5, 3), model, DeviceNoise(0.5, 2.0), np.random.default_rng(99))
    # independent replay: W @ [1,1,0,1] plus the same seeded noise stream
    noise = np.random.default_rng(99).normal(0.5, 2.0, size=10)
    expected = model.W @ np.array([1.0, 1.0, 0.0, 1.0]) + noise
    np.testing.assert_allclose(trace.samples, expected)


def test_dimension_mismatch(rng):
    model = make_synthetic_model(10, 3, [2], rng)
    with pytest.raises(ValueError):
        synth_trace(Secret(5, 4), model, DeviceNoise(), rng)
    with pytest.raises(ValueError):
        LeakageModel("linear", 10, 3, W=np.zeros((10, 3)))


def test_make_synthetic_model_contracts():
    with pytest.raises(ValueError):
        make_synthetic_model(10, 8, [], np.random.default_rng(0))
    with pytest.raises(ValueError):
        make_synthetic_model(10, 8, [10], np.random.default_rng(0))
    model = make_synthetic_model(10, 8, {2, 7}, np.random.default_rng(0))
    zero_rows = [0, 1, 3, 4, 5, 6, 8, 9]
    assert np.all(model.W[zero_rows] == 0)
    assert np.all(model.W[[2, 7]] != 0)
    again = make_synthetic_model(10, 8, {2, 7}, np.random.default_rng(0))
    np.testing.assert_array_equal(model.W, again.W)


def test_noise_variance_converges(rng):
    model = make_synthetic_model(4, 2, [1], rng)
    ts = synth_traceset(model, DeviceNoise(1.0, 2.0), {3: 100_000}, rng)
    var = ts.get(3).var(axis=0)
    np.testing.assert_allclose(var, 4.0, rtol=0.05)


def test_noiseless_traces_identical(rng):
    model = make_synthetic_model(6, 3, [0, 4], rng)
    a = synth_trace(Secret(6, 3), model, DeviceNoise(0.0, 1e-300), rng).samples
    b = synth_trace(Secret(6, 3), model, DeviceNoise(0.0, 1e-300), rng).samples
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-250)


def test_hw_signal_monotone_in_weight():
    model = LeakageModel.hamming_weight(5, 8, [1, 3])
    by_weight = {}
    for k in range(256):
        by_weight.setdefault(hamming_weight(k), model.signal(k))
    levels = [by_weight[w] for w in sorted(by_weight)]
    for lo, hi in zip(levels, levels[1:]):
        assert np.all(hi[[1, 3]] > lo[[1, 3]])
        assert np.all(hi[[0, 2, 4]] == 0)


def test_hd_with_zero_reference_equals_hw():
    hw = LeakageModel.hamming_weight(4, 8, [2])
    hd0 = LeakageModel.hamming_weight(4, 8, [2], reference=0)
    hd = LeakageModel.hamming_weight(4, 8, [2], reference=0xFF)
    np.testing.assert_array_equal(hw.signals(), hd0.signals())
    assert hd.signal(0xFF)[2] == 0 and hd.signal(0)[2] == 8


def test_traceset_validation():
    with pytest.raises(ValueError):
        TraceSet({0: np.zeros((2, 3))}, m=4, B=2)
    with pytest.raises(ValueError):
        TraceSet({4: np.zeros((2, 4))}, m=4, B=2)
    ts = TraceSet({k: np.zeros((1, 4)) for k in range(4)}, m=4, B=2)
    assert ts.complete and ts.counts == {0: 1, 1: 1, 2: 1, 3: 1}
