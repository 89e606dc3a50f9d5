import math

import numpy as np
import pytest

from lagscope.blocks import BlockModel, predict
from lagscope.errors import ValidationError
from lagscope.series import WeightFunction
from lagscope.synth import GenConfig, SignalSpec, gen_blocks_data, gen_gauss, gen_tte, synth_from_spec
from lagscope.xcorr import ccf_fft
from lagscope.series import to_indicator


def test_zero_signal_gives_no_events():
    for seed in range(5):
        x, _ = gen_tte(SignalSpec("constant", level=0.0), GenConfig(m=500, seed=seed))
        assert x.n == 0


def test_event_count_concentration():
    m, r = 1000, 0.05
    p = -math.expm1(-r)
    mean, sd = m * p, math.sqrt(m * p * (1 - p))
    assert mean == pytest.approx(48.77, abs=0.01)
    counts = [gen_tte(SignalSpec("constant", level=r), GenConfig(m=m, seed=s))[0].n for s in range(100)]
    assert all(abs(c - mean) <= 5 * sd for c in counts)


def test_zero_lag_coincidences_match_expectation():
    m = 400
    sig = SignalSpec("gaussian_pulse", center=200, width=40, amplitude=0.3)
    p = -np.expm1(-sig.realize(m))
    expected = float(np.sum(p * p))
    g0 = []
    for seed in range(400):
        x, y = gen_tte(sig, GenConfig(m=m, seed=seed))
        g0.append(ccf_fft(to_indicator(x).bits, to_indicator(y).bits).gamma[0])
    var = float(np.sum(p * p * (1 - p * p)))
    assert abs(np.mean(g0) - expected) <= 4 * math.sqrt(var / len(g0))


def test_lagged_copy():
    sig = SignalSpec("gaussian_pulse", center=100, width=5, amplitude=1.0)
    x, y = gen_gauss(sig, GenConfig(m=256, tau_true=17, a_true=1.5, seed=3), 1e-12, 1e-12)
    np.testing.assert_allclose(y.values, 1.5 * np.roll(x.values, 17), atol=1e-9)


def test_noise_variance():
    sig = SignalSpec("constant", level=2.0)
    x, _ = gen_gauss(sig, GenConfig(m=10_000, seed=8), 0.3, 0.3)
    assert abs(np.var(x.values - 2.0) / 0.09 - 1) < 0.1


def test_determinism_and_seed_sensitivity():
    sig = SignalSpec("gaussian_pulse", width=10, amplitude=0.5)
    a = gen_tte(sig, GenConfig(m=300, b_x=0.05, b_y=0.05, seed=42))
    b = gen_tte(sig, GenConfig(m=300, b_x=0.05, b_y=0.05, seed=42))
    c = gen_tte(sig, GenConfig(m=300, b_x=0.05, b_y=0.05, seed=43))
    assert a == b
    assert a != c
    g1 = gen_gauss(sig, GenConfig(m=50, seed=1), 1.0, 1.0)
    g2 = gen_gauss(sig, GenConfig(m=50, seed=1), 1.0, 1.0)
    assert np.array_equal(g1[0].values, g2[0].values)


def test_substreams_independent():
    sig = SignalSpec("gaussian_pulse", width=10, amplitude=0.5)
    x1, _ = gen_tte(sig, GenConfig(m=300, b_x=0.05, b_y=0.0, seed=7))
    x2, _ = gen_tte(sig, GenConfig(m=300, b_x=0.05, b_y=0.4, seed=7))
    assert x1 == x2
    g1, _ = gen_gauss(sig, GenConfig(m=50, seed=7), 1.0, 1.0)
    g2, _ = gen_gauss(sig, GenConfig(m=50, seed=7), 1.0, 9.0)
    assert np.array_equal(g1.values, g2.values)


def test_blocks_noiseless():
    model = BlockModel([0.5], [1.0, 3.0])
    weights = [WeightFunction.boxcar(c - 0.05, c + 0.05) for c in np.linspace(0.1, 0.9, 9)]
    data = gen_blocks_data(model, weights, 1e-12, seed=0)
    np.testing.assert_allclose([d.y for d in data], predict(model, data), atol=1e-9)


def test_blocks_single_height():
    weights = [WeightFunction.delta(c) for c in np.linspace(0, 1, 30)]
    data = gen_blocks_data(BlockModel([], [5.0]), weights, 0.01, seed=2)
    assert all(abs(d.y - 5.0) < 0.06 for d in data)


def test_bad_inputs():
    with pytest.raises(ValidationError):
        GenConfig(m=10, tau_true=10)
    with pytest.raises(ValidationError):
        gen_tte(SignalSpec("constant", level=-1.0), GenConfig(m=10))
    with pytest.raises(ValidationError):
        gen_tte(SignalSpec("constant", level=np.inf), GenConfig(m=10))
    with pytest.raises(ValidationError):
        synth_from_spec("gauss", {"m": 10}, 0)
