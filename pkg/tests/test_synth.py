import numpy as np
import pytest

from fisherseg.scan import ReturnSeries, min_p_scan
from fisherseg.synth import (
    ModelKind,
    SynthModel,
    generate,
    noise,
    shuffle,
    shuffle_seeds,
    sigma_sweep,
)


def test_noise_free_step():
    x = generate(SynthModel(ModelKind.STEP, sigma=0.0), seed=3).values
    assert np.all(x[:50] == 0.0) and np.all(x[50:] == 0.1)


def test_noise_free_trend():
    x = generate(SynthModel(ModelKind.TREND, sigma=0.0), seed=3).values
    assert np.all(x[:50] == 0.0)
    # 1-based t = i + 1: ramp 0.001 * (t - 50)
    np.testing.assert_allclose(x[50:], 0.001 * np.arange(1, 101), rtol=1e-15)


def test_invalid_models():
    with pytest.raises(ValueError):
        SynthModel(change_at=0)
    with pytest.raises(ValueError):
        SynthModel(change_at=150)
    with pytest.raises(ValueError):
        SynthModel(sigma=-0.1)


def test_step_mean_within_standard_error():
    x = generate(SynthModel(sigma=0.01), seed=12).values
    assert abs(x[:50].mean()) <= 4 * 0.01 / np.sqrt(50)
    assert abs(x[50:].mean() - 0.1) <= 4 * 0.01 / np.sqrt(100)


def test_generate_is_deterministic_and_shares_noise():
    a = generate(SynthModel(sigma=0.01), seed=5).values
    b = generate(SynthModel(sigma=0.01), seed=5).values
    c = generate(SynthModel(sigma=0.05), seed=5).values
    assert a.tobytes() == b.tobytes()
    np.testing.assert_allclose((a - SynthModel().signal()) / 0.01, noise(150, 5), rtol=1e-12)
    np.testing.assert_allclose((c - SynthModel().signal()) / 0.05, noise(150, 5), rtol=1e-12)


def test_noise_free_step_is_recovered_exactly():
    r = min_p_scan(generate(SynthModel(sigma=0.0), seed=0))
    assert r.tau_hat == 50
    assert 0.0 <= r.xth_hat < 0.1


def test_sweep_rows_and_order():
    res = sigma_sweep(SynthModel(), [0.01, 0.2], [1, 2, 3])
    assert [(r.sigma, r.seed) for r in res.rows] == [
        (0.01, 1), (0.01, 2), (0.01, 3), (0.2, 1), (0.2, 2), (0.2, 3)]
    assert all(0 < r.p_min <= 1 for r in res.rows)
    # a cell equals a direct scan of the generated series
    direct = min_p_scan(generate(SynthModel(sigma=0.2), 2))
    assert res.rows[4].p_min == direct.p_min and res.rows[4].tau_hat == direct.tau_hat
    with pytest.raises(ValueError):
        sigma_sweep(SynthModel(), [], [1])


def test_sweep_examples():
    step = sigma_sweep(SynthModel(ModelKind.STEP), [0.01], [0]).rows[0]
    assert step.p_min < 1e-5 and abs(step.tau_hat - 50) <= 3
    # single draws at sigma = 0.1 straddle 1e-5 (about 65% below); the median sits below
    trend = sigma_sweep(SynthModel(ModelKind.TREND), [0.1], range(20))
    assert np.median(trend.column("p_min")) < 1e-5


def test_shuffle_properties():
    s = ReturnSeries([0.3], ["x"])
    assert shuffle(s, 1) == s

    vals = generate(SynthModel(), seed=0)
    labelled = ReturnSeries(vals.values, [f"d{i}" for i in range(150)])
    sh = shuffle(labelled, 42)
    assert sh.labels == labelled.labels
    assert np.sort(sh.values).tobytes() == np.sort(labelled.values).tobytes()
    assert not np.array_equal(sh.values, labelled.values)
    assert np.sum(np.sort(sh.values)) == np.sum(np.sort(labelled.values))
    assert np.std(np.sort(sh.values)) == np.std(np.sort(labelled.values))
    assert shuffle(labelled, 42) == sh
    assert shuffle(labelled, 43) != sh


def test_shuffle_is_uniform():
    # all 6 permutations of 3 items appear at roughly 1/6 each
    counts = {}
    base = ReturnSeries([0.0, 1.0, 2.0])
    for seed in range(3000):
        key = tuple(shuffle(base, seed).values)
        counts[key] = counts.get(key, 0) + 1
    assert len(counts) == 6
    assert all(abs(c / 3000 - 1 / 6) < 0.03 for c in counts.values())


def test_shuffle_seeds():
    assert shuffle_seeds(0, 0) == []
    s = shuffle_seeds(7, 5)
    assert s == shuffle_seeds(7, 5) and len(set(s)) == 5
    assert shuffle_seeds(7, 3) == s[:3]


def test_shuffled_step_mostly_nonsignificant():
    base = generate(SynthModel(sigma=0.01), seed=0)
    fracs = [np.mean(min_p_scan(shuffle(base, s)).p_curve > 1e-2) for s in range(5)]
    assert np.median(fracs) >= 0.5
