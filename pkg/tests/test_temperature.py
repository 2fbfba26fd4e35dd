import math

import numpy as np
import pytest

from tempmark.exceptions import DataError, ParameterError, ProviderError
from tempmark.randomness import WatermarkParams, sample_temperature
from tempmark.sampling import sample_index, softmax_with_temperature
from tempmark.temperature import (
    DetectionResult,
    GenerationRecord,
    TemperatureWatermark,
    detect,
    generate,
    generate_unwatermarked,
    scoring_view,
)

from conftest import FixedProvider, HashedProvider, UniformProvider


@pytest.mark.parametrize(
    "logits, T, expected",
    [
        ([0.0, 0.0], 1.0, [0.5, 0.5]),
        ([math.log(2), 0.0], 1.0, [2 / 3, 1 / 3]),
        ([10.0, 0.0], 10.0, [math.e / (math.e + 1), 1 / (math.e + 1)]),
    ],
)
def test_softmax_examples(logits, T, expected):
    np.testing.assert_allclose(softmax_with_temperature(logits, T), expected, rtol=0, atol=1e-15)


@pytest.mark.parametrize("T", [0.0, -1.0, float("nan")])
def test_softmax_nonpositive_temperature(T):
    with pytest.raises(ParameterError, match="nonpositive temperature"):
        softmax_with_temperature([1.0, 2.0], T)


def test_softmax_survives_huge_logits():
    probs = softmax_with_temperature([1000.0, 999.0, -1000.0], 0.3)
    assert np.all(np.isfinite(probs))
    assert abs(probs.sum() - 1) <= 1e-12


def test_softmax_normalization_and_ranking_property():
    rng = np.random.default_rng(11)
    for _ in range(10_000):
        n = int(rng.integers(2, 40))
        logits = rng.normal(0, rng.choice([0.1, 1.0, 30.0]), size=n)
        T = float(np.exp(rng.uniform(np.log(0.05), np.log(20))))
        probs = softmax_with_temperature(logits, T)
        assert abs(probs.sum() - 1.0) <= 1e-9
        assert np.argmax(probs) == np.argmax(logits)
        i, j = rng.choice(n, size=2, replace=False)
        if logits[i] > logits[j]:
            assert probs[i] >= probs[j]


def test_sample_index_inverse_cdf():
    probs = np.array([0.25, 0.5, 0.25])
    assert sample_index(probs, 0.0) == 0
    assert sample_index(probs, 0.2499) == 0
    assert sample_index(probs, 0.25) == 1
    assert sample_index(probs, 0.7499) == 1
    assert sample_index(probs, 0.75) == 2
    assert sample_index(probs, 0.9999999) == 2


def test_generate_is_deterministic():
    provider = HashedProvider(40)
    params = WatermarkParams()
    a = generate(provider, [3, 4, 5], params, 50, rng_seed=17)
    b = generate(provider, [3, 4, 5], params, 50, rng_seed=17)
    assert a == b
    assert a.to_json() == b.to_json()


def test_record_invariants():
    params = WatermarkParams(T0=1.2, m=0.4, M=2.5, h=3)
    rec = generate(HashedProvider(30), [7], params, 80, rng_seed=1)
    assert len(rec.generated) == len(rec.temperatures) == len(rec.chosen_probs) == 80
    assert rec.prompt == (0, 0, 7)
    assert all(0 < p <= 1 for p in rec.chosen_probs)
    assert all(params.T0 * params.m <= T < params.T0 * params.M for T in rec.temperatures)
    assert rec.params["method"] == "temperature"


def test_recorded_temperatures_follow_the_hash():
    params = WatermarkParams()
    rec = generate(HashedProvider(30), [1, 2], params, 40, rng_seed=5)
    full = list(rec.prompt) + list(rec.generated)
    n = len(rec.prompt)
    for t, T in enumerate(rec.temperatures):
        assert T == sample_temperature(params, full[n + t - params.h : n + t])


def test_degenerate_provider_is_confident_at_every_temperature():
    # With |V| = 5 a +20 gap keeps the top token above 0.99 even at T = 3.
    logits = np.zeros(5)
    logits[2] = 20.0
    provider = FixedProvider(logits)
    params = WatermarkParams(T0=1.0, m=0.3, M=3.0, h=2)
    rec = generate(provider, [0, 1], params, 200, rng_seed=3)
    assert min(rec.chosen_probs) > 0.99
    for T in np.linspace(0.3, 3.0, 50):
        assert softmax_with_temperature(logits, T)[2] > 0.99


def test_sampling_seed_does_not_touch_first_temperature():
    provider = HashedProvider(50)
    params = WatermarkParams()
    records = [generate(provider, [8, 9], params, 30, rng_seed=s) for s in range(20)]
    assert len({r.temperatures[0] for r in records}) == 1
    assert len({r.generated for r in records}) > 1


def test_generate_validates_inputs(uniform10):
    with pytest.raises(DataError):
        generate(uniform10, [1, 2], WatermarkParams(), 0, 0)
    with pytest.raises(DataError, match="invalid token id"):
        generate(uniform10, [1, 99], WatermarkParams(), 5, 0)


class _FailingProvider:
    n_vocab = 4

    def __init__(self, fail_at):
        self.calls = 0
        self.fail_at = fail_at

    def logits(self, context):
        self.calls += 1
        if self.calls > self.fail_at:
            raise RuntimeError("backend down")
        return np.zeros(4)


def test_provider_failure_reports_step():
    with pytest.raises(ProviderError, match="provider failed at step 3: backend down"):
        generate(_FailingProvider(3), [1, 2], WatermarkParams(), 10, 0)


def test_detect_all_certain_tokens_scores_one():
    logits = np.full(4, -1e6)
    logits[1] = 0.0
    result = detect(FixedProvider(logits), [1, 1, 1, 1, 1, 1], WatermarkParams(h=2))
    assert result.score == 1.0
    assert result.n_scored == 4


def test_detect_too_short(uniform10):
    with pytest.raises(DataError, match="text too short to score"):
        detect(uniform10, [1, 2], WatermarkParams(h=2))


def test_detect_result_invariants():
    params = WatermarkParams()
    rec = generate(HashedProvider(30), [1, 2], params, 60, rng_seed=2)
    result = detect(HashedProvider(30), scoring_view(rec, params.h), params, threshold=0.1)
    assert result.n_scored == len(result.per_token_probs) == 60
    assert result.score == pytest.approx(np.mean(result.per_token_probs), abs=1e-15)
    assert result.verdict == (result.score >= 0.1)
    assert DetectionResult(0.2, 1, (0.2,)).verdict is None


def test_recomputation_identity(small_model):
    _, model = small_model
    for h in (1, 2, 3):
        params = WatermarkParams(h=h)
        # Positions whose LM context reaches back past the kept prompt tokens are not aligned.
        skip = max(0, model.order - 1 - h)
        for seed in range(10):
            rec = generate(model, [2, 3, 4], params, 40, rng_seed=seed)
            got = detect(model, scoring_view(rec, h), params).per_token_probs
            np.testing.assert_allclose(got[skip:], rec.chosen_probs[skip:], rtol=0, atol=1e-12)
            full = list(rec.prompt) + list(rec.generated)
            tail = detect(model, full, params).per_token_probs[-len(rec.generated) :]
            np.testing.assert_allclose(tail, rec.chosen_probs, rtol=0, atol=1e-12)


def test_uniform_provider_scores_one_over_v():
    V = 10
    provider = UniformProvider(V)
    params = WatermarkParams()
    scores = []
    for seed in range(50):
        rec = generate(provider, [1, 2], params, 100, rng_seed=seed)
        scores.append(detect(provider, scoring_view(rec, params.h), params).score)
    scores = np.array(scores)
    se = max(scores.std(ddof=1) / np.sqrt(len(scores)), 1e-15)
    assert abs(scores.mean() - 1 / V) <= 3 * se + 1e-12


def test_record_json_round_trip():
    rec = generate(HashedProvider(20), [1], WatermarkParams(), 10, rng_seed=4)
    line = rec.to_json()
    assert set(__import__("json").loads(line)) == {
        "prompt_ids",
        "generated_ids",
        "temperatures",
        "chosen_probs",
        "rng_seed",
        "params",
    }
    assert GenerationRecord.from_json(line) == rec


def test_record_from_bad_json():
    with pytest.raises(DataError, match="malformed generation record"):
        GenerationRecord.from_json("{")
    with pytest.raises(DataError, match="malformed generation record"):
        GenerationRecord.from_json('{"prompt_ids": []}')


def test_unwatermarked_sampling_has_no_temperatures(uniform10):
    rec = generate_unwatermarked(uniform10, [1], 12, rng_seed=0)
    assert rec.temperatures == ()
    assert rec.params["method"] == "unwatermarked"
    assert all(p == pytest.approx(0.1) for p in rec.chosen_probs)


def test_estimator_interface(small_model):
    _, model = small_model
    est = TemperatureWatermark(provider=model, h=2)
    assert est.get_params()["M"] == 3.0
    est.fit()
    assert est.threshold_ == 0.2
    rec = est.generate([2, 3], length=30, rng_seed=1)
    text = scoring_view(rec, 2)
    assert est.decision_function([text])[0] == est.detect(text).score
    assert est.predict([text]).tolist() == [int(est.detect(text).score >= 0.2)]


def test_estimator_fit_calibrates_threshold(small_model):
    _, model = small_model
    est = TemperatureWatermark(provider=model)
    X, y = [], []
    for seed in range(10):
        X.append(scoring_view(est.generate([2, 3], 40, seed), 2))
        y.append(1)
        X.append(scoring_view(generate_unwatermarked(model, [2, 3], 40, seed, h=2), 2))
        y.append(0)
    est.fit(X, y)
    scores = est.decision_function(X)
    assert scores.min() <= est.threshold_ <= scores.max()


def test_estimator_rejects_bad_params():
    with pytest.raises(ParameterError, match="m must be < M"):
        TemperatureWatermark(provider=UniformProvider(3), m=2.0, M=1.0).fit()
