"""Temperature watermark: per-token temperatures seeded by the preceding tokens.

At every step the previous ``h`` tokens are hashed into a uniform ``U`` and
the next-token logits are divided by ``T0 * (m + (M - m) * U)`` before the
softmax.  The detector recomputes those temperatures from the text alone and
averages the probabilities the model assigns to the observed tokens.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .exceptions import DataError
from .provider import LogitsProvider
from .randomness import SplitMix64, WatermarkParams, sample_temperature
from .sampling import (
    check_ids,
    pad_prompt,
    sample_index,
    softmax_with_temperature,
    step_logits,
)


# Between human (~0.09) and watermarked (~0.32) median scores on the bundled benchmark.
DEFAULT_THRESHOLD = 0.2


@dataclass(frozen=True)
class GenerationRecord:
    """Output of one generation run.

    ``temperatures`` is empty for methods that sample at a fixed temperature.
    ``params`` holds the method name and its settings so a record can be
    re-scored without outside context.
    """

    prompt: tuple[int, ...]
    generated: tuple[int, ...]
    temperatures: tuple[float, ...]
    chosen_probs: tuple[float, ...]
    rng_seed: int
    params: dict = field(default_factory=dict)

    @property
    def mean_chosen_prob(self) -> float:
        return float(np.mean(self.chosen_probs))

    def to_json(self) -> str:
        return json.dumps(
            {
                "prompt_ids": list(self.prompt),
                "generated_ids": list(self.generated),
                "temperatures": list(self.temperatures),
                "chosen_probs": list(self.chosen_probs),
                "rng_seed": self.rng_seed,
                "params": self.params,
            }
        )

    @classmethod
    def from_dict(cls, obj: dict) -> "GenerationRecord":
        try:
            return cls(
                prompt=tuple(int(t) for t in obj["prompt_ids"]),
                generated=tuple(int(t) for t in obj["generated_ids"]),
                temperatures=tuple(float(x) for x in obj.get("temperatures", [])),
                chosen_probs=tuple(float(x) for x in obj["chosen_probs"]),
                rng_seed=int(obj["rng_seed"]),
                params=dict(obj.get("params", {})),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"malformed generation record: {exc}") from exc

    @classmethod
    def from_json(cls, line: str) -> "GenerationRecord":
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataError(f"malformed generation record: {exc}") from exc
        return cls.from_dict(obj)


@dataclass(frozen=True)
class DetectionResult:
    score: float
    n_scored: int
    per_token_probs: tuple[float, ...]
    threshold: float | None = None

    @property
    def verdict(self) -> bool | None:
        """True when the score reaches the threshold; None if no threshold was given."""
        if self.threshold is None:
            return None
        return self.score >= self.threshold

    def to_dict(self) -> dict:
        return {
            "score": self.score,
            "n_scored": self.n_scored,
            "per_token_probs": list(self.per_token_probs),
            "threshold": self.threshold,
            "verdict": self.verdict,
        }


def generate(
    provider: LogitsProvider,
    prompt: Sequence[int],
    params: WatermarkParams,
    length: int,
    rng_seed: int,
) -> GenerationRecord:
    """Sample ``length`` tokens with hash-seeded temperatures.

    Prompts shorter than ``h`` are left-padded with BOS; the padded prompt is
    what the record stores.  Token draws come from a splitmix64 stream seeded
    with ``rng_seed``, one uniform per step, independent of the watermark hash.
    """
    if length < 1:
        raise DataError("length must be >= 1")
    context = check_ids(pad_prompt(prompt, params.h), provider.n_vocab, "prompt")
    n_prompt = len(context)
    stream = SplitMix64(rng_seed)
    temperatures, chosen = [], []
    for step in range(length):
        T = sample_temperature(params, context[-params.h :])
        probs = softmax_with_temperature(step_logits(provider, context, step), T)
        tok = sample_index(probs, stream.random())
        temperatures.append(T)
        chosen.append(float(probs[tok]))
        context.append(tok)
    return GenerationRecord(
        prompt=tuple(context[:n_prompt]),
        generated=tuple(context[n_prompt:]),
        temperatures=tuple(temperatures),
        chosen_probs=tuple(chosen),
        rng_seed=int(rng_seed),
        params={"method": "temperature", **params.to_dict()},
    )


def generate_unwatermarked(
    provider: LogitsProvider,
    prompt: Sequence[int],
    length: int,
    rng_seed: int,
    h: int = 1,
    temperature: float = 1.0,
) -> GenerationRecord:
    """Plain sampling at a fixed temperature, using the same sampling stream as :func:`generate`."""
    if length < 1:
        raise DataError("length must be >= 1")
    context = check_ids(pad_prompt(prompt, h), provider.n_vocab, "prompt")
    n_prompt = len(context)
    stream = SplitMix64(rng_seed)
    chosen = []
    for step in range(length):
        probs = softmax_with_temperature(step_logits(provider, context, step), temperature)
        tok = sample_index(probs, stream.random())
        chosen.append(float(probs[tok]))
        context.append(tok)
    return GenerationRecord(
        prompt=tuple(context[:n_prompt]),
        generated=tuple(context[n_prompt:]),
        temperatures=(),
        chosen_probs=tuple(chosen),
        rng_seed=int(rng_seed),
        params={"method": "unwatermarked", "temperature": temperature},
    )


def detect(
    provider: LogitsProvider,
    text: Sequence[int],
    params: WatermarkParams,
    threshold: float | None = None,
) -> DetectionResult:
    """Mean probability of each token at positions ``h..end`` under its recomputed temperature.

    The first ``h`` tokens only serve as hash context, so no prompt is needed.
    """
    ids = check_ids(text, provider.n_vocab)
    h = params.h
    if len(ids) <= h:
        raise DataError("text too short to score")
    probs = []
    for t in range(h, len(ids)):
        T = sample_temperature(params, ids[t - h : t])
        dist = softmax_with_temperature(step_logits(provider, ids[:t], t - h), T)
        probs.append(float(dist[ids[t]]))
    return DetectionResult(
        score=float(np.mean(probs)),
        n_scored=len(probs),
        per_token_probs=tuple(probs),
        threshold=threshold,
    )


def scoring_view(record: GenerationRecord, h: int) -> list[int]:
    """The text a detector should score for a record: last ``h`` prompt tokens plus the generation."""
    return list(record.prompt[-h:]) + list(record.generated)


class TemperatureWatermark(ClassifierMixin, BaseEstimator):
    """Estimator interface to the temperature watermark.

    ``decision_function`` returns detection scores and ``predict`` thresholds
    them.  ``fit`` with labels picks the F1-maximizing threshold; without
    labels it only validates the parameters.

    Parameters
    ----------
    provider : LogitsProvider
    T0, m, M : float
        Base temperature and the lower/upper multipliers.
    h : int
        Number of preceding tokens hashed per step.
    threshold : float, default=0.2
        Score at or above which a text is called watermarked.  The useful
        value depends on the provider; ``fit(X, y)`` calibrates it.
    """

    def __init__(self, provider=None, T0=1.0, m=0.3, M=3.0, h=2, threshold=DEFAULT_THRESHOLD):
        self.provider = provider
        self.T0 = T0
        self.m = m
        self.M = M
        self.h = h
        self.threshold = threshold

    @property
    def params(self) -> WatermarkParams:
        return WatermarkParams(T0=self.T0, m=self.m, M=self.M, h=self.h)

    def fit(self, X=None, y=None):
        self.params  # noqa: B018 - validates
        self.classes_ = np.array([0, 1])
        if X is not None and y is not None:
            from .metrics import best_f1_threshold

            scores = self.decision_function(X)
            y = np.asarray(y).astype(bool)
            self.threshold_ = best_f1_threshold(scores[y], scores[~y])
        else:
            self.threshold_ = self.threshold
        return self

    def generate(self, prompt: Sequence[int], length: int = 200, rng_seed: int = 0) -> GenerationRecord:
        return generate(self.provider, prompt, self.params, length, rng_seed)

    def detect(self, text: Sequence[int]) -> DetectionResult:
        return detect(self.provider, text, self.params, getattr(self, "threshold_", self.threshold))

    def decision_function(self, X) -> np.ndarray:
        params = self.params
        return np.array([detect(self.provider, seq, params).score for seq in X])

    def predict(self, X) -> np.ndarray:
        threshold = getattr(self, "threshold_", self.threshold)
        return (self.decision_function(X) >= threshold).astype(int)
