"""Green/red-list baseline watermark with a one-proportion z-test detector."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .exceptions import DataError, ParameterError
from .provider import LogitsProvider
from .randomness import MASK64, SplitMix64, context_hash, green_partition
from .sampling import check_ids, pad_prompt, sample_index, softmax_with_temperature, step_logits
from .temperature import GenerationRecord


@dataclass(frozen=True)
class BaselineParams:
    gamma: float = 0.5
    delta: float = 2.0
    h: int = 2
    key_seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ParameterError("gamma must be in (0, 1)")
        if not (math.isfinite(self.delta) and self.delta >= 0):
            raise ParameterError("delta must be a finite number >= 0")
        if int(self.h) != self.h or self.h < 1:
            raise ParameterError("h must be an integer >= 1")
        if not 0 <= int(self.key_seed) <= MASK64:
            raise ParameterError("key_seed must be an unsigned 64-bit integer")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class BaselineDetection:
    green_count: int
    n_scored: int
    gamma: float
    threshold: float | None = None

    @property
    def z(self) -> float:
        g = self.gamma
        return (self.green_count - g * self.n_scored) / math.sqrt(self.n_scored * g * (1 - g))

    @property
    def verdict(self) -> bool | None:
        if self.threshold is None:
            return None
        return self.z >= self.threshold

    def to_dict(self) -> dict:
        return {
            "green_count": self.green_count,
            "n_scored": self.n_scored,
            "z": self.z,
            "threshold": self.threshold,
            "verdict": self.verdict,
        }


def step_mask(window: Sequence[int], params: BaselineParams, vocab_size: int) -> np.ndarray:
    seed = context_hash(window, params.h) ^ (int(params.key_seed) & MASK64)
    return green_partition(seed, vocab_size, params.gamma).bits


def generate_baseline(
    provider: LogitsProvider,
    prompt: Sequence[int],
    params: BaselineParams,
    length: int,
    rng_seed: int,
) -> GenerationRecord:
    """Sample with ``delta`` added to the logits of each step's green tokens, at temperature 1."""
    if length < 1:
        raise DataError("length must be >= 1")
    n_vocab = provider.n_vocab
    context = check_ids(pad_prompt(prompt, params.h), n_vocab, "prompt")
    n_prompt = len(context)
    stream = SplitMix64(rng_seed)
    chosen = []
    for step in range(length):
        logits = step_logits(provider, context, step)
        if params.delta:
            logits = logits + params.delta * step_mask(context[-params.h :], params, n_vocab)
        probs = softmax_with_temperature(logits, 1.0)
        tok = sample_index(probs, stream.random())
        chosen.append(float(probs[tok]))
        context.append(tok)
    return GenerationRecord(
        prompt=tuple(context[:n_prompt]),
        generated=tuple(context[n_prompt:]),
        temperatures=(),
        chosen_probs=tuple(chosen),
        rng_seed=int(rng_seed),
        params={"method": "baseline", **params.to_dict()},
    )


def detect_baseline(
    text: Sequence[int],
    params: BaselineParams,
    vocab_size: int,
    threshold: float | None = None,
) -> BaselineDetection:
    """Count green tokens at positions ``h..end``; no model forward pass is needed."""
    ids = [int(t) for t in text]
    h = params.h
    if len(ids) <= h:
        raise DataError("text too short to score")
    check_ids(ids, vocab_size)
    green = 0
    for t in range(h, len(ids)):
        green += bool(step_mask(ids[t - h : t], params, vocab_size)[ids[t]])
    return BaselineDetection(green, len(ids) - h, params.gamma, threshold)


class GreenListWatermark(ClassifierMixin, BaseEstimator):
    """Estimator interface to the green-list baseline.

    ``decision_function`` returns z-scores.  ``provider`` is needed for
    generation only; ``vocab_size`` defaults to ``provider.n_vocab``.
    """

    def __init__(self, provider=None, gamma=0.5, delta=2.0, h=2, key_seed=0, vocab_size=None, threshold=4.0):
        self.provider = provider
        self.gamma = gamma
        self.delta = delta
        self.h = h
        self.key_seed = key_seed
        self.vocab_size = vocab_size
        self.threshold = threshold

    @property
    def params(self) -> BaselineParams:
        return BaselineParams(gamma=self.gamma, delta=self.delta, h=self.h, key_seed=self.key_seed)

    def _vocab_size(self) -> int:
        if self.vocab_size is not None:
            return int(self.vocab_size)
        if self.provider is None:
            raise ParameterError("vocab_size or provider is required")
        return int(self.provider.n_vocab)

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
        return generate_baseline(self.provider, prompt, self.params, length, rng_seed)

    def detect(self, text: Sequence[int]) -> BaselineDetection:
        return detect_baseline(text, self.params, self._vocab_size(), getattr(self, "threshold_", self.threshold))

    def decision_function(self, X) -> np.ndarray:
        params, n_vocab = self.params, self._vocab_size()
        return np.array([detect_baseline(seq, params, n_vocab).z for seq in X])

    def predict(self, X) -> np.ndarray:
        threshold = getattr(self, "threshold_", self.threshold)
        return (self.decision_function(X) >= threshold).astype(int)
