"""Token-substitution paraphrase attack.

A fixed fraction of positions is replaced, left to right, by tokens that a
substitution oracle proposes from the (already attacked) left context.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .exceptions import DataError, ParameterError
from .provider import LogitsProvider, checked_logits
from .randomness import SplitMix64, splitmix64
from .sampling import sample_index, softmax_with_temperature

# oracle(left_context, original_token, rng) -> replacement token (!= original)
SubstitutionOracle = Callable[[Sequence[int], int, SplitMix64], int]


def lm_substitution_oracle(
    provider: LogitsProvider, left_context: Sequence[int], original: int, rng: SplitMix64
) -> int:
    """Draw from the provider's T=1 distribution with the original token removed."""
    if provider.n_vocab < 2:
        raise ParameterError("cannot substitute")
    probs = softmax_with_temperature(checked_logits(provider, left_context), 1.0)
    probs[int(original)] = 0.0
    if not probs.sum() > 0:
        probs = np.ones_like(probs)
        probs[int(original)] = 0.0
    return sample_index(probs, rng.random())


class LMSubstitutionOracle:
    """Callable oracle backed by a logits provider."""

    def __init__(self, provider: LogitsProvider):
        self.provider = provider

    def __call__(self, left_context: Sequence[int], original: int, rng: SplitMix64) -> int:
        return lm_substitution_oracle(self.provider, left_context, original, rng)


@dataclass(frozen=True)
class AttackConfig:
    oracle: SubstitutionOracle
    fraction: float = 0.3
    rng_seed: int = 0

    def __post_init__(self):
        if not (isinstance(self.fraction, (int, float)) and 0.0 <= self.fraction <= 1.0):
            raise ParameterError("fraction must be in [0, 1]")


@dataclass(frozen=True)
class AttackRecord:
    original: tuple[int, ...]
    attacked: tuple[int, ...]
    positions: tuple[int, ...]
    fraction: float
    rng_seed: int

    def to_json(self) -> str:
        return json.dumps(
            {
                "original_ids": list(self.original),
                "attacked_ids": list(self.attacked),
                "positions": list(self.positions),
                "fraction": self.fraction,
                "rng_seed": self.rng_seed,
            }
        )

    @classmethod
    def from_json(cls, line: str) -> "AttackRecord":
        try:
            obj = json.loads(line)
            return cls(
                original=tuple(int(t) for t in obj["original_ids"]),
                attacked=tuple(int(t) for t in obj["attacked_ids"]),
                positions=tuple(int(t) for t in obj["positions"]),
                fraction=float(obj["fraction"]),
                rng_seed=int(obj["rng_seed"]),
            )
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise DataError(f"malformed attack record: {exc}") from exc


def n_replacements(n: int, fraction: float) -> int:
    """``ceil(fraction * n)``, ignoring float noise such as 0.7 * 10 = 7.000000000000001."""
    return min(n, math.ceil(fraction * n - 1e-9))


def attack(text: Sequence[int], config: AttackConfig, prefix: Sequence[int] = ()) -> AttackRecord:
    """Replace ``ceil(fraction * len(text))`` tokens one by one in ascending position order.

    Positions are a uniform sample without replacement (partial Fisher-Yates
    on a splitmix64 stream seeded with ``config.rng_seed``); the same stream
    then feeds the oracle.  ``prefix`` is extra left context shown to the
    oracle but never modified.
    """
    original = [int(t) for t in text]
    if not original:
        raise DataError("cannot attack empty text")
    n = len(original)
    k = n_replacements(n, config.fraction)
    rng = SplitMix64(config.rng_seed)
    order = list(range(n))
    for i in range(k):
        j = i + rng.below(n - i)
        order[i], order[j] = order[j], order[i]
    positions = sorted(order[:k])

    attacked = list(original)
    prefix = [int(t) for t in prefix]
    for pos in positions:
        sub = int(config.oracle(prefix + attacked[:pos], original[pos], rng))
        if sub == original[pos]:
            raise DataError(f"substitution oracle returned the original token at position {pos}")
        attacked[pos] = sub
    return AttackRecord(tuple(original), tuple(attacked), tuple(positions), float(config.fraction), int(config.rng_seed))


class ParaphraseAttack(TransformerMixin, BaseEstimator):
    """Apply the substitution attack to a batch of id sequences.

    Item ``i`` is attacked with seed ``splitmix64(rng_seed ^ i)``.
    """

    def __init__(self, provider=None, fraction=0.3, rng_seed=0):
        self.provider = provider
        self.fraction = fraction
        self.rng_seed = rng_seed

    def fit(self, X=None, y=None):
        AttackConfig(oracle=None, fraction=self.fraction)
        return self

    def attack_one(self, text: Sequence[int], rng_seed: int) -> AttackRecord:
        config = AttackConfig(LMSubstitutionOracle(self.provider), self.fraction, rng_seed)
        return attack(text, config)

    def transform(self, X) -> list[list[int]]:
        return [
            list(self.attack_one(seq, splitmix64(int(self.rng_seed) ^ i)).attacked)
            for i, seq in enumerate(X)
        ]
