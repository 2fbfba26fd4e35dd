"""Softmax and inverse-CDF sampling shared by every generator."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .exceptions import DataError, ParameterError, ProviderError
from .provider import LogitsProvider, checked_logits
from .tokenizer import BOS_ID


def softmax_with_temperature(logits, T: float) -> np.ndarray:
    """``exp(l_k / T) / sum_i exp(l_i / T)``, computed after subtracting the max logit."""
    if not T > 0:
        raise ParameterError("nonpositive temperature")
    scaled = np.asarray(logits, dtype=np.float64) / T
    scaled = scaled - scaled.max()
    weights = np.exp(scaled)
    return weights / weights.sum()


def sample_index(probs: np.ndarray, u: float) -> int:
    """Inverse-CDF draw: the first index whose cumulative mass exceeds ``u * total``."""
    cdf = np.cumsum(probs)
    idx = int(np.searchsorted(cdf, u * cdf[-1], side="right"))
    return min(idx, len(probs) - 1)


def pad_prompt(prompt: Sequence[int], h: int) -> list[int]:
    ids = [int(t) for t in prompt]
    if len(ids) < h:
        ids = [BOS_ID] * (h - len(ids)) + ids
    return ids


def check_ids(seq: Sequence[int], n_vocab: int, what: str = "text") -> list[int]:
    ids = [int(t) for t in seq]
    for t in ids:
        if not 0 <= t < n_vocab:
            raise DataError(f"{what} contains invalid token id {t}")
    return ids


def step_logits(provider: LogitsProvider, context: Sequence[int], step: int) -> np.ndarray:
    """Provider call with the step index attached to any failure."""
    try:
        return checked_logits(provider, context)
    except Exception as exc:
        raise ProviderError(f"provider failed at step {step}: {exc}") from exc
