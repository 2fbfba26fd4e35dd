"""Add-k smoothed n-gram language model used as a next-token logits provider."""

from __future__ import annotations

import math
import struct
from collections import defaultdict
from pathlib import Path
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .exceptions import DataError, ParameterError
from .tokenizer import BOS_ID

MAGIC = b"NGLM1"
_HEADER = struct.Struct("<5sIdII")  # magic, order, k, vocab_size, n_contexts
_U32 = struct.Struct("<I")
_SUCC = struct.Struct("<IQ")  # successor id, count


class NGramLM(BaseEstimator):
    """Add-k smoothed n-gram model over integer token ids.

    ``logits(context)`` returns ``ln((c(j|ctx) + k) / (c(ctx) + k|V|))`` for
    every id ``j``, where ``ctx`` is the last ``order - 1`` ids of the
    context after left-padding with BOS.  A softmax at temperature 1
    therefore reproduces the smoothed conditional distribution exactly.

    Parameters
    ----------
    order : int, default=3
    k : float, default=1.0
        Additive smoothing constant.
    vocab_size : int or None, default=None
        Size of the id space.  Inferred as ``max(id) + 1`` when None.
    """

    def __init__(self, order: int = 3, k: float = 1.0, vocab_size: int | None = None):
        self.order = order
        self.k = k
        self.vocab_size = vocab_size

    def _validate_params(self):
        if int(self.order) != self.order or self.order < 1:
            raise ParameterError("order must be an integer >= 1")
        if not (math.isfinite(self.k) and self.k > 0):
            raise ParameterError("k must be > 0")
        if self.vocab_size is not None and self.vocab_size < 1:
            raise ParameterError("vocab_size must be >= 1")

    def fit(self, X: Sequence[int], y=None):
        """Count every length-``order`` window of the BOS-padded id sequence ``X``."""
        self._validate_params()
        corpus = [int(t) for t in X]
        order = int(self.order)
        if len(corpus) < order:
            raise DataError("corpus too short")
        vocab_size = self.vocab_size if self.vocab_size is not None else max(corpus) + 1
        if min(corpus) < 0 or max(corpus) >= vocab_size:
            raise DataError("corpus contains ids outside the vocabulary")

        padded = [BOS_ID] * (order - 1) + corpus
        counts: dict[tuple, dict[int, int]] = defaultdict(dict)
        for i in range(order - 1, len(padded)):
            succ = counts[tuple(padded[i - order + 1 : i])]
            tok = padded[i]
            succ[tok] = succ.get(tok, 0) + 1
        self._set_counts(dict(counts), int(vocab_size))
        return self

    def _set_counts(self, counts: dict, vocab_size: int):
        self.counts_ = counts
        self.vocab_size_ = vocab_size
        self._cache = {}

    @property
    def n_vocab(self) -> int:
        check_is_fitted(self, "counts_")
        return self.vocab_size_

    def count(self, context: Sequence[int], token: int) -> int:
        check_is_fitted(self, "counts_")
        return self.counts_.get(self._key(context), {}).get(int(token), 0)

    def _key(self, context: Sequence[int]) -> tuple:
        width = int(self.order) - 1
        if width == 0:
            return ()
        ctx = [int(t) for t in context[-width:]]
        if len(ctx) < width:
            ctx = [BOS_ID] * (width - len(ctx)) + ctx
        return tuple(ctx)

    def logits(self, context: Sequence[int]) -> np.ndarray:
        """Read-only length-|V| vector of smoothed log-probabilities."""
        check_is_fitted(self, "counts_")
        key = self._key(context)
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        succ = self.counts_.get(key, {})
        k = float(self.k)
        denom = sum(succ.values()) + k * self.vocab_size_
        out = np.full(self.vocab_size_, math.log(k / denom))
        if succ:
            ids = np.fromiter(succ.keys(), dtype=np.int64, count=len(succ))
            cnt = np.fromiter(succ.values(), dtype=np.float64, count=len(succ))
            out[ids] = np.log((cnt + k) / denom)
        out.flags.writeable = False
        if len(self._cache) >= 1 << 16:
            self._cache.clear()
        self._cache[key] = out
        return out

    def predict_proba(self, contexts: Sequence[Sequence[int]]) -> np.ndarray:
        """Smoothed next-token distributions, one row per context."""
        rows = [np.exp(self.logits(ctx)) for ctx in contexts]
        return np.vstack(rows) if rows else np.empty((0, self.n_vocab))

    def __eq__(self, other):
        if not isinstance(other, NGramLM):
            return NotImplemented
        fitted = hasattr(self, "counts_"), hasattr(other, "counts_")
        if fitted != (True, True):
            return fitted == (False, False) and self.get_params() == other.get_params()
        return (
            int(self.order) == int(other.order)
            and float(self.k) == float(other.k)
            and self.vocab_size_ == other.vocab_size_
            and self.counts_ == other.counts_
        )

    __hash__ = None

    def __getstate__(self):
        state = self.__dict__.copy()
        state.pop("_cache", None)
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)
        self._cache = {}

    def save(self, path: str | Path) -> None:
        save_model(self, path)

    @classmethod
    def load(cls, path: str | Path) -> "NGramLM":
        return load_model(path)


def train(corpus: Sequence[int], order: int, k: float, vocab_size: int) -> NGramLM:
    return NGramLM(order=order, k=k, vocab_size=vocab_size).fit(corpus)


def logits(model: NGramLM, context: Sequence[int]) -> np.ndarray:
    return model.logits(context)


def save_model(model: NGramLM, path: str | Path) -> None:
    """Write the binary model file.

    Layout (little endian): ``NGLM1``, u32 order, f64 k, u32 |V|, u32 number
    of contexts; then per context in sorted order: ``order - 1`` u32 ids, u32
    number of successors, and (u32 id, u64 count) pairs sorted by id.
    """
    check_is_fitted(model, "counts_")
    order = int(model.order)
    chunks = [_HEADER.pack(MAGIC, order, float(model.k), model.vocab_size_, len(model.counts_))]
    ctx_fmt = struct.Struct(f"<{order - 1}I")
    for ctx in sorted(model.counts_):
        succ = model.counts_[ctx]
        chunks.append(ctx_fmt.pack(*ctx))
        chunks.append(_U32.pack(len(succ)))
        chunks.extend(_SUCC.pack(tok, succ[tok]) for tok in sorted(succ))
    Path(path).write_bytes(b"".join(chunks))


def load_model(path: str | Path) -> NGramLM:
    data = Path(path).read_bytes()
    reader = _Reader(data)
    magic, order, k, vocab_size, n_ctx = reader.unpack(_HEADER)
    if magic != MAGIC:
        raise DataError("corrupt model file: bad magic at byte offset 0")
    if order < 1 or not (math.isfinite(k) and k > 0) or vocab_size < 1:
        raise DataError("corrupt model file: invalid header at byte offset 0")
    ctx_fmt = struct.Struct(f"<{order - 1}I")
    counts = {}
    for _ in range(n_ctx):
        ctx = reader.unpack(ctx_fmt)
        (n_succ,) = reader.unpack(_U32)
        succ = {}
        for _ in range(n_succ):
            offset = reader.pos
            tok, cnt = reader.unpack(_SUCC)
            if tok >= vocab_size:
                raise DataError(f"corrupt model file: token id out of range at byte offset {offset}")
            succ[tok] = cnt
        counts[tuple(ctx)] = succ
    if reader.pos != len(data):
        raise DataError(f"corrupt model file: trailing bytes at byte offset {reader.pos}")
    model = NGramLM(order=order, k=k, vocab_size=vocab_size)
    model._set_counts(counts, vocab_size)
    return model


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def unpack(self, fmt: struct.Struct) -> tuple:
        if self.pos + fmt.size > len(self.data):
            raise DataError(f"corrupt model file: truncated at byte offset {self.pos}")
        values = fmt.unpack_from(self.data, self.pos)
        self.pos += fmt.size
        return values
