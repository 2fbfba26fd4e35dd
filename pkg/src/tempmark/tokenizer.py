"""Closed-vocabulary word tokenizer.

Text is lowercased and split into word runs and single punctuation
characters.  Ids 0 and 1 are reserved for ``<bos>`` and ``<unk>``; the rest
of the vocabulary is ordered by corpus frequency.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .exceptions import DataError, ParameterError

BOS = "<bos>"
UNK = "<unk>"
BOS_ID = 0
UNK_ID = 1
RESERVED = (BOS, UNK)

# Reserved markers are matched whole so decoded generations re-encode to the same ids.
_TOKEN_RE = re.compile(r"<bos>|<unk>|\w+|[^\w\s]")


def tokenize(text: str) -> list[str]:
    """Split ``text`` into normalized surface tokens."""
    return _TOKEN_RE.findall(text.lower())


def normalize(text: str) -> str:
    """The canonical form that ``decode(encode(text))`` reproduces."""
    return " ".join(tokenize(text))


@dataclass(frozen=True)
class Vocab:
    """Immutable id <-> surface-string table.

    ``tokens[i]`` is the surface string of id ``i``; the first two entries are
    always the reserved ``<bos>`` and ``<unk>`` markers.
    """

    tokens: tuple[str, ...]
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        tokens = tuple(self.tokens)
        if tokens[:2] != RESERVED:
            raise DataError("vocabulary must start with the reserved <bos>, <unk> entries")
        index = {tok: i for i, tok in enumerate(tokens)}
        if len(index) != len(tokens):
            raise DataError("vocabulary contains duplicate surface strings")
        object.__setattr__(self, "tokens", tokens)
        object.__setattr__(self, "_index", index)

    @property
    def size(self) -> int:
        return len(self.tokens)

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def bos_id(self) -> int:
        return BOS_ID

    @property
    def unk_id(self) -> int:
        return UNK_ID

    def id_of(self, token: str) -> int:
        return self._index.get(token, UNK_ID)

    def save(self, path: str | Path) -> None:
        """Write one surface string per line, in id order."""
        Path(path).write_text("\n".join(self.tokens) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Vocab":
        lines = Path(path).read_text(encoding="utf-8").split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        if lines[:2] != list(RESERVED):
            raise DataError(f"{path}: vocabulary file must begin with '<bos>' and '<unk>' lines")
        return cls(tuple(lines))


def build_vocab(corpus_text: str, max_size: int) -> Vocab:
    """Keep the ``max_size - 2`` most frequent tokens of ``corpus_text``.

    Ties are broken by first occurrence.  Literal reserved markers in the
    corpus are not counted.
    """
    if int(max_size) != max_size or max_size < 2:
        raise ParameterError("max_size must be an integer >= 2")
    tokens = tokenize(corpus_text)
    if not tokens:
        raise DataError("empty corpus")
    counts = Counter(tok for tok in tokens if tok not in RESERVED)
    # most_common() sorts stably, so equal counts keep first-occurrence order.
    kept = [tok for tok, _ in counts.most_common(int(max_size) - 2)]
    return Vocab(RESERVED + tuple(kept))


def encode(text: str, vocab: Vocab) -> list[int]:
    return [vocab.id_of(tok) for tok in tokenize(text)]


def decode(seq: Sequence[int], vocab: Vocab) -> str:
    tokens = vocab.tokens
    out = []
    for i in seq:
        if not 0 <= i < len(tokens) or int(i) != i:
            raise DataError(f"invalid token id {i!r}")
        out.append(tokens[int(i)])
    return " ".join(out)


class TextEncoder(TransformerMixin, BaseEstimator):
    """Learn a vocabulary from raw documents and map them to id sequences.

    Parameters
    ----------
    max_size : int, default=5000
        Vocabulary size including the two reserved entries.

    Attributes
    ----------
    vocab_ : Vocab
        Vocabulary learned in :meth:`fit`.
    """

    def __init__(self, max_size: int = 5000):
        self.max_size = max_size

    def fit(self, X: Iterable[str], y=None):
        self.vocab_ = build_vocab("\n".join(_as_documents(X)), self.max_size)
        return self

    def transform(self, X: Iterable[str]) -> list[list[int]]:
        check_is_fitted(self, "vocab_")
        return [encode(doc, self.vocab_) for doc in _as_documents(X)]

    def inverse_transform(self, X: Iterable[Sequence[int]]) -> list[str]:
        check_is_fitted(self, "vocab_")
        return [decode(seq, self.vocab_) for seq in X]


def _as_documents(X) -> list[str]:
    if isinstance(X, str):
        raise TypeError("expected an iterable of documents, got a single string")
    return [str(doc) for doc in X]
