import gzip
import time
from pathlib import Path

import numpy as np
import pytest

from tempmark.ngram import NGramLM
from tempmark.tokenizer import build_vocab, encode

DATA = Path(__file__).resolve().parent.parent / "data"
TRAIN_CORPUS = DATA / "shakespeare_train.txt.gz"
HELDOUT = DATA / "shakespeare_heldout.jsonl"

# LM settings of the desk-scale benchmark (README: "Choosing k")
BENCH_VOCAB = 5000
BENCH_K = 1e-20
BENCH_ORDER = 3


class UniformProvider:
    def __init__(self, n_vocab):
        self.n_vocab = n_vocab

    def logits(self, context):
        return np.zeros(self.n_vocab)


class FixedProvider:
    """Returns the same logits for every context."""

    def __init__(self, values):
        self.values = np.asarray(values, dtype=float)
        self.n_vocab = len(self.values)

    def logits(self, context):
        return self.values


class HashedProvider:
    """Context-dependent random logits; cheap stand-in for a real model."""

    def __init__(self, n_vocab, width=2, scale=3.0):
        self.n_vocab = n_vocab
        self.width = width
        self.scale = scale

    def logits(self, context):
        key = tuple(context[-self.width :])
        rng = np.random.default_rng(abs(hash(key)) % (2**32))
        return self.scale * rng.standard_normal(self.n_vocab)


@pytest.fixture
def uniform10():
    return UniformProvider(10)


@pytest.fixture(scope="session")
def small_text():
    return (
        "the cat sat on the mat . the dog sat on the log . "
        "a cat and a dog sat together on the mat , and the cat slept ."
    )


@pytest.fixture(scope="session")
def small_model(small_text):
    vocab = build_vocab(small_text, 50)
    model = NGramLM(order=3, k=0.1, vocab_size=len(vocab)).fit(encode(small_text, vocab))
    return vocab, model


@pytest.fixture(scope="session")
def bench_lm():
    """Order-3 model on the bundled public-domain corpus, plus its vocabulary."""
    start = time.perf_counter()
    text = gzip.open(TRAIN_CORPUS, "rt", encoding="utf-8").read()
    vocab = build_vocab(text, BENCH_VOCAB)
    model = NGramLM(order=BENCH_ORDER, k=BENCH_K, vocab_size=len(vocab)).fit(encode(text, vocab))
    BENCH_TIMINGS["train"] = time.perf_counter() - start
    BENCH_TIMINGS["corpus_bytes"] = len(text.encode("utf-8"))
    return vocab, model


@pytest.fixture(scope="session")
def bench_table(bench_lm):
    """200 held-out samples scored clean and under the 30% attack, default parameters."""
    from tempmark.evaluation import load_dataset, score_corpus

    vocab, model = bench_lm
    samples = load_dataset(HELDOUT)
    start = time.perf_counter()
    table = score_corpus(samples, model, vocab, attack_fraction=0.3, gen_length=200, rng_seed=0)
    BENCH_TIMINGS["score"] = time.perf_counter() - start
    return table


BENCH_TIMINGS = {}
ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_RESULTS:
            terminalreporter.write_line(line)
