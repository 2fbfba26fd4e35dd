import pytest
from hypothesis import given, strategies as st

from tempmark.exceptions import DataError
from tempmark.tokenizer import (
    BOS_ID,
    UNK_ID,
    TextEncoder,
    Vocab,
    build_vocab,
    decode,
    encode,
    normalize,
    tokenize,
)


def test_build_vocab_frequency_order():
    vocab = build_vocab("a b a", 4)
    assert vocab.tokens == ("<bos>", "<unk>", "a", "b")
    assert vocab.bos_id == BOS_ID == 0
    assert vocab.unk_id == UNK_ID == 1


def test_build_vocab_single_token():
    assert build_vocab("x", 3).tokens == ("<bos>", "<unk>", "x")


def test_build_vocab_truncates_to_most_frequent():
    vocab = build_vocab("c b b a a a", 4)
    assert vocab.tokens[2:] == ("a", "b")
    assert encode("c", vocab) == [vocab.unk_id]


def test_build_vocab_ties_keep_first_occurrence():
    assert build_vocab("q p r p q r z", 5).tokens[2:] == ("q", "p", "r")


def test_build_vocab_empty_corpus():
    with pytest.raises(DataError, match="empty corpus"):
        build_vocab("   \n ", 10)


def test_build_vocab_is_pure():
    text = "to be , or not to be : that is the question ."
    assert build_vocab(text, 8) == build_vocab(text, 8)


def test_reserved_markers_are_not_counted():
    vocab = build_vocab("<unk> <unk> <bos> word", 10)
    assert vocab.tokens == ("<bos>", "<unk>", "word")


def test_tokenize_lowercases_and_splits_punctuation():
    assert tokenize("Who's there?  Nay,") == ["who", "'", "s", "there", "?", "nay", ","]


@pytest.mark.parametrize(
    "text, expected",
    [("a b", ["a", "b"]), ("", []), ("a zzz", ["a", "<unk>"])],
)
def test_encode(text, expected):
    vocab = build_vocab("a b a", 4)
    assert encode(text, vocab) == [vocab.tokens.index(t) for t in expected]


def test_decode_and_round_trip():
    vocab = build_vocab("a b a", 4)
    assert decode([2, 3], vocab) == "a b"
    assert decode([], vocab) == ""
    assert decode(encode("a b a", vocab), vocab) == "a b a"


@pytest.mark.parametrize("bad", [-1, 4, 100])
def test_decode_invalid_id(bad):
    vocab = build_vocab("a b a", 4)
    with pytest.raises(DataError, match="invalid token id"):
        decode([2, bad], vocab)


def test_reserved_ids_survive_text_round_trip():
    vocab = build_vocab("a b a", 4)
    seq = [0, 2, 1, 3]
    assert encode(decode(seq, vocab), vocab) == seq


WORDS = st.lists(st.sampled_from(["alpha", "beta", "gamma", ",", ".", "delta", "o'er"]), min_size=0, max_size=30)


@given(WORDS)
def test_decode_encode_identity_on_normalized_text(words):
    corpus = "alpha beta gamma , . delta o'er"
    vocab = build_vocab(corpus, 50)
    text = " ".join(words)
    assert decode(encode(text, vocab), vocab) == normalize(text)


@given(st.lists(st.integers(min_value=0, max_value=8), max_size=40))
def test_encode_decode_identity_on_ids(ids):
    vocab = build_vocab("alpha beta gamma , . delta o ' er", 50)
    ids = [i % len(vocab) for i in ids]
    assert encode(decode(ids, vocab), vocab) == ids


def test_vocab_file_round_trip(tmp_path):
    vocab = build_vocab("one two two three three three", 10)
    path = tmp_path / "v.txt"
    vocab.save(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[:2] == ["<bos>", "<unk>"]
    assert Vocab.load(path) == vocab


def test_vocab_file_requires_header(tmp_path):
    path = tmp_path / "v.txt"
    path.write_text("a\nb\n", encoding="utf-8")
    with pytest.raises(DataError):
        Vocab.load(path)


def test_text_encoder_estimator():
    enc = TextEncoder(max_size=6).fit(["a b a", "c a"])
    ids = enc.transform(["a c", "zzz"])
    assert ids == [[2, 4], [1]]
    assert enc.inverse_transform(ids) == ["a c", "<unk>"]
    assert enc.get_params() == {"max_size": 6}
