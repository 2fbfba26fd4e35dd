"""Build the bundled benchmark data from Project Gutenberg Shakespeare texts.

The plays ship in the ``shakespeare`` source distribution on PyPI
(``shksprdata/texts/*_gut.txt``, modern spelling, public domain).  Six plays
are held out; the rest form the n-gram training corpus.  Held-out plays are
cut into passages: a short prompt followed by the human continuation.

    pip download --no-deps --no-binary :all: shakespeare==0.6 -d /tmp/sh
    tar xzf /tmp/sh/shakespeare-0.6.tar.gz -C /tmp/sh
    python scripts/prepare_shakespeare.py /tmp/sh/shakespeare-0.6/shksprdata/texts data/
"""

from __future__ import annotations

import argparse
import gzip
import json
from pathlib import Path

from tempmark.tokenizer import tokenize

HELD_OUT = (
    "hamlet_gut.txt",
    "macbeth_gut.txt",
    "othello_gut.txt",
    "tempest_gut.txt",
    "twelfth_night_gut.txt",
    "julius_caesar_gut.txt",
)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("texts_dir", type=Path)
    parser.add_argument("out_dir", type=Path)
    parser.add_argument("--passages", type=int, default=200)
    parser.add_argument("--prompt-tokens", type=int, default=12)
    parser.add_argument("--human-tokens", type=int, default=202)
    args = parser.parse_args()

    # folio-spelling duplicates (*_gut_f.txt) are skipped
    files = sorted(p for p in args.texts_dir.glob("*_gut.txt"))
    train = [p for p in files if p.name not in HELD_OUT]
    held = [args.texts_dir / name for name in HELD_OUT]

    corpus = "\n\n".join(p.read_text(encoding="latin-1") for p in train)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    with gzip.GzipFile(args.out_dir / "shakespeare_train.txt.gz", "wb", mtime=0) as fh:
        fh.write(corpus.encode("utf-8"))

    chunk = args.prompt_tokens + args.human_tokens
    per_play = -(-args.passages // len(held))
    samples = []
    for path in held:
        tokens = tokenize(path.read_text(encoding="latin-1"))
        n_chunks = len(tokens) // chunk
        stride = max(1, n_chunks // per_play)
        for c in range(0, n_chunks, stride)[:per_play]:
            piece = tokens[c * chunk : (c + 1) * chunk]
            samples.append(
                {
                    "id": f"{path.stem}-{c:04d}",
                    "prompt": " ".join(piece[: args.prompt_tokens]),
                    "human_text": " ".join(piece[args.prompt_tokens :]),
                }
            )
    samples = samples[: args.passages]
    with open(args.out_dir / "shakespeare_heldout.jsonl", "w", encoding="utf-8") as fh:
        for s in samples:
            fh.write(json.dumps(s) + "\n")
    print(f"train corpus: {len(corpus.encode('utf-8'))} bytes from {len(train)} files; {len(samples)} passages")


if __name__ == "__main__":
    main()
