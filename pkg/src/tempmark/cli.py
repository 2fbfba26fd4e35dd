"""Command line entry point: ``tempmark <subcommand> ...``.

Exit status is 0 on success, 1 for usage or parameter errors and 2 for data
errors.  Every command that writes files also writes a run manifest with
the fully resolved configuration; ``tempmark replay MANIFEST`` re-runs it.
"""

from __future__ import annotations

import argparse
import gzip
import json
import logging
import os
import shlex
import sys
from pathlib import Path
from typing import Sequence

from .attack import AttackConfig, LMSubstitutionOracle, attack
from .baseline import BaselineParams, detect_baseline, generate_baseline
from .evaluation import load_dataset, score_corpus, write_outputs
from .exceptions import DataError, ParameterError, ProviderError
from .ngram import NGramLM, load_model
from .provider import SubprocessProvider, serve
from .randomness import WatermarkParams, splitmix64
from .temperature import DEFAULT_THRESHOLD, GenerationRecord, detect, generate, generate_unwatermarked, scoring_view
from .tokenizer import Vocab, build_vocab, decode, encode

# n-gram smoothing used by `train-lm` unless --k is given; see README ("Choosing k").
DEFAULT_K = 1e-20
DEFAULT_VOCAB_SIZE = 5000


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _env_seed() -> int:
    raw = os.environ.get("TEMPMARK_SEED")
    if raw is None:
        return 0
    try:
        return int(raw, 0)
    except ValueError:
        raise UsageError(f"TEMPMARK_SEED must be an integer, got {raw!r}") from None


def _add_watermark_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("temperature watermark")
    g.add_argument("--T0", type=float, default=1.0, help="base temperature")
    g.add_argument("--m", type=float, default=0.3, help="lower temperature multiplier")
    g.add_argument("--M", type=float, default=3.0, help="upper temperature multiplier")
    g.add_argument("--h", type=int, default=2, help="number of hashed context tokens")


def _add_baseline_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("green-list baseline")
    g.add_argument("--gamma", type=float, default=0.5)
    g.add_argument("--delta", type=float, default=2.0)
    g.add_argument("--key-seed", type=int, default=0)


def _add_model_flags(p: argparse.ArgumentParser, model_required: bool = True) -> None:
    if model_required:
        p.add_argument("model", help="n-gram model file written by train-lm")
    p.add_argument("--vocab", help="vocabulary file (default: MODEL.vocab)")
    p.add_argument(
        "--provider-cmd",
        help="serve logits from this command over the JSONL protocol instead of loading MODEL",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tempmark", description="Temperature watermarking toolkit", allow_abbrev=False)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train-lm", help="build a vocabulary and train the n-gram model", allow_abbrev=False)
    p.add_argument("corpus", help="UTF-8 text file (.gz accepted)")
    p.add_argument("-o", "--out", required=True, help="model output path")
    p.add_argument("--vocab", help="vocabulary output path (default: OUT.vocab)")
    p.add_argument("--order", type=int, default=3)
    p.add_argument("--k", type=float, default=DEFAULT_K, help="add-k smoothing constant")
    p.add_argument("--vocab-size", type=int, default=DEFAULT_VOCAB_SIZE)

    p = sub.add_parser("generate", help="generate text from a prompt", allow_abbrev=False)
    _add_model_flags(p)
    p.add_argument("--prompt", required=True)
    p.add_argument("--method", choices=("temperature", "baseline", "none"), default="temperature")
    p.add_argument("--length", type=int, default=200)
    p.add_argument("--count", type=int, default=1, help="number of generations (seed i is splitmix64(seed ^ i))")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("-o", "--out", default="generations.jsonl", help="record JSONL output")
    _add_watermark_flags(p)
    _add_baseline_flags(p)

    p = sub.add_parser("detect", help="score text for the watermark", allow_abbrev=False)
    _add_model_flags(p)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--text", help="plain text file to score")
    src.add_argument("--records", help="generation record JSONL; each record is scored")
    p.add_argument("--method", choices=("temperature", "baseline"), default="temperature")
    p.add_argument("--threshold", type=float, default=None, help="default 0.2 (temperature) or 4.0 (baseline z)")
    p.add_argument("-o", "--out", help="also write the result(s) here")
    _add_watermark_flags(p)
    _add_baseline_flags(p)

    p = sub.add_parser("attack", help="apply the substitution attack to generation records", allow_abbrev=False)
    p.add_argument("--in", dest="inp", required=True, help="generation record JSONL")
    p.add_argument("--model", required=True, help="n-gram model used as substitution oracle")
    p.add_argument("--vocab", help=argparse.SUPPRESS)
    p.add_argument("--provider-cmd", help="substitution oracle served over the JSONL protocol")
    p.add_argument("--fraction", type=float, default=0.3)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("-o", "--out", default="attacked.jsonl")

    p = sub.add_parser("evaluate", help="benchmark both watermarks on a JSONL dataset", allow_abbrev=False)
    _add_model_flags(p)
    p.add_argument("--dataset", required=True)
    p.add_argument("--length", type=int, default=200)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--fraction", type=float, default=0.3, help="attack fraction")
    p.add_argument("--no-attack", action="store_true", help="score clean generations only")
    p.add_argument("--unwatermarked", action="store_true", help="add unwatermarked generations as negatives")
    p.add_argument("--limit", type=int, default=None, help="use the first N samples")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--output-dir", default="eval_out")
    _add_watermark_flags(p)
    _add_baseline_flags(p)

    p = sub.add_parser("serve", help="serve MODEL logits over the JSONL stdio protocol", allow_abbrev=False)
    p.add_argument("model")

    p = sub.add_parser("replay", help="re-run the command recorded in a manifest", allow_abbrev=False)
    p.add_argument("manifest")
    return parser


def _watermark_params(args) -> WatermarkParams:
    return WatermarkParams(T0=args.T0, m=args.m, M=args.M, h=args.h)


def _baseline_params(args) -> BaselineParams:
    return BaselineParams(gamma=args.gamma, delta=args.delta, h=args.h, key_seed=args.key_seed)


def _validate(args) -> None:
    """Check every numeric setting before any file is read or written."""
    if hasattr(args, "T0"):
        _watermark_params(args)
        _baseline_params(args)
    for name in ("length", "count"):
        if getattr(args, name, 1) < 1:
            raise ParameterError(f"{name} must be >= 1")
    if hasattr(args, "fraction"):
        AttackConfig(oracle=None, fraction=args.fraction)
    if getattr(args, "threshold", None) is not None and args.threshold != args.threshold:
        raise ParameterError("threshold must be a number")
    if args.command == "train-lm":
        NGramLM(order=args.order, k=args.k)._validate_params()
        if args.vocab_size < 3:
            raise ParameterError("vocab-size must be >= 3")
    if getattr(args, "jobs", 1) < 1:
        raise ParameterError("jobs must be >= 1")


def _read_text(path: str) -> str:
    try:
        if path.endswith(".gz"):
            with gzip.open(path, "rt", encoding="utf-8") as fh:
                return fh.read()
        return Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc


def _load_vocab(args) -> Vocab:
    path = args.vocab or f"{args.model}.vocab"
    try:
        return Vocab.load(path)
    except OSError as exc:
        raise DataError(f"cannot read vocabulary {path}: {exc}") from exc


def _load_provider(args, vocab: Vocab):
    if getattr(args, "provider_cmd", None):
        return SubprocessProvider(shlex.split(args.provider_cmd), n_vocab=len(vocab))
    try:
        model = load_model(args.model)
    except OSError as exc:
        raise DataError(f"cannot read model {args.model}: {exc}") from exc
    if model.n_vocab != len(vocab):
        raise DataError(f"model vocabulary size {model.n_vocab} does not match vocabulary file ({len(vocab)})")
    return model


def _read_records(path: str) -> list[GenerationRecord]:
    records = []
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if line.strip():
                    try:
                        records.append(GenerationRecord.from_json(line))
                    except DataError as exc:
                        raise DataError(f"{path} line {lineno}: {exc}") from exc
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    return records


def _write_manifest(path: Path, args, argv: Sequence[str], outputs: Sequence[str]) -> None:
    config = {k: v for k, v in sorted(vars(args).items()) if k != "verbose"}
    manifest = {"command": args.command, "argv": list(argv), "config": config, "outputs": list(outputs)}
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _resolved_argv(argv: Sequence[str], args) -> list[str]:
    """argv with the seed made explicit so a manifest replays identically without TEMPMARK_SEED."""
    argv = list(argv)
    if getattr(args, "seed", None) is not None and "--seed" not in argv:
        argv += ["--seed", str(args.seed)]
    return argv


def _prepare_out(path: str) -> Path:
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    return out


def cmd_train_lm(args, argv) -> int:
    text = _read_text(args.corpus)
    vocab = build_vocab(text, args.vocab_size)
    ids = encode(text, vocab)
    model = NGramLM(order=args.order, k=args.k, vocab_size=len(vocab)).fit(ids)
    vocab_path = args.vocab or f"{args.out}.vocab"
    _prepare_out(args.out)
    _prepare_out(vocab_path)
    model.save(args.out)
    vocab.save(vocab_path)
    _write_manifest(Path(f"{args.out}.manifest.json"), args, argv, [args.out, vocab_path])
    print(f"trained order-{args.order} model on {len(ids)} tokens, |V|={len(vocab)} -> {args.out}")
    return 0


def cmd_generate(args, argv) -> int:
    vocab = _load_vocab(args)
    provider = _load_provider(args, vocab)
    prompt = encode(args.prompt, vocab)
    lines = []
    for i in range(args.count):
        seed = args.seed if args.count == 1 else splitmix64(args.seed ^ i)
        if args.method == "temperature":
            rec = generate(provider, prompt, _watermark_params(args), args.length, seed)
        elif args.method == "baseline":
            rec = generate_baseline(provider, prompt, _baseline_params(args), args.length, seed)
        else:
            rec = generate_unwatermarked(provider, prompt, args.length, seed, h=args.h, temperature=args.T0)
        print(decode(rec.generated, vocab))
        lines.append(rec.to_json())
    _prepare_out(args.out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    _write_manifest(Path(f"{args.out}.manifest.json"), args, argv, [args.out])
    return 0


def _detect_one(args, provider, ids) -> dict:
    if args.method == "temperature":
        threshold = DEFAULT_THRESHOLD if args.threshold is None else args.threshold
        return detect(provider, ids, _watermark_params(args), threshold).to_dict()
    threshold = 4.0 if args.threshold is None else args.threshold
    return detect_baseline(ids, _baseline_params(args), len(_load_vocab(args)), threshold).to_dict()


def cmd_detect(args, argv) -> int:
    vocab = _load_vocab(args)
    provider = _load_provider(args, vocab) if args.method == "temperature" else None
    if args.text is not None:
        results = [_detect_one(args, provider, encode(_read_text(args.text), vocab))]
    else:
        results = [_detect_one(args, provider, scoring_view(rec, args.h)) for rec in _read_records(args.records)]
    body = "\n".join(json.dumps(r) for r in results) + "\n"
    sys.stdout.write(body)
    if args.out:
        _prepare_out(args.out).write_text(body, encoding="utf-8")
        _write_manifest(Path(f"{args.out}.manifest.json"), args, argv, [args.out])
    return 0


def cmd_attack(args, argv) -> int:
    records = _read_records(args.inp)
    vocab = Vocab.load(args.vocab) if args.vocab else None
    if args.provider_cmd:
        if vocab is None:
            vocab = _load_vocab(args)
        provider = SubprocessProvider(shlex.split(args.provider_cmd), n_vocab=len(vocab))
    else:
        try:
            provider = load_model(args.model)
        except OSError as exc:
            raise DataError(f"cannot read model {args.model}: {exc}") from exc
    oracle = LMSubstitutionOracle(provider)
    lines = []
    for i, rec in enumerate(records):
        config = AttackConfig(oracle, args.fraction, splitmix64(args.seed ^ i))
        lines.append(attack(rec.generated, config, prefix=rec.prompt).to_json())
    _prepare_out(args.out).write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    _write_manifest(Path(f"{args.out}.manifest.json"), args, argv, [args.out])
    print(f"attacked {len(lines)} records -> {args.out}")
    return 0


def cmd_evaluate(args, argv) -> int:
    vocab = _load_vocab(args)
    provider = _load_provider(args, vocab)
    samples = load_dataset(args.dataset)
    if args.limit is not None:
        samples = samples[: args.limit]
    table = score_corpus(
        samples,
        provider,
        vocab,
        params=_watermark_params(args),
        baseline_params=_baseline_params(args),
        attack_fraction=None if args.no_attack else args.fraction,
        gen_length=args.length,
        rng_seed=args.seed,
        include_unwatermarked=args.unwatermarked,
        n_jobs=args.jobs,
    )
    summary = write_outputs(table, args.output_dir)
    out = Path(args.output_dir)
    _write_manifest(out / "manifest.json", args, argv, sorted(p.name for p in out.iterdir() if p.name != "manifest.json"))
    for key, s in summary.items():
        print(f"{key:40s} auc={s['auc']:.4f} tpr@fpr{0.02}={s['tpr_at_fpr_0.02']:.3f} f1={s['f1_at_best']:.3f}")
    if table.n_skipped:
        print(f"skipped {table.n_skipped} samples with too-short human text")
    return 0


def cmd_serve(args, argv) -> int:
    try:
        model = load_model(args.model)
    except OSError as exc:
        raise DataError(f"cannot read model {args.model}: {exc}") from exc
    serve(model)
    return 0


def cmd_replay(args, argv) -> int:
    try:
        manifest = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
        recorded = manifest["argv"]
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        raise DataError(f"cannot read manifest {args.manifest}: {exc}") from exc
    return run(recorded)


COMMANDS = {
    "train-lm": cmd_train_lm,
    "generate": cmd_generate,
    "detect": cmd_detect,
    "attack": cmd_attack,
    "evaluate": cmd_evaluate,
    "serve": cmd_serve,
    "replay": cmd_replay,
}


def run(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "seed", "absent") is None:
            args.seed = _env_seed()
        _validate(args)
    except (UsageError, ParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args, _resolved_argv(argv, args))
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DataError, ProviderError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc.strerror or exc}: {exc.filename}", file=sys.stderr)
        return 2


def main() -> None:
    raise SystemExit(run())
