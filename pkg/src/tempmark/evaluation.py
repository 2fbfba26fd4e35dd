"""Corpus-level benchmark of the temperature watermark against the green-list baseline.

Positives are watermarked generations from each sample's prompt (optionally
paraphrase-attacked); negatives are the sample's human-written text.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .attack import AttackConfig, LMSubstitutionOracle, attack
from .baseline import BaselineParams, detect_baseline, generate_baseline
from .exceptions import DataError
from .metrics import best_f1_threshold, metrics_at_threshold, roc, tpr_at_fpr
from .provider import LogitsProvider
from .randomness import SplitMix64, WatermarkParams, splitmix64
from .temperature import detect, generate, generate_unwatermarked
from .tokenizer import Vocab, encode

logger = logging.getLogger(__name__)

DETECTORS = ("temperature", "baseline")
FPR_TARGET = 0.02


@dataclass(frozen=True)
class EvalSample:
    id: str
    prompt: str
    human_text: str
    machine_text: str | None = None


def load_dataset(path: str | Path) -> list[EvalSample]:
    """Read one JSON object per line: id, prompt, human_text and optional machine_text."""
    samples: list[EvalSample] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"line {lineno}: parse failure ({exc.msg})") from exc
            if not isinstance(obj, dict):
                raise DataError(f"line {lineno}: parse failure (expected a JSON object)")
            for key in ("id", "prompt", "human_text"):
                if key not in obj:
                    raise DataError(f"line {lineno}: missing field '{key}'")
            human = obj["human_text"]
            if not isinstance(human, str) or not human.strip():
                raise DataError(f"line {lineno}: human_text must be a nonempty string")
            if not isinstance(obj["prompt"], str):
                raise DataError(f"line {lineno}: prompt must be a string")
            machine = obj.get("machine_text")
            if machine is not None and not isinstance(machine, str):
                raise DataError(f"line {lineno}: machine_text must be a string")
            sample_id = str(obj["id"])
            if sample_id in seen:
                raise DataError(f"line {lineno}: duplicate id '{sample_id}'")
            seen.add(sample_id)
            samples.append(EvalSample(sample_id, obj["prompt"], human, machine))
    return samples


@dataclass(frozen=True)
class ScoreRow:
    id: str
    label: str  # "positive" | "negative"
    condition: str  # "clean" | "attacked" | "unwatermarked"
    detector: str  # "temperature" | "baseline"
    score: float


@dataclass
class ScoreTable:
    rows: list[ScoreRow] = field(default_factory=list)
    n_skipped: int = 0

    def scores(self, *, label: str, condition: str, detector: str) -> list[float]:
        return [
            r.score
            for r in self.rows
            if r.label == label and r.condition == condition and r.detector == detector
        ]

    def to_csv(self) -> str:
        lines = ["id,label,condition,detector,score"]
        lines += [f"{_csv_field(r.id)},{r.label},{r.condition},{r.detector},{r.score!r}" for r in self.rows]
        return "\n".join(lines) + "\n"


def _csv_field(value: str) -> str:
    if any(c in value for c in ',"\n'):
        return '"' + value.replace('"', '""') + '"'
    return value


def sample_seeds(rng_seed: int, index: int) -> dict[str, int]:
    """Independent per-sample seeds, all derived from ``splitmix64(rng_seed ^ index)``."""
    stream = SplitMix64(splitmix64(int(rng_seed) ^ int(index)))
    names = ("temperature", "baseline", "attack_temperature", "attack_baseline", "unwatermarked")
    return {name: stream.next_u64() for name in names}


def _score_sample(
    index: int,
    sample: EvalSample,
    provider: LogitsProvider,
    vocab: Vocab,
    params: WatermarkParams,
    baseline_params: BaselineParams,
    attack_fraction: float | None,
    gen_length: int,
    rng_seed: int,
    include_unwatermarked: bool,
) -> list[ScoreRow] | None:
    human = encode(sample.human_text, vocab)
    min_len = max(params.h, baseline_params.h) + 1
    if len(human) < min_len:
        logger.warning("skipping sample %s: human text has %d tokens, need %d", sample.id, len(human), min_len)
        return None

    n_vocab = provider.n_vocab
    prompt = encode(sample.prompt, vocab)
    seeds = sample_seeds(rng_seed, index)

    def temp_score(prefix, body):
        return detect(provider, list(prefix[-params.h :]) + list(body), params).score

    def base_score(prefix, body):
        return detect_baseline(list(prefix[-baseline_params.h :]) + list(body), baseline_params, n_vocab).z

    rec_t = generate(provider, prompt, params, gen_length, seeds["temperature"])
    rec_b = generate_baseline(provider, prompt, baseline_params, gen_length, seeds["baseline"])
    rows = [
        ScoreRow(sample.id, "positive", "clean", "temperature", temp_score(rec_t.prompt, rec_t.generated)),
        ScoreRow(sample.id, "positive", "clean", "baseline", base_score(rec_b.prompt, rec_b.generated)),
        ScoreRow(sample.id, "negative", "clean", "temperature", detect(provider, human, params).score),
        ScoreRow(sample.id, "negative", "clean", "baseline", detect_baseline(human, baseline_params, n_vocab).z),
    ]
    if attack_fraction is not None:
        oracle = LMSubstitutionOracle(provider)
        att_t = attack(rec_t.generated, AttackConfig(oracle, attack_fraction, seeds["attack_temperature"]), prefix=rec_t.prompt)
        att_b = attack(rec_b.generated, AttackConfig(oracle, attack_fraction, seeds["attack_baseline"]), prefix=rec_b.prompt)
        rows.append(ScoreRow(sample.id, "positive", "attacked", "temperature", temp_score(rec_t.prompt, att_t.attacked)))
        rows.append(ScoreRow(sample.id, "positive", "attacked", "baseline", base_score(rec_b.prompt, att_b.attacked)))
    if include_unwatermarked:
        rec_u = generate_unwatermarked(
            provider, prompt, gen_length, seeds["unwatermarked"], h=params.h, temperature=params.T0
        )
        rows.append(ScoreRow(sample.id, "negative", "unwatermarked", "temperature", temp_score(rec_u.prompt, rec_u.generated)))
        rows.append(ScoreRow(sample.id, "negative", "unwatermarked", "baseline", base_score(rec_u.prompt, rec_u.generated)))
    return rows


def score_corpus(
    samples: Sequence[EvalSample],
    provider: LogitsProvider,
    vocab: Vocab,
    params: WatermarkParams = WatermarkParams(),
    baseline_params: BaselineParams = BaselineParams(),
    attack_fraction: float | None = 0.3,
    gen_length: int = 200,
    rng_seed: int = 0,
    include_unwatermarked: bool = False,
    n_jobs: int = 1,
) -> ScoreTable:
    """Generate, attack and score every sample; rows come out in sample order.

    Samples whose human text is too short for either detector are skipped and
    counted in ``ScoreTable.n_skipped``.  ``n_jobs > 1`` scores samples on a
    thread pool; the provider must then tolerate concurrent calls.
    """
    if not samples:
        raise DataError("no samples")
    if attack_fraction is not None:
        AttackConfig(oracle=None, fraction=attack_fraction)

    def job(item):
        i, sample = item
        return _score_sample(
            i, sample, provider, vocab, params, baseline_params,
            attack_fraction, gen_length, rng_seed, include_unwatermarked,
        )

    items = list(enumerate(samples))
    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(job, items))
    else:
        results = [job(item) for item in items]

    table = ScoreTable()
    for rows in results:
        if rows is None:
            table.n_skipped += 1
        else:
            table.rows.extend(rows)
    return table


def summarize(table: ScoreTable, fpr_target: float = FPR_TARGET) -> dict:
    """ROC curves and headline metrics per ``detector/condition``.

    Each positive condition is compared with the human negatives; when
    unwatermarked generations are present, ``detector/clean_vs_unwatermarked``
    compares clean positives with them.  F1 is reported at the threshold
    that maximizes it on these same scores (``f1_at_best``).
    """
    summary, curves = {}, {}
    conditions = sorted({r.condition for r in table.rows if r.label == "positive"}, key=_condition_order)
    for detector in DETECTORS:
        human = table.scores(label="negative", condition="clean", detector=detector)
        comparisons = [(c, table.scores(label="positive", condition=c, detector=detector), human) for c in conditions]
        unwm = table.scores(label="negative", condition="unwatermarked", detector=detector)
        if unwm:
            clean = table.scores(label="positive", condition="clean", detector=detector)
            comparisons.append(("clean_vs_unwatermarked", clean, unwm))
        for name, pos, neg in comparisons:
            if not pos or not neg:
                continue
            curve = roc(pos, neg)
            best = best_f1_threshold(pos, neg)
            m = metrics_at_threshold(pos, neg, best)
            key = f"{detector}/{name}"
            curves[key] = curve
            summary[key] = {
                "auc": curve.auc,
                "f1_at_best": m.f1,
                "best_threshold": best,
                "tpr_at_best": m.tpr,
                "fpr_at_best": m.fpr,
                f"tpr_at_fpr_{fpr_target}": tpr_at_fpr(curve, fpr_target),
                "n_pos": len(pos),
                "n_neg": len(neg),
                "n_skipped": table.n_skipped,
            }
    return {"summary": summary, "curves": curves}


def _condition_order(c: str) -> tuple:
    return ({"clean": 0, "attacked": 1}.get(c, 2), c)


def write_outputs(table: ScoreTable, out_dir: str | Path, fpr_target: float = FPR_TARGET) -> dict:
    """Write scores.csv, one roc_<detector>_<condition>.csv per comparison, and summary.json."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "scores.csv").write_text(table.to_csv(), encoding="utf-8")
    result = summarize(table, fpr_target)
    for key, curve in result["curves"].items():
        (out / f"roc_{key.replace('/', '_')}.csv").write_text(curve.to_csv(), encoding="utf-8")
    (out / "summary.json").write_text(json.dumps(result["summary"], indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return result["summary"]

