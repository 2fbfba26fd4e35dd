"""Temperature-modulated text watermarking with a green-list baseline."""

from .attack import AttackConfig, AttackRecord, LMSubstitutionOracle, ParaphraseAttack, attack, lm_substitution_oracle
from .baseline import (
    BaselineDetection,
    BaselineParams,
    GreenListWatermark,
    detect_baseline,
    generate_baseline,
)
from .evaluation import EvalSample, ScoreTable, load_dataset, score_corpus, summarize, write_outputs
from .exceptions import DataError, ParameterError, ProviderError
from .metrics import RocCurve, metrics_at_threshold, pairwise_auc, roc, tpr_at_fpr
from .ngram import NGramLM, load_model, save_model, train
from .provider import LogitsProvider, SubprocessProvider
from .randomness import (
    GreenMask,
    WatermarkParams,
    context_hash,
    green_partition,
    sample_temperature,
    splitmix64,
    uniform_from_seed,
)
from .sampling import softmax_with_temperature
from .temperature import (
    DetectionResult,
    GenerationRecord,
    TemperatureWatermark,
    detect,
    generate,
    generate_unwatermarked,
)
from .tokenizer import TextEncoder, Vocab, build_vocab, decode, encode, tokenize

__version__ = "0.1.0"

__all__ = [
    "AttackConfig",
    "AttackRecord",
    "BaselineDetection",
    "BaselineParams",
    "DataError",
    "DetectionResult",
    "EvalSample",
    "GenerationRecord",
    "GreenListWatermark",
    "GreenMask",
    "LMSubstitutionOracle",
    "LogitsProvider",
    "NGramLM",
    "ParameterError",
    "ParaphraseAttack",
    "ProviderError",
    "RocCurve",
    "ScoreTable",
    "SubprocessProvider",
    "TemperatureWatermark",
    "TextEncoder",
    "Vocab",
    "WatermarkParams",
    "attack",
    "build_vocab",
    "context_hash",
    "decode",
    "detect",
    "detect_baseline",
    "encode",
    "generate",
    "generate_baseline",
    "generate_unwatermarked",
    "green_partition",
    "lm_substitution_oracle",
    "load_dataset",
    "load_model",
    "metrics_at_threshold",
    "pairwise_auc",
    "roc",
    "sample_temperature",
    "save_model",
    "score_corpus",
    "softmax_with_temperature",
    "splitmix64",
    "summarize",
    "tokenize",
    "tpr_at_fpr",
    "train",
    "uniform_from_seed",
    "write_outputs",
]
