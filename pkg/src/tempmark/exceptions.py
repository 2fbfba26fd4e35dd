"""Exception types shared across the package."""


class ParameterError(ValueError):
    """A configuration value violates its invariant (bad temperature range, gamma, ...)."""


class DataError(ValueError):
    """Input data is malformed or unusable (corrupt file, bad JSONL line, text too short)."""


class ProviderError(RuntimeError):
    """A logits provider failed while generating or scoring."""
