"""Logits provider contract and the line-delimited JSON bridge to external models.

Any object with an ``n_vocab`` attribute and a ``logits(context)`` method
returning a length-``n_vocab`` vector of finite floats can drive generation
and detection.  :class:`SubprocessProvider` speaks the wire protocol to a
child process, and :func:`serve` implements the server side, so a model
living in another process (or language) can stand in for the n-gram model::

    request:  {"context": [12, 7, 301]}
    response: {"logits": [-8.1, -7.9, ...]}

One request per line, responses in request order.
"""

from __future__ import annotations

import json
import subprocess
import sys
import threading
from typing import IO, Protocol, Sequence, runtime_checkable

import numpy as np

from .exceptions import ProviderError


@runtime_checkable
class LogitsProvider(Protocol):
    n_vocab: int

    def logits(self, context: Sequence[int]) -> np.ndarray: ...


def checked_logits(provider: LogitsProvider, context: Sequence[int]) -> np.ndarray:
    values = np.asarray(provider.logits(context), dtype=np.float64)
    if values.shape != (provider.n_vocab,):
        raise ProviderError(f"provider returned shape {values.shape}, expected ({provider.n_vocab},)")
    if not np.all(np.isfinite(values)):
        raise ProviderError("provider returned non-finite logits")
    return values


class SubprocessProvider:
    """Client for a child process speaking the JSONL logits protocol.

    Parameters
    ----------
    command : list of str
        Command line that starts the server.
    n_vocab : int
        Expected logits vector length.
    """

    def __init__(self, command: Sequence[str], n_vocab: int):
        self.command = list(command)
        self.n_vocab = int(n_vocab)
        self._lock = threading.Lock()
        self._proc = subprocess.Popen(
            self.command,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            encoding="utf-8",
            bufsize=1,
        )

    def logits(self, context: Sequence[int]) -> np.ndarray:
        request = json.dumps({"context": [int(t) for t in context]})
        with self._lock:
            if self._proc.poll() is not None:
                raise ProviderError(f"provider process exited with code {self._proc.returncode}")
            try:
                self._proc.stdin.write(request + "\n")
                self._proc.stdin.flush()
                line = self._proc.stdout.readline()
            except (BrokenPipeError, OSError) as exc:
                raise ProviderError(f"provider process I/O failed: {exc}") from exc
        if not line:
            raise ProviderError("provider process closed its output")
        try:
            reply = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProviderError(f"provider sent malformed JSON: {line[:80]!r}") from exc
        if "error" in reply:
            raise ProviderError(f"provider error: {reply['error']}")
        values = np.asarray(reply.get("logits"), dtype=np.float64)
        if values.shape != (self.n_vocab,):
            raise ProviderError(f"provider returned {values.size} logits, expected {self.n_vocab}")
        return values

    def close(self) -> None:
        if self._proc.poll() is None:
            self._proc.stdin.close()
            try:
                self._proc.wait(timeout=10)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def __del__(self):
        try:
            self.close()
        except Exception:
            pass


def serve(provider: LogitsProvider, stdin: IO[str] | None = None, stdout: IO[str] | None = None) -> int:
    """Answer logits requests line by line until EOF.

    A bad request is answered with ``{"error": ...}`` and the loop continues.
    Returns the number of requests handled.
    """
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    handled = 0
    for line in stdin:
        if not line.strip():
            continue
        handled += 1
        try:
            request = json.loads(line)
            context = request["context"]
            if not isinstance(context, list) or not all(isinstance(t, int) for t in context):
                raise ValueError("context must be a list of integers")
            values = checked_logits(provider, context)
            reply = {"logits": [float(v) for v in values]}
        except (ValueError, KeyError, TypeError, ProviderError) as exc:
            reply = {"error": str(exc)}
        stdout.write(json.dumps(reply) + "\n")
        stdout.flush()
    return handled


def main(argv: Sequence[str] | None = None) -> int:
    """``python -m tempmark.provider MODEL``: serve a saved n-gram model over stdio."""
    from .ngram import load_model

    args = list(sys.argv[1:] if argv is None else argv)
    if len(args) != 1:
        print("usage: python -m tempmark.provider MODEL", file=sys.stderr)
        return 1
    serve(load_model(args[0]))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
