"""Synthetic wrap-format environment for the desk-scale RL demo.

A response is a length-T symbol sequence. It is accepted iff it begins with
the opening tag symbol, ends with the closing tag symbol, and carries at
least one content symbol strictly between them. The rule is decidable by a
single scan and the acceptance set is exactly enumerable, so the training
dynamics can be checked against closed-form ground truth.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from ..model import (
    AgentQuery,
    FormatError,
    TaskInstance,
    TaskKind,
    Verdict,
)
from .policy import ToyPolicy

_QUERY_SOURCES = ("tst", "trn")


@dataclass(frozen=True)
class ToyFormatEnv:
    seq_len: int = 6
    vocab: tuple[str, ...] = ("<s>", "</s>", "a", "b", "c", "d", "e", "f")
    open_symbol: int = 0
    close_symbol: int = 1
    queries_per_source: int = 4000

    def __post_init__(self):
        if self.seq_len < 3:
            raise ValueError("need at least open + content + close positions")
        if len(self.vocab) < 3:
            raise ValueError("need at least one content symbol besides the tags")

    @property
    def vocab_size(self) -> int:
        return len(self.vocab)

    def content_symbols(self) -> tuple[int, ...]:
        return tuple(
            v
            for v in range(self.vocab_size)
            if v not in (self.open_symbol, self.close_symbol)
        )

    def decode(self, sequence: np.ndarray) -> str:
        return " ".join(self.vocab[int(v)] for v in sequence)

    # --- checking ----------------------------------------------------------

    def accepts(self, sequences: np.ndarray) -> np.ndarray:
        """Vectorized acceptance over an (n, T) batch; returns (n,) bools."""
        seqs = np.atleast_2d(np.asarray(sequences, dtype=np.int64))
        content = np.isin(seqs[:, 1:-1], self.content_symbols())
        return (
            (seqs[:, 0] == self.open_symbol)
            & (seqs[:, -1] == self.close_symbol)
            & content.any(axis=1)
        )

    def check(self, instance: TaskInstance, sequence: np.ndarray) -> Verdict:
        """Single-scan checker with repair-oriented messages, scored {1, -1}."""
        seq = np.asarray(sequence, dtype=np.int64)
        errors = []
        open_name = self.vocab[self.open_symbol]
        close_name = self.vocab[self.close_symbol]
        if seq[0] != self.open_symbol:
            errors.append(
                FormatError(
                    code="TAG_MISMATCH",
                    message=f"the sequence must begin with {open_name}",
                    span=(0, 1),
                )
            )
        if seq[-1] != self.close_symbol:
            errors.append(
                FormatError(
                    code="TAG_MISMATCH",
                    message=f"the sequence must end with {close_name}",
                )
            )
        if not np.isin(seq[1:-1], self.content_symbols()).any():
            errors.append(
                FormatError(
                    code="EMPTY_CONSTITUENT",
                    message=(
                        f"the sequence must contain at least one content symbol "
                        f"between {open_name} and {close_name}"
                    ),
                )
            )
        return Verdict.fail(errors) if errors else Verdict.ok()

    # --- query family -------------------------------------------------------

    def dataset(self, source: str) -> list[TaskInstance]:
        """The synthetic query family for one source ("tst" or "trn")."""
        if source not in _QUERY_SOURCES:
            raise ValueError(f"query source must be one of {_QUERY_SOURCES}")
        observation = (
            f"Emit {self.seq_len} symbols: open with {self.vocab[self.open_symbol]}, "
            f"close with {self.vocab[self.close_symbol]}, and place at least one "
            "content symbol in between."
        )
        return [
            TaskInstance(
                task=TaskKind.AGENT,
                id=f"{source}-{i:05d}",
                query=AgentQuery(session_id=f"toy-{source}", observation=observation),
            )
            for i in range(self.queries_per_source)
        ]

    def targets(self, instances: list[TaskInstance], seed: int) -> np.ndarray:
        """One accepted sequence per query, for the warm-start phase."""
        rng = np.random.default_rng(seed)
        content = np.array(self.content_symbols())
        n = len(instances)
        middles = rng.choice(content, size=(n, self.seq_len - 2))
        out = np.empty((n, self.seq_len), dtype=np.int64)
        out[:, 0] = self.open_symbol
        out[:, -1] = self.close_symbol
        out[:, 1:-1] = middles
        return out

    # --- exact quantities ----------------------------------------------------

    def acceptance_probability(self, policy: ToyPolicy) -> float:
        """Closed-form probability that a sampled sequence is accepted."""
        probs = policy.probs()
        content = list(self.content_symbols())
        p_open = probs[0, self.open_symbol]
        p_close = probs[-1, self.close_symbol]
        p_no_content = float(
            np.prod([1.0 - probs[t, content].sum() for t in range(1, self.seq_len - 1)])
        )
        return float(p_open * p_close * (1.0 - p_no_content))

    def enumerate_acceptance_fraction(self) -> float:
        """Accepted share of all |V|^T sequences, by explicit enumeration."""
        total = 0
        accepted = 0
        batch: list[tuple[int, ...]] = []
        for seq in product(range(self.vocab_size), repeat=self.seq_len):
            batch.append(seq)
            if len(batch) == 65536:
                accepted += int(self.accepts(np.array(batch)).sum())
                total += len(batch)
                batch = []
        if batch:
            accepted += int(self.accepts(np.array(batch)).sum())
            total += len(batch)
        return accepted / total

    def uniform_baseline(self) -> float:
        """Acceptance fraction of the uniform policy (== enumeration)."""
        return self.acceptance_probability(
            ToyPolicy.uniform(self.seq_len, self.vocab_size)
        )
