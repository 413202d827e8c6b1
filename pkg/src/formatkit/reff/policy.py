"""Per-position categorical sequence policy with closed-form KL.

The policy factorizes over positions: sampling position t draws from a
categorical over the vocabulary, independent of other positions. This keeps
the KL divergence between two policies exact (a sum of categorical KLs) and
the acceptance probability of simple sequence languages enumerable, which is
the whole point of the desk-scale setup.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NonfiniteValue


def log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def softmax(logits: np.ndarray) -> np.ndarray:
    return np.exp(log_softmax(logits))


@dataclass
class ToyPolicy:
    """Trainable (T, V) logit table; rows are per-position categoricals."""

    logits: np.ndarray

    def __post_init__(self):
        self.logits = np.asarray(self.logits, dtype=np.float64)
        if self.logits.ndim != 2:
            raise ValueError(f"logits must be (T, V), got shape {self.logits.shape}")
        if not np.isfinite(self.logits).all():
            raise NonfiniteValue("policy logits must be finite")

    @classmethod
    def uniform(cls, seq_len: int = 6, vocab_size: int = 8) -> "ToyPolicy":
        return cls(logits=np.zeros((seq_len, vocab_size)))

    @property
    def seq_len(self) -> int:
        return self.logits.shape[0]

    @property
    def vocab_size(self) -> int:
        return self.logits.shape[1]

    def probs(self) -> np.ndarray:
        return softmax(self.logits)

    def log_probs(self) -> np.ndarray:
        return log_softmax(self.logits)

    def sample(self, rng: np.random.Generator, n: int = 1) -> np.ndarray:
        """Draw n sequences, shape (n, T), int64 symbol indices."""
        cdf = np.cumsum(self.probs(), axis=-1)
        u = rng.random((n, self.seq_len))
        out = np.empty((n, self.seq_len), dtype=np.int64)
        for t in range(self.seq_len):
            out[:, t] = np.searchsorted(cdf[t], u[:, t], side="right")
        return np.minimum(out, self.vocab_size - 1)

    def sequence_logp(self, sequences: np.ndarray) -> np.ndarray:
        """Log-probability of each (n, T) sequence under this policy."""
        seqs = np.atleast_2d(np.asarray(sequences, dtype=np.int64))
        lp = self.log_probs()
        positions = np.arange(self.seq_len)
        return lp[positions, seqs].sum(axis=-1)

    def copy(self) -> "ToyPolicy":
        return ToyPolicy(logits=self.logits.copy())


@dataclass(frozen=True)
class PolicyPair:
    """A frozen reference policy plus the trainable adapted policy."""

    reference: ToyPolicy
    adapted: ToyPolicy

    def __post_init__(self):
        if self.reference.logits.shape != self.adapted.logits.shape:
            raise ValueError("reference and adapted policies must share (T, V)")
        # freeze the reference in place: later writes raise
        self.reference.logits.setflags(write=False)

    @classmethod
    def from_reference(cls, reference: ToyPolicy) -> "PolicyPair":
        return cls(reference=reference.copy(), adapted=reference.copy())


def exact_kl(pair: PolicyPair) -> float:
    """Closed-form KL(adapted || reference), summed over positions."""
    lp_adapted = pair.adapted.log_probs()
    lp_reference = pair.reference.log_probs()
    p = np.exp(lp_adapted)
    return float((p * (lp_adapted - lp_reference)).sum())
