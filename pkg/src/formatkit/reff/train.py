"""Checker-rewarded policy optimization at desk scale.

The loop mirrors RLHF-style PPO with one twist: the reward is the format
checker's {1, -1} score minus an adaptively weighted log-ratio penalty that
keeps the adapted policy near the frozen reference. Everything is seeded and
single-threaded, so a run is reproducible byte for byte.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from ..data_io import sample_queries
from ..errors import NonfiniteGradient, NonfiniteValue, RangeViolation
from .env import ToyFormatEnv
from .policy import PolicyPair, ToyPolicy, exact_kl, log_softmax, softmax


def reward(score: float, logp_phi: float, logp_theta: float, beta: float) -> float:
    """Checker score minus the beta-weighted adapted/reference log-ratio."""
    values = (score, logp_phi, logp_theta, beta)
    if not all(math.isfinite(v) for v in values):
        raise NonfiniteValue(f"reward inputs must be finite, got {values}")
    return score - beta * (logp_phi - logp_theta)


@dataclass(frozen=True)
class KlController:
    """Proportional adaptive weight keeping observed KL near the target."""

    beta: float = 0.05
    target: float = 6.0
    horizon: float = 1000.0

    def __post_init__(self):
        if self.beta <= 0:
            raise RangeViolation(f"beta must be positive, got {self.beta}")
        if self.target <= 0:
            raise RangeViolation(f"target must be positive, got {self.target}")
        if self.horizon <= 0:
            raise RangeViolation(f"horizon must be positive, got {self.horizon}")


def update_beta(
    controller: KlController, observed_kl: float, steps: int
) -> KlController:
    """Scale beta by 1 + clamp((kl - target)/target, +-0.2) * steps/horizon."""
    error = (observed_kl - controller.target) / controller.target
    error = min(0.2, max(-0.2, error))
    return replace(
        controller, beta=controller.beta * (1.0 + error * steps / controller.horizon)
    )


@dataclass(frozen=True)
class TrainConfig:
    seed: int
    epochs: int = 3
    batch_size: int = 32
    learning_rate: float = 1.41e-5
    clip_epsilon: float = 0.2
    whiten_advantages: bool = True
    query_cap: int = 4000
    warm_start_steps: int = 40
    warm_start_lr: float = 0.25
    freeze_beta: bool = False

    def __post_init__(self):
        if self.epochs < 0:
            raise RangeViolation("epochs must be >= 0")
        for name in ("batch_size", "learning_rate", "clip_epsilon", "query_cap"):
            if getattr(self, name) <= 0:
                raise RangeViolation(f"{name} must be positive")


@dataclass(frozen=True)
class BatchItem:
    """One sampled response with its sampling-time log-prob and reward."""

    sequence: np.ndarray
    old_logp: float
    reward: float


def surrogate_and_grad(
    logits: np.ndarray,
    batch: Sequence[BatchItem],
    clip_epsilon: float,
    whiten: bool = True,
) -> tuple[float, np.ndarray]:
    """Clipped-surrogate objective and its exact gradient w.r.t. the logits.

    Advantages are rewards minus the batch mean (optionally whitened by the
    batch standard deviation); a single-sample batch keeps its raw reward as
    the advantage, since a one-sample baseline would zero every update. The
    gradient of the min(.) is zero exactly where the clipped branch is
    active and saturated.
    """
    seqs = np.stack([item.sequence for item in batch])
    old_logp = np.array([item.old_logp for item in batch])
    rewards = np.array([item.reward for item in batch])

    if len(batch) == 1:
        advantages = rewards.copy()
    else:
        advantages = rewards - rewards.mean()
        if whiten:
            std = advantages.std()
            advantages = advantages / (std + 1e-8)

    lp = log_softmax(logits)
    probs = np.exp(lp)
    positions = np.arange(logits.shape[0])
    logp_now = lp[positions, seqs].sum(axis=-1)
    ratio = np.exp(logp_now - old_logp)

    clipped_ratio = np.clip(ratio, 1.0 - clip_epsilon, 1.0 + clip_epsilon)
    objective = float(np.minimum(ratio * advantages, clipped_ratio * advantages).mean())

    # gradient flows unless the clipped branch is strictly active
    blocked = ((advantages > 0) & (ratio > 1.0 + clip_epsilon)) | (
        (advantages < 0) & (ratio < 1.0 - clip_epsilon)
    )
    weight = np.where(blocked, 0.0, ratio * advantages)  # (n,)

    grad = np.zeros_like(logits)
    n, seq_len = seqs.shape
    one_hot_sums = np.zeros_like(logits)
    for t in range(seq_len):
        one_hot_sums[t] = np.bincount(
            seqs[:, t], weights=weight, minlength=logits.shape[1]
        )
    grad = (one_hot_sums - weight.sum() * probs) / n
    return objective, grad


def ppo_step(pair: PolicyPair, batch: Sequence[BatchItem], config: TrainConfig) -> ToyPolicy:
    """One clipped-surrogate ascent step on the adapted policy's logits."""
    if not batch:
        raise RangeViolation("ppo_step needs a nonempty batch")
    _, grad = surrogate_and_grad(
        pair.adapted.logits, batch, config.clip_epsilon, config.whiten_advantages
    )
    if not np.isfinite(grad).all():
        raise NonfiniteGradient("surrogate gradient is not finite")
    pair.adapted.logits = pair.adapted.logits + config.learning_rate * grad
    return pair.adapted


@dataclass(frozen=True)
class BatchRecord:
    batch: int
    ffr: float
    mean_reward: float
    kl: float
    beta: float

    def to_doc(self) -> dict:
        return {
            "batch": self.batch,
            "ffr": self.ffr,
            "mean_reward": self.mean_reward,
            "kl": self.kl,
            "beta": self.beta,
        }


@dataclass
class TrainLog:
    """Per-batch records plus an end-of-run summary; plot-ready JSONL."""

    records: list[BatchRecord] = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def write_jsonl(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as handle:
            for record in self.records:
                handle.write(json.dumps(record.to_doc(), ensure_ascii=False) + "\n")

    def mean_kl_tail(self, fraction: float = 0.1) -> float:
        """Mean exact KL over the trailing `fraction` of batches."""
        if not self.records:
            raise RangeViolation("no batches recorded")
        tail = max(1, math.ceil(len(self.records) * fraction))
        return sum(r.kl for r in self.records[-tail:]) / tail


def warm_start(
    pair: PolicyPair, targets: np.ndarray, steps: int, lr: float
) -> ToyPolicy:
    """Supervised likelihood ascent on target sequences (finetuning analog)."""
    seq_len, vocab = pair.adapted.logits.shape
    counts = np.zeros((seq_len, vocab))
    for t in range(seq_len):
        counts[t] = np.bincount(targets[:, t], minlength=vocab)
    empirical = counts / len(targets)
    for _ in range(steps):
        probs = softmax(pair.adapted.logits)
        pair.adapted.logits = pair.adapted.logits + lr * (empirical - probs)
    return pair.adapted


def diversity_probe(policy: ToyPolicy, n_samples: int, seed: int) -> float:
    """Fraction of distinct sequences among n seeded samples."""
    if n_samples < 1:
        raise RangeViolation("n_samples must be >= 1")
    rng = np.random.default_rng(seed)
    samples = policy.sample(rng, n_samples)
    distinct = {tuple(int(v) for v in row) for row in samples}
    return len(distinct) / n_samples


def train(
    env: ToyFormatEnv,
    pair: PolicyPair,
    controller: KlController | None,
    config: TrainConfig,
    query_source: str = "tst",
    warm_start_targets: bool = False,
) -> TrainLog:
    """Run the full checker-rewarded loop and return its log.

    Per batch: sample responses from the adapted policy for the next query
    slice, score them with the environment checker, turn scores into rewards
    with the current beta, take one PPO step, then update the controller
    with the exact KL. The reference policy is never touched. Passing
    controller=None disables the penalty entirely (a true beta = 0 run).
    """
    rng = np.random.default_rng(config.seed)
    queries = sample_queries(
        env.dataset(query_source), cap=config.query_cap, seed=config.seed
    )
    log = TrainLog()
    baseline = env.uniform_baseline()

    if warm_start_targets:
        targets = env.targets(queries, seed=config.seed)
        warm_start(pair, targets, config.warm_start_steps, config.warm_start_lr)

    batch_index = 0
    last_epoch_passes = 0
    last_epoch_samples = 0
    for epoch in range(config.epochs):
        final_epoch = epoch == config.epochs - 1
        for start in range(0, len(queries), config.batch_size):
            batch_queries = queries[start : start + config.batch_size]
            n = len(batch_queries)
            sequences = pair.adapted.sample(rng, n)
            old_logp = pair.adapted.sequence_logp(sequences)
            ref_logp = pair.reference.sequence_logp(sequences)
            verdicts = [
                env.check(q, seq) for q, seq in zip(batch_queries, sequences)
            ]
            scores = np.array([v.score for v in verdicts], dtype=np.float64)
            beta = controller.beta if controller is not None else 0.0
            rewards = [
                reward(float(s), float(a), float(b), beta)
                for s, a, b in zip(scores, old_logp, ref_logp)
            ]
            batch = [
                BatchItem(sequence=seq, old_logp=float(a), reward=r)
                for seq, a, r in zip(sequences, old_logp, rewards)
            ]
            ppo_step(pair, batch, config)
            kl = exact_kl(pair)
            if controller is not None and not config.freeze_beta:
                controller = update_beta(controller, kl, steps=n)
            passes = int((scores == 1).sum())
            if final_epoch:
                last_epoch_passes += passes
                last_epoch_samples += n
            log.records.append(
                BatchRecord(
                    batch=batch_index,
                    ffr=passes / n,
                    mean_reward=float(np.mean(rewards)),
                    kl=kl,
                    beta=controller.beta if controller is not None else 0.0,
                )
            )
            batch_index += 1

    final_ffr = (
        last_epoch_passes / last_epoch_samples if last_epoch_samples else baseline
    )
    log.summary = {
        "query_source": query_source,
        "warm_start": warm_start_targets,
        "seed": config.seed,
        "batches": batch_index,
        "baseline_ffr": baseline,
        "final_epoch_ffr": final_ffr,
        "exact_final_ffr": env.acceptance_probability(pair.adapted),
        "final_kl": exact_kl(pair),
        "mean_kl_last_tenth": log.mean_kl_tail(0.1) if log.records else 0.0,
        "final_beta": controller.beta if controller is not None else 0.0,
        "distinct_fraction": diversity_probe(pair.adapted, 512, config.seed + 1),
    }
    return log
