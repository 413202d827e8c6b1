from .env import ToyFormatEnv
from .policy import PolicyPair, ToyPolicy, exact_kl, log_softmax, softmax
from .train import (
    BatchItem,
    BatchRecord,
    KlController,
    TrainConfig,
    TrainLog,
    diversity_probe,
    ppo_step,
    reward,
    surrogate_and_grad,
    train,
    update_beta,
    warm_start,
)

__all__ = [
    "BatchItem",
    "BatchRecord",
    "KlController",
    "PolicyPair",
    "ToyFormatEnv",
    "ToyPolicy",
    "TrainConfig",
    "TrainLog",
    "diversity_probe",
    "exact_kl",
    "log_softmax",
    "ppo_step",
    "reward",
    "softmax",
    "surrogate_and_grad",
    "train",
    "update_beta",
    "warm_start",
]
