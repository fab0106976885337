"""Reference methods: behavioral cloning and the single-option configuration.

BC trains a flat goal-conditioned action head with the same architecture and
optimizer settings as the low-level policy head, mixing offline and expert
log-likelihoods with coefficient beta (beta=0: expert data only).

The single-option baseline is the K=1 configuration of the main algorithm,
run through the identical code path, with the trivial one-logit high head.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import nets as N
from .algo import MetricsRow, TrainConfig, TrainResult
from .data import Dataset, DatasetIndex, TransitionBatch
from .env import N_ACTIONS, GridPnP, TaskSpec
from .errors import ConfigError, DataError
from .nets import MLP, AdamState, adam_step, log_softmax
from .rollout import FlatActor, evaluate


@dataclass(frozen=True)
class BCConfig:
    beta: float = 0.0
    lr: float = 3e-3
    iterations: int = 10000
    batch_size: int | None = None  # None: 256 * n_objects
    hidden: tuple[int, ...] = (64, 64)
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-7
    seed: int = 0
    eval_interval: int = 100
    eval_episodes: int = 10
    eval_seed: int = 9999

    def validate(self) -> "BCConfig":
        if not 0.0 <= self.beta <= 1.0:
            raise ConfigError("beta must be in [0, 1]")
        if self.lr <= 0 or self.iterations < 0:
            raise ConfigError("bad learning rate or iteration count")
        if self.batch_size is not None and self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        return self

    def to_json(self) -> str:
        d = dict(self.__dict__)
        d["hidden"] = list(self.hidden)
        return json.dumps(d, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "BCConfig":
        d = json.loads(text)
        d["hidden"] = tuple(d["hidden"])
        return cls(**d).validate()


def bc_loss(pi: MLP, expert_batch: TransitionBatch,
            offline_batch: TransitionBatch | None, beta: float):
    """Negative mixed log-likelihood and its gradients.

    beta weighs the offline pool; 1-beta the expert pool. A pool with zero
    coefficient is not read at all.
    """
    if not 0.0 <= beta <= 1.0:
        raise ConfigError("beta must be in [0, 1]")
    loss = 0.0
    grads = None

    def term(batch: TransitionBatch, coeff: float):
        nonlocal loss, grads
        if coeff == 0.0:
            return
        if batch is None or len(batch) == 0:
            raise DataError("empty batch for a nonzero term")
        x = np.concatenate([batch.s, batch.g], axis=1)
        logits, tape = pi.forward_tape(x)
        lp = log_softmax(logits)
        rows = np.arange(len(batch))
        loss += -coeff * float(np.mean(lp[rows, batch.a]))
        d = np.exp(lp)
        d[rows, batch.a] -= 1.0
        d *= coeff / len(batch)
        g = pi.backward_tape(tape, d)
        grads = g if grads is None else N.add_grads(grads, g)

    term(expert_batch, 1.0 - beta)
    term(offline_batch, beta)
    if grads is None:  # beta edge cases cannot both be zero-coefficient
        raise ConfigError("bc_loss with no active term")
    return loss, grads


def train_bc(cfg: BCConfig, dataset: Dataset, on_metrics=None):
    """Supervised training of the flat policy; same metrics contract as the
    main algorithm but without option-dependent columns."""
    cfg = cfg.validate()
    if not dataset.expert and cfg.beta < 1.0:
        raise DataError("BC needs expert trajectories")
    spec = dataset.spec
    env = GridPnP(spec)
    pi = MLP(
        [spec.state_dim + spec.goal_dim] + list(cfg.hidden) + [N_ACTIONS],
        np.random.default_rng([cfg.seed, 23, 1]),
    )
    opt = AdamState.for_net(pi, cfg.lr, cfg.adam_beta1, cfg.adam_beta2,
                            cfg.adam_eps)
    index = DatasetIndex(dataset)
    batch_size = cfg.batch_size or 256 * spec.n_objects
    metrics: list[MetricsRow] = []
    for n in range(1, cfg.iterations + 1):
        rng = np.random.default_rng([cfg.seed, 29, n])
        expert_batch = index.sample("expert", batch_size, rng,
                                    require_options=False)
        offline_batch = None
        if cfg.beta > 0.0:
            offline_batch = index.sample("offline", batch_size, rng,
                                         require_options=False)
        loss, grads = bc_loss(pi, expert_batch, offline_batch, cfg.beta)
        adam_step(pi, grads, opt)
        if n % cfg.eval_interval == 0 or n == cfg.iterations:
            res = evaluate(env, FlatActor(pi), cfg.eval_episodes, cfg.eval_seed)
            row = MetricsRow(
                iteration=n,
                mean_return=res.mean_return,
                std_return=res.std_return,
                disc_loss=None,
                critic_loss=None,
                policy_loss=loss,
                segmentation_accuracy=None,
                occupancy=(),
            )
            metrics.append(row)
            if on_metrics is not None:
                on_metrics(row)
    return pi, metrics


def g_demodice(cfg: TrainConfig, dataset: Dataset, on_metrics=None) -> TrainResult:
    """Single-option distribution matching: the K=1 code path, unchanged."""
    if cfg.K != 1:
        raise ConfigError("the single-option baseline requires K=1")
    from .algo import train

    return train(cfg, dataset, on_metrics=on_metrics)


# -- BC checkpoints -----------------------------------------------------------


def save_bc_checkpoint(path, pi: MLP, cfg: BCConfig, spec: TaskSpec,
                       iteration: int) -> None:
    N.save_nets(
        path,
        {"pi": pi},
        {
            "kind": np.array("bc"),
            "algorithm": np.array("bc"),
            "config_json": np.array(cfg.to_json()),
            "task_spec_json": np.array(json.dumps(spec.to_dict(), sort_keys=True)),
            "iteration": np.int64(iteration),
        },
    )


def load_bc_checkpoint(path):
    named, extra = N.load_nets(path)
    if str(extra.get("kind", "")) != "bc":
        raise DataError(f"{path}: not a BC checkpoint")
    cfg = BCConfig.from_json(str(extra["config_json"]))
    spec = TaskSpec.from_dict(json.loads(str(extra["task_spec_json"])))
    return named["pi"], cfg, spec, int(extra["iteration"])
