"""Option-aware goal-conditioned distribution-matching imitation learner.

Training alternates three gradient updates per iteration on shared batches:

* a discriminator separating offline from expert tuples (offline is the
  positive class, so its converged output approximates
  d_offline / (d_offline + d_expert)),
* a critic minimizing the stabilized dual of the occupancy-matching problem
  (initial-state term plus a log-mean-exp of advantages),
* the two policy heads via advantage-weighted behavior cloning with
  self-normalized weights.

Option labels for unannotated trajectories come from max-sum decoding under
slowly moving target policy heads, refreshed every M iterations.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as _K
from . import nets as N
from .data import Dataset, DatasetIndex, TransitionBatch, set_decoded_labels
from .env import N_ACTIONS, GridPnP, TaskSpec
from .errors import ConfigError, DataError, ShapeError
from .nets import MLP, AdamState, adam_step, log_softmax, softmax
from .rollout import HierarchicalActor, evaluate

MODES = ("unsupervised", "semi")


@dataclass(frozen=True)
class TrainConfig:
    """All training hyperparameters."""

    K: int
    alpha: float = 0.05
    gamma: float = 0.99
    lam: float = 0.95
    M: int = 20
    N: int = 10000
    lr_critic: float = 3e-4
    lr_disc: float = 3e-4
    lr_policy: float = 3e-3
    batch_size: int | None = None  # None: 256 * n_objects
    gp_disc: float = 10.0
    gp_critic: float = 1e-4
    r_clip: float = 10.0
    hidden: tuple[int, ...] = (64, 64)
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-7
    mode: str = "unsupervised"
    seed: int = 0
    eval_interval: int = 100
    eval_episodes: int = 10
    eval_seed: int = 9999

    def validate(self) -> "TrainConfig":
        if self.K < 1:
            raise ConfigError("K must be >= 1")
        if self.alpha < 0:
            raise ConfigError("alpha must be >= 0")
        if not 0.0 < self.gamma < 1.0:
            raise ConfigError("gamma must be in (0, 1)")
        if not 0.0 <= self.lam <= 1.0:
            raise ConfigError("lam must be in [0, 1]")
        if self.M < 1:
            raise ConfigError("M must be >= 1")
        if self.N < 0:
            raise ConfigError("N must be >= 0")
        if self.batch_size is not None and self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if min(self.lr_critic, self.lr_disc, self.lr_policy) <= 0:
            raise ConfigError("learning rates must be positive")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        if self.eval_interval < 1 or self.eval_episodes < 1:
            raise ConfigError("eval settings must be >= 1")
        if not all(h > 0 for h in self.hidden):
            raise ConfigError("hidden sizes must be positive")
        return self

    def to_json(self) -> str:
        d = dict(self.__dict__)
        d["hidden"] = list(self.hidden)
        return json.dumps(d, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "TrainConfig":
        d = json.loads(text)
        d["hidden"] = tuple(d["hidden"])
        return cls(**d).validate()


# -- network wiring -------------------------------------------------------------


def onehot_rows(idx: np.ndarray, n: int) -> np.ndarray:
    idx = np.asarray(idx, dtype=np.int64)
    out = np.zeros((idx.shape[0], n))
    out[np.arange(idx.shape[0]), idx] = 1.0
    return out


@dataclass
class Dims:
    """Input layout shared by all four networks."""

    state: int
    goal: int
    K: int

    @classmethod
    def for_task(cls, spec: TaskSpec, K: int) -> "Dims":
        return cls(state=spec.state_dim, goal=spec.goal_dim, K=K)

    def pi_h_in(self, s, c_prev, g) -> np.ndarray:
        return np.concatenate([s, onehot_rows(c_prev, self.K + 1), g], axis=1)

    def pi_l_in(self, s, c, g) -> np.ndarray:
        return np.concatenate([s, onehot_rows(c, self.K), g], axis=1)

    def nu_in(self, c_prev, s, g) -> np.ndarray:
        return np.concatenate([onehot_rows(c_prev, self.K + 1), s, g], axis=1)

    def psi_in(self, c_prev, s, c, a, g) -> np.ndarray:
        return np.concatenate(
            [
                onehot_rows(c_prev, self.K + 1),
                s,
                onehot_rows(c, self.K),
                onehot_rows(a, N_ACTIONS),
                g,
            ],
            axis=1,
        )

    def nu_cont_mask(self) -> np.ndarray:
        m = np.zeros(self.K + 1 + self.state + self.goal)
        m[self.K + 1 :] = 1.0
        return m

    def psi_cont_mask(self) -> np.ndarray:
        m = np.zeros(self.K + 1 + self.state + self.K + N_ACTIONS + self.goal)
        m[self.K + 1 : self.K + 1 + self.state] = 1.0
        m[-self.goal :] = 1.0
        return m


@dataclass
class GoDiceNets:
    """The four trained networks plus target copies of the policy heads."""

    dims: Dims
    pi_h: MLP
    pi_l: MLP
    nu: MLP
    psi: MLP
    pi_h_t: MLP
    pi_l_t: MLP
    opt_pi_h: AdamState
    opt_pi_l: AdamState
    opt_nu: AdamState
    opt_psi: AdamState

    @classmethod
    def initialize(cls, cfg: TrainConfig, dims: Dims) -> "GoDiceNets":
        h = list(cfg.hidden)

        def build(tag: int, n_in: int, n_out: int) -> MLP:
            return MLP([n_in] + h + [n_out],
                       np.random.default_rng([cfg.seed, 23, tag]))

        s, g, K = dims.state, dims.goal, dims.K
        pi_h = build(0, s + K + 1 + g, K)
        pi_l = build(1, s + K + g, N_ACTIONS)
        nu = build(2, K + 1 + s + g, 1)
        psi = build(3, K + 1 + s + K + N_ACTIONS + g, 1)
        mk = lambda net, lr: AdamState.for_net(
            net, lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps
        )
        return cls(
            dims=dims,
            pi_h=pi_h,
            pi_l=pi_l,
            nu=nu,
            psi=psi,
            pi_h_t=pi_h.copy(),
            pi_l_t=pi_l.copy(),
            opt_pi_h=mk(pi_h, cfg.lr_policy),
            opt_pi_l=mk(pi_l, cfg.lr_policy),
            opt_nu=mk(nu, cfg.lr_critic),
            opt_psi=mk(psi, cfg.lr_disc),
        )

    def actor(self) -> HierarchicalActor:
        return HierarchicalActor(self.pi_h, self.pi_l, self.dims.K)


# -- elementary numerics ----------------------------------------------------------


def sigmoid(x: np.ndarray) -> np.ndarray:
    return np.exp(-np.logaddexp(0.0, -x))


def softplus(x: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, x)


def polyak_update(target: MLP, main: MLP, lam: float) -> None:
    """target <- lam * target + (1 - lam) * main, parameter-wise."""
    tp, mp = target.params(), main.params()
    if len(tp) != len(mp):
        raise ShapeError("target/main parameter structure mismatch")
    for t, m in zip(tp, mp):
        if t.shape != m.shape:
            raise ShapeError(f"parameter shape mismatch {t.shape} vs {m.shape}")
        t *= lam
        t += (1.0 - lam) * m


def log_ratio_reward(psi_logits: np.ndarray, r_clip: float) -> np.ndarray:
    """Per-tuple log density ratio of expert over offline occupancy.

    The discriminator's converged sigmoid output is
    d_offline / (d_offline + d_expert), so the expert/offline log-ratio is
    the negated logit; it is clipped to tame early saturation.
    """
    return np.clip(-np.asarray(psi_logits, dtype=np.float64).ravel(),
                   -r_clip, r_clip)


def advantage(v_cur: np.ndarray, v_next: np.ndarray, r: np.ndarray,
              gamma: float, done: np.ndarray | None = None) -> np.ndarray:
    """r + gamma * critic(next) - critic(current), per tuple.

    done masks the next-state value on success-terminal transitions: the
    absorbing state's multiplier is fixed at zero, which keeps it anchored
    even though it never occurs as a current state.
    """
    v_next = np.ravel(v_next)
    if done is not None:
        v_next = v_next * (1.0 - done)
    return r + gamma * v_next - np.ravel(v_cur)


def importance_weights(a_vals: np.ndarray, alpha: float) -> np.ndarray:
    """Self-normalized weights: batch softmax of A / (1 + alpha).

    Proportional to the optimal ratio exp(A / (1 + alpha) - 1); sums to one,
    preserving the argmax and relative ordering of the raw weights.
    """
    return softmax(np.asarray(a_vals, dtype=np.float64) / (1.0 + alpha))


def critic_objective(v_cur, v_next, v_init, r, gamma: float, alpha: float,
                     done: np.ndarray | None = None) -> float:
    """Stabilized dual objective on explicit critic values.

    (1-gamma) * mean(v_init) + (1+alpha) * log mean exp(A/(1+alpha)),
    log-mean-exp computed with max subtraction.
    """
    a = advantage(v_cur, v_next, r, gamma, done)
    z = a / (1.0 + alpha)
    zmax = float(z.max())
    lme = zmax + float(np.log(np.mean(np.exp(z - zmax))))
    return float((1.0 - gamma) * np.mean(v_init) + (1.0 + alpha) * lme)


# -- loss evaluations (value + exact gradients) -----------------------------------


def discriminator_loss(nets: GoDiceNets, cfg: TrainConfig,
                       expert_batch: TransitionBatch,
                       offline_batch: TransitionBatch,
                       rng: np.random.Generator | None = None):
    """Binary cross-entropy (offline positive) plus interpolate gradient penalty.

    Returns (loss_value, grads). When rng is None the penalty is evaluated at
    the midpoint interpolates instead of random ones.
    """
    if len(expert_batch) == 0 or len(offline_batch) == 0:
        raise DataError("empty batch")
    if len(expert_batch) != len(offline_batch):
        raise ShapeError("expert and offline batches must have equal size")
    d = nets.dims
    xe = d.psi_in(expert_batch.c_prev, expert_batch.s, expert_batch.c,
                  expert_batch.a, expert_batch.g)
    xo = d.psi_in(offline_batch.c_prev, offline_batch.s, offline_batch.c,
                  offline_batch.a, offline_batch.g)
    ze, tape_e = nets.psi.forward_tape(xe)
    zo, tape_o = nets.psi.forward_tape(xo)
    B = float(len(expert_batch))
    loss = float(np.mean(softplus(-zo)) + np.mean(softplus(ze)))
    grads = nets.psi.backward_tape(tape_o, (sigmoid(zo) - 1.0) / B)
    N.add_grads(grads, nets.psi.backward_tape(tape_e, sigmoid(ze) / B))
    if cfg.gp_disc > 0.0:
        u = rng.uniform(size=(int(B), 1)) if rng is not None else 0.5
        xi = u * xe + (1.0 - u) * xo
        _, tape_i = nets.psi.forward_tape(xi)
        pen, pen_grads = nets.psi.grad_penalty(tape_i, d.psi_cont_mask())
        loss += cfg.gp_disc * pen
        N.add_grads(grads, pen_grads, cfg.gp_disc)
    return loss, grads


def critic_loss(nets: GoDiceNets, cfg: TrainConfig,
                offline_batch: TransitionBatch, r: np.ndarray):
    """Stabilized dual objective with on-sample gradient penalty.

    Returns (loss_value, grads, advantages).
    """
    if len(offline_batch) == 0:
        raise DataError("empty batch")
    d = nets.dims
    K = d.K
    x_cur = d.nu_in(offline_batch.c_prev, offline_batch.s, offline_batch.g)
    x_next = d.nu_in(offline_batch.c, offline_batch.s_next, offline_batch.g)
    x0 = d.nu_in(np.full(len(offline_batch.s0), K, dtype=np.int64),
                 offline_batch.s0, offline_batch.g0)
    v_cur, t_cur = nets.nu.forward_tape(x_cur)
    v_next, t_next = nets.nu.forward_tape(x_next)
    v0, t0 = nets.nu.forward_tape(x0)
    done = offline_batch.done
    a_vals = advantage(v_cur, v_next, r, cfg.gamma, done)
    loss = critic_objective(v_cur, v_next, v0, r, cfg.gamma, cfg.alpha, done)
    w = importance_weights(a_vals, cfg.alpha)
    w_next = w if done is None else w * (1.0 - done)
    grads = nets.nu.backward_tape(
        t0, np.full_like(v0, (1.0 - cfg.gamma) / v0.shape[0])
    )
    N.add_grads(grads, nets.nu.backward_tape(t_next, cfg.gamma * w_next[:, None]))
    N.add_grads(grads, nets.nu.backward_tape(t_cur, -w[:, None]))
    if cfg.gp_critic > 0.0:
        pen, pen_grads = nets.nu.grad_penalty(t_cur, d.nu_cont_mask())
        loss += cfg.gp_critic * pen
        N.add_grads(grads, pen_grads, cfg.gp_critic)
    return loss, grads, a_vals


def policy_loss(nets: GoDiceNets, cfg: TrainConfig,
                offline_batch: TransitionBatch, weights: np.ndarray):
    """Weighted behavior cloning over both heads (negated for minimization).

    Rows with the start sentinel as previous option train the initial-option
    behavior of the high-level head. Returns (loss_value, grads_h, grads_l).
    """
    if len(offline_batch) == 0:
        raise DataError("empty batch")
    d = nets.dims
    w = np.asarray(weights, dtype=np.float64)
    xh = d.pi_h_in(offline_batch.s, offline_batch.c_prev, offline_batch.g)
    xl = d.pi_l_in(offline_batch.s, offline_batch.c, offline_batch.g)
    logits_h, tape_h = nets.pi_h.forward_tape(xh)
    logits_l, tape_l = nets.pi_l.forward_tape(xl)
    lp_h = log_softmax(logits_h)
    lp_l = log_softmax(logits_l)
    rows = np.arange(len(offline_batch))
    loss = -float(
        np.sum(w * (lp_h[rows, offline_batch.c] + lp_l[rows, offline_batch.a]))
    )
    dh = np.exp(lp_h)
    dh[rows, offline_batch.c] -= 1.0
    dh *= w[:, None]
    dl = np.exp(lp_l)
    dl[rows, offline_batch.a] -= 1.0
    dl *= w[:, None]
    return loss, nets.pi_h.backward_tape(tape_h, dh), nets.pi_l.backward_tape(tape_l, dl)


# -- option decoding ---------------------------------------------------------------


def viterbi_segment(states: np.ndarray, actions: np.ndarray, goal: np.ndarray,
                    pi_h: MLP, pi_l: MLP, K: int) -> tuple[np.ndarray, float]:
    """Most likely option sequence for one trajectory under the given heads.

    Uses max-sum dynamic programming over log policy probabilities; ties
    break toward the lowest option index. Cost O(T * K^2).
    """
    if len(states) != len(actions) + 1:
        raise DataError("need len(states) == len(actions) + 1")
    return _decode_many([(states, actions, goal)], pi_h, pi_l, K)[0]


def _decode_many(trajs, pi_h: MLP, pi_l: MLP, K: int):
    """Decode several trajectories with two shared forward passes.

    trajs: list of (states, actions, goal). Returns [(labels, best), ...].
    """
    lengths = [len(a) for _, a, _ in trajs]
    s_all = np.concatenate([np.asarray(s[:T], dtype=np.float64)
                            for (s, _, _), T in zip(trajs, lengths)])
    g_all = np.concatenate([np.broadcast_to(g, (T, len(g)))
                            for (_, _, g), T in zip(trajs, lengths)])
    n_rows = s_all.shape[0]
    # High head: every (t, c_prev) pair; low head: every (t, c) pair.
    xh = np.concatenate(
        [
            np.repeat(s_all, K + 1, axis=0),
            onehot_rows(np.tile(np.arange(K + 1), n_rows), K + 1),
            np.repeat(g_all, K + 1, axis=0),
        ],
        axis=1,
    )
    logH_all = log_softmax(pi_h.forward(xh)).reshape(n_rows, K + 1, K)
    xl = np.concatenate(
        [
            np.repeat(s_all, K, axis=0),
            onehot_rows(np.tile(np.arange(K), n_rows), K),
            np.repeat(g_all, K, axis=0),
        ],
        axis=1,
    )
    lp_all = log_softmax(pi_l.forward(xl)).reshape(n_rows, K, N_ACTIONS)
    out = []
    offset = 0
    for (_, actions, _), T in zip(trajs, lengths):
        logH = logH_all[offset : offset + T]
        lp = lp_all[offset : offset + T]
        logL = lp[np.arange(T)[:, None], np.arange(K)[None, :],
                  np.asarray(actions, dtype=np.int64)[:, None]]
        init = logH[0, K, :] + logL[0, :]
        trans = np.ascontiguousarray(logH[1:, :K, :])
        labels, best = _K.viterbi_dp(init, trans, logL)
        out.append((labels, best))
        offset += T
    return out


def segment_dataset(dataset: Dataset, pi_h: MLP, pi_l: MLP, K: int) -> int:
    """Decode and store labels for every unannotated trajectory.

    Annotated trajectories are never touched. Returns the number decoded.
    """
    todo = [
        (j, traj)
        for j, traj in enumerate(dataset.offline)
        if traj.option_source != "annotated"
    ]
    if not todo:
        return 0
    decoded = _decode_many(
        [(t.states, t.actions, t.goal) for _, t in todo], pi_h, pi_l, K
    )
    for (j, _), (labels, _) in zip(todo, decoded):
        set_decoded_labels(dataset, j, labels)
    return len(todo)


def segmentation_accuracy(dataset: Dataset, pi_h: MLP, pi_l: MLP, K: int
                          ) -> float | None:
    """Decode annotated trajectories and score against their annotations
    (no permutation matching). None when the dataset has none."""
    annotated = [t for t in dataset.offline if t.option_source == "annotated"]
    if not annotated:
        return None
    decoded = _decode_many(
        [(t.states, t.actions, t.goal) for t in annotated], pi_h, pi_l, K
    )
    correct = sum(int(np.sum(lbl == t.options))
                  for t, (lbl, _) in zip(annotated, decoded))
    total = sum(len(t) for t in annotated)
    return correct / total


# -- training loop ------------------------------------------------------------------


@dataclass
class MetricsRow:
    iteration: int
    mean_return: float
    std_return: float
    disc_loss: float | None
    critic_loss: float | None
    policy_loss: float
    segmentation_accuracy: float | None
    occupancy: tuple[float, ...]  # per-option fraction of evaluation steps


@dataclass
class TrainResult:
    nets: GoDiceNets
    config: TrainConfig
    metrics: list[MetricsRow] = field(default_factory=list)
    iteration: int = 0


def validate_dataset_for_config(cfg: TrainConfig, dataset: Dataset) -> None:
    if not dataset.offline:
        raise DataError("dataset has no trajectories")
    if cfg.mode == "semi":
        if not dataset.has_annotations:
            raise ConfigError("semi mode requires an annotated dataset")
        if dataset.max_label() >= cfg.K:
            raise ConfigError(
                f"annotations use labels up to {dataset.max_label()} "
                f"but K={cfg.K}"
            )
    else:
        if dataset.has_annotations:
            raise ConfigError(
                "unsupervised mode on an annotated dataset; use semi mode or "
                "regenerate without annotations"
            )


def train(cfg: TrainConfig, dataset: Dataset,
          resume: TrainResult | None = None,
          on_metrics=None) -> TrainResult:
    """Run the full training loop; deterministic in (cfg, dataset).

    Per-iteration batches are derived from (seed, iteration) so resuming from
    a checkpoint continues the exact same stream.
    """
    cfg = cfg.validate()
    validate_dataset_for_config(cfg, dataset)
    dims = Dims.for_task(dataset.spec, cfg.K)
    if resume is not None:
        nets = resume.nets
        start = resume.iteration
        if start >= cfg.N:
            raise ConfigError(f"checkpoint is at iteration {start}, N={cfg.N}")
    else:
        nets = GoDiceNets.initialize(cfg, dims)
        start = 0
    batch_size = cfg.batch_size or 256 * dataset.spec.n_objects
    env = GridPnP(dataset.spec)
    # Labels are needed by every loss from the very first iteration.
    segment_dataset(dataset, nets.pi_h_t, nets.pi_l_t, cfg.K)
    index = DatasetIndex(dataset, sentinel=cfg.K)
    result = TrainResult(nets=nets, config=cfg,
                         metrics=list(resume.metrics) if resume else [])
    for n in range(start + 1, cfg.N + 1):
        if n % cfg.M == 0:
            polyak_update(nets.pi_h_t, nets.pi_h, cfg.lam)
            polyak_update(nets.pi_l_t, nets.pi_l, cfg.lam)
            segment_dataset(dataset, nets.pi_h_t, nets.pi_l_t, cfg.K)
        rng = np.random.default_rng([cfg.seed, 29, n])
        expert_batch = index.sample("expert", batch_size, rng)
        offline_batch = index.sample("offline", batch_size, rng)
        d_loss, d_grads = discriminator_loss(nets, cfg, expert_batch,
                                             offline_batch, rng)
        adam_step(nets.psi, d_grads, nets.opt_psi)
        xo = dims.psi_in(offline_batch.c_prev, offline_batch.s,
                         offline_batch.c, offline_batch.a, offline_batch.g)
        r = log_ratio_reward(nets.psi.forward(xo), cfg.r_clip)
        c_loss, c_grads, _ = critic_loss(nets, cfg, offline_batch, r)
        adam_step(nets.nu, c_grads, nets.opt_nu)
        # Weights from the freshly updated critic.
        v_cur = nets.nu.forward(dims.nu_in(offline_batch.c_prev,
                                           offline_batch.s, offline_batch.g))
        v_next = nets.nu.forward(dims.nu_in(offline_batch.c,
                                            offline_batch.s_next,
                                            offline_batch.g))
        weights = importance_weights(
            advantage(v_cur, v_next, r, cfg.gamma, offline_batch.done),
            cfg.alpha,
        )
        p_loss, g_h, g_l = policy_loss(nets, cfg, offline_batch, weights)
        adam_step(nets.pi_h, g_h, nets.opt_pi_h)
        adam_step(nets.pi_l, g_l, nets.opt_pi_l)
        result.iteration = n
        if n % cfg.eval_interval == 0 or n == cfg.N:
            res = evaluate(env, nets.actor(), cfg.eval_episodes, cfg.eval_seed)
            row = MetricsRow(
                iteration=n,
                mean_return=res.mean_return,
                std_return=res.std_return,
                disc_loss=d_loss,
                critic_loss=c_loss,
                policy_loss=p_loss,
                segmentation_accuracy=segmentation_accuracy(
                    dataset, nets.pi_h_t, nets.pi_l_t, cfg.K
                ),
                occupancy=tuple(res.occupancy),
            )
            result.metrics.append(row)
            if on_metrics is not None:
                on_metrics(row)
    return result


# -- checkpoint bundles ---------------------------------------------------------------


def save_checkpoint(path, result: TrainResult, spec: TaskSpec,
                    label_scheme: str | None, algorithm: str) -> None:
    """Nets, targets, optimizer state, config and counters in one file."""
    nets = result.nets
    named = {
        "pi_h": nets.pi_h,
        "pi_l": nets.pi_l,
        "nu": nets.nu,
        "psi": nets.psi,
        "pi_h_t": nets.pi_h_t,
        "pi_l_t": nets.pi_l_t,
    }
    extra: dict[str, np.ndarray] = {
        "kind": np.array("godice"),
        "algorithm": np.array(algorithm),
        "config_json": np.array(result.config.to_json()),
        "task_spec_json": np.array(json.dumps(spec.to_dict(), sort_keys=True)),
        "label_scheme": np.array(label_scheme or ""),
        "iteration": np.int64(result.iteration),
    }
    for name, opt in (("pi_h", nets.opt_pi_h), ("pi_l", nets.opt_pi_l),
                      ("nu", nets.opt_nu), ("psi", nets.opt_psi)):
        extra[f"opt_{name}_step"] = np.int64(opt.step)
        for i, (m, v) in enumerate(zip(opt.m, opt.v)):
            extra[f"opt_{name}_m{i}"] = m
            extra[f"opt_{name}_v{i}"] = v
    N.save_nets(path, named, extra)


@dataclass
class Checkpoint:
    result: TrainResult
    spec: TaskSpec
    label_scheme: str | None
    algorithm: str


def load_checkpoint(path) -> Checkpoint:
    named, extra = N.load_nets(path)
    if str(extra.get("kind", "")) != "godice":
        raise DataError(f"{path}: not a training checkpoint")
    cfg = TrainConfig.from_json(str(extra["config_json"]))
    spec = TaskSpec.from_dict(json.loads(str(extra["task_spec_json"])))
    dims = Dims.for_task(spec, cfg.K)
    nets = GoDiceNets(
        dims=dims,
        pi_h=named["pi_h"],
        pi_l=named["pi_l"],
        nu=named["nu"],
        psi=named["psi"],
        pi_h_t=named["pi_h_t"],
        pi_l_t=named["pi_l_t"],
        opt_pi_h=_load_opt(extra, "pi_h", named["pi_h"], cfg.lr_policy, cfg),
        opt_pi_l=_load_opt(extra, "pi_l", named["pi_l"], cfg.lr_policy, cfg),
        opt_nu=_load_opt(extra, "nu", named["nu"], cfg.lr_critic, cfg),
        opt_psi=_load_opt(extra, "psi", named["psi"], cfg.lr_disc, cfg),
    )
    result = TrainResult(nets=nets, config=cfg, iteration=int(extra["iteration"]))
    scheme = str(extra["label_scheme"]) or None
    return Checkpoint(result=result, spec=spec, label_scheme=scheme,
                      algorithm=str(extra["algorithm"]))


def _load_opt(extra, name, net, lr, cfg) -> AdamState:
    st = AdamState.for_net(net, lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps)
    st.step = int(extra[f"opt_{name}_step"])
    st.m = [extra[f"opt_{name}_m{i}"] for i in range(len(st.m))]
    st.v = [extra[f"opt_{name}_v{i}"] for i in range(len(st.v))]
    return st
