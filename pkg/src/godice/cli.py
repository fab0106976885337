"""Experiment command line.

Verbs: generate, train, eval, segment, transfer. Configuration lives in an
INI file with sections [task], [data], [train], [eval]; every training
hyperparameter has a default. Exit codes: 0 success, 2 configuration error,
3 data error, 4 runtime error.
"""

from __future__ import annotations

import argparse
import configparser
import itertools
import sys
from pathlib import Path

import numpy as np

from . import algo, baselines, data as dstore
from .env import SCHEMES, GridPnP, TaskSpec, scheme_n_options
from .errors import ConfigError, DataError, GodiceError, SchemeError
from .rollout import HierarchicalActor, TransferActor, evaluate

ALGORITHMS = ("godice", "godice_semi", "g_demodice", "bc")


# -- config files ---------------------------------------------------------------


def _read_ini(path) -> configparser.ConfigParser:
    parser = configparser.ConfigParser()
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"bad config file: {exc}") from exc
    known = {"task", "data", "train", "eval"}
    unknown = set(parser.sections()) - known
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    return parser


class _Section:
    """Typed accessors over one INI section with unknown-key detection."""

    def __init__(self, parser: configparser.ConfigParser, name: str):
        self.name = name
        self.raw = dict(parser[name]) if parser.has_section(name) else {}
        self.seen: set[str] = set()

    def _get(self, key, default):
        self.seen.add(key)
        return self.raw.get(key, default)

    def get_int(self, key, default=None):
        val = self._get(key, default)
        if val is None:
            return None
        try:
            return int(str(val))
        except ValueError as exc:
            raise ConfigError(f"[{self.name}] {key}={val!r}: not an integer") from exc

    def get_float(self, key, default=None):
        val = self._get(key, default)
        if val is None:
            return None
        try:
            return float(str(val))
        except ValueError as exc:
            raise ConfigError(f"[{self.name}] {key}={val!r}: not a number") from exc

    def get_str(self, key, default=None):
        val = self._get(key, default)
        return None if val is None else str(val)

    def finish(self):
        extra = set(self.raw) - self.seen
        if extra:
            raise ConfigError(f"unknown keys in [{self.name}]: {sorted(extra)}")


def parse_task(parser) -> TaskSpec:
    sec = _Section(parser, "task")
    spec = TaskSpec(
        grid_width=sec.get_int("grid_width", 8),
        grid_height=sec.get_int("grid_height", 8),
        n_objects=sec.get_int("n_objects", 1),
        horizon=sec.get_int("horizon", None),
        seed=sec.get_int("seed", 0),
    )
    sec.finish()
    return spec.validate()


def parse_data(parser) -> dict:
    sec = _Section(parser, "data")
    out = {
        "n_expert": sec.get_int("n_expert", 25),
        "n_noisy": sec.get_int("n_noisy", 50),
        "n_random": sec.get_int("n_random", 25),
        "epsilon": sec.get_float("epsilon", 0.2),
        "annotate": sec.get_str("annotate", "none"),
        "scheme": sec.get_str("scheme", None),
        "seed": sec.get_int("seed", 1),
    }
    sec.finish()
    if out["annotate"] not in ("none", "expert_only"):
        raise ConfigError(f"[data] annotate={out['annotate']!r}")
    if out["scheme"] is not None and out["scheme"] not in SCHEMES:
        raise ConfigError(f"[data] scheme={out['scheme']!r}, pick from {SCHEMES}")
    return out


def parse_train(parser, seed_override=None):
    sec = _Section(parser, "train")
    algorithm = sec.get_str("algorithm", "godice")
    if algorithm not in ALGORITHMS:
        raise ConfigError(f"[train] algorithm={algorithm!r}, pick from {ALGORITHMS}")
    ev = _Section(parser, "eval")
    eval_kw = {
        "eval_episodes": ev.get_int("episodes", 10),
        "eval_interval": ev.get_int("interval", 100),
        "eval_seed": ev.get_int("seed", 9999),
    }
    ev.finish()
    hidden_txt = sec.get_str("hidden", "64,64")
    try:
        hidden = tuple(int(t) for t in hidden_txt.split(",") if t.strip())
    except ValueError as exc:
        raise ConfigError(f"[train] hidden={hidden_txt!r}") from exc
    seed = sec.get_int("seed", 0) if seed_override is None else seed_override
    if algorithm == "bc":
        cfg = baselines.BCConfig(
            beta=sec.get_float("beta", 0.0),
            lr=sec.get_float("lr_policy", 3e-3),
            iterations=sec.get_int("n", 10000),
            batch_size=sec.get_int("batch_size", None),
            hidden=hidden,
            seed=seed,
            **eval_kw,
        ).validate()
        sec.finish()
        return algorithm, cfg
    k_raw = sec.get_int("k", None)
    if algorithm == "g_demodice":
        if k_raw is not None and k_raw != 1:
            raise ConfigError("[train] the single-option baseline fixes K=1")
        k = 1
    else:
        if k_raw is None:
            raise ConfigError(f"[train] algorithm={algorithm} requires K")
        k = k_raw
    cfg = algo.TrainConfig(
        K=k,
        alpha=sec.get_float("alpha", 0.05),
        gamma=sec.get_float("gamma", 0.99),
        lam=sec.get_float("lam", 0.95),
        M=sec.get_int("m", 20),
        N=sec.get_int("n", 10000),
        lr_critic=sec.get_float("lr_critic", 3e-4),
        lr_disc=sec.get_float("lr_disc", 3e-4),
        lr_policy=sec.get_float("lr_policy", 3e-3),
        batch_size=sec.get_int("batch_size", None),
        gp_disc=sec.get_float("gp_disc", 10.0),
        gp_critic=sec.get_float("gp_critic", 1e-4),
        r_clip=sec.get_float("r_clip", 10.0),
        hidden=hidden,
        mode="semi" if algorithm == "godice_semi" else "unsupervised",
        seed=seed,
        **eval_kw,
    ).validate()
    sec.finish()
    return algorithm, cfg


# -- metrics CSV ------------------------------------------------------------------


def metrics_path(out_path) -> Path:
    return Path(out_path).with_suffix(".metrics.csv")


def metrics_header(n_options: int) -> str:
    cols = [
        "iteration",
        "mean_return",
        "std_return",
        "disc_loss",
        "critic_loss",
        "policy_loss",
        "segmentation_accuracy",
    ] + [f"occ_{i}" for i in range(n_options)]
    return ",".join(cols)


def format_row(row: algo.MetricsRow) -> str:
    def fmt(v):
        return "" if v is None else repr(float(v))

    cells = [
        str(row.iteration),
        fmt(row.mean_return),
        fmt(row.std_return),
        fmt(row.disc_loss),
        fmt(row.critic_loss),
        fmt(row.policy_loss),
        fmt(row.segmentation_accuracy),
    ] + [fmt(v) for v in row.occupancy]
    return ",".join(cells)


class MetricsWriter:
    """Append-only CSV sink; writes the header only on a fresh file."""

    def __init__(self, path, n_options: int, fresh: bool):
        self.path = Path(path)
        if fresh or not self.path.exists():
            self.path.write_text(metrics_header(n_options) + "\n")

    def __call__(self, row: algo.MetricsRow) -> None:
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(format_row(row) + "\n")
        print(f"  iter {row.iteration}: return {row.mean_return:.3f} "
              f"+- {row.std_return:.3f}")


# -- commands ----------------------------------------------------------------------


def cmd_generate(args) -> int:
    parser = _read_ini(args.config)
    spec = parse_task(parser)
    d = parse_data(parser)
    if args.seed is not None:
        d["seed"] = args.seed
    dataset = dstore.generate_dataset(
        spec,
        n_expert=d["n_expert"],
        n_noisy=d["n_noisy"],
        n_random=d["n_random"],
        epsilon=d["epsilon"],
        seed=d["seed"],
        annotate=d["annotate"],
        scheme=d["scheme"],
    )
    dstore.save_dataset(args.out, dataset)
    print(
        f"wrote {args.out}: {len(dataset.expert)} expert + "
        f"{len(dataset.imperfect)} imperfect trajectories "
        f"({spec.grid_width}x{spec.grid_height}, {spec.n_objects} objects, "
        f"horizon {spec.horizon})"
    )
    return 0


def cmd_train(args) -> int:
    parser = _read_ini(args.config)
    spec = parse_task(parser)
    algorithm, cfg = parse_train(parser, seed_override=args.seed)
    dataset = dstore.load_dataset(args.dataset)
    if dataset.spec != spec:
        raise ConfigError(
            "config [task] does not match the dataset's task "
            f"({spec.to_dict()} vs {dataset.spec.to_dict()})"
        )
    out = Path(args.out)
    if algorithm == "bc":
        writer = MetricsWriter(metrics_path(out), 0, fresh=True)
        pi, metrics = baselines.train_bc(cfg, dataset, on_metrics=writer)
        baselines.save_bc_checkpoint(out, pi, cfg, spec, cfg.iterations)
        print(f"checkpoint: {out}")
        return 0
    resume = None
    if args.checkpoint:
        ck = algo.load_checkpoint(args.checkpoint)
        if ck.spec != spec:
            raise ConfigError("resume checkpoint was trained on a different task")
        resume = ck.result
    writer = MetricsWriter(metrics_path(out), cfg.K, fresh=resume is None)
    if algorithm == "g_demodice":
        result = baselines.g_demodice(cfg, dataset, on_metrics=writer)
    else:
        result = algo.train(cfg, dataset, resume=resume, on_metrics=writer)
    algo.save_checkpoint(out, result, spec, dataset.label_scheme, algorithm)
    print(f"checkpoint: {out}")
    return 0


def _load_any_checkpoint(path):
    """(kind, payload): a training bundle or a flat BC policy."""
    try:
        ck = algo.load_checkpoint(path)
        return "godice", ck
    except DataError:
        pi, cfg, spec, iteration = baselines.load_bc_checkpoint(path)
        return "bc", (pi, cfg, spec, iteration)


def cmd_eval(args) -> int:
    if args.episodes is not None and args.episodes < 1:
        raise ConfigError("--episodes must be >= 1")
    kind, payload = _load_any_checkpoint(args.checkpoint)
    if kind == "godice":
        ck = payload
        cfg = ck.result.config
        env = GridPnP(ck.spec)
        actor = ck.result.nets.actor()
        episodes = args.episodes or cfg.eval_episodes
        seed = args.seed if args.seed is not None else cfg.eval_seed
        res = evaluate(env, actor, episodes, seed)
        print(f"algorithm: {ck.algorithm} (iteration {ck.result.iteration})")
    else:
        pi, cfg, spec, iteration = payload
        env = GridPnP(spec)
        from .rollout import FlatActor

        episodes = args.episodes or cfg.eval_episodes
        seed = args.seed if args.seed is not None else cfg.eval_seed
        res = evaluate(env, FlatActor(pi), episodes, seed)
        print(f"algorithm: bc (iteration {iteration})")
    print(f"episodes: {episodes} (seed {seed})")
    print(f"mean return: {res.mean_return:.4f} +- {res.std_return:.4f} "
          f"(max {2 * env.spec.n_objects})")
    if res.option_fractions is not None:
        print("option occupancy (fraction of steps, mean +- std):")
        mean = res.option_fractions.mean(axis=0)
        std = res.option_fractions.std(axis=0)
        for c in range(res.option_fractions.shape[1]):
            if res.option_steps[c] == 0:
                print(f"  option {c}: -")
            else:
                print(f"  option {c}: {mean[c]:.3f} +- {std[c]:.3f}")
    return 0


def perm_matched_accuracy(pairs: list[tuple[np.ndarray, np.ndarray]],
                          n_decoded: int, n_true: int) -> float:
    """Per-step accuracy maximized over injective decoded->true relabelings."""
    counts = np.zeros((n_decoded, n_true), dtype=np.int64)
    total = 0
    for decoded, true in pairs:
        for d, t in zip(decoded, true):
            counts[d, t] += 1
        total += len(decoded)
    if total == 0:
        return 0.0
    size = max(n_decoded, n_true)
    square = np.zeros((size, size), dtype=np.int64)
    square[:n_decoded, :n_true] = counts
    best = max(
        sum(square[i, p[i]] for i in range(size))
        for p in itertools.permutations(range(size))
    )
    return best / total


def cmd_segment(args) -> int:
    ck = algo.load_checkpoint(args.checkpoint)
    dataset = dstore.load_dataset(args.dataset)
    cfg = ck.result.config
    if dataset.spec != ck.spec:
        raise ConfigError("dataset and checkpoint use different tasks")
    nets = ck.result.nets
    decoded_pairs = []
    out_expert, out_imperfect = [], []
    for traj in dataset.offline:
        labels, _ = algo.viterbi_segment(traj.states, traj.actions, traj.goal,
                                         nets.pi_h_t, nets.pi_l_t, cfg.K)
        if traj.option_source == "annotated":
            decoded_pairs.append((labels, traj.options))
        copy = dstore.Trajectory(
            goal=traj.goal,
            states=traj.states,
            actions=traj.actions,
            provenance=traj.provenance,
            options=labels,
            option_source="decoded",
        )
        (out_expert if traj.provenance == "expert" else out_imperfect).append(copy)
    out = dstore.Dataset(spec=dataset.spec, expert=out_expert,
                         imperfect=out_imperfect, label_scheme=None)
    dstore.save_dataset(args.out, out)
    print(f"wrote {args.out}: decoded {len(out.offline)} trajectories with "
          f"K={cfg.K}")
    if decoded_pairs:
        scheme = dataset.label_scheme
        n_true = (scheme_n_options(scheme, dataset.spec.n_objects)
                  if scheme else int(max(t.max() for _, t in decoded_pairs)) + 1)
        if n_true != cfg.K:
            print(f"note: checkpoint decodes {cfg.K} options but annotations "
                  f"use {n_true} labels")
        acc = perm_matched_accuracy(decoded_pairs, cfg.K, n_true)
        print(f"segmentation accuracy vs annotations "
              f"(best relabeling): {acc:.4f}")
        if n_true == cfg.K:
            raw = float(np.mean(np.concatenate(
                [(d == t).astype(float) for d, t in decoded_pairs]
            )))
            print(f"segmentation accuracy vs annotations (identity): {raw:.4f}")
    else:
        print("no annotated trajectories: accuracy not computed")
    return 0


def cmd_transfer(args) -> int:
    if args.episodes is not None and args.episodes < 1:
        raise ConfigError("--episodes must be >= 1")
    low = algo.load_checkpoint(args.low_checkpoint)
    high = algo.load_checkpoint(args.high_checkpoint)
    if low.label_scheme != "E3" or high.label_scheme != "E3":
        raise SchemeError(
            "transfer requires checkpoints trained on E3-annotated data "
            f"(got {low.label_scheme!r} and {high.label_scheme!r})"
        )
    if low.spec.n_objects != 1 or low.result.config.K != 2:
        raise SchemeError("low checkpoint must be a one-object run with K=2")
    n = high.spec.n_objects
    if high.result.config.K != 2 * n:
        raise SchemeError(
            f"high checkpoint must use K={2 * n} options for {n} objects"
        )
    episodes = args.episodes or 10
    seed = args.seed if args.seed is not None else 9999
    env = GridPnP(high.spec)
    native = evaluate(env, high.result.nets.actor(), episodes, seed)
    actor = TransferActor(high.result.nets.pi_h, low.result.nets.pi_l, n)
    transfer = evaluate(env, actor, episodes, seed)
    print(f"episodes: {episodes} (seed {seed}), task: {n} objects")
    print(f"native policy:      {native.mean_return:.4f} +- {native.std_return:.4f}")
    print(f"transferred low head: {transfer.mean_return:.4f} "
          f"+- {transfer.std_return:.4f}")
    print(f"difference: {transfer.mean_return - native.mean_return:+.4f}")
    return 0


# -- entry point --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="godice",
        description="Offline hierarchical imitation learning on grid "
                    "pick-and-place tasks",
    )
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="roll out scripted policies to a dataset")
    g.add_argument("--config", required=True)
    g.add_argument("--out", required=True)
    g.add_argument("--seed", type=int)
    g.set_defaults(func=cmd_generate)

    t = sub.add_parser("train", help="train a policy on a dataset")
    t.add_argument("--config", required=True)
    t.add_argument("--dataset", required=True)
    t.add_argument("--out", required=True)
    t.add_argument("--checkpoint", help="resume from this checkpoint")
    t.add_argument("--seed", type=int)
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="greedy evaluation of a checkpoint")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--episodes", type=int)
    e.add_argument("--seed", type=int)
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("segment", help="decode option labels for a dataset")
    s.add_argument("--checkpoint", required=True)
    s.add_argument("--dataset", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_segment)

    tr = sub.add_parser("transfer", help="drive a one-object low-level head "
                                         "with a multi-object option head")
    tr.add_argument("--low-checkpoint", required=True)
    tr.add_argument("--high-checkpoint", required=True)
    tr.add_argument("--episodes", type=int)
    tr.add_argument("--seed", type=int)
    tr.set_defaults(func=cmd_transfer)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except (GodiceError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
