"""Trajectory records, dataset files, and transition-batch sampling.

A dataset is a pair of trajectory pools: expert demonstrations and imperfect
demonstrations (noisy expert + random). The offline pool is their union.
Option labels on a trajectory are either human/scripted annotations
(immutable) or decoder output (rewritable between training phases).

File format: line-delimited JSON. One header object
{format_version, task_spec, label_scheme}, then one object per trajectory
{provenance, goal, states, actions, options, option_source}. Numbers are
decimal text; float64 values round-trip exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .env import (
    GridPnP,
    TaskSpec,
    noisy_expert_action,
    random_action,
    scheme_label,
    scripted_expert,
)
from .errors import ConfigError, DataError, ImmutabilityError, StalenessError

FORMAT_VERSION = 1

PROVENANCES = ("expert", "noisy", "random")
OPTION_SOURCES = ("annotated", "decoded", "absent")


@dataclass
class Trajectory:
    """One demonstration: featurized states, actions, optional options."""

    goal: np.ndarray  # goal features, shape (goal_dim,)
    states: np.ndarray  # shape (T+1, state_dim)
    actions: np.ndarray  # shape (T,), ints in [0, 6)
    provenance: str
    options: np.ndarray | None = None  # shape (T,) when present
    option_source: str = "absent"

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=np.float64)
        self.actions = np.asarray(self.actions, dtype=np.int64)
        if self.options is not None:
            self.options = np.asarray(self.options, dtype=np.int64)
        if self.provenance not in PROVENANCES:
            raise DataError(f"unknown provenance {self.provenance!r}")
        if self.option_source not in OPTION_SOURCES:
            raise DataError(f"unknown option_source {self.option_source!r}")
        if len(self.states) != len(self.actions) + 1:
            raise DataError("need len(states) == len(actions) + 1")
        if (self.options is None) != (self.option_source == "absent"):
            raise DataError("options and option_source disagree")
        if self.options is not None:
            if len(self.options) != len(self.actions):
                raise DataError("options length must match actions")
            if self.options.size and self.options.min() < 0:
                raise DataError("negative option label")

    def __len__(self) -> int:
        return len(self.actions)


@dataclass
class Dataset:
    """Expert pool, imperfect pool, and their union ("offline")."""

    spec: TaskSpec
    expert: list[Trajectory]
    imperfect: list[Trajectory]
    label_scheme: str | None = None
    label_version: int = field(default=0, compare=False)

    @property
    def offline(self) -> list[Trajectory]:
        return self.expert + self.imperfect

    def trajectories(self, which: str) -> list[Trajectory]:
        if which == "expert":
            return self.expert
        if which == "offline":
            return self.offline
        raise ConfigError(f"unknown source {which!r} (expert|offline)")

    @property
    def has_annotations(self) -> bool:
        return any(t.option_source == "annotated" for t in self.offline)

    def max_label(self) -> int:
        labels = [int(t.options.max()) for t in self.offline
                  if t.options is not None and t.options.size]
        return max(labels) if labels else -1


@dataclass
class TransitionBatch:
    """Sampled (c_prev, s, c, a, s', g) rows plus initial-state rows.

    c_prev uses K as the start-of-trajectory sentinel, so valid values live
    in [0, K]; c is a real option in [0, K). done marks transitions whose
    successor is a success (absorbing) state. For option-free consumers the
    option columns are zero-filled placeholders.
    """

    c_prev: np.ndarray
    s: np.ndarray
    c: np.ndarray
    a: np.ndarray
    s_next: np.ndarray
    g: np.ndarray
    s0: np.ndarray  # initial-state sub-batch
    g0: np.ndarray
    done: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.a)


class DatasetIndex:
    """Flat transition arrays over one dataset for vectorized batch sampling.

    Static columns (states, actions, goals) are gathered once; option
    columns re-sync lazily whenever the dataset's label_version moves, so
    label rewrites between training phases are visible to later samples.
    """

    def __init__(self, dataset: Dataset, sentinel: int | None = None):
        self.dataset = dataset
        self.sentinel = sentinel
        offline = dataset.offline
        if not offline:
            raise DataError("dataset has no trajectories")
        self._offline = offline
        sdim = offline[0].states.shape[1]
        gdim = offline[0].goal.shape[0]
        self._s = np.concatenate([t.states[:-1] for t in offline])
        self._s_next = np.concatenate([t.states[1:] for t in offline])
        self._a = np.concatenate([t.actions for t in offline])
        # Success is absorbing: flag transitions into all-objects-placed states.
        placed_cols = [5 + 4 * i for i in range(dataset.spec.n_objects)]
        self._done = (self._s_next[:, placed_cols] > 0.5).all(axis=1).astype(float)
        self._g = np.concatenate(
            [np.broadcast_to(t.goal, (len(t), gdim)) for t in offline]
        )
        self._traj_id = np.concatenate(
            [np.full(len(t), j, dtype=np.int64) for j, t in enumerate(offline)]
        )
        lengths = np.array([len(t) for t in offline], dtype=np.int64)
        ends = np.cumsum(lengths)
        self._slices = [slice(int(e - n), int(e)) for n, e in zip(lengths, ends)]
        self._s0 = np.stack([t.states[0] for t in offline])
        self._g0 = np.stack([t.goal for t in offline])
        n_e = len(dataset.expert)
        self._rows = {
            "expert": np.arange(int(ends[n_e - 1]) if n_e else 0, dtype=np.int64),
            "offline": np.arange(int(ends[-1]), dtype=np.int64),
        }
        self._starts = {
            "expert": np.arange(n_e, dtype=np.int64),
            "offline": np.arange(len(offline), dtype=np.int64),
        }
        self._c = np.full(int(ends[-1]), -1, dtype=np.int64)
        self._c_prev = np.full(int(ends[-1]), -1, dtype=np.int64)
        self._synced_version = -1
        self._sync_options()

    def _sync_options(self) -> None:
        if self._synced_version == self.dataset.label_version:
            return
        sentinel = -1 if self.sentinel is None else self.sentinel
        for j, traj in enumerate(self._offline):
            if traj.options is None:
                self._c[self._slices[j]] = -1
                self._c_prev[self._slices[j]] = -1
            else:
                self._c[self._slices[j]] = traj.options
                prev = self._c_prev[self._slices[j]]
                prev[0] = sentinel
                prev[1:] = traj.options[:-1]
        self._synced_version = self.dataset.label_version

    def n_transitions(self, which: str) -> int:
        return len(self._rows[which])

    def sample(self, which: str, batch_size: int, rng: np.random.Generator,
               require_options: bool = True) -> TransitionBatch:
        """Uniform over transitions of the source, with an equally sized
        uniform sub-batch of trajectory starts."""
        rows = self._rows.get(which)
        if rows is None:
            raise ConfigError(f"unknown source {which!r} (expert|offline)")
        if len(rows) == 0:
            raise DataError(f"cannot sample from empty source {which!r}")
        if batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        self._sync_options()
        if require_options:
            if self.sentinel is None:
                raise ConfigError("option sampling needs a sentinel (K)")
            pool = self.dataset.expert if which == "expert" else self._offline
            for traj in pool:
                if traj.options is None:
                    raise StalenessError(
                        f"{which} pool contains unlabeled trajectories; "
                        "segment before sampling"
                    )
        ids = rows[rng.integers(0, len(rows), size=batch_size)]
        start_ids = self._starts[which][
            rng.integers(0, len(self._starts[which]), size=batch_size)
        ]
        zeros = np.zeros(batch_size, dtype=np.int64)
        return TransitionBatch(
            c_prev=self._c_prev[ids] if require_options else zeros,
            s=self._s[ids],
            c=self._c[ids] if require_options else zeros.copy(),
            a=self._a[ids],
            s_next=self._s_next[ids],
            g=self._g[ids],
            s0=self._s0[start_ids],
            g0=self._g0[start_ids],
            done=self._done[ids],
        )


def set_decoded_labels(dataset: Dataset, traj_index: int, labels) -> None:
    """Replace a trajectory's option labels with decoder output."""
    traj = dataset.offline[traj_index]
    if traj.option_source == "annotated":
        raise ImmutabilityError(
            f"trajectory {traj_index} carries annotations; refusing to overwrite"
        )
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape != (len(traj),):
        raise DataError(
            f"labels have shape {labels.shape}, expected ({len(traj)},)"
        )
    if labels.size and labels.min() < 0:
        raise DataError("negative option label")
    traj.options = labels
    traj.option_source = "decoded"
    dataset.label_version += 1


# -- generation ----------------------------------------------------------------


def generate_dataset(spec: TaskSpec, n_expert: int, n_noisy: int, n_random: int,
                     epsilon: float, seed: int, annotate: str = "none",
                     scheme: str | None = None) -> Dataset:
    """Roll out scripted policies into a Dataset.

    Episodes end at task success (all objects placed) or at the horizon, so
    demonstrations carry no idle tail. annotate="expert_only" attaches the
    expert's ground-truth sub-task labels (under `scheme`) to expert
    trajectories; imperfect trajectories are never annotated. The
    trajectories themselves do not depend on `annotate`.
    """
    spec = spec.validate()
    if annotate not in ("none", "expert_only"):
        raise ConfigError(f"annotate must be none|expert_only, got {annotate!r}")
    if annotate == "expert_only" and scheme is None:
        raise ConfigError("annotate=expert_only requires a label scheme")
    if min(n_expert, n_noisy, n_random) < 0:
        raise ConfigError("demo counts must be >= 0")
    env = GridPnP(spec)
    expert: list[Trajectory] = []
    imperfect: list[Trajectory] = []
    kinds = (["expert"] * n_expert + ["noisy"] * n_noisy + ["random"] * n_random)
    for j, kind in enumerate(kinds):
        state, goal = env.reset(episode_seed=_mix(seed, j, 0))
        rng = np.random.default_rng([seed, j, 1])
        s_feat, g_feat = env.featurize(state, goal)
        states = [s_feat]
        actions = []
        labels = []
        for _ in range(spec.horizon):
            if kind == "expert":
                action, (phase, obj) = scripted_expert(env, state, goal)
            elif kind == "noisy":
                action = noisy_expert_action(env, state, goal, epsilon, rng)
                phase, obj = None, None
            else:
                action = random_action(rng)
                phase, obj = None, None
            if kind == "expert" and scheme is not None:
                labels.append(scheme_label(scheme, phase, obj))
            state, _ = env.step(state, goal, action)
            actions.append(action)
            states.append(env.featurize(state, goal)[0])
            if all(state.placed):
                break
        annotated = kind == "expert" and annotate == "expert_only"
        traj = Trajectory(
            goal=g_feat,
            states=np.asarray(states),
            actions=np.asarray(actions, dtype=np.int64),
            provenance=kind,
            options=np.asarray(labels, dtype=np.int64) if annotated else None,
            option_source="annotated" if annotated else "absent",
        )
        (expert if kind == "expert" else imperfect).append(traj)
    return Dataset(
        spec=spec,
        expert=expert,
        imperfect=imperfect,
        label_scheme=scheme if annotate == "expert_only" else None,
    )


def _mix(seed: int, j: int, tag: int) -> int:
    """Stable per-trajectory episode seed."""
    return int(np.random.default_rng([seed, j, tag, 7]).integers(2**62))


# -- file I/O -------------------------------------------------------------------


def save_dataset(path, dataset: Dataset) -> None:
    header = {
        "format_version": FORMAT_VERSION,
        "task_spec": dataset.spec.to_dict(),
        "label_scheme": dataset.label_scheme,
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for traj in dataset.offline:
            row = {
                "provenance": traj.provenance,
                "goal": traj.goal.tolist(),
                "states": traj.states.tolist(),
                "actions": traj.actions.tolist(),
                "options": None if traj.options is None else traj.options.tolist(),
                "option_source": traj.option_source,
            }
            fh.write(json.dumps(row, sort_keys=True) + "\n")


def load_dataset(path) -> Dataset:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise DataError(f"cannot read dataset: {exc}") from exc
    if not lines:
        raise DataError(f"{path}: empty dataset file")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: bad header: {exc}") from exc
    version = header.get("format_version")
    if version != FORMAT_VERSION:
        raise DataError(
            f"{path}: format version {version!r}, expected {FORMAT_VERSION}"
        )
    try:
        spec = TaskSpec.from_dict(header["task_spec"])
    except (KeyError, TypeError, ConfigError) as exc:
        raise DataError(f"{path}: bad task_spec in header: {exc}") from exc
    expert: list[Trajectory] = []
    imperfect: list[Trajectory] = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
            traj = Trajectory(
                goal=np.asarray(row["goal"], dtype=np.float64),
                states=np.asarray(row["states"], dtype=np.float64),
                actions=np.asarray(row["actions"], dtype=np.int64),
                provenance=row["provenance"],
                options=None if row["options"] is None
                else np.asarray(row["options"], dtype=np.int64),
                option_source=row["option_source"],
            )
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise DataError(f"{path}:{lineno}: bad trajectory: {exc}") from exc
        (expert if traj.provenance == "expert" else imperfect).append(traj)
    return Dataset(
        spec=spec,
        expert=expert,
        imperfect=imperfect,
        label_scheme=header.get("label_scheme"),
    )
