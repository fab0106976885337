"""Deterministic multi-object grid pick-and-place tasks.

An agent moves on a W x H grid holding at most one object. Each episode
draws distinct cells for the agent, the objects, and one goal cell per
object. Reward is sparse: +1 for the first successful pick of each object
and +1 for dropping an object onto its own goal cell. Maximum return is
2 * n_objects.

Scripted policies provide demonstrations: a deterministic expert (with
ground-truth sub-task labels under three labeling schemes), an epsilon-noisy
expert, and a uniform-random policy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

ACTIONS = ("up", "down", "left", "right", "pick", "drop")
UP, DOWN, LEFT, RIGHT, PICK, DROP = range(6)
N_ACTIONS = 6

# Sub-task labeling schemes: by primitive, by object, or by both.
SCHEMES = ("E1", "E2", "E3")
FETCH, DELIVER = 0, 1


@dataclass(frozen=True)
class TaskSpec:
    grid_width: int = 8
    grid_height: int = 8
    n_objects: int = 1
    horizon: int | None = None  # defaults to 50 * n_objects
    seed: int = 0

    def __post_init__(self):
        if self.horizon is None:
            object.__setattr__(self, "horizon", 50 * self.n_objects)

    def validate(self) -> "TaskSpec":
        if self.grid_width < 1 or self.grid_height < 1:
            raise ConfigError("grid dimensions must be positive")
        if not 1 <= self.n_objects <= 3:
            raise ConfigError("n_objects must be in 1..3")
        if self.horizon < 1:
            raise ConfigError("horizon must be >= 1")
        cells = self.grid_width * self.grid_height
        if cells < 2 * self.n_objects + 1:
            raise ConfigError(
                f"{self.grid_width}x{self.grid_height} grid cannot hold "
                f"{self.n_objects} objects, their goals and the agent"
            )
        return self

    @property
    def state_dim(self) -> int:
        return 2 + 4 * self.n_objects

    @property
    def goal_dim(self) -> int:
        return 2 * self.n_objects

    def to_dict(self) -> dict:
        return {
            "grid_width": self.grid_width,
            "grid_height": self.grid_height,
            "n_objects": self.n_objects,
            "horizon": self.horizon,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TaskSpec":
        return cls(**d).validate()


@dataclass(frozen=True)
class EnvState:
    agent: tuple[int, int]
    objects: tuple[tuple[int, int], ...]
    carried: tuple[bool, ...]
    placed: tuple[bool, ...]
    picked_once: tuple[bool, ...]  # reward bookkeeping: first pick per object
    carrying: int | None
    t: int


def scheme_n_options(scheme: str, n_objects: int) -> int:
    """Number of distinct labels the scheme produces on an n-object task."""
    if scheme == "E1":
        return 2
    if scheme == "E2":
        return n_objects
    if scheme == "E3":
        return 2 * n_objects
    raise ConfigError(f"unknown label scheme {scheme!r}")


def scheme_label(scheme: str, phase: int, obj: int) -> int:
    """Map a (primitive, object) sub-task to the scheme's label index."""
    if scheme == "E1":
        return phase
    if scheme == "E2":
        return obj
    if scheme == "E3":
        return 2 * obj + phase
    raise ConfigError(f"unknown label scheme {scheme!r}")


class GridPnP:
    """Environment object bundling a validated TaskSpec with the dynamics."""

    def __init__(self, spec: TaskSpec):
        self.spec = spec.validate()

    # -- episode setup -------------------------------------------------------

    def reset(self, episode_seed: int) -> tuple[EnvState, np.ndarray]:
        """Draw distinct cells for agent, objects and goals.

        Deterministic in (spec, episode_seed). Returns (state, goal) where
        goal holds one (x, y) cell per object, flattened.
        """
        spec = self.spec
        rng = np.random.default_rng([spec.seed, int(episode_seed)])
        n = spec.n_objects
        cells = rng.choice(spec.grid_width * spec.grid_height,
                           size=2 * n + 1, replace=False)
        xy = [(int(c) % spec.grid_width, int(c) // spec.grid_width) for c in cells]
        agent = xy[0]
        objects = tuple(xy[1 : n + 1])
        goal = np.array([v for cell in xy[n + 1 :] for v in cell], dtype=np.int64)
        state = EnvState(
            agent=agent,
            objects=objects,
            carried=(False,) * n,
            placed=(False,) * n,
            picked_once=(False,) * n,
            carrying=None,
            t=0,
        )
        return state, goal

    def goal_cell(self, goal: np.ndarray, i: int) -> tuple[int, int]:
        return int(goal[2 * i]), int(goal[2 * i + 1])

    # -- dynamics ------------------------------------------------------------

    def step(self, state: EnvState, goal: np.ndarray, action: int
             ) -> tuple[EnvState, float]:
        """Pure transition; invalid pick/drop actions are no-ops."""
        if not 0 <= action < N_ACTIONS:
            raise ConfigError(f"action {action} out of range")
        spec = self.spec
        ax, ay = state.agent
        objects = list(state.objects)
        carried = list(state.carried)
        placed = list(state.placed)
        picked_once = list(state.picked_once)
        carrying = state.carrying
        reward = 0.0

        if action == UP:
            ay = max(0, ay - 1)
        elif action == DOWN:
            ay = min(spec.grid_height - 1, ay + 1)
        elif action == LEFT:
            ax = max(0, ax - 1)
        elif action == RIGHT:
            ax = min(spec.grid_width - 1, ax + 1)
        elif action == PICK:
            if carrying is None:
                for i in range(spec.n_objects):  # lowest index on shared cell
                    if objects[i] == (ax, ay) and not placed[i] and not carried[i]:
                        carrying = i
                        carried[i] = True
                        if not picked_once[i]:
                            picked_once[i] = True
                            reward = 1.0
                        break
        elif action == DROP:
            if carrying is not None:
                i = carrying
                carried[i] = False
                carrying = None
                objects[i] = (ax, ay)
                if (ax, ay) == self.goal_cell(goal, i):
                    placed[i] = True
                    reward = 1.0

        if carrying is not None:
            objects[carrying] = (ax, ay)

        return (
            EnvState(
                agent=(ax, ay),
                objects=tuple(objects),
                carried=tuple(carried),
                placed=tuple(placed),
                picked_once=tuple(picked_once),
                carrying=carrying,
                t=state.t + 1,
            ),
            reward,
        )

    # -- featurization -------------------------------------------------------

    def featurize(self, state: EnvState, goal: np.ndarray
                  ) -> tuple[np.ndarray, np.ndarray]:
        """(state features, goal features): positions normalized to [0, 1)."""
        spec = self.spec
        w, h = float(spec.grid_width), float(spec.grid_height)
        s = np.empty(spec.state_dim)
        s[0] = state.agent[0] / w
        s[1] = state.agent[1] / h
        for i in range(spec.n_objects):
            s[2 + 4 * i] = state.objects[i][0] / w
            s[3 + 4 * i] = state.objects[i][1] / h
            s[4 + 4 * i] = 1.0 if state.carried[i] else 0.0
            s[5 + 4 * i] = 1.0 if state.placed[i] else 0.0
        g = np.empty(spec.goal_dim)
        g[0::2] = goal[0::2] / w
        g[1::2] = goal[1::2] / h
        return s, g


def _move_toward(src: tuple[int, int], dst: tuple[int, int]) -> int | None:
    """Manhattan navigation, x axis first; None when already there."""
    if src[0] < dst[0]:
        return RIGHT
    if src[0] > dst[0]:
        return LEFT
    if src[1] < dst[1]:
        return DOWN
    if src[1] > dst[1]:
        return UP
    return None


def expert_subtask(state: EnvState) -> tuple[int, int]:
    """Current (primitive, object) sub-task of the scripted expert.

    Delivering the carried object takes precedence; otherwise fetch the
    lowest-index unplaced object. With everything placed, the final
    deliver sub-task is reported.
    """
    if state.carrying is not None:
        return DELIVER, state.carrying
    unplaced = [i for i, p in enumerate(state.placed) if not p]
    if unplaced:
        return FETCH, unplaced[0]
    return DELIVER, len(state.placed) - 1


def scripted_expert(env: GridPnP, state: EnvState, goal: np.ndarray
                    ) -> tuple[int, tuple[int, int]]:
    """Deterministic expert action plus its (primitive, object) sub-task."""
    phase, obj = expert_subtask(state)
    if all(state.placed):
        return DROP, (phase, obj)  # idle no-op once the task is done
    if phase == FETCH:
        move = _move_toward(state.agent, state.objects[obj])
        return (PICK if move is None else move), (phase, obj)
    move = _move_toward(state.agent, env.goal_cell(goal, obj))
    return (DROP if move is None else move), (phase, obj)


def noisy_expert_action(env: GridPnP, state: EnvState, goal: np.ndarray,
                        epsilon: float, rng: np.random.Generator) -> int:
    """Expert action with probability 1 - epsilon, else uniform random."""
    if not 0.0 <= epsilon <= 1.0:
        raise ConfigError("epsilon must be in [0, 1]")
    if rng.random() < epsilon:
        return int(rng.integers(N_ACTIONS))
    return scripted_expert(env, state, goal)[0]


def random_action(rng: np.random.Generator) -> int:
    return int(rng.integers(N_ACTIONS))
