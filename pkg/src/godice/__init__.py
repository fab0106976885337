"""Offline hierarchical imitation learning on grid pick-and-place tasks.

Goal-conditioned, option-aware stationary-distribution matching with a
scripted-demonstration laboratory: environments, dataset tooling, the
training algorithm, baselines, and an experiment CLI.
"""

from ._kernels import backend_name
from .algo import TrainConfig, train
from .data import Dataset, Trajectory, generate_dataset, load_dataset, save_dataset
from .env import GridPnP, TaskSpec
from .nets import MLP

__version__ = "0.1.0"

__all__ = [
    "MLP",
    "Dataset",
    "GridPnP",
    "TaskSpec",
    "TrainConfig",
    "Trajectory",
    "backend_name",
    "generate_dataset",
    "load_dataset",
    "save_dataset",
    "train",
    "__version__",
]
