from .agent import DdpgAgent, DdpgConfig, OuNoise, ReplayMemory, soft_update
from .checkpoint import load_checkpoint, save_checkpoint
from .mlp import Adam, Mlp
from .train import EpisodeMetrics, run_episode, train

__all__ = ["DdpgAgent", "DdpgConfig", "OuNoise", "ReplayMemory", "soft_update",
           "load_checkpoint", "save_checkpoint", "Adam", "Mlp", "EpisodeMetrics",
           "run_episode", "train"]
