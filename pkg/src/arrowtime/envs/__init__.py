"""Environment registry and configuration."""

from __future__ import annotations

from dataclasses import dataclass, field

from .augment import CAUSAL_CLOCK, TV_NOISE, AugmentedState, NoiseAugmented, noise_channel
from .control import MountainCar, OuWalker, Pendulum, elliptic_potential, wrap_angle
from .grids import (DOWN, LEFT, RIGHT, UP, SokobanLite, SokobanState, TomatoState,
                    TomatoWorld, VaseState, VaseWorld)

ENV_KINDS = ("vases", "tomato", "sokoban", "mountaincar", "pendulum", "ou")


@dataclass
class EnvConfig:
    """Environment selector plus the physical constants, at their paper defaults."""

    kind: str = "vases"
    size: int = 7                 # vase/tomato grid side
    vase_density: float = 0.5
    tomato_decay: float = 0.02
    sokoban_size: int = 10
    sokoban_boxes: int = 3
    sokoban_wall_density: float = 0.1
    mc_zeta: float = 0.0015
    mc_alpha: float = 0.1         # 0 disables friction
    pend_g: float = 10.0
    pend_m: float = 1.0
    pend_l: float = 1.0
    pend_alpha: float = 0.1
    ou_noise: float = 0.3
    ou_start_mean: tuple = (3.0, 3.0)
    ou_start_std: float = 1.0
    augment: str | None = None    # None | "tv" | "clock", grid worlds only
    episode_len: int = 128        # clock denominator for the causal augmentation
    seed: int = 0


def make_env(config: EnvConfig):
    kind = config.kind
    if kind == "vases":
        env = VaseWorld(size=config.size, vase_density=config.vase_density)
    elif kind == "tomato":
        env = TomatoWorld(size=config.size, decay=config.tomato_decay)
    elif kind == "sokoban":
        env = SokobanLite(size=config.sokoban_size, boxes=config.sokoban_boxes,
                          wall_density=config.sokoban_wall_density)
    elif kind == "mountaincar":
        env = MountainCar(zeta=config.mc_zeta, alpha=config.mc_alpha)
    elif kind == "pendulum":
        env = Pendulum(g=config.pend_g, m=config.pend_m, length=config.pend_l,
                       alpha=config.pend_alpha)
    elif kind == "ou":
        env = OuWalker(noise=config.ou_noise, start_mean=config.ou_start_mean,
                       start_std=config.ou_start_std)
    else:
        raise ValueError(f"unknown environment kind {kind!r}")
    if config.augment:
        if kind not in ("vases", "tomato", "sokoban"):
            raise ValueError("noise augmentation applies to grid worlds only")
        env = NoiseAugmented(env, config.augment, config.episode_len)
    return env
