"""Synthetic benchmark fixtures: a 6-DOF arm and demonstration-like actions.

Used by the identification experiments and the test suite to build
deterministic, reachable-by-construction action sequences.
"""

from __future__ import annotations

import numpy as np

from .chain import ChainSpec, JointSpec, fk
from .controller import Action
from .geometry import Pose, Rot3, rot_x

__all__ = ["arm_6dof", "fk_path_actions"]


def arm_6dof(seed: int = 3) -> ChainSpec:
    """Anthropomorphic-ish 6R arm with slightly perturbed link frames."""
    rng = np.random.default_rng(seed)
    axes = [
        np.array([0.0, 0.0, 1.0]),
        np.array([0.0, 1.0, 0.0]),
        np.array([0.0, 1.0, 0.0]),
        np.array([1.0, 0.0, 0.0]),
        np.array([0.0, 1.0, 0.0]),
        np.array([1.0, 0.0, 0.0]),
    ]
    joints = []
    for i, ax in enumerate(axes):
        origin = Pose(rot_x(rng.uniform(-0.1, 0.1)), np.array([0.25, 0.0, 0.1]) if i else np.zeros(3))
        joints.append(JointSpec(f"j{i}", "revolute", origin, ax, -2.9, 2.9))
    return ChainSpec(tuple(joints), ee_offset=Pose.from_translation(0.1, 0, 0))


def fk_path_actions(
    chain: ChainSpec,
    q0: np.ndarray,
    n_actions: int,
    rng: np.random.Generator,
    amp: float = 0.35,
    dphase: float = 0.5,
    gripper: float = 0.0,
) -> list[Action]:
    """Pose-delta actions along a smooth joint-space sweep.

    A controller replaying these actions chains its commanded goals along
    the swept fk path, so every IK target is reachable by construction,
    like actions recorded from a demonstrator.
    """
    amps = rng.uniform(0.3, 1.0, chain.n) * amp
    freqs = rng.uniform(0.4, 2.0, chain.n)
    phases = rng.uniform(0, 2 * np.pi, chain.n)
    qs = [q0 + amps * (np.sin(freqs * k * dphase + phases) - np.sin(phases)) for k in range(n_actions + 1)]
    poses = [fk(chain, q) for q in qs]
    return [
        Action(b.pos - a.pos, Rot3(b.rot.m @ a.rot.m.T), gripper)
        for a, b in zip(poses[:-1], poses[1:])
    ]
