"""Trajectory-tracking losses and the shrinking-range annealing PD fit.

The loss compares a reference end-effector trajectory against an open-loop
replay: mean translation error norm plus mean arcsin(|dR|_F / (2 sqrt 2)).
PD gains are optimized by simulated annealing in range-normalized [0, 1]
coordinates; after each round the search range is recentered on the
incumbent best and contracted, clipped to the original bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .chain import ChainSpec, IkSettings
from .controller import CtrlConfig
from .geometry import Pose, rot_frobenius_loss
from .jointsim import (
    JointDynamics,
    JointSimError,
    PDParams,
    TrajectoryRecord,
    initial_joint_positions,
    replay_open_loop,
)

__all__ = [
    "SysIdError",
    "SysIdRange",
    "AnnealConfig",
    "TrajectoryLosses",
    "RoundStats",
    "AnnealResult",
    "trajectory_losses",
    "anneal_fit",
]


class SysIdError(ValueError):
    """Raised for malformed identification inputs."""


class TrajectoryLosses(NamedTuple):
    translation: float
    rotation: float
    total: float


def trajectory_losses(ref: Sequence[Pose], sim: Sequence[Pose]) -> TrajectoryLosses:
    """Per-step mean translation and rotation losses between two pose paths."""
    if len(ref) == 0:
        raise SysIdError("empty pose sequences")
    if len(ref) != len(sim):
        raise SysIdError(f"length mismatch: {len(ref)} reference vs {len(sim)} simulated poses")
    l_t = 0.0
    l_r = 0.0
    for a, b in zip(ref, sim):
        l_t += float(np.linalg.norm(a.pos - b.pos))
        l_r += rot_frobenius_loss(a.rot, b.rot)
    l_t /= len(ref)
    l_r /= len(ref)
    return TrajectoryLosses(l_t, l_r, l_t + l_r)


@dataclass(frozen=True, eq=False)
class SysIdRange:
    """Per-joint search bounds for stiffness and damping."""

    p_low: np.ndarray
    p_high: np.ndarray
    d_low: np.ndarray
    d_high: np.ndarray

    def __post_init__(self):
        arrays = {}
        for name in ("p_low", "p_high", "d_low", "d_high"):
            a = np.asarray(getattr(self, name), dtype=float).reshape(-1).copy()
            a.setflags(write=False)
            arrays[name] = a
            object.__setattr__(self, name, a)
        if not (arrays["p_low"].shape == arrays["p_high"].shape == arrays["d_low"].shape == arrays["d_high"].shape):
            raise SysIdError("range vectors must have equal length")
        if np.any(arrays["p_low"] < 0.0) or np.any(arrays["d_low"] < 0.0):
            raise SysIdError("range bounds must be non-negative")
        if np.any(arrays["p_low"] >= arrays["p_high"]) or np.any(arrays["d_low"] >= arrays["d_high"]):
            raise SysIdError("lower bounds must be strictly below upper bounds")

    @property
    def n(self) -> int:
        return self.p_low.shape[0]

    def lows(self) -> np.ndarray:
        return np.concatenate([self.p_low, self.d_low])

    def highs(self) -> np.ndarray:
        return np.concatenate([self.p_high, self.d_high])

    @staticmethod
    def around(pd: PDParams, factor: float) -> "SysIdRange":
        """Multiplicative bracket [x / sqrt(factor), x * sqrt(factor)]."""
        if factor <= 1.0:
            raise SysIdError("factor must exceed 1")
        s = math.sqrt(factor)
        return SysIdRange(pd.p / s, pd.p * s, pd.d / s, pd.d * s)


@dataclass(frozen=True)
class AnnealConfig:
    """Annealing schedule; ``t0=None`` arms each round at 0.1x its start loss."""

    rounds: int = 3
    iters_per_round: int = 300
    t0: float | None = None
    cooling: float = 0.985
    sigma: float = 0.1
    shrink: float = 0.5
    rng_seed: int = 0
    tie_joints: bool = False

    def __post_init__(self):
        if self.rounds < 1 or self.iters_per_round < 1:
            raise SysIdError("rounds and iters_per_round must be at least 1")
        if not 0.0 < self.cooling < 1.0:
            raise SysIdError("cooling must lie in (0, 1)")
        if not 0.0 < self.shrink < 1.0:
            raise SysIdError("shrink must lie in (0, 1)")
        if self.sigma <= 0.0 or (self.t0 is not None and self.t0 <= 0.0):
            raise SysIdError("sigma and t0 must be positive")


@dataclass(frozen=True)
class RoundStats:
    round_index: int
    best_loss: float
    best_p: np.ndarray
    best_d: np.ndarray
    evaluations: int
    lows: np.ndarray  # search bounds the round ran with (p then d)
    highs: np.ndarray


@dataclass(frozen=True)
class AnnealResult:
    best: PDParams
    best_loss: float
    initial_loss: float
    losses: TrajectoryLosses
    history: tuple[RoundStats, ...]
    evaluations: int


def _theta_to_pd(theta: np.ndarray, n: int, tied: bool) -> PDParams:
    if tied:
        return PDParams(np.full(n, theta[0]), np.full(n, theta[1]))
    return PDParams(theta[:n], theta[n:])


def normalize_params(theta: np.ndarray, lows: np.ndarray, highs: np.ndarray) -> np.ndarray:
    """Map parameters into [0, 1] range coordinates."""
    return (theta - lows) / (highs - lows)


def denormalize_params(u: np.ndarray, lows: np.ndarray, highs: np.ndarray) -> np.ndarray:
    return lows + u * (highs - lows)


def anneal_fit(
    dataset: Sequence[TrajectoryRecord],
    chain: ChainSpec,
    dyn: JointDynamics,
    controller_kind: str,
    init: PDParams,
    range0: SysIdRange,
    cfg: AnnealConfig | None = None,
    ctrl_cfg: CtrlConfig | None = None,
    ik_settings: IkSettings | None = None,
) -> AnnealResult:
    """Fit PD gains by multi-round simulated annealing of the replay loss.

    The objective is the unweighted mean of the total trajectory loss over
    the dataset. With ``tie_joints`` the search runs over two shared scalars
    mapped to each joint's bounds; otherwise every joint's gains are free.
    """
    cfg = cfg or AnnealConfig()
    if len(dataset) == 0:
        raise SysIdError("dataset must contain at least one trajectory record")
    if range0.n != chain.n or init.n != chain.n:
        raise SysIdError("init/range joint counts must match the chain")

    lows0 = range0.lows()
    highs0 = range0.highs()
    theta_init = np.concatenate([init.p, init.d])
    if np.any(theta_init < lows0 - 1e-12) or np.any(theta_init > highs0 + 1e-12):
        raise SysIdError("initial parameters fall outside the search range")

    # fix per-record initial configurations once; replay failures abort here
    q_inits = []
    for i, rec in enumerate(dataset):
        try:
            if rec.joint_positions is not None:
                q_inits.append(np.asarray(rec.joint_positions[0], dtype=float))
            else:
                q_inits.append(initial_joint_positions(chain, rec.ee_poses[0]))
        except JointSimError as exc:
            raise SysIdError(f"record {i}: {exc}") from exc

    def objective(pd: PDParams) -> float:
        total = 0.0
        for rec, q0 in zip(dataset, q_inits):
            sim = replay_open_loop(chain, dyn, pd, controller_kind, rec, q0, ctrl_cfg, ik_settings)
            total += trajectory_losses(rec.ee_poses, sim[: len(rec.ee_poses)]).total
        return total / len(dataset)

    tied = cfg.tie_joints
    dim = 2 if tied else 2 * chain.n
    rng = np.random.default_rng(cfg.rng_seed)

    if tied:
        # tied coordinates share one normalized position across joints
        def denorm(u, lows, highs):
            n = chain.n
            p = lows[:n] + u[0] * (highs[:n] - lows[:n])
            d = lows[n:] + u[1] * (highs[n:] - lows[n:])
            return PDParams(p, d)

        def norm_init(theta, lows, highs):
            scaled = (theta - lows) / (highs - lows)
            return np.array([float(np.mean(scaled[: chain.n])), float(np.mean(scaled[chain.n:]))])
    else:

        def denorm(u, lows, highs):
            return _theta_to_pd(denormalize_params(u, lows, highs), chain.n, False)

        def norm_init(theta, lows, highs):
            return normalize_params(theta, lows, highs)

    lows = lows0.copy()
    highs = highs0.copy()
    u = np.clip(norm_init(theta_init, lows, highs), 0.0, 1.0)
    current_pd = denorm(u, lows, highs)
    current_loss = objective(current_pd)
    evals = 1
    initial_loss = current_loss

    best_pd = current_pd
    best_loss = current_loss
    best_u = u.copy()

    history: list[RoundStats] = []
    for round_index in range(cfg.rounds):
        temp = cfg.t0 if cfg.t0 is not None else max(0.1 * best_loss, 1e-12)
        u = best_u.copy()
        current_loss = best_loss
        round_evals = 0
        for _ in range(cfg.iters_per_round):
            proposal = np.clip(u + rng.normal(0.0, cfg.sigma, size=dim), 0.0, 1.0)
            cand_pd = denorm(proposal, lows, highs)
            cand_loss = objective(cand_pd)
            evals += 1
            round_evals += 1
            delta = cand_loss - current_loss
            if delta <= 0.0 or rng.random() < math.exp(-delta / temp):
                u = proposal
                current_loss = cand_loss
            if cand_loss < best_loss:
                best_loss = cand_loss
                best_pd = cand_pd
                best_u = proposal.copy()
            temp *= cfg.cooling
        history.append(
            RoundStats(
                round_index, best_loss, best_pd.p.copy(), best_pd.d.copy(), round_evals,
                lows.copy(), highs.copy(),
            )
        )
        if round_index + 1 < cfg.rounds:
            # recenter on the incumbent, contract, clip to the original range
            center = np.concatenate([best_pd.p, best_pd.d])
            half_width = 0.5 * cfg.shrink * (highs - lows)
            lows = np.clip(center - half_width, lows0, highs0)
            highs = np.clip(center + half_width, lows0, highs0)
            too_narrow = highs - lows < 1e-12
            highs = np.where(too_narrow, np.minimum(lows + 1e-12, highs0), highs)
            lows = np.where(highs - lows < 1e-12, highs - 1e-12, lows)
            best_u = np.clip(norm_init(np.concatenate([best_pd.p, best_pd.d]), lows, highs), 0.0, 1.0)

    # final loss breakdown at the optimum
    sims = []
    for rec, q0 in zip(dataset, q_inits):
        sim = replay_open_loop(chain, dyn, best_pd, controller_kind, rec, q0, ctrl_cfg, ik_settings)
        sims.append(trajectory_losses(rec.ee_poses, sim[: len(rec.ee_poses)]))
    losses = TrajectoryLosses(
        float(np.mean([s.translation for s in sims])),
        float(np.mean([s.rotation for s in sims])),
        float(np.mean([s.total for s in sims])),
    )
    return AnnealResult(best_pd, best_loss, initial_loss, losses, tuple(history), evals)
