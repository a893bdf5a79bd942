"""Shared builders for test chains, rotations, and test-side oracles."""

from __future__ import annotations

import numpy as np

from real2sim.bench import arm_6dof, fk_path_actions  # noqa: F401  (re-export)
from real2sim.chain import ChainSpec, JointSpec
from real2sim.geometry import Pose, Rot3, UnitQuat, quat_to_rot


def random_rotation(rng: np.random.Generator) -> Rot3:
    v = rng.normal(size=4)
    v /= np.linalg.norm(v)
    return quat_to_rot(UnitQuat(*v))


def planar_2link(l1: float = 1.0, l2: float = 1.0) -> ChainSpec:
    z = np.array([0.0, 0.0, 1.0])
    return ChainSpec(
        (
            JointSpec("j1", "revolute", Pose.identity(), z, -2 * np.pi, 2 * np.pi),
            JointSpec("j2", "revolute", Pose.from_translation(l1, 0, 0), z, -2 * np.pi, 2 * np.pi),
        ),
        ee_offset=Pose.from_translation(l2, 0, 0),
    )


def planar_3link() -> ChainSpec:
    z = np.array([0.0, 0.0, 1.0])
    joints = [JointSpec("j1", "revolute", Pose.identity(), z, -np.pi, np.pi)]
    for i in (2, 3):
        joints.append(
            JointSpec(f"j{i}", "revolute", Pose.from_translation(0.5, 0, 0), z, -np.pi, np.pi)
        )
    return ChainSpec(tuple(joints), ee_offset=Pose.from_translation(0.4, 0, 0))


def random_serial_chain(rng: np.random.Generator, n: int) -> ChainSpec:
    """Random revolute chain with unit-ish links and non-degenerate axes."""
    joints = []
    for i in range(n):
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        origin = Pose(
            random_rotation(rng) if i else Rot3(np.eye(3)),
            np.array([rng.uniform(0.2, 0.5), rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1)]),
        )
        joints.append(JointSpec(f"j{i}", "revolute", origin, axis, -np.pi, np.pi))
    return ChainSpec(tuple(joints), ee_offset=Pose.from_translation(0.1, 0, 0))


def integrate_profile(prof, dt=1e-4):
    """Independent check of a planned profile: trapezoid cumulative
    integration of its jerk segments on a dense grid."""
    q, v, a = prof.q0, prof.v0, 0.0
    for seg_t, seg_j in zip(prof.durations, prof.jerks):
        m = max(2, int(np.ceil(seg_t / dt)) + 1)
        ts = np.linspace(0.0, seg_t, m)
        aa = a + seg_j * ts
        vv = v + np.concatenate([[0], np.cumsum(0.5 * (aa[1:] + aa[:-1]) * np.diff(ts))])
        qq = q + np.concatenate([[0], np.cumsum(0.5 * (vv[1:] + vv[:-1]) * np.diff(ts))])
        q, v, a = qq[-1], vv[-1], aa[-1]
    return q, v, a


def reference_ranks(values):
    """Average-fractional ranks by explicit grouping (test-side oracle)."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def reference_kruskal_h(a, b):
    """Textbook tie-corrected two-group H, written independently."""
    pooled = list(a) + list(b)
    ranks = reference_ranks(pooled)
    n = len(pooled)
    na, nb = len(a), len(b)
    ra = sum(ranks[:na]) / na
    rb = sum(ranks[na:]) / nb
    grand = (n + 1) / 2
    h = 12.0 / (n * (n + 1)) * (na * (ra - grand) ** 2 + nb * (rb - grand) ** 2)
    ties: dict = {}
    for v in pooled:
        ties[v] = ties.get(v, 0) + 1
    corr = 1.0 - sum(t**3 - t for t in ties.values()) / (n**3 - n)
    if corr <= 0:
        return 0.0
    return h / corr


def permutation_midp(a, b, h_obs, n_resamples=100_000, seed=7):
    """Label-permutation p for the two-group H, mid-p tie convention.

    Shuffling binary labels only changes the ones-count in group a, so that
    count is sampled directly (hypergeometric). Ties at the observed
    statistic get half weight, which is the smoothed lattice tail the
    chi-square value approximates.
    """
    rng = np.random.default_rng(seed)
    ones = int(np.sum(a) + np.sum(b))
    zeros = len(a) + len(b) - ones
    if ones == 0 or zeros == 0:
        return 1.0
    ks = rng.hypergeometric(ones, zeros, len(a), size=n_resamples)
    uniq, counts = np.unique(ks, return_counts=True)
    above = equal = 0
    for k, c in zip(uniq, counts):
        aa = [1] * int(k) + [0] * (len(a) - int(k))
        bb = [1] * (ones - int(k)) + [0] * (zeros - (len(a) - int(k)))
        hv = reference_kruskal_h(aa, bb)
        if hv > h_obs + 1e-12:
            above += int(c)
        elif hv >= h_obs - 1e-12:
            equal += int(c)
    return (above + 0.5 * equal) / n_resamples
