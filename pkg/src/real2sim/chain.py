"""Serial-chain robot model: URDF-subset parsing, FK, Jacobian, and DLS IK.

The chain is a strictly serial sequence of revolute/prismatic joints.
Fixed joints found while parsing are folded into the next joint's origin
(trailing fixed joints fold into the tool offset). Inertial, visual, and
collision elements are ignored.
"""

from __future__ import annotations

import json
import logging
import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    GeometryError,
    Pose,
    Rot3,
    compose,
    matrix_to_rotvec,
    pose_from_dict,
    pose_to_dict,
)

__all__ = [
    "ChainError",
    "UrdfParseError",
    "JointSpec",
    "ChainSpec",
    "IkSettings",
    "IkResult",
    "parse_urdf_subset",
    "fk",
    "jacobian",
    "ik_dls",
    "chain_to_dict",
    "chain_from_dict",
    "chain_to_json",
    "chain_from_json",
]

logger = logging.getLogger(__name__)

REVOLUTE = "revolute"
PRISMATIC = "prismatic"


class ChainError(ValueError):
    """Raised for invalid chain definitions or mis-sized joint vectors."""


class UrdfParseError(ChainError):
    """Raised when a URDF document falls outside the supported subset."""


@dataclass(frozen=True, eq=False)
class JointSpec:
    """One revolute or prismatic joint: transform from the parent joint frame,
    motion axis in the local frame, and position limits."""

    name: str
    kind: str
    origin: Pose
    axis: np.ndarray
    lower: float = -math.inf
    upper: float = math.inf

    def __post_init__(self):
        if self.kind not in (REVOLUTE, PRISMATIC):
            raise ChainError(f"joint {self.name!r}: unknown kind {self.kind!r}")
        a = np.asarray(self.axis, dtype=float).reshape(3)
        n = np.linalg.norm(a)
        if abs(n - 1.0) > 1e-6:
            if n < 1e-9:
                raise ChainError(f"joint {self.name!r}: axis has zero norm")
            a = a / n
        else:
            a = a / n
        a.setflags(write=False)
        object.__setattr__(self, "axis", a)
        if not self.lower <= self.upper:
            raise ChainError(f"joint {self.name!r}: lower limit exceeds upper limit")


@dataclass(frozen=True, eq=False)
class ChainSpec:
    """Ordered serial chain plus a flange-to-tool offset."""

    joints: tuple[JointSpec, ...]
    ee_offset: Pose = field(default_factory=Pose.identity)

    def __post_init__(self):
        object.__setattr__(self, "joints", tuple(self.joints))
        if len(self.joints) < 1:
            raise ChainError("a chain needs at least one joint")
        names = [j.name for j in self.joints]
        if len(set(names)) != len(names):
            raise ChainError("joint names must be unique")
        # cached raw arrays for the hot kinematics path
        object.__setattr__(self, "_r_org", np.stack([j.origin.rot.m for j in self.joints]))
        object.__setattr__(self, "_p_org", np.stack([j.origin.pos for j in self.joints]))
        object.__setattr__(self, "_axes", np.stack([j.axis for j in self.joints]))
        object.__setattr__(self, "_revolute", np.array([j.kind == REVOLUTE for j in self.joints]))
        object.__setattr__(self, "lower", np.array([j.lower for j in self.joints]))
        object.__setattr__(self, "upper", np.array([j.upper for j in self.joints]))
        skews = np.zeros((self.n, 3, 3))
        for i, j in enumerate(self.joints):
            ax, ay, az = j.axis
            skews[i] = [[0.0, -az, ay], [az, 0.0, -ax], [-ay, ax, 0.0]]
        object.__setattr__(self, "_skew", skews)
        object.__setattr__(self, "_skew2", skews @ skews)

    @property
    def n(self) -> int:
        return len(self.joints)

    def clamp(self, q: np.ndarray) -> np.ndarray:
        return np.clip(q, self.lower, self.upper)


@dataclass(frozen=True)
class IkSettings:
    """Damped-least-squares parameters; all strictly positive."""

    damping: float = 0.05
    max_iters: int = 200
    tol_pos: float = 1e-4
    tol_rot: float = 1e-3
    max_step: float = 0.2

    def __post_init__(self):
        for name in ("damping", "max_iters", "tol_pos", "tol_rot", "max_step"):
            if getattr(self, name) <= 0:
                raise ChainError(f"IkSettings.{name} must be positive")


@dataclass(frozen=True)
class IkResult:
    q: np.ndarray
    residual_pos: float
    residual_rot: float
    converged: bool
    iterations: int


def _check_q(chain: ChainSpec, q) -> np.ndarray:
    q = np.asarray(q, dtype=float).reshape(-1)
    if q.shape[0] != chain.n:
        raise ChainError(f"expected {chain.n} joint values, got {q.shape[0]}")
    return q


_EYE3 = np.eye(3)


def _frames(chain: ChainSpec, q: np.ndarray):
    """Per-joint frames after the origin transform (rotation, position)."""
    rs = np.empty((chain.n, 3, 3))
    ps = np.empty((chain.n, 3))
    # Rodrigues motion matrices for all joints at once (prismatic rows unused)
    motion = (
        _EYE3
        + np.sin(q)[:, None, None] * chain._skew
        + (1.0 - np.cos(q))[:, None, None] * chain._skew2
    )
    r = _EYE3
    p = np.zeros(3)
    for i in range(chain.n):
        p = r @ chain._p_org[i] + p
        r = r @ chain._r_org[i]
        rs[i] = r
        ps[i] = p
        if chain._revolute[i]:
            r = r @ motion[i]
        else:
            p = p + r @ (chain._axes[i] * q[i])
    return rs, ps, r, p


def _fk_raw(chain: ChainSpec, q: np.ndarray):
    _, _, r, p = _frames(chain, q)
    ee = chain.ee_offset
    return r @ ee.rot.m, r @ ee.pos + p


def fk(chain: ChainSpec, q) -> Pose:
    """End-effector pose for joint values ``q``.

    Out-of-limit values are clamped and logged; pass in-limit values to get
    the exact configuration.
    """
    q = _check_q(chain, q)
    qc = chain.clamp(q)
    if not np.array_equal(q, qc):
        logger.warning("fk: joint values clamped to limits (max excess %.3e)", np.abs(q - qc).max())
    r, p = _fk_raw(chain, qc)
    return Pose(Rot3(r), p)


def _jacobian_from_frames(chain: ChainSpec, rs, ps, p_tool) -> np.ndarray:
    jac = np.zeros((6, chain.n))
    axes_w = np.einsum("nij,nj->ni", rs, chain._axes)
    for i in range(chain.n):
        axis_w = axes_w[i]
        if chain._revolute[i]:
            rx = p_tool - ps[i]
            jac[0, i] = axis_w[1] * rx[2] - axis_w[2] * rx[1]
            jac[1, i] = axis_w[2] * rx[0] - axis_w[0] * rx[2]
            jac[2, i] = axis_w[0] * rx[1] - axis_w[1] * rx[0]
            jac[3:, i] = axis_w
        else:
            jac[:3, i] = axis_w
    return jac


def jacobian(chain: ChainSpec, q) -> np.ndarray:
    """Geometric Jacobian in the base frame: rows 0..2 linear (m), 3..5 angular (rad)."""
    q = _check_q(chain, q)
    rs, ps, r_ee, p_ee = _frames(chain, q)
    p_tool = r_ee @ chain.ee_offset.pos + p_ee
    return _jacobian_from_frames(chain, rs, ps, p_tool)


def ik_dls(chain: ChainSpec, target: Pose, q_seed, settings: IkSettings | None = None) -> IkResult:
    """Damped-least-squares IK toward ``target``, seeded at ``q_seed``.

    Iterates dq = J^T (J J^T + damping^2 I)^-1 e with the step clamped to
    ``max_step`` per joint and iterates clamped to joint limits. Never raises
    on non-convergence: the best iterate found is always returned, with the
    ``converged`` flag and residuals reporting the outcome.
    """
    s = settings or IkSettings()
    q = chain.clamp(_check_q(chain, q_seed))
    target_r = target.rot.m
    target_p = target.pos
    eye6 = np.eye(6)

    best_q = q.copy()
    best_pos = math.inf
    best_rot = math.inf
    converged = False
    iterations = 0
    ee_r = chain.ee_offset.rot.m
    ee_p = chain.ee_offset.pos
    for it in range(s.max_iters + 1):
        rs, ps, r_flange, p_flange = _frames(chain, q)
        r = r_flange @ ee_r
        p = r_flange @ ee_p + p_flange
        e_pos = target_p - p
        e_rot = matrix_to_rotvec(target_r @ r.T)
        res_pos = float(np.linalg.norm(e_pos))
        res_rot = float(np.linalg.norm(e_rot))
        if res_pos + res_rot < best_pos + best_rot:
            best_q = q.copy()
            best_pos = res_pos
            best_rot = res_rot
        iterations = it
        if res_pos <= s.tol_pos and res_rot <= s.tol_rot:
            converged = True
            break
        if it == s.max_iters:
            break
        jac = _jacobian_from_frames(chain, rs, ps, p)
        err = np.concatenate([e_pos, e_rot])
        dq = jac.T @ np.linalg.solve(jac @ jac.T + (s.damping**2) * eye6, err)
        biggest = np.abs(dq).max()
        if biggest > s.max_step:
            dq *= s.max_step / biggest
        q = chain.clamp(q + dq)
    return IkResult(best_q, best_pos, best_rot, converged, iterations)


# ---------------------------------------------------------------------------
# URDF subset
# ---------------------------------------------------------------------------

_SUPPORTED_JOINT_TYPES = (REVOLUTE, PRISMATIC, "fixed")


def _rpy_matrix(roll: float, pitch: float, yaw: float) -> np.ndarray:
    cr, sr = math.cos(roll), math.sin(roll)
    cp, sp = math.cos(pitch), math.sin(pitch)
    cy, sy = math.cos(yaw), math.sin(yaw)
    rz = np.array([[cy, -sy, 0.0], [sy, cy, 0.0], [0.0, 0.0, 1.0]])
    ry = np.array([[cp, 0.0, sp], [0.0, 1.0, 0.0], [-sp, 0.0, cp]])
    rx = np.array([[1.0, 0.0, 0.0], [0.0, cr, -sr], [0.0, sr, cr]])
    return rz @ ry @ rx


def _parse_origin(elem: ET.Element | None, where: str) -> Pose:
    if elem is None:
        return Pose.identity()
    try:
        xyz = [float(v) for v in elem.get("xyz", "0 0 0").split()]
        rpy = [float(v) for v in elem.get("rpy", "0 0 0").split()]
    except ValueError as exc:
        raise UrdfParseError(f"{where}: malformed origin attributes") from exc
    if len(xyz) != 3 or len(rpy) != 3:
        raise UrdfParseError(f"{where}: origin xyz/rpy need exactly 3 numbers")
    return Pose(Rot3(_rpy_matrix(*rpy)), np.array(xyz))


def parse_urdf_subset(text: str, tip: str | None = None) -> ChainSpec:
    """Parse the unique serial chain of a URDF document.

    Supported elements: <robot>, <link> (names only), and <joint> with
    type/origin/axis/limit/parent/child. Fixed joints are folded into the
    next moving joint's origin; a trailing run of fixed joints becomes the
    tool offset. ``tip`` stops the walk at the named link (default: the
    chain's leaf).
    """
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise UrdfParseError(f"not well-formed XML: {exc}") from exc
    if root.tag != "robot":
        raise UrdfParseError(f"root element is <{root.tag}>, expected <robot>")

    link_names = set()
    for link in root.findall("link"):
        name = link.get("name")
        if name is None:
            raise UrdfParseError("<link> without a name")
        link_names.add(name)

    children: dict[str, list[ET.Element]] = {}
    child_links = set()
    for joint in root.findall("joint"):
        jname = joint.get("name") or "<unnamed>"
        jtype = joint.get("type")
        if jtype not in _SUPPORTED_JOINT_TYPES:
            raise UrdfParseError(f"joint {jname!r}: unknown joint type {jtype!r}")
        parent = joint.find("parent")
        child = joint.find("child")
        if parent is None or child is None:
            raise UrdfParseError(f"joint {jname!r}: missing <parent> or <child>")
        plink = parent.get("link")
        clink = child.get("link")
        if plink not in link_names or clink not in link_names:
            raise UrdfParseError(f"joint {jname!r}: parent/child link not declared")
        children.setdefault(plink, []).append(joint)
        child_links.add(clink)

    roots = sorted(link_names - child_links)
    if len(roots) != 1:
        raise UrdfParseError(f"expected exactly one root link, found {roots}")
    if tip is not None and tip not in link_names:
        raise UrdfParseError(f"tip link {tip!r} not declared")

    joints: list[JointSpec] = []
    pending = Pose.identity()  # accumulated fixed-joint transform
    current = roots[0]
    while current != tip:
        outgoing = children.get(current, [])
        if not outgoing:
            if tip is not None:
                raise UrdfParseError(f"tip link {tip!r} is not reachable from root {roots[0]!r}")
            break
        if len(outgoing) > 1:
            raise UrdfParseError(f"unsupported: non-serial chain (link {current!r} has {len(outgoing)} child joints)")
        joint = outgoing[0]
        jname = joint.get("name") or "<unnamed>"
        jtype = joint.get("type")
        origin = compose(pending, _parse_origin(joint.find("origin"), f"joint {jname!r}"))
        if jtype == "fixed":
            pending = origin
        else:
            axis_elem = joint.find("axis")
            if axis_elem is None:
                raise UrdfParseError(f"joint {jname!r}: missing <axis> on {jtype} joint")
            try:
                axis = [float(v) for v in axis_elem.get("xyz", "").split()]
            except ValueError as exc:
                raise UrdfParseError(f"joint {jname!r}: malformed axis xyz") from exc
            if len(axis) != 3:
                raise UrdfParseError(f"joint {jname!r}: axis xyz needs exactly 3 numbers")
            limit = joint.find("limit")
            lower = -math.inf
            upper = math.inf
            if limit is not None:
                try:
                    lower = float(limit.get("lower", "-inf"))
                    upper = float(limit.get("upper", "inf"))
                except ValueError as exc:
                    raise UrdfParseError(f"joint {jname!r}: malformed limit bounds") from exc
            try:
                joints.append(JointSpec(jname, jtype, origin, np.array(axis), lower, upper))
            except (ChainError, GeometryError) as exc:
                raise UrdfParseError(f"joint {jname!r}: {exc}") from exc
            pending = Pose.identity()
        current = joint.find("child").get("link")

    if not joints:
        raise UrdfParseError("no revolute or prismatic joint on the root-to-tip path")
    return ChainSpec(tuple(joints), ee_offset=pending)


# ---------------------------------------------------------------------------
# Native JSON format
# ---------------------------------------------------------------------------


def chain_to_dict(chain: ChainSpec) -> dict:
    return {
        "joints": [
            {
                "name": j.name,
                "kind": j.kind,
                "origin": pose_to_dict(j.origin),
                "axis": [float(v) for v in j.axis],
                "limits": [j.lower, j.upper],
            }
            for j in chain.joints
        ],
        "ee_offset": pose_to_dict(chain.ee_offset),
    }


def chain_from_dict(d: dict) -> ChainSpec:
    try:
        raw_joints = d["joints"]
    except (KeyError, TypeError) as exc:
        raise ChainError("chain object needs a 'joints' list") from exc
    joints = []
    for i, j in enumerate(raw_joints):
        try:
            joints.append(
                JointSpec(
                    name=str(j["name"]),
                    kind=str(j["kind"]),
                    origin=pose_from_dict(j["origin"]),
                    axis=np.asarray(j["axis"], dtype=float),
                    lower=float(j["limits"][0]),
                    upper=float(j["limits"][1]),
                )
            )
        except (KeyError, TypeError, IndexError) as exc:
            raise ChainError(f"joints[{i}]: missing or malformed field ({exc})") from exc
    ee = pose_from_dict(d["ee_offset"]) if "ee_offset" in d else Pose.identity()
    return ChainSpec(tuple(joints), ee_offset=ee)


def chain_to_json(chain: ChainSpec) -> str:
    return json.dumps(chain_to_dict(chain), indent=2, sort_keys=True)


def chain_from_json(text: str) -> ChainSpec:
    return chain_from_dict(json.loads(text))
