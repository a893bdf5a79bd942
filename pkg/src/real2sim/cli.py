"""Batch command-line front end.

Subcommands: ``metrics report``, ``metrics shift``, ``sysid fit``,
``replay``, ``composite``, ``urdf convert``. Every command is deterministic
given its inputs and flags; ``--out -`` streams to standard output.

Exit codes: 0 success, 2 input-format error, 3 semantic/validation error,
4 internal numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import report as rep
from .chain import ChainError, UrdfParseError, chain_from_json, chain_to_json, parse_urdf_subset
from .controller import ControllerError, CtrlConfig
from .geometry import GeometryError, pose_to_dict
from .imaging import ImageError, composite, read_pgm, read_ppm, write_ppm
from .jointsim import (
    GOOGLE,
    WIDOWX,
    JointDynamics,
    JointSimError,
    PDParams,
    TrajectoryRecord,
    default_config,
    replay_open_loop,
)
from .metrics import MetricsError
from .profile import PlanningError
from .report import InputFormatError
from .sysid import AnnealConfig, SysIdError, SysIdRange, anneal_fit, trajectory_losses

EXIT_OK = 0
EXIT_FORMAT = 2
EXIT_SEMANTIC = 3
EXIT_NUMERIC = 4

_FORMAT_ERRORS = (InputFormatError, UrdfParseError, ImageError, json.JSONDecodeError, FileNotFoundError, IsADirectoryError)
_SEMANTIC_ERRORS = (MetricsError, SysIdError, JointSimError, ChainError, ControllerError, GeometryError, ValueError)
_NUMERIC_ERRORS = (PlanningError, np.linalg.LinAlgError, FloatingPointError, ZeroDivisionError)


class ConfigError(ValueError):
    """Unknown or invalid key in a run-configuration file."""


def _read_json(path: str):
    text = Path(path).read_text()
    return json.loads(text)


def _write_text(out: str, text: str) -> None:
    if out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _write_bytes(out: str, data: bytes) -> None:
    if out == "-":
        sys.stdout.buffer.write(data)
    else:
        Path(out).write_bytes(data)


def _check_keys(obj: dict, allowed: set[str], where: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")


def _vec_field(obj, n: int, where: str) -> np.ndarray:
    a = np.asarray(obj, dtype=float)
    if a.ndim == 0:
        return np.full(n, float(a))
    if a.shape != (n,):
        raise ConfigError(f"{where}: expected a scalar or {n} values")
    return a


# ---------------------------------------------------------------------------
# metrics report / shift
# ---------------------------------------------------------------------------


def cmd_metrics_report(args) -> int:
    tables = []
    for path in args.table:
        try:
            obj = _read_json(path)
        except json.JSONDecodeError as exc:
            raise InputFormatError(f"{path}: invalid JSON ({exc})") from exc
        tables.extend(rep.tables_from_obj(obj, source=path))
    if not tables:
        raise InputFormatError("no evaluation tables found in the inputs")
    stats = [rep.compute_table_stats(t) for t in tables]
    csv_parts = [rep.metrics_csv(t, s) for t, s in zip(tables, stats)]
    if args.out == "-":
        header, *_ = csv_parts[0].splitlines(keepends=True)
        sys.stdout.write(header)
        for part in csv_parts:
            body = part.split("\n", 1)[1]
            sys.stdout.write(body)
    else:
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        for table, part in zip(tables, csv_parts):
            (outdir / f"{table.task}.csv").write_text(part)
        (outdir / "aggregate.json").write_text(rep.dumps_json(rep.aggregate_dict(stats)))
    return EXIT_OK


def cmd_metrics_shift(args) -> int:
    try:
        obj = _read_json(args.shifts)
    except json.JSONDecodeError as exc:
        raise InputFormatError(f"{args.shifts}: invalid JSON ({exc})") from exc
    rows = rep.shifts_from_obj(obj, source=args.shifts)
    _write_text(args.out, rep.shift_csv(rows))
    return EXIT_OK


# ---------------------------------------------------------------------------
# sysid fit
# ---------------------------------------------------------------------------

_SYSID_KEYS = {"controller", "dynamics", "init", "range", "anneal", "ctrl"}
_DYN_KEYS = {"inertia", "damping"}
_INIT_KEYS = {"p", "d"}
_RANGE_KEYS = {"p_low", "p_high", "d_low", "d_high"}
_ANNEAL_KEYS = {"rounds", "iters_per_round", "t0", "cooling", "sigma", "shrink", "rng_seed", "tie_joints"}
_CTRL_KEYS = {"h_sim", "h_ctrl"}


def _ctrl_config(kind: str, overrides: dict | None) -> CtrlConfig:
    cfg = default_config(kind)
    if overrides:
        _check_keys(overrides, _CTRL_KEYS, "ctrl")
        cfg = CtrlConfig(
            h_sim=float(overrides.get("h_sim", cfg.h_sim)),
            h_ctrl=float(overrides.get("h_ctrl", cfg.h_ctrl)),
            arm_limits=cfg.arm_limits,
            grip_limits=cfg.grip_limits,
            grip_filter_threshold=cfg.grip_filter_threshold,
        )
    return cfg


def cmd_sysid_fit(args) -> int:
    chain = chain_from_json(Path(args.chain).read_text())
    n = chain.n
    config = _read_json(args.config)
    if not isinstance(config, dict):
        raise ConfigError(f"{args.config}: expected a configuration object")
    _check_keys(config, _SYSID_KEYS, args.config)
    kind = config.get("controller", WIDOWX)
    if kind not in (GOOGLE, WIDOWX):
        raise ConfigError(f"controller must be '{GOOGLE}' or '{WIDOWX}', got {kind!r}")

    dyn_obj = config.get("dynamics", {})
    _check_keys(dyn_obj, _DYN_KEYS, "dynamics")
    dyn = JointDynamics(
        _vec_field(dyn_obj.get("inertia", 1.0), n, "dynamics.inertia"),
        _vec_field(dyn_obj.get("damping", 0.0), n, "dynamics.damping"),
        chain.lower,
        chain.upper,
    )

    init_obj = config.get("init")
    if init_obj is None:
        raise ConfigError("config needs an 'init' object with 'p' and 'd'")
    _check_keys(init_obj, _INIT_KEYS, "init")
    init = PDParams(_vec_field(init_obj["p"], n, "init.p"), _vec_field(init_obj["d"], n, "init.d"))

    range_obj = config.get("range")
    if range_obj is None:
        raise ConfigError("config needs a 'range' object")
    _check_keys(range_obj, _RANGE_KEYS, "range")
    rng = SysIdRange(
        _vec_field(range_obj["p_low"], n, "range.p_low"),
        _vec_field(range_obj["p_high"], n, "range.p_high"),
        _vec_field(range_obj["d_low"], n, "range.d_low"),
        _vec_field(range_obj["d_high"], n, "range.d_high"),
    )

    anneal_obj = dict(config.get("anneal", {}))
    _check_keys(anneal_obj, _ANNEAL_KEYS, "anneal")
    if args.seed is not None:
        anneal_obj["rng_seed"] = args.seed
    anneal = AnnealConfig(**anneal_obj)

    ctrl_cfg = _ctrl_config(kind, config.get("ctrl"))

    traj_dir = Path(args.trajectories)
    paths = sorted(traj_dir.glob("*.json")) if traj_dir.is_dir() else [traj_dir]
    if not paths:
        raise SysIdError(f"no trajectory files found under {traj_dir}")
    records = [TrajectoryRecord.from_json(p.read_text()) for p in paths]

    result = anneal_fit(records, chain, dyn, kind, init, rng, anneal, ctrl_cfg)
    out = {
        "best": {"p": list(map(float, result.best.p)), "d": list(map(float, result.best.d))},
        "best_loss": result.best_loss,
        "initial_loss": result.initial_loss,
        "losses": {
            "translation": result.losses.translation,
            "rotation": result.losses.rotation,
            "total": result.losses.total,
        },
        "rounds": [
            {
                "round": r.round_index,
                "best_loss": r.best_loss,
                "p": list(map(float, r.best_p)),
                "d": list(map(float, r.best_d)),
                "evaluations": r.evaluations,
            }
            for r in result.history
        ],
        "evaluations": result.evaluations,
        "controller": kind,
        "rng_seed": anneal.rng_seed,
    }
    _write_text(args.out, rep.dumps_json(out))
    return EXIT_OK


# ---------------------------------------------------------------------------
# replay
# ---------------------------------------------------------------------------


def _load_pd(path: str, n: int) -> PDParams:
    obj = _read_json(path)
    if isinstance(obj, dict) and "best" in obj:
        obj = obj["best"]
    if not isinstance(obj, dict) or "p" not in obj or "d" not in obj:
        raise InputFormatError(f"{path}: expected an object with 'p' and 'd'")
    return PDParams(_vec_field(obj["p"], n, "p"), _vec_field(obj["d"], n, "d"))


def cmd_replay(args) -> int:
    chain = chain_from_json(Path(args.chain).read_text())
    rec = TrajectoryRecord.from_json(Path(args.trajectory).read_text())
    pd = _load_pd(args.params, chain.n)
    dyn_obj = _read_json(args.dynamics) if args.dynamics else {}
    _check_keys(dyn_obj, _DYN_KEYS, args.dynamics or "dynamics")
    dyn = JointDynamics(
        _vec_field(dyn_obj.get("inertia", 1.0), chain.n, "dynamics.inertia"),
        _vec_field(dyn_obj.get("damping", 0.0), chain.n, "dynamics.damping"),
        chain.lower,
        chain.upper,
    )
    cfg = _ctrl_config(args.controller, None)
    if args.sim_hz or args.ctrl_hz:
        cfg = _ctrl_config(args.controller, {"h_sim": args.sim_hz or cfg.h_sim, "h_ctrl": args.ctrl_hz or cfg.h_ctrl})
    if abs(cfg.h_ctrl - rec.ctrl_frequency) > 1e-9:
        raise JointSimError(
            f"record control frequency {rec.ctrl_frequency} Hz does not match the "
            f"controller's {cfg.h_ctrl} Hz (use --ctrl-hz to override)"
        )

    plan_rows = []
    sink = None
    if args.dump_plan:
        dt = 1.0 / cfg.h_sim

        def sink(step, tick, tgt):
            t = step / cfg.h_ctrl + (tick + 1) * dt
            if hasattr(tgt, "arm_v"):
                row = [t, *tgt.arm_q, *tgt.arm_v, *tgt.arm_a, tgt.grip_q, tgt.grip_v, tgt.grip_a]
            else:
                row = [t, *tgt.arm_q, *np.zeros(chain.n), *np.zeros(chain.n), tgt.grip_q, 0.0, 0.0]
            plan_rows.append(row)

    sim_poses = replay_open_loop(chain, dyn, pd, args.controller, rec, None, cfg, plan_sink=sink)
    losses = trajectory_losses(rec.ee_poses, sim_poses[: len(rec.ee_poses)])
    out = {
        "ee_poses": [pose_to_dict(p) for p in sim_poses],
        "losses": {"translation": losses.translation, "rotation": losses.rotation, "total": losses.total},
    }
    _write_text(args.out, rep.dumps_json(out))
    if args.out != "-":
        sys.stdout.write(
            f"loss_translation={losses.translation:.9f} loss_rotation={losses.rotation:.9f} "
            f"loss_total={losses.total:.9f}\n"
        )
    if args.dump_plan:
        import csv as _csv
        import io as _io

        buf = _io.StringIO()
        w = _csv.writer(buf, lineterminator="\n")
        head = ["t"]
        head += [f"q_d{i}" for i in range(chain.n)]
        head += [f"v_d{i}" for i in range(chain.n)]
        head += [f"a_d{i}" for i in range(chain.n)]
        head += ["grip_q", "grip_v", "grip_a"]
        w.writerow(head)
        for row in plan_rows:
            w.writerow([f"{v:.9f}" for v in row])
        _write_text(args.dump_plan, buf.getvalue())
    return EXIT_OK


# ---------------------------------------------------------------------------
# composite / urdf convert
# ---------------------------------------------------------------------------


def cmd_composite(args) -> int:
    sim = read_ppm(Path(args.sim).read_bytes())
    real = read_ppm(Path(args.real).read_bytes())
    mask = read_pgm(Path(args.mask).read_bytes())
    out = composite(sim, mask, real, mode=args.mode)
    _write_bytes(args.out, write_ppm(out))
    return EXIT_OK


def cmd_urdf_convert(args) -> int:
    text = Path(args.infile).read_text()
    chain = parse_urdf_subset(text, tip=args.tip)
    _write_text(args.out, chain_to_json(chain) + "\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser and entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="real2sim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    metrics = sub.add_parser("metrics", help="evaluation-correlation reports")
    msub = metrics.add_subparsers(dest="subcommand", required=True)

    mreport = msub.add_parser("report", help="per-task CSV report plus aggregate JSON")
    mreport.add_argument("--table", action="append", required=True, help="evaluation-table JSON (repeatable)")
    mreport.add_argument("--out", required=True, help="output directory, or - for stdout CSV")
    mreport.set_defaults(func=cmd_metrics_report)

    mshift = msub.add_parser("shift", help="success-rate deltas under distribution shifts")
    mshift.add_argument("--shifts", required=True, help="shift JSON file")
    mshift.add_argument("--out", required=True, help="output CSV path, or -")
    mshift.set_defaults(func=cmd_metrics_shift)

    sysid = sub.add_parser("sysid", help="PD-gain identification")
    ssub = sysid.add_subparsers(dest="subcommand", required=True)
    sfit = ssub.add_parser("fit", help="fit PD gains to recorded trajectories")
    sfit.add_argument("--trajectories", required=True, help="directory of trajectory JSON files (or one file)")
    sfit.add_argument("--chain", required=True, help="chain JSON file")
    sfit.add_argument("--config", required=True, help="sysid configuration JSON")
    sfit.add_argument("--out", required=True, help="output params JSON path, or -")
    sfit.add_argument("--seed", type=int, default=None, help="override the annealing RNG seed")
    sfit.set_defaults(func=cmd_sysid_fit)

    replay = sub.add_parser("replay", help="open-loop replay of a recorded action sequence")
    replay.add_argument("--trajectory", required=True, help="trajectory JSON file")
    replay.add_argument("--chain", required=True, help="chain JSON file")
    replay.add_argument("--params", required=True, help="PD params JSON (plain or sysid fit output)")
    replay.add_argument("--dynamics", default=None, help="joint dynamics JSON (inertia/damping)")
    replay.add_argument("--controller", choices=[GOOGLE, WIDOWX], required=True)
    replay.add_argument("--sim-hz", type=float, default=None, help="override simulation frequency")
    replay.add_argument("--ctrl-hz", type=float, default=None, help="override control frequency")
    replay.add_argument("--out", required=True, help="output poses JSON path, or -")
    replay.add_argument("--dump-plan", default=None, help="write planned per-step targets as CSV")
    replay.set_defaults(func=cmd_replay)

    comp = sub.add_parser("composite", help="green-screen composite of sim over real")
    comp.add_argument("--sim", required=True, help="simulated foreground PPM (P6)")
    comp.add_argument("--mask", required=True, help="foreground mask PGM (P5)")
    comp.add_argument("--real", required=True, help="real background PPM (P6)")
    comp.add_argument("--mode", choices=["hard", "soft"], default="hard")
    comp.add_argument("--out", required=True, help="output PPM path, or -")
    comp.set_defaults(func=cmd_composite)

    urdf = sub.add_parser("urdf", help="robot-description utilities")
    usub = urdf.add_subparsers(dest="subcommand", required=True)
    uconv = usub.add_parser("convert", help="convert a URDF subset to native chain JSON")
    uconv.add_argument("--in", dest="infile", required=True, help="input URDF file")
    uconv.add_argument("--tip", default=None, help="end link of the chain (default: the leaf)")
    uconv.add_argument("--out", required=True, help="output chain JSON path, or -")
    uconv.set_defaults(func=cmd_urdf_convert)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _FORMAT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SEMANTIC
    except _NUMERIC_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except _SEMANTIC_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SEMANTIC


if __name__ == "__main__":
    sys.exit(main())
