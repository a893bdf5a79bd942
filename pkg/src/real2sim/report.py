"""Parsing of evaluation-table/shift JSON files and CSV report assembly."""

from __future__ import annotations

import io
import csv
import json
from dataclasses import dataclass

from .metrics import (
    MetricsError,
    PairedEvalTable,
    PolicyEval,
    ShiftEval,
    UndefinedStatisticError,
    delta_success,
    kruskal_wallis,
    max_rank_violation,
    mmrv,
    pearson,
    spearman,
)

__all__ = [
    "InputFormatError",
    "tables_from_obj",
    "shifts_from_obj",
    "TableStats",
    "compute_table_stats",
    "metrics_csv",
    "shift_csv",
    "aggregate_dict",
]


class InputFormatError(ValueError):
    """Structural problem in an input file; carries the offending field path."""


def _need(obj: dict, key: str, path: str):
    if not isinstance(obj, dict) or key not in obj:
        raise InputFormatError(f"{path}.{key}: missing field")
    return obj[key]


def _parse_policy(obj, path: str) -> PolicyEval:
    pid = _need(obj, "policy_id", path)
    real = _need(obj, "real_rate", path)
    sim = _need(obj, "sim_rate", path)
    try:
        real = float(real)
        sim = float(sim)
    except (TypeError, ValueError) as exc:
        raise InputFormatError(f"{path}.real_rate/sim_rate: not a number") from exc
    kwargs = {}
    for name in ("real_trials", "sim_trials"):
        if obj.get(name) is not None:
            try:
                kwargs[name] = tuple(int(v) for v in obj[name])
            except (TypeError, ValueError) as exc:
                raise InputFormatError(f"{path}.{name}: not a binary sequence") from exc
    try:
        return PolicyEval(str(pid), real, sim, **kwargs)
    except MetricsError as exc:
        raise InputFormatError(f"{path}: {exc}") from exc


def _parse_table(obj, path: str) -> PairedEvalTable:
    task = _need(obj, "task", path)
    evals = _need(obj, "evals", path)
    if not isinstance(evals, list):
        raise InputFormatError(f"{path}.evals: expected a list")
    parsed = [_parse_policy(e, f"{path}.evals[{i}]") for i, e in enumerate(evals)]
    try:
        return PairedEvalTable(str(task), tuple(parsed))
    except MetricsError as exc:
        raise InputFormatError(f"{path}: {exc}") from exc


def tables_from_obj(obj, source: str = "<input>") -> list[PairedEvalTable]:
    """Accepts one table object, a list of tables, or {"tables": [...]}."""
    if isinstance(obj, dict) and "tables" in obj:
        obj = obj["tables"]
    if isinstance(obj, dict):
        return [_parse_table(obj, source)]
    if isinstance(obj, list):
        return [_parse_table(t, f"{source}.tables[{i}]") for i, t in enumerate(obj)]
    raise InputFormatError(f"{source}: expected a table object or list of tables")


@dataclass(frozen=True)
class ShiftRow:
    policy: str
    task: str
    factor: str
    base: float
    shift: ShiftEval


def shifts_from_obj(obj, source: str = "<input>") -> list[ShiftRow]:
    """Accepts one shift object, a list, or {"shifts": [...]}.

    Shift object: {"policy", "task", "base", "factors": {name: [rates...]}}.
    """
    if isinstance(obj, dict) and "shifts" in obj:
        obj = obj["shifts"]
    if isinstance(obj, dict):
        obj = [obj]
    if not isinstance(obj, list):
        raise InputFormatError(f"{source}: expected a shift object or list")
    rows: list[ShiftRow] = []
    for i, entry in enumerate(obj):
        path = f"{source}.shifts[{i}]"
        policy = str(_need(entry, "policy", path))
        task = str(_need(entry, "task", path))
        base = _need(entry, "base", path)
        factors = _need(entry, "factors", path)
        try:
            base = float(base)
        except (TypeError, ValueError) as exc:
            raise InputFormatError(f"{path}.base: not a number") from exc
        if not isinstance(factors, dict) or not factors:
            raise InputFormatError(f"{path}.factors: expected a non-empty object")
        for name, rates in factors.items():
            try:
                shift = ShiftEval(base, tuple(float(r) for r in rates))
            except MetricsError:
                # semantic constraint (empty variants, out-of-range rate)
                raise
            except (TypeError, ValueError) as exc:
                raise InputFormatError(f"{path}.factors.{name}: not a rate list") from exc
            rows.append(ShiftRow(policy, task, name, base, shift))
    return rows


@dataclass(frozen=True)
class TableStats:
    task: str
    n_policies: int
    mmrv: float
    pearson: float | None
    spearman: float | None
    kruskal_p: dict[str, float]


def compute_table_stats(table: PairedEvalTable) -> TableStats:
    real = table.real
    sim = table.sim
    try:
        r = pearson(real, sim)
    except UndefinedStatisticError:
        r = None
    try:
        rho = spearman(real, sim)
    except UndefinedStatisticError:
        rho = None
    kp = {}
    for e in table.evals:
        if e.real_trials is not None and e.sim_trials is not None:
            kp[e.policy_id] = kruskal_wallis(e.real_trials, e.sim_trials).p
    return TableStats(table.task, len(table.evals), mmrv(table), r, rho, kp)


def _fmt(x: float | None) -> str:
    return "n/a" if x is None else f"{x:.6f}"


def metrics_csv(table: PairedEvalTable, stats: TableStats) -> str:
    """Per-policy rows, then footer rows for the table-level statistics."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["task", "policy", "real", "sim", "max_rank_violation"])
    for i, e in enumerate(table.evals):
        w.writerow(
            [table.task, e.policy_id, f"{e.real_rate:.6f}", f"{e.sim_rate:.6f}",
             f"{max_rank_violation(table, i):.6f}"]
        )
    w.writerow([table.task, "MMRV", "", "", _fmt(stats.mmrv)])
    w.writerow([table.task, "pearson", "", "", _fmt(stats.pearson)])
    w.writerow([table.task, "spearman", "", "", _fmt(stats.spearman)])
    for policy, p in stats.kruskal_p.items():
        w.writerow([table.task, f"kruskal_p:{policy}", "", "", _fmt(p)])
    return buf.getvalue()


def shift_csv(rows: list[ShiftRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["policy", "task", "factor", "base", "n_variants", "delta_signed", "delta_abs"])
    for row in rows:
        d = delta_success(row.shift)
        w.writerow(
            [row.policy, row.task, row.factor, f"{row.base:.6f}", len(row.shift.variant_rates),
             f"{d.signed:.6f}", f"{d.absolute:.6f}"]
        )
    return buf.getvalue()


def aggregate_dict(stats: list[TableStats]) -> dict:
    return {
        "tables": [
            {
                "task": s.task,
                "n_policies": s.n_policies,
                "mmrv": s.mmrv,
                "pearson": s.pearson,
                "spearman": s.spearman,
                "kruskal_p": s.kruskal_p,
            }
            for s in stats
        ]
    }


def dumps_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"
