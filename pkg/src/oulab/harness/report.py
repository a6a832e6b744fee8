"""Scenario execution and the JSON report."""
from __future__ import annotations

import json
import math
import platform
import time
from pathlib import Path

import jsonschema
import numpy as np
import scipy

from .. import __version__
from ..errors import TaskFailed
from .tasks import RUNNERS, Context

__all__ = ["REPORT_SCHEMA", "run_scenario", "to_json", "strip_timing", "write_report"]

_check = {
    "type": "object",
    "additionalProperties": False,
    "required": ["name", "value", "bound", "relation", "tolerance", "passed"],
    "properties": {
        "name": {"type": "string"},
        "value": {"type": ["number", "string"]},
        "bound": {"type": ["number", "string"]},
        "relation": {"enum": ["<=", "<", ">=", ">", "=="]},
        "tolerance": {"type": ["number", "string"]},
        "passed": {"type": "boolean"},
    },
}

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["scenario", "versions", "tasks", "passed", "files", "timing"],
    "properties": {
        "scenario": {"type": "object"},
        "versions": {"type": "object", "additionalProperties": {"type": "string"}},
        "tasks": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["index", "type", "status", "passed", "checks"],
                "properties": {
                    "index": {"type": "integer"},
                    "type": {"type": "string"},
                    "id": {"type": "string"},
                    "status": {"enum": ["ok", "error"]},
                    "passed": {"type": "boolean"},
                    "checks": {"type": "array", "items": _check},
                    "result": {},
                    "error": {"type": "string"},
                },
            },
        },
        "passed": {"type": "boolean"},
        "files": {"type": "array", "items": {"type": "string"}},
        "timing": {"type": "object"},
    },
}


def to_json(obj):
    """Plain JSON types; non-finite floats become the strings ``nan``, ``inf``, ``-inf``."""
    if isinstance(obj, dict):
        return {str(k): to_json(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_json(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_json(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    return obj


def strip_timing(report: dict) -> dict:
    return {k: v for k, v in report.items() if k != "timing"}


def versions() -> dict:
    return {"oulab": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def write_report(report: dict, path) -> None:
    jsonschema.validate(report, REPORT_SCHEMA)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(report, indent=2, sort_keys=False) + "\n")
    tmp.replace(path)


def run_scenario(cfg: dict, out_dir=None, only=None, log=None):
    """Run the tasks of a validated config in order.

    Parameters
    ----------
    out_dir : path, optional
        Receives the report (rewritten after every task) and any CSV files.
    only : set of str, optional
        Restrict to these task types.
    log : callable, optional
        Receives one progress line per task.

    Returns
    -------
    report : dict
    exit_code : int
        0 when every verdict passes, 1 otherwise.
    """
    ctx = Context(cfg, out_dir)
    report_name = cfg.get("outputs", {}).get("report", "report.json")
    report = {"scenario": to_json(cfg), "versions": versions(), "tasks": [], "passed": True,
              "files": [], "timing": {"tasks": []}}
    start = time.perf_counter()
    for index, task in enumerate(cfg["tasks"]):
        if only is not None and task["type"] not in only:
            continue
        entry = {"index": index, "type": task["type"]}
        if "id" in task:
            entry["id"] = task["id"]
        t0 = time.perf_counter()
        try:
            result, checks = RUNNERS[task["type"]](task, ctx)
            entry.update(status="ok", passed=all(c["passed"] for c in checks),
                         checks=to_json(checks), result=to_json(result))
        except Exception as exc:  # recorded in the report; the run continues
            entry.update(status="error", passed=False, checks=[],
                         error=f"{type(exc).__name__}: {exc}")
        elapsed = time.perf_counter() - t0
        report["tasks"].append(entry)
        report["timing"]["tasks"].append({"index": index, "seconds": elapsed})
        report["passed"] = report["passed"] and entry["passed"]
        report["files"] = list(ctx.files)
        report["timing"]["total_seconds"] = time.perf_counter() - start
        if log is not None:
            verdict = "PASS" if entry["passed"] else "FAIL"
            log(f"[{verdict}] task {index} ({task['type']}{', ' + task['id'] if 'id' in task else ''})"
                f" {elapsed:.1f}s" + (f": {entry['error']}" if "error" in entry else ""))
        if out_dir is not None:
            write_report(report, Path(out_dir) / report_name)
    report["timing"]["total_seconds"] = time.perf_counter() - start
    if out_dir is not None:
        report["files"] = list(ctx.files) + [report_name]
        write_report(report, Path(out_dir) / report_name)
    return report, 0 if report["passed"] else TaskFailed.exit_code
