"""Machine- and human-readable reports.

JSON floats are written with 17 significant digits (enough to round-trip a
double). Complex numbers become ``[re, im]``. Everything except the
``header`` block is a pure function of the scenario and its numerics, so two
runs produce byte-identical reports apart from the header.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

__all__ = ["TaskResult", "to_jsonable", "dumps", "emit_report", "format_summary"]


@dataclass
class TaskResult:
    name: str
    status: str  # "pass" | "fail" | "skipped" | "error"
    values: dict = field(default_factory=dict)
    deviations: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    error: str | None = None
    table: list | None = None  # convergence rows (grid, estimate, delta, extrapolated)

    @property
    def ok(self) -> bool:
        return self.status in ("pass", "skipped")

    def as_dict(self) -> dict:
        d = {
            "name": self.name,
            "status": self.status,
            "values": self.values,
            "deviations": self.deviations,
            "diagnostics": self.diagnostics,
        }
        if self.error is not None:
            d["error"] = self.error
        return d


def to_jsonable(obj: Any) -> Any:
    """Recursively convert numpy scalars/arrays, complex numbers and tuples to JSON types."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    return obj


def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    s = format(x, ".17g")
    if "e" not in s and "." not in s and "n" not in s:
        s += ".0"
    return s


def dumps(obj: Any, indent: int = 2) -> str:
    """Serialize ``obj`` as JSON with 17-significant-digit floats."""

    def enc(o, level):
        pad = " " * (indent * (level + 1))
        end = " " * (indent * level)
        if isinstance(o, dict):
            if not o:
                return "{}"
            items = [f"{pad}{json.dumps(k)}: {enc(v, level + 1)}" for k, v in o.items()]
            return "{\n" + ",\n".join(items) + "\n" + end + "}"
        if isinstance(o, list):
            if not o:
                return "[]"
            if all(not isinstance(v, (dict, list)) for v in o):
                return "[" + ", ".join(enc(v, level + 1) for v in o) + "]"
            return "[\n" + ",\n".join(pad + enc(v, level + 1) for v in o) + "\n" + end + "]"
        if isinstance(o, bool) or o is None:
            return json.dumps(o)
        if isinstance(o, float):
            return _fmt_float(o)
        return json.dumps(o)

    return enc(to_jsonable(obj), 0) + "\n"


def _c(z) -> str:
    if z is None:
        return "absent"
    z = complex(z)
    return f"{z.real:+.12f}{z.imag:+.12f}i"


def format_summary(report: dict, results: list[TaskResult]) -> str:
    lines = [
        f"scenario      {report['scenario']}",
        f"sha256        {report['scenario_hash']}",
        f"version       {report['software_version']}",
        f"sign          {report['sign_convention']:+d}",
        "",
    ]
    for r in results:
        lines.append(f"[{r.status.upper():>7}] {r.name}")
        if r.error:
            lines.append(f"          {r.error}")
        for k, v in r.values.items():
            if isinstance(v, (complex, np.complexfloating)) or (v is None and k.startswith("kappa")):
                lines.append(f"          {k:<30}{_c(v)}")
            elif isinstance(v, (float, int, np.floating, np.integer)) and not isinstance(v, bool):
                lines.append(f"          {k:<30}{v}")
        for k, v in r.deviations.items():
            shown = "n/a" if v is None else f"{v:.3e}"
            lines.append(f"          {'|' + k + '|':<30}{shown}")
    verdict = "PASS" if report["passed"] else "FAIL"
    lines += ["", f"overall: {verdict}"]
    return "\n".join(lines) + "\n"


def _csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["grid", "area_estimate", "delta", "extrapolated"])
    for grid, est, delta, ext in rows:
        w.writerow([grid, _fmt_float(float(est)), "" if not math.isfinite(delta) else _fmt_float(float(delta)), _fmt_float(float(ext))])
    return buf.getvalue()


def emit_report(report: dict, results: list[TaskResult], out_dir: str | Path, stem: str) -> list[Path]:
    """Write ``<stem>.report.json``, ``<stem>.summary.txt`` and any convergence tables.

    Raises ``OSError`` when the directory cannot be created or written.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    path = out / f"{stem}.report.json"
    path.write_text(dumps(report))
    written.append(path)
    path = out / f"{stem}.summary.txt"
    path.write_text(format_summary(report, results))
    written.append(path)
    for r in results:
        if r.table is not None:
            tag = "" if r.name == "convergence" else f".{r.name}"
            path = out / f"{stem}{tag}.convergence.csv"
            path.write_text(_csv(r.table))
            written.append(path)
    return written
