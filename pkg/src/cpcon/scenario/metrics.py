"""Report export: stable-schema CSV/JSON metrics and a linear-fit helper."""

from __future__ import annotations

import csv
import json
from pathlib import Path

from cpcon.errors import IoFailureError
from cpcon.scenario.harness import ScenarioReport

COLUMNS = (
    "hosts",
    "deploy_latency_ms",
    "detect_to_mitigate_ms",
    "directive_exec_ms",
    "verified_count",
    "failed_count",
)


def metrics_rows(report: ScenarioReport) -> list[dict[str, object]]:
    """Flatten a report into metric rows with the stable column schema."""
    if not report.scale_rows and report.final_snapshot is None:
        raise IoFailureError("report is empty: nothing was measured")
    if report.scale_rows:
        return [
            {
                "hosts": row["hosts"],
                "deploy_latency_ms": row["deploy_latency_ms"],
                "detect_to_mitigate_ms": None,
                "directive_exec_ms": None,
                "verified_count": None,
                "failed_count": None,
            }
            for row in report.scale_rows
        ]
    outcomes = list(report.verification_outcomes.values())
    exec_ms = list(report.directive_execution_ms.values())
    row = {
        "hosts": report.managed_hosts,
        "deploy_latency_ms": None,
        "detect_to_mitigate_ms": report.detection_to_mitigation_ms,
        "directive_exec_ms": (sum(exec_ms) / len(exec_ms)) if exec_ms else None,
        "verified_count": sum(1 for o in outcomes if o == "verified"),
        "failed_count": sum(1 for o in outcomes if o == "failed"),
    }
    return [row]


def emit_metrics(report: ScenarioReport, fmt: str, path: str | Path) -> Path:
    """Write metric rows as csv or json; errors on empty reports."""
    rows = metrics_rows(report)
    if not rows:
        raise IoFailureError("report has no metric rows to emit")
    if fmt not in ("csv", "json"):
        raise IoFailureError(f"unknown metrics format {fmt!r}")
    path = Path(path)
    try:
        if fmt == "csv":
            with path.open("w", newline="") as fh:
                writer = csv.DictWriter(fh, fieldnames=COLUMNS)
                writer.writeheader()
                for row in rows:
                    writer.writerow({k: ("" if row[k] is None else row[k]) for k in COLUMNS})
        else:
            doc = {
                "scenario": report.scenario,
                "seed": report.seed,
                "columns": list(COLUMNS),
                "rows": rows,
            }
            path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise IoFailureError(f"cannot write metrics to {path}: {exc}") from exc
    return path


def fit_linear(xs: list[float], ys: list[float]) -> tuple[float, float, float]:
    """Least-squares line fit; returns (slope, intercept, r_squared)."""
    n = len(xs)
    if n < 2 or len(ys) != n:
        raise ValueError("need at least two paired samples")
    mean_x = sum(xs) / n
    mean_y = sum(ys) / n
    sxx = sum((x - mean_x) ** 2 for x in xs)
    sxy = sum((x - mean_x) * (y - mean_y) for x, y in zip(xs, ys))
    if sxx == 0:
        raise ValueError("all x values identical")
    slope = sxy / sxx
    intercept = mean_y - slope * mean_x
    ss_tot = sum((y - mean_y) ** 2 for y in ys)
    ss_res = sum((y - (slope * x + intercept)) ** 2 for x, y in zip(xs, ys))
    r_squared = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return slope, intercept, r_squared
