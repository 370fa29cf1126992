"""Report rendering for the terminal and for JSON consumers."""

import json
import sys
from pathlib import Path
from typing import Any, Dict, List

import numpy as np
import pandas as pd

# Ensure parent directory is in path
_parent = Path(__file__).resolve().parent.parent
if str(_parent) not in sys.path:
    sys.path.insert(0, str(_parent))

from infrastructure.json_codec import dumps, validate

OUTCOME_MARKS = {
    "pass": "✓",
    "certified": "✓",
    "impossible": "✗",
    "fail": "✗",
    "inconclusive": "?",
    "skipped": "-",
}


def _mark(outcome: str) -> str:
    return f"{OUTCOME_MARKS.get(outcome, ' ')} {outcome}"


def trace_table(trace: List[Dict[str, Any]]) -> pd.DataFrame:
    """Pipeline trace as a display table."""
    if not trace:
        return pd.DataFrame()
    df = pd.DataFrame(trace)
    result = pd.DataFrame({
        "Stage": df["stage"],
        "Check": df["check"],
        "Outcome": df["outcome"].apply(_mark),
        "Time (ms)": df["elapsed"].apply(lambda x: f"{1000 * x:.2f}"),
        "Detail": df.get("detail", pd.Series([""] * len(df))).fillna(""),
    })
    return result


def examples_table(results: List[Dict[str, Any]]) -> pd.DataFrame:
    """Fixture outcomes with a match column."""
    if not results:
        return pd.DataFrame()
    df = pd.DataFrame(results)
    display_cols = {
        "group": "Group",
        "check": "Check",
        "kind": "Kind",
        "expected": "Expected",
        "actual": "Actual",
        "matched": "Match",
        "elapsed": "Time (s)",
        "detail": "Detail",
    }
    result = df[[c for c in display_cols if c in df.columns]].copy()
    result.columns = [display_cols[c] for c in result.columns]
    result["Match"] = result["Match"].apply(lambda x: "✓" if x else "✗")
    if "Time (s)" in result.columns:
        result["Time (s)"] = result["Time (s)"].apply(lambda x: f"{x:.3f}")
    return result


def listing_table(rows: List[Dict[str, Any]]) -> pd.DataFrame:
    if not rows:
        return pd.DataFrame()
    df = pd.DataFrame(rows)
    df.columns = [c.capitalize() for c in df.columns]
    return df


def svals_table(rows: List[Dict[str, Any]]) -> pd.DataFrame:
    """Per-pair Schmidt data: ranks, ell, peel result and gammas."""
    if not rows:
        return pd.DataFrame()
    df = pd.DataFrame(rows)
    for col in ("x_values", "y_values", "gammas"):
        if col in df.columns:
            df[col] = df[col].apply(lambda v: ", ".join(f"{x:.6g}" for x in v) if v else "")
    for col in ("peel", "majorized"):
        if col in df.columns:
            df[col] = df[col].apply(lambda x: "N/A" if x is None else ("✓" if x else "✗"))
    return df.rename(columns={
        "pair": "Pair",
        "rank_x": "rank X",
        "rank_y": "rank Y",
        "ell": "ell",
        "x_values": "s(X)",
        "y_values": "s(Y)",
        "peel": "Peel",
        "gammas": "gamma",
        "majorized": "Majorized",
    })


def _compact(value: Any, limit: int = 160) -> str:
    text = json.dumps(json.loads(dumps(value, indent=None)))
    return text if len(text) <= limit else text[:limit - 3] + "..."


def to_document(report: Dict[str, Any]) -> Dict[str, Any]:
    """Plain-JSON form of a report, validated against the report schema."""
    doc = json.loads(dumps(report, indent=None))
    validate(doc, "report")
    return doc


def render_text(report: Dict[str, Any]) -> str:
    lines = []
    status = report["status"]
    header = f"Status: {status.upper()} (exit {report['exit_code']})"
    if report.get("stage") is not None:
        header += f"  [stage {report['stage']}]"
    if report.get("problem"):
        header = f"Problem: {report['problem']}\n{header}"
    lines.append(header)

    reason = report.get("reason") or {}
    if reason:
        lines.append(f"Reason: {reason.get('condition', '')}: {reason.get('message', '')}".rstrip(": "))
        for key, value in reason.items():
            if key in ("condition", "message", "outcome", "witness"):
                continue
            lines.append(f"  {key}: {_compact(value)}")
        for key, value in (reason.get("witness") or {}).items():
            lines.append(f"  {key}: {_compact(value)}")

    data = report.get("data") or {}
    if "pairs" in data:
        lines.append("")
        lines.append(svals_table(data["pairs"]).to_string(index=False))
    if "fixtures" in data:
        lines.append("")
        lines.append(listing_table(data["fixtures"]).to_string(index=False))
    for key, value in data.items():
        if key not in ("pairs", "fixtures"):
            lines.append(f"{key}: {_compact(value)}")

    if report.get("results"):
        lines.append("")
        lines.append(examples_table(report["results"]).to_string(index=False))

    if report.get("trace"):
        lines.append("")
        lines.append("Trace:")
        lines.append(trace_table(report["trace"]).to_string(index=False))

    cert = report.get("certificate")
    if cert:
        lines.append("")
        lines.append(f"Certificate: p={cert['p']}, q={cert['q']}")
        for i, R in enumerate(cert["R"], start=1):
            R = np.array([[complex(*z) for z in row] for row in R])
            svals = np.linalg.svd(R, compute_uv=False)
            lines.append(f"  R_{i} singular values: {', '.join(f'{s:.9g}' for s in svals)}")

    for w in report.get("warnings", []):
        lines.append(f"⚠️  {w}")
    return "\n".join(lines)


def render(report: Dict[str, Any], fmt: str = "text") -> str:
    """Render a report as text or as schema-validated JSON."""
    doc = to_document(report)
    if fmt == "json":
        return json.dumps(doc, indent=2)
    return render_text(doc)
