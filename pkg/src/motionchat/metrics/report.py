"""Structured metric reports: text plus CSV."""

from __future__ import annotations

import csv
from pathlib import Path


def write_report(rows: list[dict], out_path, title: str = "metrics"):
    """rows: [{metric, value, detail?}]. Writes .txt and .csv side by side."""
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    width = max((len(r["metric"]) for r in rows), default=10)
    lines = [f"# {title}"]
    for r in rows:
        detail = f"  ({r['detail']})" if r.get("detail") else ""
        lines.append(f"{r['metric']:<{width}}  {r['value']}{detail}")
    out_path.with_suffix(".txt").write_text("\n".join(lines) + "\n",
                                            encoding="utf-8")
    with open(out_path.with_suffix(".csv"), "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=["metric", "value", "detail"])
        writer.writeheader()
        for r in rows:
            writer.writerow({"metric": r["metric"], "value": r["value"],
                             "detail": r.get("detail", "")})
