"""Audit reporting: plain-text table, delimited export, summary figures.

The report path writes ``audit.csv`` plus PNG charts (transactions per
org, per function, status breakdown, chain growth) next to it, so a
ledger can be reviewed without running anything.
"""

from __future__ import annotations

import csv
from collections import Counter
from pathlib import Path

AUDIT_COLUMNS = ("height", "org", "chaincode", "function", "status")


def format_audit_table(rows: list[dict]) -> str:
    """Fixed-width table with one line per transaction."""
    if not rows:
        return "(empty ledger: no transactions)"
    widths = {
        col: max(len(col), max(len(str(row[col])) for row in rows))
        for col in AUDIT_COLUMNS
    }
    header = "  ".join(col.upper().ljust(widths[col]) for col in AUDIT_COLUMNS)
    divider = "  ".join("-" * widths[col] for col in AUDIT_COLUMNS)
    lines = [header, divider]
    for row in rows:
        lines.append(
            "  ".join(str(row[col]).ljust(widths[col]) for col in AUDIT_COLUMNS)
        )
    return "\n".join(lines)


def write_audit_csv(rows: list[dict], path: Path) -> None:
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=AUDIT_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow({col: row[col] for col in AUDIT_COLUMNS})


def _bar_chart(ax, counts: Counter, title: str, color: str) -> None:
    labels = sorted(counts)
    values = [counts[label] for label in labels]
    ax.bar(range(len(labels)), values, color=color)
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel("transactions")
    ax.set_title(title)


def write_audit_figures(rows: list[dict], outdir: Path) -> list[Path]:
    """Render summary charts; returns the written figure paths."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    written: list[Path] = []

    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    _bar_chart(axes[0], Counter(r["org"] for r in rows),
               "Transactions per org", "#4878a8")
    _bar_chart(axes[1], Counter(f"{r['function']}\n[{r['status']}]" for r in rows),
               "Transactions per function", "#6aa84f")
    fig.tight_layout()
    path = outdir / "audit_activity.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(6, 3.5))
    heights = [r["height"] for r in rows]
    ok = [1 if r["status"] == "ok" else 0 for r in rows]
    cumulative = []
    total = 0
    for flag in ok:
        total += flag
        cumulative.append(total)
    ax.step(heights, cumulative, where="post", color="#4878a8",
            label="committed")
    rejected = [h for h, r in zip(heights, rows) if r["status"] != "ok"]
    if rejected:
        ax.plot(rejected, [0] * len(rejected), "rx", label="rejected")
    ax.set_xlabel("block height")
    ax.set_ylabel("committed transactions")
    ax.set_title("Chain growth")
    ax.legend(loc="upper left", fontsize=8)
    fig.tight_layout()
    path = outdir / "audit_growth.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)
    return written


def write_audit_report(rows: list[dict], outdir: str | Path) -> list[Path]:
    """Delimited audit table plus figures; returns every written path."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    csv_path = outdir / "audit.csv"
    write_audit_csv(rows, csv_path)
    paths = [csv_path]
    if rows:
        paths.extend(write_audit_figures(rows, outdir))
    return paths
