"""Render correlation reports as method x language-pair grids."""

import json
import re

from .stats import CorrelationReport


def significance_stars(p) -> str:
    if p is None:
        return ""
    if p <= 0.001:
        return "***"
    if p <= 0.01:
        return "**"
    if p <= 0.05:
        return "*"
    return ""


def _cell_text(cell, precision):
    if cell is None:
        return ""
    return f"{cell['value']:.{precision}f}{significance_stars(cell.get('p'))}"


def emit_report_tables(report: CorrelationReport, fmt: str = "tsv", precision: int = 3) -> str:
    """Rows are methods, columns language pairs; stars mark p <= .05/.01/.001."""
    if fmt == "json":
        return json.dumps(report.to_dict(), indent=1, sort_keys=True) + "\n"
    lps = report.language_pairs
    rows = [[m] + [_cell_text(report.cells[m].get(lp), precision) for lp in lps] for m in report.methods]
    header = ["method"] + lps
    if fmt == "tsv":
        return "".join("\t".join(r) + "\n" for r in [header] + rows)
    if fmt == "markdown":
        lines = ["| " + " | ".join(header) + " |", "|" + "|".join(["---"] + ["---:"] * len(lps)) + "|"]
        lines += ["| " + " | ".join(r) + " |" for r in rows]
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown table format {fmt!r}")


_CELL_RE = re.compile(r"^(-?\d+(?:\.\d+)?)(\**)$")


def read_markdown_table(text: str):
    """Parse a table written by :func:`emit_report_tables` back into
    ``{method: {lp: (value, stars)}}``."""
    lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
    if not lines:
        return {}
    header = [c.strip() for c in lines[0].strip("|").split("|")]
    lps = header[1:]
    table = {}
    for line in lines[2:]:
        cells = [c.strip() for c in line.strip("|").split("|")]
        row = {}
        for lp, text_cell in zip(lps, cells[1:]):
            if not text_cell:
                continue
            m = _CELL_RE.match(text_cell)
            if not m:
                raise ValueError(f"unreadable cell {text_cell!r}")
            row[lp] = (float(m.group(1)), m.group(2))
        table[cells[0]] = row
    return table
