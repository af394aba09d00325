"""CSV export with fixed column schemas.

Floats are written in their shortest round-trip decimal form (``repr``),
so identical runs produce byte-identical files.
"""

from __future__ import annotations

import csv
import math
import os
import tempfile
from pathlib import Path

TRACE_COLUMNS = ("n", "f_gap", "lyapunov", "contraction_ratio", "cert_pass")
COORDINATE_COLUMNS = TRACE_COLUMNS + ("coord", "realized_decrease", "enum_expected_lyapunov")
CERTIFICATE_COLUMNS = ("n", "name", "z_tag", "lhs", "rhs", "margin", "verdict")
TRAJECTORY_COLUMNS = ("t", "f_gap", "lyapunov", "v_norm")
SWEEP_COLUMNS = ("gamma", "decay_rate", "regime", "empirical_rate", "diverged")
COMPARE_COLUMNS = ("variant", "iterations")

LOG_FLOOR = -16.0


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    if hasattr(value, "item"):
        return fmt(value.item())
    return str(value)


def write_csv(path, header, rows):
    """Write atomically: a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([fmt(v) for v in row])
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def trace_rows(records, coordinate=False):
    for r in records:
        row = [r.n, r.f_gap, r.lyapunov, r.contraction_ratio, r.passed]
        if coordinate:
            row += [r.coord, r.realized_decrease, r.expected_lyapunov]
        yield row


def certificate_rows(records):
    for r in records:
        for c in r.certificate_verdicts:
            yield [c.n, c.name, c.z_tag, c.lhs, c.rhs, c.margin, c.verdict]


def write_trace(path, records, coordinate=False):
    header = COORDINATE_COLUMNS if coordinate else TRACE_COLUMNS
    return write_csv(path, header, trace_rows(records, coordinate))


def write_certificates(path, records):
    return write_csv(path, CERTIFICATE_COLUMNS, certificate_rows(records))


def log_gap(gap):
    return LOG_FLOOR if gap <= 0 else math.log10(gap)


def plot_rows(trace_path):
    """``(n or t, log10 f_gap)`` pairs from a trace or trajectory CSV."""
    rows = read_csv(trace_path)
    if not rows:
        return []
    key = "n" if "n" in rows[0] else "t"
    out = []
    for row in rows:
        x = float(row[key])
        out.append((int(x) if key == "n" else x, log_gap(float(row["f_gap"]))))
    return out


def write_plot_data(trace_path, out_path=None):
    """Gnuplot-ready two-column text file next to the trace (``.dat`` suffix)."""
    trace_path = Path(trace_path)
    if not trace_path.is_file():
        raise FileNotFoundError(f"trace not found: {trace_path}")
    out_path = Path(out_path) if out_path else trace_path.with_suffix(".dat")
    text = "".join(f"{fmt(a)} {fmt(b)}\n" for a, b in plot_rows(trace_path))
    out_path.write_text(text)
    return out_path
