"""CSV persistence.

Files open with ``#`` comment lines (tool, command, seed, notes) followed by
a single header row.  Floats are written with ``repr`` so output is exact
and byte-stable; missing values are empty cells.  Wall-clock timings are
never written, keeping runs with the same seed byte-identical.
"""

from __future__ import annotations

import csv
import io
import sys
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .bench import REPORT_COLUMNS, SWEEP_COLUMNS, EstimatorReport


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def render_table(columns: Iterable[str], rows: Iterable, comments: Iterable[str] = ()) -> str:
    buf = io.StringIO()
    for line in comments:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(columns))
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def emit(text: str, path: Optional[str]) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def sweep_path(path: str) -> str:
    p = Path(path)
    return str(p.with_name(p.stem + "_sweep" + (p.suffix or ".csv")))


def report_text(report: EstimatorReport, seed: int) -> tuple[str, Optional[str]]:
    comments = [f"stochgrad estimate seed={seed}", f"estimator={report.estimator}", f"oracle={report.oracle_note}"]
    main = render_table(REPORT_COLUMNS, report.rows(), comments)
    sweep = None
    if report.sweep:
        sweep = render_table(
            SWEEP_COLUMNS, report.sweep, [f"stochgrad estimate sweep seed={seed}", f"estimator={report.estimator}"]
        )
    return main, sweep


def write_csv(report: EstimatorReport, path: Optional[str], seed: int = 0) -> None:
    """Write an estimator report; a unit-count sweep goes to ``<stem>_sweep.csv``."""
    main, sweep = report_text(report, seed)
    emit(main, path)
    if sweep is not None:
        if path is None or path == "-":
            sys.stdout.write("\n" + sweep)
        else:
            Path(sweep_path(path)).write_text(sweep)
