"""CSV artifacts with fixed columns; floats always carry 12 significant digits."""
import csv
from pathlib import Path

from .exact import fmt_float

SUMMARY_COLUMNS = ("example", "quantity", "estimate", "exact", "se", "tolerance", "pass")


def _cell(value):
    if isinstance(value, bool):
        return "pass" if value else "fail"
    if isinstance(value, float):
        return fmt_float(value)
    return str(value)


def write_csv(path, columns, rows):
    """Write dict or sequence rows under `columns`; returns the path."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            vals = [row[c] for c in columns] if isinstance(row, dict) else list(row)
            w.writerow([_cell(v) for v in vals])
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def summary_rows(checks):
    return [(c.example, c.quantity, c.estimate, c.exact, c.se, c.tolerance, c.passed)
            for c in checks]
