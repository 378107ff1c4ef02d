"""Inequality reports and number formatting shared by the evaluators."""
from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from dataclasses import asdict, dataclass, field


def fmt(x) -> str:
    """12 significant digits; Python's correctly rounded repr of the binary value."""
    if isinstance(x, bool) or x is None:
        return str(x)
    if isinstance(x, int):
        return str(x)
    return format(float(x), ".12g")


@dataclass(frozen=True)
class BoundReport:
    """One instance of an inequality ``lhs <= rhs`` (or ``<`` when strict)."""
    name: str
    k: int
    lhs: float
    rhs: float
    strict: bool
    tol: float = 1e-8
    observational: bool = False
    note: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    @property
    def verdict(self) -> bool:
        if self.strict:
            return self.lhs < self.rhs + self.tol
        return self.lhs <= self.rhs + self.tol

    @property
    def asserted(self) -> bool:
        """Whether a failing verdict should count as a failure."""
        return not self.observational

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(margin=self.margin, verdict="pass" if self.verdict else "fail")
        return d

    def __str__(self):
        status = "pass" if self.verdict else "FAIL"
        if self.observational:
            status += " (observational)"
        rel = "<" if self.strict else "<="
        return (f"{self.name} k={self.k}: {self.lhs:.8g} {rel} {self.rhs:.8g} "
                f"margin={self.margin:.3g} tol={self.tol:.2g} [{status}]")


def _atomic_write(path, text: str):
    path = os.fspath(path)
    folder = os.path.dirname(os.path.abspath(path))
    os.makedirs(folder, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) if not isinstance(v, str) else v for v in row])
    return buf.getvalue()


def write_csv(path, header, rows):
    _atomic_write(path, csv_text(header, rows))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, int):
        return obj
    try:
        return float(fmt(obj))
    except (TypeError, ValueError):
        return str(obj)


def reports_json(reports) -> str:
    return json.dumps([_jsonable(r.to_dict()) for r in reports], indent=2) + "\n"


def write_reports_json(path, reports):
    _atomic_write(path, reports_json(reports))


def reports_csv(path, reports):
    header = ["name", "k", "lhs", "rhs", "margin", "strict", "tol", "verdict", "observational"]
    rows = [[r.name, r.k, r.lhs, r.rhs, r.margin, str(r.strict), r.tol,
             "pass" if r.verdict else "fail", str(r.observational)] for r in reports]
    write_csv(path, header, rows)


@dataclass(frozen=True)
class CheckReport:
    """Pass/fail property of a sweep (monotonicity, growth, ...)."""
    name: str
    passed: bool
    observational: bool = False
    note: str = ""

    @property
    def verdict(self) -> bool:
        return self.passed

    @property
    def asserted(self) -> bool:
        return not self.observational

    def to_dict(self) -> dict:
        return {"name": self.name, "verdict": "pass" if self.passed else "fail",
                "observational": self.observational, "note": self.note}

    def __str__(self):
        status = "pass" if self.passed else "FAIL"
        if self.observational:
            status += " (observational)"
        return f"{self.name}: [{status}]" + (f" {self.note}" if self.note else "")
