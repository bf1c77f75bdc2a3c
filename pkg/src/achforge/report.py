"""Experiment reports and their file renderings."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import jsonschema
import numpy as np

__all__ = [
    "Check",
    "Sweep",
    "Report",
    "REPORT_SCHEMA",
    "build_id",
    "format_value",
    "render_csv",
    "render_svg",
    "emit",
]

REPORT_SCHEMA = {
    "type": "object",
    "required": ["experiment", "claim", "config", "columns", "row_count", "summary", "checks",
                 "failures", "passed", "provenance"],
    "properties": {
        "experiment": {"type": "string"},
        "claim": {"type": "string"},
        "config": {"type": "object"},
        "columns": {"type": "array", "items": {"type": "string"}},
        "row_count": {"type": "integer", "minimum": 0},
        "summary": {"type": "object"},
        "checks": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "value", "criterion", "passed"],
                "properties": {
                    "name": {"type": "string"},
                    "value": {"type": ["number", "string", "null"]},
                    "criterion": {"type": "string"},
                    "passed": {"type": "boolean"},
                },
            },
        },
        "failures": {"type": "array", "items": {"type": "string"}},
        "passed": {"type": "boolean"},
        "provenance": {
            "type": "object",
            "required": ["build_id", "seed", "version"],
            "properties": {"build_id": {"type": "string"}, "seed": {"type": "integer"},
                           "version": {"type": "string"}},
        },
    },
}


def build_id() -> str:
    """Hash of the package sources, stable for one build."""
    h = hashlib.sha256()
    for path in sorted(Path(__file__).parent.glob("*.py")):
        h.update(path.name.encode())
        h.update(path.read_bytes())
    return h.hexdigest()[:16]


@dataclass
class Check:
    name: str
    value: object
    criterion: str
    passed: bool

    def to_dict(self) -> dict:
        v = self.value
        if isinstance(v, (float, np.floating)):
            v = float(v) if math.isfinite(float(v)) else str(float(v))
        elif isinstance(v, (np.integer,)):
            v = int(v)
        return {"name": self.name, "value": v, "criterion": self.criterion, "passed": bool(self.passed)}


@dataclass
class Sweep:
    """Data for one log-log panel: named series over a common scale."""

    xlabel: str
    scales: Sequence[float]
    series: dict
    fits: dict = field(default_factory=dict)


@dataclass
class Report:
    experiment: str
    claim: str
    config: dict
    columns: list
    rows: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    failures: list = field(default_factory=list)
    sweep: Optional[Sweep] = None
    seed: int = 0

    def check(self, name: str, value, criterion: str, passed: bool) -> bool:
        self.checks.append(Check(name, value, criterion, bool(passed)))
        return bool(passed)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks) and not self.failures

    def check_line(self, c: Check) -> str:
        return f"{'PASS' if c.passed else 'FAIL'} {self.experiment}: {c.name} = {c.value} ({c.criterion})"

    def to_dict(self) -> dict:
        from . import __version__
        return {
            "experiment": self.experiment,
            "claim": self.claim,
            "config": _jsonable(self.config),
            "columns": list(self.columns),
            "row_count": len(self.rows),
            "summary": _jsonable(self.summary),
            "checks": [c.to_dict() for c in self.checks],
            "failures": list(self.failures),
            "passed": self.passed,
            "provenance": {"build_id": build_id(), "seed": int(self.seed), "version": __version__},
        }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def format_value(x) -> str:
    """CSV cell text: floats in scientific notation with 17 significant digits."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.16e}"
    return str(x)


def render_csv(report: Report) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(report.columns)
    for row in report.rows:
        w.writerow([format_value(row.get(c, "")) for c in report.columns])
    return buf.getvalue()


_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"]


def render_svg(sweep: Sweep, title: str = "") -> str:
    """Log-log plot of a sweep with a dashed line for each fit."""
    W, H, L, R, T, B = 640, 440, 80, 170, 40, 60
    xs = np.log10(np.asarray(sweep.scales, dtype=float))
    ys_all = [np.log10(np.asarray(v, dtype=float)) for v in sweep.series.values()]
    ymin = min(float(y.min()) for y in ys_all)
    ymax = max(float(y.max()) for y in ys_all)
    if ymax - ymin < 1e-9:
        ymin, ymax = ymin - 0.5, ymax + 0.5
    xmin, xmax = float(xs.min()), float(xs.max())
    if xmax - xmin < 1e-9:
        xmin, xmax = xmin - 0.5, xmax + 0.5

    def px(x):
        return L + (x - xmin) / (xmax - xmin) * (W - L - R)

    def py(y):
        return H - B - (y - ymin) / (ymax - ymin) * (H - T - B)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
           '<rect width="100%" height="100%" fill="white"/>',
           f'<text x="{W / 2:.1f}" y="22" text-anchor="middle" font-size="14">{_esc(title)}</text>',
           f'<line x1="{L}" y1="{H - B}" x2="{W - R}" y2="{H - B}" stroke="black"/>',
           f'<line x1="{L}" y1="{T}" x2="{L}" y2="{H - B}" stroke="black"/>']
    for x in np.linspace(xmin, xmax, 5):
        out.append(f'<text x="{px(x):.1f}" y="{H - B + 18}" text-anchor="middle" font-size="11">'
                   f'{10 ** x:.3g}</text>')
    for y in np.linspace(ymin, ymax, 5):
        out.append(f'<text x="{L - 6}" y="{py(y) + 4:.1f}" text-anchor="end" font-size="11">'
                   f'{10 ** y:.3g}</text>')
    out.append(f'<text x="{(L + W - R) / 2:.1f}" y="{H - 15}" text-anchor="middle" font-size="12">'
               f'{_esc(sweep.xlabel)} (log scale)</text>')
    for i, ((name, vals), ys) in enumerate(zip(sweep.series.items(), ys_all)):
        col = _COLORS[i % len(_COLORS)]
        pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(xs, ys))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{col}" stroke-width="1.5"/>')
        for x, y in zip(xs, ys):
            out.append(f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="3" fill="{col}"/>')
        label = name
        fit = sweep.fits.get(name)
        if fit is not None:
            a, b = fit["slope"], fit["intercept"]
            x0, x1 = xmin, xmax
            y0 = (a * x0 * np.log(10) + b) / np.log(10)
            y1 = (a * x1 * np.log(10) + b) / np.log(10)
            out.append(f'<line x1="{px(x0):.2f}" y1="{py(y0):.2f}" x2="{px(x1):.2f}" y2="{py(y1):.2f}" '
                       f'stroke="{col}" stroke-dasharray="5,4"/>')
            label = f"{name}: slope = {a:.4f}"
        out.append(f'<text x="{W - R + 8}" y="{T + 16 * (i + 1)}" font-size="11" fill="{col}">'
                   f'{_esc(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _esc(s: str) -> str:
    return str(s).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def emit(report: Report, out_dir, formats=("csv", "json", "svg")) -> list:
    """Write the requested files; returns the written paths."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OSError(f"cannot create output directory {out}: {e}") from e
    written = []
    stem = report.experiment
    for fmt in formats:
        path = out / f"{stem}.{fmt}"
        if fmt == "csv":
            text = render_csv(report)
        elif fmt == "json":
            d = report.to_dict()
            jsonschema.validate(d, REPORT_SCHEMA)
            text = json.dumps(d, indent=2, sort_keys=True) + "\n"
        elif fmt == "svg":
            if report.sweep is None:
                continue
            text = render_svg(report.sweep, report.claim)
        else:
            raise ValueError(f"unknown output format {fmt!r}")
        try:
            path.write_text(text, encoding="utf-8")
        except OSError as e:
            raise OSError(f"cannot write {path}: {e}") from e
        written.append(path)
    return written
