"""Output plumbing: CSV tables, run manifests, flat config files and SVG plots.

CSV files are UTF-8 with UNIX newlines.  The first line is a comment
``# run_id=<id>`` tying the file to its ``manifest.json``, followed by a
fixed header row.  Floats are written with 17 significant digits so they
round-trip exactly.
"""
from __future__ import annotations

import csv
import hashlib
import json
import os
import platform
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple
from xml.sax.saxutils import escape

import numpy as np

PathLike = os.PathLike | str


def format_value(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def run_id(config: Mapping) -> str:
    """Stable identifier of a run: SHA-256 of the canonical JSON config echo (16 hex chars)."""
    text = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


def write_csv(path: PathLike, header: Sequence[str], rows: Iterable[Sequence], rid: str) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# run_id={rid}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(v) for v in row])
    return path


def read_csv(path: PathLike) -> Tuple[Optional[str], List[str], List[List[str]]]:
    """Return ``(run_id, header, rows)``; values stay strings."""
    with open(path, encoding="utf-8", newline="") as fh:
        lines = fh.read().splitlines()
    rid = None
    if lines and lines[0].startswith("# run_id="):
        rid = lines[0].split("=", 1)[1]
        lines = lines[1:]
    rows = list(csv.reader(lines))
    return rid, rows[0], rows[1:]


@dataclass
class RunManifest:
    command: str
    config: Dict
    version: str
    duration_s: float = 0.0
    checks: Dict[str, bool] = field(default_factory=dict)
    extra: Dict = field(default_factory=dict)

    @property
    def run_id(self) -> str:
        return run_id({"command": self.command, **self.config})

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_dict(self) -> Dict:
        out = asdict(self)
        out["run_id"] = self.run_id
        out["python"] = platform.python_version()
        return out

    def write(self, directory: PathLike) -> Path:
        path = Path(directory) / "manifest.json"
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True, default=str)
            fh.write("\n")
        return path


def load_config(path: PathLike) -> Dict[str, str]:
    """Parse a flat ``key = value`` file; ``#`` starts a comment, dashes in keys become underscores."""
    out: Dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.lstrip("-").replace("-", "_")
            if not key:
                raise ValueError(f"{path}:{lineno}: empty key")
            if key in out:
                raise ValueError(f"{path}:{lineno}: duplicate key {key!r}")
            out[key] = value
    return out


# -- SVG -------------------------------------------------------------------

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


@dataclass
class Series:
    label: str
    x: np.ndarray
    y: np.ndarray
    band: Optional[Tuple[np.ndarray, np.ndarray]] = None


def _thin(n: int, limit: int) -> np.ndarray:
    if n <= limit:
        return np.arange(n)
    return np.unique(np.linspace(0, n - 1, limit).round().astype(int))


def svg_plot(path: PathLike, series: Sequence[Series], title: str = "", xlabel: str = "",
             ylabel: str = "", width: int = 720, height: int = 440, max_points: int = 800) -> Path:
    """Write a line chart with optional shaded bands as a standalone SVG file."""
    left, right, top, bottom = 70, 150, 40, 50
    pw, ph = width - left - right, height - top - bottom
    xs = np.concatenate([np.asarray(s.x, float) for s in series])
    ys = [np.asarray(s.y, float) for s in series]
    ys += [np.asarray(b, float) for s in series if s.band for b in s.band]
    ys = np.concatenate(ys)
    ys = ys[np.isfinite(ys)]
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = (float(ys.min()), float(ys.max())) if ys.size else (0.0, 1.0)
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0

    def px(v):
        return left + (np.asarray(v, float) - x0) / (x1 - x0) * pw

    def py(v):
        return top + ph - (np.asarray(v, float) - y0) / (y1 - y0) * ph

    def pts(xv, yv):
        return " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px(xv), py(yv)))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'font-family="sans-serif" font-size="12">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>',
    ]
    for i in range(5):
        fx = x0 + (x1 - x0) * i / 4
        fy = y0 + (y1 - y0) * i / 4
        parts.append(f'<text x="{px(fx):.1f}" y="{top + ph + 16}" text-anchor="middle">{fx:.4g}</text>')
        parts.append(f'<text x="{left - 6}" y="{py(fy) + 4:.1f}" text-anchor="end">{fy:.4g}</text>')
        parts.append(f'<line x1="{left}" x2="{left + pw}" y1="{py(fy):.1f}" y2="{py(fy):.1f}" stroke="#eee"/>')
    for k, s in enumerate(series):
        color = _PALETTE[k % len(_PALETTE)]
        idx = _thin(len(s.x), max_points)
        x = np.asarray(s.x, float)[idx]
        if s.band is not None:
            lo = np.asarray(s.band[0], float)[idx]
            hi = np.asarray(s.band[1], float)[idx]
            poly = pts(x, hi) + " " + pts(x[::-1], lo[::-1])
            parts.append(f'<polygon points="{poly}" fill="{color}" fill-opacity="0.2" stroke="none"/>')
        parts.append(f'<polyline points="{pts(x, np.asarray(s.y, float)[idx])}" fill="none" '
                     f'stroke="{color}" stroke-width="1.5"/>')
        ly = top + 16 + 18 * k
        parts.append(f'<line x1="{left + pw + 10}" x2="{left + pw + 30}" y1="{ly - 4}" y2="{ly - 4}" '
                     f'stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{left + pw + 34}" y="{ly}">{escape(s.label)}</text>')
    parts.append(f'<text x="{left + pw / 2}" y="{height - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    parts.append(f'<text x="16" y="{top + ph / 2}" text-anchor="middle" '
                 f'transform="rotate(-90 16 {top + ph / 2})">{escape(ylabel)}</text>')
    parts.append(f'<text x="{left + pw / 2}" y="{top - 14}" text-anchor="middle" font-size="14">'
                 f'{escape(title)}</text>')
    parts.append("</svg>")
    path = Path(path)
    path.write_text("\n".join(parts) + "\n", encoding="utf-8")
    return path

