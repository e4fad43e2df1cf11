"""Self-contained SVG line charts of population traces."""

from __future__ import annotations

import csv
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .errors import CatlineError

WIDTH, HEIGHT = 800, 480
MARGIN = dict(left=70, right=130, top=30, bottom=60)
MAX_POINTS = 2000
SERIES = (("p_e", "#1f77b4", "P_e"), ("p_g", "#d62728", "P_g"), ("z", "#2ca02c", "Z"))
X_LABELS = {"t": "time t (units of 1/omega)", "k": "collision index k"}


class MalformedCsv(CatlineError, ValueError):
    """The file is not a trace written by this tool."""


def read_trace_csv(path) -> dict[str, np.ndarray]:
    try:
        with open(path, encoding="utf-8") as fh:
            lines = [ln for ln in fh if ln.strip() and not ln.startswith("#")]
    except (OSError, UnicodeDecodeError) as err:
        raise MalformedCsv(f"cannot read {path}: {err}") from err
    if not lines:
        raise MalformedCsv(f"{path}: no column header")
    rows = list(csv.reader(lines))
    cols = rows[0]
    if cols[0] not in X_LABELS or not all(name in cols for name, _, _ in SERIES):
        raise MalformedCsv(f"{path}: unexpected columns {cols}")
    body = rows[1:]
    if not body:
        raise MalformedCsv(f"{path}: empty body")
    try:
        data = np.array([[float(x) for x in row] for row in body])
    except ValueError as err:
        raise MalformedCsv(f"{path}: non-numeric entry ({err})") from err
    if data.ndim != 2 or data.shape[1] != len(cols):
        raise MalformedCsv(f"{path}: ragged rows")
    return {c: data[:, j] for j, c in enumerate(cols)}


def _ticks(lo: float, hi: float, n: int = 5) -> np.ndarray:
    return np.linspace(lo, hi, n)


def emit_plot(csv_path, out_path) -> Path:
    """Render ``P_e``, ``P_g`` and ``Z`` against the first CSV column."""
    data = read_trace_csv(csv_path)
    xname = next(iter(data))
    x = data[xname]
    stride = max(1, int(np.ceil(len(x) / MAX_POINTS)))
    keep = np.unique(np.r_[np.arange(0, len(x), stride), len(x) - 1])

    x0, x1 = float(x.min()), float(x.max())
    if x1 == x0:
        x1 = x0 + 1.0
    y0, y1 = -1.05, 1.05
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def sx(v):
        return MARGIN["left"] + (v - x0) / (x1 - x0) * pw

    def sy(v):
        return MARGIN["top"] + (y1 - v) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" '
        'fill="none" stroke="black"/>',
    ]
    for v in _ticks(-1.0, 1.0):
        y = sy(v)
        out.append(f'<line x1="{MARGIN["left"]}" x2="{MARGIN["left"] + pw}" y1="{y:.2f}" '
                   f'y2="{y:.2f}" stroke="#ddd"/>')
        out.append(f'<text x="{MARGIN["left"] - 8}" y="{y + 4:.2f}" text-anchor="end">{v:g}</text>')
    for v in _ticks(x0, x1):
        xx = sx(v)
        out.append(f'<text x="{xx:.2f}" y="{MARGIN["top"] + ph + 18}" '
                   f'text-anchor="middle">{v:.4g}</text>')
    out.append(f'<text x="{MARGIN["left"] + pw / 2}" y="{HEIGHT - 15}" text-anchor="middle">'
               f'{escape(X_LABELS[xname])}</text>')

    for j, (name, color, label) in enumerate(SERIES):
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x[keep], data[name][keep]))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = MARGIN["top"] + 20 + 20 * j
        lx = MARGIN["left"] + pw + 15
        out.append(f'<line x1="{lx}" x2="{lx + 25}" y1="{ly}" y2="{ly}" stroke="{color}" '
                   'stroke-width="2"/>')
        out.append(f'<text x="{lx + 32}" y="{ly + 4}">{label}</text>')
    out.append("</svg>")

    path = Path(out_path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True)
    path.write_text("\n".join(out) + "\n", encoding="utf-8")
    return path
