"""Minimal static SVG line plots of trajectories and decay envelopes."""
from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

__all__ = ["plot_svg"]

COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
WIDTH, HEIGHT = 720, 440
MARGIN = dict(left=70, right=20, top=40, bottom=50)
MAX_POINTS = 1500


def _thin(t, y):
    if len(t) <= MAX_POINTS:
        return t, y
    idx = np.unique(np.linspace(0, len(t) - 1, MAX_POINTS).round().astype(int))
    return t[idx], y[idx]


def _nice_ticks(lo, hi, n=5):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10 ** np.floor(np.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    start = np.ceil(lo / step) * step
    return np.arange(start, hi + 0.5 * step, step)


def plot_svg(t, states, envelope=None, title: str = "", labels=None) -> str:
    """Polylines for every solution component and, if given, every envelope
    component (dashed, same colour). Returns the SVG document as text."""
    t = np.asarray(t, dtype=float)
    states = np.asarray(states, dtype=float)
    d = states.shape[1]
    labels = labels or [f"w_{i + 1}" for i in range(d)]
    curves = [states]
    if envelope is not None:
        envelope = np.asarray(envelope, dtype=float)
        if envelope.shape != states.shape:
            raise ValueError("envelope must match the trajectory shape")
        curves.append(envelope)
    finite = np.concatenate([c[np.isfinite(c)] for c in curves])
    ymin = min(0.0, float(finite.min())) if finite.size else 0.0
    ymax = float(finite.max()) if finite.size else 1.0
    if ymax <= ymin:
        ymax = ymin + 1.0
    xmin, xmax = float(t[0]), float(t[-1]) if t[-1] > t[0] else float(t[0]) + 1.0

    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def X(x):
        return MARGIN["left"] + (x - xmin) / (xmax - xmin) * pw

    def Y(y):
        return MARGIN["top"] + (1 - (y - ymin) / (ymax - ymin)) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" '
        'fill="none" stroke="#444"/>',
    ]
    for xt in _nice_ticks(xmin, xmax):
        if xmin <= xt <= xmax:
            out.append(f'<text x="{X(xt):.1f}" y="{HEIGHT - MARGIN["bottom"] + 18}" '
                       f'text-anchor="middle">{xt:g}</text>')
    for yt in _nice_ticks(ymin, ymax):
        if ymin <= yt <= ymax:
            out.append(f'<line x1="{MARGIN["left"]}" x2="{MARGIN["left"] + pw}" y1="{Y(yt):.1f}" '
                       f'y2="{Y(yt):.1f}" stroke="#ddd"/>')
            out.append(f'<text x="{MARGIN["left"] - 6}" y="{Y(yt) + 4:.1f}" '
                       f'text-anchor="end">{yt:.3g}</text>')
    out.append(f'<text x="{WIDTH / 2:.1f}" y="{HEIGHT - 12}" text-anchor="middle">t</text>')

    for kind, arr in zip(("solution", "envelope"), curves):
        dash = ' stroke-dasharray="6 4"' if kind == "envelope" else ""
        for i in range(d):
            ok = np.isfinite(arr[:, i])
            tt, yy = _thin(t[ok], arr[ok, i])
            pts = " ".join(f"{X(a):.2f},{Y(b):.2f}" for a, b in zip(tt, yy))
            out.append(f'<polyline class="{kind}" data-component="{i + 1}" fill="none" '
                       f'stroke="{COLORS[i % len(COLORS)]}" stroke-width="1.5"{dash} points="{pts}"/>')
    for i, lab in enumerate(labels):
        y = MARGIN["top"] + 16 + 16 * i
        x = MARGIN["left"] + pw - 110
        out.append(f'<line x1="{x}" x2="{x + 20}" y1="{y - 4}" y2="{y - 4}" '
                   f'stroke="{COLORS[i % len(COLORS)]}" stroke-width="2"/>')
        out.append(f'<text x="{x + 26}" y="{y}">{escape(lab)}</text>')
    if envelope is not None:
        y = MARGIN["top"] + 16 + 16 * d
        x = MARGIN["left"] + pw - 110
        out.append(f'<line x1="{x}" x2="{x + 20}" y1="{y - 4}" y2="{y - 4}" stroke="#444" '
                   'stroke-dasharray="6 4"/>')
        out.append(f'<text x="{x + 26}" y="{y}">envelope</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
