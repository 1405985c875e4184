"""Minimal deterministic SVG output for log-log ROC curves.

Hand-written rather than a plotting library so that re-running a report
stage reproduces the file byte for byte.
"""

import math

_W, _H = 560, 520
_MARGIN = 60
_COLORS = ("#2c7fb8", "#d95f02", "#1b9e77", "#7570b3", "#e7298a", "#666666")


def _to_xy(fpr, tpr, lo):
    span = -math.log10(lo)
    x = _MARGIN + (_W - 2 * _MARGIN) * (math.log10(max(fpr, lo)) / span + 1.0)
    y = _H - _MARGIN - (_H - 2 * _MARGIN) * (math.log10(max(tpr, lo)) / span + 1.0)
    return x, y


def render_roc_svg(curves, fpr_min: float = 1e-3) -> str:
    """curves: ordered dict/list of (name, RocCurve). Log-log axes clipped
    to [fpr_min, 1] on both axes. Output is deterministic text."""
    if isinstance(curves, dict):
        curves = list(curves.items())
    lo = fpr_min
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
    ]
    # frame and decade gridlines
    decades = int(round(-math.log10(lo)))
    for d in range(decades + 1):
        v = 10.0 ** (-d)
        x, _ = _to_xy(v, 1.0, lo)
        _, y = _to_xy(1.0, v, lo)
        parts.append(
            f'<line x1="{x:.2f}" y1="{_MARGIN}" x2="{x:.2f}" y2="{_H - _MARGIN}" '
            'stroke="#dddddd" stroke-width="1"/>')
        parts.append(
            f'<line x1="{_MARGIN}" y1="{y:.2f}" x2="{_W - _MARGIN}" y2="{y:.2f}" '
            'stroke="#dddddd" stroke-width="1"/>')
        parts.append(
            f'<text x="{x:.2f}" y="{_H - _MARGIN + 18}" font-size="11" '
            f'text-anchor="middle" font-family="sans-serif">1e-{d}</text>')
        parts.append(
            f'<text x="{_MARGIN - 8}" y="{y:.2f}" font-size="11" '
            f'text-anchor="end" font-family="sans-serif">1e-{d}</text>')
    # random-guess diagonal
    x0, y0 = _to_xy(lo, lo, lo)
    x1, y1 = _to_xy(1.0, 1.0, lo)
    parts.append(
        f'<line x1="{x0:.2f}" y1="{y0:.2f}" x2="{x1:.2f}" y2="{y1:.2f}" '
        'stroke="#999999" stroke-width="1" stroke-dasharray="4,3"/>')

    for ci, (name, curve) in enumerate(curves):
        color = _COLORS[ci % len(_COLORS)]
        pts = " ".join(
            "{:.2f},{:.2f}".format(*_to_xy(f, t, lo))
            for f, t in curve.points if f >= 0.0
        )
        parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" '
            'stroke-width="1.6"/>')
        ly = _MARGIN + 16 * (ci + 1)
        parts.append(
            f'<line x1="{_W - _MARGIN - 150}" y1="{ly}" x2="{_W - _MARGIN - 130}" '
            f'y2="{ly}" stroke="{color}" stroke-width="1.6"/>')
        parts.append(
            f'<text x="{_W - _MARGIN - 124}" y="{ly + 4}" font-size="11" '
            f'font-family="sans-serif">{name}</text>')

    parts.append(
        f'<text x="{_W / 2:.0f}" y="{_H - 12}" font-size="12" text-anchor="middle" '
        'font-family="sans-serif">false positive rate</text>')
    parts.append(
        f'<text x="16" y="{_H / 2:.0f}" font-size="12" text-anchor="middle" '
        f'font-family="sans-serif" transform="rotate(-90 16 {_H / 2:.0f})">'
        'true positive rate</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_roc_svg(curves, path, fpr_min: float = 1e-3) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(render_roc_svg(curves, fpr_min=fpr_min))
