"""Report emission: per-label SVG figures plus the CSVs behind them.

Each curation label present in the outcomes gets one self-contained SVG
with a histogram of log10 aggregate frequency, binned recall points, and
the fitted success curve with its bootstrap band.  Three CSVs carry
every plotted series (histogram.csv, binned_recall.csv, curve.csv); the
SVGs contain no number that cannot be recomputed from those files.

All SVG coordinates are rounded to 4 decimals and the files are written
with fixed field ordering, so identical inputs produce byte-identical
output on any platform.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.special import expit

from .curation import LABELS, CuratedTestSet
from .predictor import LogisticFit, binned_recall
from .retrieval import EvalOutcome

HISTOGRAM_BINS = 20
RECALL_BINS = 10
CURVE_POINTS = 100

_BAR_FILL = "#7aa6c2"
_POINT_FILL = "#1f4e79"
_CURVE_STROKE = "#c0392b"
_BAND_FILL = "#c0392b"
_AXIS = "#333333"


def _fmt(v: float) -> str:
    # fixed 4-decimal coordinates keep golden SVGs byte-stable
    return f"{v + 0.0:.4f}"


def histogram_series(
    outcomes: Sequence[EvalOutcome], n_bins: int = HISTOGRAM_BINS
) -> list[tuple[float, float, int, float]]:
    """Equal-width log10(f_avg) bins: (bin_lo, bin_hi, count, percentage)."""
    if n_bins < 1:
        raise ValueError("n_bins must be at least 1")
    if not outcomes:
        raise ValueError("outcomes is empty")
    t = np.log10(np.asarray([o.f_avg for o in outcomes], dtype=np.float64))
    lo, hi = float(t.min()), float(t.max())
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    width = (hi - lo) / n_bins
    which = np.minimum(((t - lo) / width).astype(np.int64), n_bins - 1)
    rows = []
    for b in range(n_bins):
        count = int(np.count_nonzero(which == b))
        rows.append((lo + b * width, lo + (b + 1) * width, count, 100.0 * count / t.size))
    return rows


def curve_series(
    fit: LogisticFit, xlo: float, xhi: float, n_points: int = CURVE_POINTS
) -> list[tuple[float, float, float, float]]:
    """Fitted curve and bootstrap band on a log10 grid: (x, p, lo, hi)."""
    if n_points < 2:
        raise ValueError("n_points must be at least 2")
    xs = np.linspace(xlo, xhi, n_points)
    p = expit(fit.beta0 + fit.beta1 * xs)
    boots = np.asarray(fit.bootstrap_betas, dtype=np.float64)
    # band: per-grid-point percentiles of the replicate curves
    curves = expit(boots[:, 0:1] + boots[:, 1:2] * xs[None, :])
    alpha = (1.0 - fit.ci_level) / 2.0
    lo_band = np.percentile(curves, 100.0 * alpha, axis=0)
    hi_band = np.percentile(curves, 100.0 * (1.0 - alpha), axis=0)
    return [
        (float(xs[i]), float(p[i]), float(lo_band[i]), float(hi_band[i]))
        for i in range(n_points)
    ]


class _Svg:
    def __init__(self, width: int, height: int):
        self.width = width
        self.height = height
        self.parts: list[str] = []

    def rect(self, x, y, w, h, fill, opacity=None):
        op = f' fill-opacity="{opacity}"' if opacity is not None else ""
        self.parts.append(
            f'<rect x="{_fmt(x)}" y="{_fmt(y)}" width="{_fmt(w)}" height="{_fmt(h)}" '
            f'fill="{fill}"{op}/>'
        )

    def line(self, x1, y1, x2, y2, stroke=_AXIS, width=1.0):
        self.parts.append(
            f'<line x1="{_fmt(x1)}" y1="{_fmt(y1)}" x2="{_fmt(x2)}" y2="{_fmt(y2)}" '
            f'stroke="{stroke}" stroke-width="{_fmt(width)}"/>'
        )

    def circle(self, cx, cy, r, fill):
        self.parts.append(f'<circle cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="{_fmt(r)}" fill="{fill}"/>')

    def polyline(self, pts, stroke, width=1.5):
        coord = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in pts)
        self.parts.append(
            f'<polyline points="{coord}" fill="none" stroke="{stroke}" '
            f'stroke-width="{_fmt(width)}"/>'
        )

    def polygon(self, pts, fill, opacity):
        coord = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in pts)
        self.parts.append(f'<polygon points="{coord}" fill="{fill}" fill-opacity="{opacity}"/>')

    def text(self, x, y, s, size=12, anchor="start", fill=_AXIS):
        self.parts.append(
            f'<text x="{_fmt(x)}" y="{_fmt(y)}" font-size="{size}" '
            f'font-family="sans-serif" text-anchor="{anchor}" fill="{fill}">{s}</text>'
        )

    def render(self) -> str:
        body = "\n".join(self.parts)
        return (
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" '
            f'height="{self.height}" viewBox="0 0 {self.width} {self.height}">\n'
            f'<rect x="0" y="0" width="{self.width}" height="{self.height}" fill="#ffffff"/>\n'
            f"{body}\n</svg>\n"
        )


class _Panel:
    """Maps data coordinates into a pixel box (y grows upward in data)."""

    def __init__(self, left, top, width, height, xlo, xhi, ylo, yhi):
        self.left, self.top = left, top
        self.width, self.height = width, height
        self.xlo, self.xhi = xlo, xhi
        self.ylo, self.yhi = ylo, yhi

    def x(self, v: float) -> float:
        return self.left + (v - self.xlo) / (self.xhi - self.xlo) * self.width

    def y(self, v: float) -> float:
        return self.top + self.height - (v - self.ylo) / (self.yhi - self.ylo) * self.height


def _x_ticks(xlo: float, xhi: float) -> list[float]:
    ticks = [t for t in range(math.ceil(xlo), math.floor(xhi) + 1)]
    return ticks if ticks else [xlo, xhi]


def _draw_frame(svg: _Svg, panel: _Panel, x_ticks: Iterable[float], y_ticks: Iterable[float]):
    svg.line(panel.left, panel.top + panel.height, panel.left + panel.width, panel.top + panel.height)
    svg.line(panel.left, panel.top, panel.left, panel.top + panel.height)
    for t in x_ticks:
        px = panel.x(t)
        svg.line(px, panel.top + panel.height, px, panel.top + panel.height + 4)
        svg.text(px, panel.top + panel.height + 16, f"{t:g}", size=10, anchor="middle")
    for t in y_ticks:
        py = panel.y(t)
        svg.line(panel.left - 4, py, panel.left, py)
        svg.text(panel.left - 7, py + 3, f"{t:g}", size=10, anchor="end")


def render_label_svg(
    label: str,
    hist_rows: Sequence[tuple[float, float, int, float]],
    recall_rows: Sequence[tuple[float, float, int]],
    curve_rows: Sequence[tuple[float, float, float, float]],
    n_label: int,
    share_pct: float,
) -> str:
    width, height = 760, 640
    margin, gap = 60, 50
    panel_w = width - 2 * margin
    panel_h = (height - 2 * margin - gap - 30) / 2

    xlo = min(r[0] for r in hist_rows)
    xhi = max(r[1] for r in hist_rows)
    max_count = max((r[2] for r in hist_rows), default=0)
    ylim = max(max_count, 1)

    svg = _Svg(width, height)
    svg.text(margin, 28, f"{label} combinations: n={n_label} ({share_pct:.4f}% of evaluated)", size=15)

    top = _Panel(margin, margin, panel_w, panel_h, xlo, xhi, 0.0, ylim * 1.05)
    for lo, hi, count, _pct in hist_rows:
        if count == 0:
            continue
        x0, x1 = top.x(lo), top.x(hi)
        y1, y0 = top.y(count), top.y(0.0)
        svg.rect(x0, y1, x1 - x0, y0 - y1, _BAR_FILL)
    _draw_frame(svg, top, _x_ticks(xlo, xhi), [0, ylim])
    svg.text(margin, margin - 8, "samples per log10 frequency bin", size=11)

    bot_top = margin + panel_h + gap
    bot = _Panel(margin, bot_top, panel_w, panel_h, xlo, xhi, 0.0, 1.0)
    band_pts = [(bot.x(x), bot.y(lo)) for x, _p, lo, _hi in curve_rows]
    band_pts += [(bot.x(x), bot.y(hi)) for x, _p, _lo, hi in reversed(curve_rows)]
    svg.polygon(band_pts, _BAND_FILL, "0.15")
    svg.polyline([(bot.x(x), bot.y(p)) for x, p, _lo, _hi in curve_rows], _CURVE_STROKE)
    for center, mean, count in recall_rows:
        if count == 0:
            continue
        svg.circle(bot.x(center), bot.y(mean), 3.5, _POINT_FILL)
    _draw_frame(svg, bot, _x_ticks(xlo, xhi), [0, 0.25, 0.5, 0.75, 1.0])
    svg.text(margin, bot_top - 8, "recall vs log10 aggregate frequency, with fitted curve and band", size=11)
    svg.text(width / 2, height - 12, "log10 aggregate corpus frequency", size=11, anchor="middle")
    return svg.render()


def _group_by_label(outcomes: Sequence[EvalOutcome]) -> dict[str, list[EvalOutcome]]:
    groups: dict[str, list[EvalOutcome]] = {}
    for o in outcomes:
        groups.setdefault(o.label, []).append(o)
    # fixed label order keeps csv output stable
    return {lab: groups[lab] for lab in LABELS if lab in groups}


def emit_report(
    curated: CuratedTestSet | None,
    outcomes: Sequence[EvalOutcome],
    fit: LogisticFit,
    out_dir: str | Path,
    histogram_bins: int = HISTOGRAM_BINS,
    recall_bins: int = RECALL_BINS,
    curve_points: int = CURVE_POINTS,
    recall_k: int | None = None,
) -> list[Path]:
    """Write per-label SVGs plus histogram/binned-recall/curve CSVs.

    The curated set, when given, is only cross-checked against the
    outcomes; every rendered number derives from the outcome rows and
    the fit so the CSVs stay self-sufficient.  recall_k picks which
    Recall@k indicator the binned points use (largest available when
    left unset).
    """
    if not outcomes:
        raise ValueError("outcomes is empty")
    if recall_k is None:
        recall_k = max(outcomes[0].y_at_k)
    if any(recall_k not in o.y_at_k for o in outcomes):
        raise ValueError(f"recall_k={recall_k} missing from some outcomes")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if curated is not None:
        known_ids = {c.sample.test_id for c in curated.samples}
        stray = [o.test_id for o in outcomes if o.test_id not in known_ids]
        if stray:
            raise ValueError(f"outcomes not present in curated set: {stray[:5]}")

    groups = _group_by_label(outcomes)
    total = len(outcomes)
    written = []

    hist: dict[str, list] = {}
    recall: dict[str, list] = {}
    curve: dict[str, list] = {}
    for label, group in groups.items():
        hist[label] = histogram_series(group, histogram_bins)
        recall[label] = binned_recall([(o.y_at_k[recall_k], o.f_avg) for o in group], recall_bins)
        t = np.log10(np.asarray([o.f_avg for o in group]))
        curve[label] = curve_series(fit, float(t.min()), float(t.max()), curve_points)

    hist_path = out_dir / "histogram.csv"
    with open(hist_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("label,bin_lo,bin_hi,count,percentage\n")
        for label, rows in hist.items():
            for lo, hi, count, pct in rows:
                fh.write(f"{label},{lo!r},{hi!r},{count},{pct!r}\n")
    written.append(hist_path)

    recall_path = out_dir / "binned_recall.csv"
    with open(recall_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("label,bin_center,mean_recall,count\n")
        for label, rows in recall.items():
            for center, mean, count in rows:
                mean_s = "nan" if math.isnan(mean) else repr(mean)
                fh.write(f"{label},{center!r},{mean_s},{count}\n")
    written.append(recall_path)

    curve_path = out_dir / "curve.csv"
    with open(curve_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("label,x,p,band_lo,band_hi\n")
        for label, rows in curve.items():
            for x, p, lo, hi in rows:
                fh.write(f"{label},{x!r},{p!r},{lo!r},{hi!r}\n")
    written.append(curve_path)

    for label, group in groups.items():
        svg = render_label_svg(
            label,
            hist[label],
            recall[label],
            curve[label],
            n_label=len(group),
            share_pct=100.0 * len(group) / total,
        )
        svg_path = out_dir / f"report_{label}.svg"
        svg_path.write_text(svg, encoding="utf-8", newline="\n")
        written.append(svg_path)
    return written
