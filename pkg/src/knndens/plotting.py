"""Minimal log-log SVG plots of convergence and ratio reports."""

from __future__ import annotations

import math
import xml.etree.ElementTree as ET

from .experiments import ConvergenceReport, RatioReport, fit_slope

WIDTH, HEIGHT = 640, 420
MARGIN = dict(left=70, right=30, top=40, bottom=55)
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")


def _log_range(values):
    lo, hi = math.log10(min(values)), math.log10(max(values))
    if hi - lo < 1e-12:
        lo, hi = lo - 0.5, hi + 0.5
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


class _Axes:
    def __init__(self, xs, ys):
        self.x0, self.x1 = _log_range(xs)
        self.y0, self.y1 = _log_range(ys)
        self.w = WIDTH - MARGIN["left"] - MARGIN["right"]
        self.h = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def px(self, x):
        return MARGIN["left"] + (math.log10(x) - self.x0) / (self.x1 - self.x0) * self.w

    def py(self, y):
        return MARGIN["top"] + (self.y1 - math.log10(y)) / (self.y1 - self.y0) * self.h


def _decade_ticks(lo, hi):
    return [10.0**e for e in range(math.ceil(lo), math.floor(hi) + 1)]


def _frame(svg, ax, title, ylabel):
    ET.SubElement(svg, "rect", x=str(MARGIN["left"]), y=str(MARGIN["top"]), width=str(ax.w),
                  height=str(ax.h), fill="none", stroke="black")
    for t in _decade_ticks(ax.x0, ax.x1):
        x = f"{ax.px(t):.2f}"
        ET.SubElement(svg, "line", x1=x, x2=x, y1=str(MARGIN["top"] + ax.h),
                      y2=str(MARGIN["top"] + ax.h + 5), stroke="black")
        ET.SubElement(svg, "text", x=x, y=str(MARGIN["top"] + ax.h + 20),
                      **{"text-anchor": "middle", "font-size": "12"}).text = f"1e{round(math.log10(t))}"
    for t in _decade_ticks(ax.y0, ax.y1):
        y = f"{ax.py(t):.2f}"
        ET.SubElement(svg, "line", x1=str(MARGIN["left"] - 5), x2=str(MARGIN["left"]), y1=y, y2=y,
                      stroke="black")
        ET.SubElement(svg, "text", x=str(MARGIN["left"] - 8), y=y,
                      **{"text-anchor": "end", "font-size": "12"}).text = f"1e{round(math.log10(t))}"
    ET.SubElement(svg, "text", x=str(WIDTH / 2), y=str(HEIGHT - 12),
                  **{"text-anchor": "middle", "font-size": "13"}).text = "n (log scale)"
    ET.SubElement(svg, "text", x="16", y=str(HEIGHT / 2),
                  transform=f"rotate(-90 16 {HEIGHT / 2})",
                  **{"text-anchor": "middle", "font-size": "13"}).text = ylabel
    ET.SubElement(svg, "text", x=str(WIDTH / 2), y="24",
                  **{"text-anchor": "middle", "font-size": "14"}).text = title


def _series(svg, ax, name, xs, ys, color, slot):
    pts = " ".join(f"{ax.px(x):.2f},{ax.py(y):.2f}" for x, y in zip(xs, ys))
    ET.SubElement(svg, "polyline", points=pts, fill="none", stroke=color,
                  **{"stroke-width": "2", "class": f"series {name}", "data-metric": name})
    label = name
    if len(xs) >= 3:
        label += f"  slope {fit_slope(list(zip(xs, ys))):.3f}"
    ET.SubElement(svg, "text", x=str(MARGIN["left"] + 10), y=str(MARGIN["top"] + 18 + 16 * slot),
                  fill=color, **{"font-size": "12", "class": "annotation"}).text = label


def _svg():
    return ET.Element("svg", xmlns="http://www.w3.org/2000/svg", width=str(WIDTH),
                      height=str(HEIGHT), viewBox=f"0 0 {WIDTH} {HEIGHT}")


def emit_plot(report, path) -> None:
    """Write ``report`` as a log-log SVG with one polyline per metric.

    Ratio reports also get a dashed horizontal line at ratio 1.
    """
    if isinstance(report, ConvergenceReport):
        series = report.series
        if not series:
            raise ValueError("cannot plot an empty report")
        ns = [s[0] for s in series]
        metrics = {"l1": [s[1] for s in series], "linf": [s[2] for s in series]}
        title = f"{report.settings.get('dist', '')} {report.settings.get('estimator', '')}".strip()
        ylabel, ref = "error", None
    elif isinstance(report, RatioReport):
        series = report.series
        if not series:
            raise ValueError("cannot plot an empty report")
        ns = [s[0] for s in series]
        metrics = {"ratio": [s[3] for s in series]}
        title, ylabel, ref = f"{report.settings.get('dist', '')} l1 ratio kNN / KDE", "ratio", 1.0
    else:
        raise TypeError(f"cannot plot {type(report).__name__}")
    ys = [v for vals in metrics.values() for v in vals] + ([ref] if ref else [])
    if min(ys) <= 0:
        raise ValueError("log-log plot needs positive values")
    ax = _Axes(ns, ys)
    svg = _svg()
    _frame(svg, ax, title, ylabel)
    if ref is not None:
        y = f"{ax.py(ref):.2f}"
        ET.SubElement(svg, "line", x1=str(MARGIN["left"]), x2=str(MARGIN["left"] + ax.w), y1=y, y2=y,
                      stroke="gray", **{"stroke-dasharray": "6 4", "class": "reference"})
    for slot, (name, vals) in enumerate(metrics.items()):
        _series(svg, ax, name, ns, vals, COLORS[slot % len(COLORS)], slot)
    tree = ET.ElementTree(svg)
    with open(path, "wb") as fh:
        tree.write(fh, encoding="utf-8", xml_declaration=True)
