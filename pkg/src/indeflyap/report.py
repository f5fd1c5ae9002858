"""Deterministic JSON serialization and a minimal SVG line plot."""

from __future__ import annotations

import enum
import json
import math
import xml.etree.ElementTree as ET
from typing import Sequence

import numpy as np

__all__ = ["dumps", "format_float", "svg_plot"]


def format_float(x: float) -> str:
    """17 significant digits, so every value round-trips exactly; non-finite values become strings."""
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return format(x, ".17g")


def _emit(obj, indent: int, level: int, out: list[str]) -> None:
    pad = "\n" + " " * (indent * (level + 1))
    end = "\n" + " " * (indent * level)
    if isinstance(obj, enum.Enum):
        obj = obj.value
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    elif isinstance(obj, np.generic):
        obj = obj.item()
    if obj is None or isinstance(obj, (bool, str)):
        out.append(json.dumps(obj))
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        out.append(format_float(obj))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{")
        for i, key in enumerate(sorted(obj, key=str)):
            out.append(("," if i else "") + pad + json.dumps(str(key)) + ": ")
            _emit(obj[key], indent, level + 1, out)
        out.append(end + "}")
    elif isinstance(obj, (list, tuple)):
        if not obj:
            out.append("[]")
            return
        out.append("[")
        for i, item in enumerate(obj):
            out.append(("," if i else "") + pad)
            _emit(item, indent, level + 1, out)
        out.append(end + "]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    """JSON text with sorted keys and 17-digit floats."""
    out: list[str] = []
    _emit(obj, indent, 0, out)
    return "".join(out) + "\n"


def _ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = min((s * mag for s in (1, 2, 5, 10) if s * mag >= raw), default=10 * mag)
    first = math.ceil(lo / step) * step
    return [first + i * step for i in range(int((hi - first) / step + 1e-9) + 1)]


def svg_plot(series: Sequence[tuple[str, np.ndarray, np.ndarray, str]], title: str = "",
             width: int = 720, height: int = 420, max_points: int = 2000) -> str:
    """Polyline plot of ``(label, x, y, colour)`` series with axis ticks and a legend."""
    left, right, top, bottom = 70, 20, 40, 50
    xs = np.concatenate([np.asarray(s[1], dtype=float) for s in series])
    ys = np.concatenate([np.asarray(s[2], dtype=float) for s in series])
    ys = ys[np.isfinite(ys)]
    x_lo, x_hi = float(xs.min()), float(xs.max())
    y_lo, y_hi = min(0.0, float(ys.min())) if len(ys) else 0.0, float(ys.max()) if len(ys) else 1.0
    if x_hi <= x_lo:
        x_hi = x_lo + 1.0
    if y_hi <= y_lo:
        y_hi = y_lo + 1.0
    y_hi += 0.05 * (y_hi - y_lo)

    def px(x):
        return left + (x - x_lo) / (x_hi - x_lo) * (width - left - right)

    def py(y):
        return height - bottom - (y - y_lo) / (y_hi - y_lo) * (height - top - bottom)

    svg = ET.Element("svg", xmlns="http://www.w3.org/2000/svg", width=str(width), height=str(height),
                     viewBox=f"0 0 {width} {height}")
    ET.SubElement(svg, "rect", x="0", y="0", width=str(width), height=str(height), fill="white")
    if title:
        ET.SubElement(svg, "text", x=str(width / 2), y="22", attrib={"text-anchor": "middle", "font-size": "15"}).text = title
    axis = {"stroke": "black", "stroke-width": "1"}
    ET.SubElement(svg, "line", x1=str(left), y1=str(py(y_lo)), x2=str(width - right), y2=str(py(y_lo)), attrib=axis)
    ET.SubElement(svg, "line", x1=str(left), y1=str(top), x2=str(left), y2=str(height - bottom), attrib=axis)
    for xt in _ticks(x_lo, x_hi):
        ET.SubElement(svg, "line", x1=f"{px(xt):.2f}", y1=str(height - bottom), x2=f"{px(xt):.2f}",
                      y2=str(height - bottom + 5), attrib=axis)
        ET.SubElement(svg, "text", x=f"{px(xt):.2f}", y=str(height - bottom + 18),
                      attrib={"text-anchor": "middle", "font-size": "11"}).text = f"{xt:g}"
    for yt in _ticks(y_lo, y_hi):
        ET.SubElement(svg, "line", x1=str(left - 5), y1=f"{py(yt):.2f}", x2=str(left), y2=f"{py(yt):.2f}", attrib=axis)
        ET.SubElement(svg, "text", x=str(left - 8), y=f"{py(yt) + 4:.2f}",
                      attrib={"text-anchor": "end", "font-size": "11"}).text = f"{yt:g}"
    ET.SubElement(svg, "text", x=str(width / 2), y=str(height - 12),
                  attrib={"text-anchor": "middle", "font-size": "12"}).text = "t"
    for k, (label, x, y, colour) in enumerate(series):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        keep = np.isfinite(y)
        x, y = x[keep], np.minimum(y[keep], y_hi)
        if len(x) > max_points:
            idx = np.unique(np.linspace(0, len(x) - 1, max_points).round().astype(int))
            x, y = x[idx], y[idx]
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x, y))
        ET.SubElement(svg, "polyline", points=pts, fill="none", stroke=colour, attrib={"stroke-width": "1.5"})
        ly = top + 16 * k + 6
        ET.SubElement(svg, "line", x1=str(width - right - 150), y1=str(ly), x2=str(width - right - 125), y2=str(ly),
                      stroke=colour, attrib={"stroke-width": "2"})
        ET.SubElement(svg, "text", x=str(width - right - 120), y=str(ly + 4), attrib={"font-size": "11"}).text = label
    return ET.tostring(svg, encoding="unicode")
