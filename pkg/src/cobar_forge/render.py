"""Deterministic ASCII and SVG renderings of Ext charts.

Charts are drawn with the stem t-s horizontal and the filtration s vertical.
Only chart JSON is needed (see ``ExtChart.to_json``), so renders of stored
charts do not touch the engines.
"""

from __future__ import annotations

import json
import re
from typing import Mapping

from .ext import ChartData, ExtChart, WindowOverflow

# SVG layout; every render uses these and nothing else
SVG = {
    "cell": 24,
    "margin": 36,
    "dot_r": 3,
    "dot_gap": 6,
    "font": 9,
    "stroke": 1,
    "tick_every": 4,
    "colors": {"dot": "#000", "v0": "#000", "alpha": "#1f5fbf", "h1": "#1f5fbf", "axis": "#888"},
}

_SUB = str.maketrans("0123456789", "₀₁₂₃₄₅₆₇₈₉")
_PRETTY = re.compile(r"^([A-Za-z])(\d+)(~|t)?$")


def pretty(name: str) -> str:
    """'c4t' -> 'c̃₄', 'v0' -> 'v₀'; other names unchanged."""
    m = _PRETTY.match(name)
    if not m:
        return name
    letter, digits, tilde = m.groups()
    return letter + ("̃" if tilde else "") + digits.translate(_SUB)


def line_generators(p: int) -> dict:
    """Sphere classes drawn as lines: v0 always, then alpha (odd p) or h1."""
    return {"v0": (1, 1), "alpha" if p > 2 else "h1": (1, 2 * p - 2 if p > 2 else 2)}


def add_product_lines(chart: ExtChart, generators: Mapping | None = None) -> ExtChart:
    """Record multiplication by the line generators on chart bases in
    ``chart.products`` as [name, s, t, i, s', t', j]."""
    gens = dict(generators or line_generators(chart.p))
    sphere = chart.sphere
    out = []
    for gname, (gs, gt) in sorted(gens.items()):
        if sphere.dim(gs, gt) != 1:
            continue
        x = sphere.basis_class(gs, gt, 0)
        for s, t, i in chart.classes():
            if not chart.in_window(s + gs, t + gt):
                continue
            try:
                y = chart.act(x, chart.basis_class(s, t, i))
            except WindowOverflow:
                continue
            for j, c in enumerate(y.coords):
                if c:
                    out.append([gname, s, t, i, s + gs, t + gt, j])
    chart.products = sorted(out)
    return chart


def _data(chart) -> ChartData:
    if isinstance(chart, ChartData):
        return chart
    if isinstance(chart, ExtChart):
        return ChartData.from_chart(chart)
    return ChartData.from_json(chart)


def _extent(d: ChartData) -> tuple[int, int]:
    stems = [c["t"] - c["s"] for c in d.classes]
    lo = min(stems + [0])
    hi = max(stems + [d.max_t])
    return lo, hi


def render_ascii(chart) -> str:
    """Grid of class counts; '.' marks an empty bidegree."""
    d = _data(chart)
    lo, hi = _extent(d)
    counts: dict = {}
    for c in d.classes:
        key = (c["s"], c["t"] - c["s"])
        counts[key] = counts.get(key, 0) + 1
    width = max(2, len(str(hi)) + 1, len(str(lo)) + 1)
    lines = [f"# Ext over {d.algebra} of {d.comodule}, s <= {d.max_s}, t <= {d.max_t}"]
    for s in range(d.max_s, -1, -1):
        row = "".join((str(counts[(s, n)]) if (s, n) in counts else ".").rjust(width)
                      for n in range(lo, hi + 1))
        lines.append(f"{s:>3} |{row}")
    lines.append("    +" + "-" * (width * (hi - lo + 1)))
    lines.append("     " + "".join(str(n).rjust(width) for n in range(lo, hi + 1)))
    return "\n".join(lines) + "\n"


def render_svg(chart) -> str:
    d = _data(chart)
    cfg = SVG
    cell, mg = cfg["cell"], cfg["margin"]
    lo, hi = _extent(d)
    w = mg * 2 + cell * (hi - lo + 1)
    h = mg * 2 + cell * (d.max_s + 1)

    per: dict = {}
    for c in sorted(d.classes, key=lambda c: (c["s"], c["t"], c["index"])):
        per.setdefault((c["s"], c["t"]), []).append(c)

    def pos(s, t, i):
        n = len(per.get((s, t), [])) or 1
        x = mg + cell * (t - s - lo) + cell / 2 + (i - (n - 1) / 2) * cfg["dot_gap"]
        y = h - mg - cell * s - cell / 2
        return round(x, 2), round(y, 2)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
           f'viewBox="0 0 {w} {h}" font-family="monospace" font-size="{cfg["font"]}">']
    ax = cfg["colors"]["axis"]
    out.append(f'<line x1="{mg}" y1="{h - mg}" x2="{w - mg}" y2="{h - mg}" stroke="{ax}"/>')
    out.append(f'<line x1="{mg}" y1="{mg}" x2="{mg}" y2="{h - mg}" stroke="{ax}"/>')
    for n in range(lo, hi + 1):
        if n % cfg["tick_every"] == 0:
            x = mg + cell * (n - lo) + cell / 2
            out.append(f'<text x="{x}" y="{h - mg + 14}" text-anchor="middle">{n}</text>')
    for s in range(0, d.max_s + 1, 2):
        y = h - mg - cell * s - cell / 2
        out.append(f'<text x="{mg - 6}" y="{y + 3}" text-anchor="end">{s}</text>')
    for name, s, t, i, s2, t2, j in d.products:
        x1, y1 = pos(s, t, i)
        x2, y2 = pos(s2, t2, j)
        col = cfg["colors"].get(name, "#000")
        out.append(f'<line class="{name}" x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}" '
                   f'stroke="{col}" stroke-width="{cfg["stroke"]}"/>')
    for (s, t), cs in sorted(per.items()):
        for c in cs:
            x, y = pos(s, t, c["index"])
            out.append(f'<circle cx="{x}" cy="{y}" r="{cfg["dot_r"]}" fill="{cfg["colors"]["dot"]}"/>')
            if "name" in c:
                out.append(f'<text x="{x + 4}" y="{y - 4}">{_escape(pretty(c["name"]))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def render_chart(chart, fmt: str = "ascii") -> str:
    if fmt == "ascii":
        return render_ascii(chart)
    if fmt == "svg":
        return render_svg(chart)
    if fmt == "json":
        return _dump(chart)
    raise ValueError(f"unknown format {fmt!r}")


def _dump(chart) -> str:
    if isinstance(chart, ExtChart):
        return chart.dumps() + "\n"
    d = _data(chart)
    data = {"prime": d.prime, "algebra": d.algebra, "comodule": d.comodule,
            "window": {"max_s": d.max_s, "max_t": d.max_t}, "classes": d.classes,
            "products": d.products}
    return json.dumps(data, indent=1, sort_keys=True) + "\n"
