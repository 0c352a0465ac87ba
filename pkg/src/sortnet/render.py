"""Knuth diagrams as plain text or SVG, channel 1 on top."""
from __future__ import annotations

from dataclasses import dataclass
from xml.sax.saxutils import escape

from .netcore import ComparatorNetwork


@dataclass(frozen=True)
class RenderSpec:
    format: str = "text"
    separators: bool = True
    labels: bool = False

    def __post_init__(self):
        if self.format not in ("text", "svg"):
            raise ValueError(f"unknown render format {self.format!r}")


def _columns(layer) -> list[list[tuple[int, int]]]:
    """Pack a layer's comparators into columns whose spans do not overlap."""
    cols: list[list[tuple[int, int]]] = []
    for a, b in sorted(layer, key=lambda c: (min(c), max(c))):
        lo, hi = min(a, b), max(a, b)
        for col in cols:
            if all(hi < min(c) or lo > max(c) for c in col):
                col.append((a, b))
                break
        else:
            cols.append([(a, b)])
    return cols or [[]]


def render_text(net: ComparatorNetwork, spec: RenderSpec = RenderSpec()) -> str:
    rows = 2 * net.n - 1
    grid: list[list[str]] = [[] for _ in range(rows)]

    def push(col: dict[int, str]):
        for r in range(rows):
            grid[r].append(col.get(r, "-" if r % 2 == 0 else " "))

    push({})
    for idx, layer in enumerate(net.layers):
        if idx and spec.separators:
            push({r: ":" for r in range(1, rows, 2)})
        for col in _columns(layer):
            marks: dict[int, str] = {}
            for a, b in col:
                lo, hi = min(a, b), max(a, b)
                for r in range(2 * (lo - 1) + 1, 2 * (hi - 1)):
                    marks[r] = "|"
                marks[2 * (lo - 1)] = "o"
                marks[2 * (hi - 1)] = "o"
                if a > b:  # reversed: the minimum leaves on the lower channel
                    marks[2 * (a - 1)] = "x"
            push(marks)
            push({})
    width = len(str(net.n))
    lines = []
    for r, cells in enumerate(grid):
        text = "".join(cells).rstrip()
        if spec.labels:
            label = str(r // 2 + 1).rjust(width) if r % 2 == 0 else " " * width
            text = f"{label} {text}".rstrip()
        lines.append(text)
    return "\n".join(lines) + "\n"


def render_svg(net: ComparatorNetwork, spec: RenderSpec = RenderSpec(format="svg")) -> str:
    dx, dy, margin = 20, 20, 20
    left = margin + (20 if spec.labels else 0)
    x = left + dx
    items, seps = [], []
    for idx, layer in enumerate(net.layers):
        if idx and spec.separators:
            seps.append(x - dx // 2)
        for col in _columns(layer):
            for a, b in col:
                y1, y2 = margin + (a - 1) * dy, margin + (b - 1) * dy
                items.append(f'<line x1="{x}" y1="{y1}" x2="{x}" y2="{y2}" stroke="black" stroke-width="2"/>')
                for y, ch in ((y1, a), (y2, b)):
                    fill = "white" if (a > b and ch == a) else "black"
                    items.append(f'<circle cx="{x}" cy="{y}" r="4" fill="{fill}" stroke="black"/>')
            x += dx
    width = x + margin
    height = 2 * margin + (net.n - 1) * dy
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">']
    for i in range(1, net.n + 1):
        y = margin + (i - 1) * dy
        out.append(f'<line class="channel" x1="{left}" y1="{y}" x2="{width - margin}" y2="{y}" stroke="black"/>')
        if spec.labels:
            out.append(f'<text x="{margin}" y="{y + 4}" font-size="10">{escape(str(i))}</text>')
    for sx in seps:
        out.append(f'<line class="separator" x1="{sx}" y1="{margin // 2}" x2="{sx}" y2="{height - margin // 2}" '
                   'stroke="gray" stroke-dasharray="4,3"/>')
    out.extend(items)
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render(net: ComparatorNetwork, spec: RenderSpec = RenderSpec()) -> str:
    return render_svg(net, spec) if spec.format == "svg" else render_text(net, spec)
