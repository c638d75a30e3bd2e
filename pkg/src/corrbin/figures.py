"""Hand-rolled SVG panels of benchmark quantile bands.

One panel per (family, dimension): merit on the y axis over difficulty on
the x axis, a median line on top of layered gray quantile bands (darker =
tighter band).  Output is deterministic plain XML with one path element
per band plus one for the median.
"""

from __future__ import annotations

from pathlib import Path

from .benchmark import QuantileBands

_WIDTH, _HEIGHT = 420, 300
_ML, _MR, _MT, _MB = 46, 14, 30, 36


def _x(rho: float) -> float:
    return _ML + rho * (_WIDTH - _ML - _MR)


def _y(tau: float) -> float:
    tau = min(max(tau, 0.0), 1.0)
    return _HEIGHT - _MB - tau * (_HEIGHT - _MT - _MB)


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _band_path(rhos, lows, highs) -> str:
    pts = [f"{_fmt(_x(r))},{_fmt(_y(h))}" for r, h in zip(rhos, highs)]
    pts += [f"{_fmt(_x(r))},{_fmt(_y(l))}" for r, l in zip(reversed(rhos), reversed(lows))]
    return "M " + " L ".join(pts) + " Z"


def _median_path(rhos, medians) -> str:
    pts = [f"{_fmt(_x(r))},{_fmt(_y(t))}" for r, t in zip(rhos, medians)]
    return "M " + " L ".join(pts)


def render_panel(cells: list[QuantileBands], title: str) -> str:
    """SVG text for one family/dimension panel (cells share family and d)."""
    cells = sorted(cells, key=lambda c: c.rho)
    rhos = [c.rho for c in cells]
    n_omegas = len(cells[0].omegas)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        f'<rect x="0" y="0" width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
        f'<text x="{_WIDTH / 2}" y="18" text-anchor="middle" font-family="sans-serif" '
        f'font-size="13">{title}</text>',
    ]
    # widest band first so narrow (darker) ones stay visible
    for k in range(n_omegas - 1, -1, -1):
        lows = [c.lows[k] for c in cells]
        highs = [c.highs[k] for c in cells]
        omega = cells[0].omegas[k]
        shade = int(round(235 - 110 * (0.5 - omega) / 0.5))
        color = f"rgb({shade},{shade},{shade})"
        parts.append(f'<path d="{_band_path(rhos, lows, highs)}" fill="{color}" stroke="none"/>')
    medians = [c.median for c in cells]
    parts.append(f'<path d="{_median_path(rhos, medians)}" fill="none" stroke="black" '
                 f'stroke-width="1.5"/>')
    axis = (f'<path d="M {_fmt(_ML)},{_fmt(_y(0.0))} L {_fmt(_x(1.0))},{_fmt(_y(0.0))} '
            f'M {_fmt(_ML)},{_fmt(_y(0.0))} L {_fmt(_ML)},{_fmt(_y(1.0))}" '
            f'stroke="black" stroke-width="1" fill="none"/>')
    parts.append(axis)
    for v in (0.0, 0.5, 1.0):
        parts.append(f'<text x="{_fmt(_x(v))}" y="{_HEIGHT - 14}" text-anchor="middle" '
                     f'font-family="sans-serif" font-size="10">{v:g}</text>')
        parts.append(f'<text x="{_ML - 8}" y="{_fmt(_y(v) + 3)}" text-anchor="end" '
                     f'font-family="sans-serif" font-size="10">{v:g}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_benchmark_svgs(cells: list[QuantileBands], out_dir) -> list[Path]:
    """Write one SVG per (family, dimension) into ``out_dir``; returns the paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    panels: dict[tuple[str, int], list[QuantileBands]] = {}
    for c in cells:
        panels.setdefault((c.family, c.d), []).append(c)
    written = []
    for (family, d), group in sorted(panels.items()):
        path = out_dir / f"tau_{family}_d{d}.svg"
        path.write_text(render_panel(group, f"{family}, d={d}"))
        written.append(path)
    return written
