"""Line charts of result CSV columns, written as SVG."""
from __future__ import annotations

from pathlib import Path
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .output import read_csv  # noqa: E402

STYLE = {
    "svg.hashsalt": "esbandit",
    "svg.fonttype": "none",
    "font.size": 11,
    "axes.grid": True,
    "grid.alpha": 0.2,
    "lines.linewidth": 1.6,
}


def _label(column: str) -> str:
    return column.replace("_", " ")


def render_svg(csv_path, svg_path, columns: Optional[Sequence[str]] = None, title: Optional[str] = None,
               logy: bool = False) -> Path:
    """Plot ``columns`` against ``step``; columns ending in ``bound`` (or containing ``bound_``) are dashed."""
    data = read_csv(Path(csv_path))
    if "step" not in data:
        raise ValueError(f"{csv_path} has no 'step' column")
    if columns is None:
        columns = [c for c in data if c != "step" and not c.startswith("se_")]
    missing = [c for c in columns if c not in data]
    if missing:
        raise ValueError(f"columns not in {csv_path}: {missing}")

    svg_path = Path(svg_path)
    svg_path.parent.mkdir(parents=True, exist_ok=True)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(6.4, 4.2))
        for col in columns:
            pts = [(s, v) for s, v in zip(data["step"], data[col]) if v is not None and s is not None]
            if not pts:
                continue
            xs, ys = zip(*pts)
            dashed = col.endswith("bound") or "bound_" in col
            marker = "o" if len(pts) < len(data["step"]) else None
            ax.plot(xs, ys, linestyle="--" if dashed else "-", marker=marker, markersize=3, label=_label(col))
        ax.set_xlabel("step")
        ax.set_ylabel("value")
        if logy:
            ax.set_yscale("log")
        if title:
            ax.set_title(title)
        ax.legend(loc="best", fontsize=8)
        fig.tight_layout()
        fig.savefig(svg_path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return svg_path
