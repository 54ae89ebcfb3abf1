"""Optional raster figures rendered with matplotlib (Agg, no pyplot state)."""
from __future__ import annotations

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from .svg import Series

RC = {
    "font.size": 9,
    "axes.linewidth": 0.8,
    "lines.linewidth": 1.4,
    "lines.markersize": 3.5,
}


def render_png(table, series, path, *, xlabel=None, ylabel=None, title=None, style="line"):
    """Write the same panel as :func:`geomphase.svg.emit_svg` to a PNG file."""
    import matplotlib

    with matplotlib.rc_context(RC):
        fig = Figure(figsize=(5.5, 3.6), dpi=150)
        FigureCanvasAgg(fig)
        ax = fig.add_subplot(1, 1, 1)
        if series is None:
            series = [Series(table.variable, name, name) for name in table.columns]
        for s in series:
            x = np.asarray(table[s.x])
            y = np.asarray(table[s.y])
            if (s.style or style) == "scatter":
                ax.plot(x, y, "o", label=s.label or s.y)
            else:
                ax.plot(x, y, "--" if s.dashed else "-", label=s.label or s.y)
        if xlabel:
            ax.set_xlabel(xlabel)
        if ylabel:
            ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        ax.legend(fontsize=7, frameon=False)
        fig.tight_layout()
        fig.savefig(path, metadata={"Software": None})
