"""SVG line charts of training curves."""

from pathlib import Path
from typing import Optional, Sequence, Union

import matplotlib
matplotlib.use('Agg')  # Non-interactive backend
import matplotlib.pyplot as plt
import seaborn as sns

from utils.logging import get_logger
from .series import CurveSeries

logger = get_logger(__name__)

AXIS_MARGIN = 0.05

# Fixed salt and text-as-text keep the SVG byte-stable and the legend greppable.
SVG_RC = {
    "svg.hashsalt": "terrain-gan",
    "svg.fonttype": "none",
    "figure.figsize": (8.0, 4.5),
}


def render_curves(
    series: Sequence[CurveSeries],
    path: Union[str, Path],
    title: Optional[str] = None,
    xlabel: str = "Epoch",
    ylabel: str = "Value",
) -> Path:
    """
    Render one line per series into an SVG file.

    Each series becomes a ``<g id="curve-N">`` group holding a single path;
    identical input gives byte-identical output.

    Args:
        series: Curves to draw, in legend order
        path: Destination ``.svg`` file
        title: Optional chart title
        xlabel: X axis label
        ylabel: Y axis label

    Returns:
        Written path

    Raises:
        ValueError: If ``series`` is empty
    """
    if not series:
        raise ValueError("render_curves needs at least one series")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    with sns.axes_style("whitegrid"), plt.rc_context(SVG_RC):
        fig, ax = plt.subplots()
        try:
            palette = sns.color_palette(n_colors=len(series))
            for i, s in enumerate(series):
                (line,) = ax.plot(s.epochs, s.values, label=s.name, color=palette[i], linewidth=1.2)
                line.set_gid(f"curve-{i}")
            ax.margins(AXIS_MARGIN)
            ax.set_xlabel(xlabel)
            ax.set_ylabel(ylabel)
            if title:
                ax.set_title(title)
            ax.legend(loc="best")
            fig.tight_layout()
            fig.savefig(path, format="svg", metadata={"Date": None})
        finally:
            plt.close(fig)

    logger.info(f"Curves written to {path}")
    return path
