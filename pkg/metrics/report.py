"""Turn a TrainLog into grouped curve charts and a JSON summary."""

import json
from pathlib import Path
from typing import Dict, List, Tuple, Union

from utils.logging import get_logger
from .plots import render_curves
from .series import CurveSeries, gap_series, load_log, series_by_name, summarize

logger = get_logger(__name__)

SUMMARY_NAME = "summary.json"

# chart name -> (metrics drawn together, y label)
PLOT_GROUPS: Dict[str, Tuple[Tuple[str, ...], str]] = {
    "losses": (("loss_d", "loss_g"), "Binary cross entropy"),
    "wasserstein": (("west_real", "west_fake", "west_g"), "Wasserstein estimate"),
    "gap": (("west_gap",), "Real - fake estimate"),
    "vae": (("vae_loss", "vae_reconstruction", "vae_kl"), "Loss"),
    "schedule": (("noise_factor", "alpha"), "Factor"),
}


def plot_log(log_path: Union[str, Path], out_dir: Union[str, Path]) -> List[Path]:
    """
    Render every metric of ``log_path`` and write ``summary.json``.

    Metrics listed in ``PLOT_GROUPS`` share a chart; any other metric gets
    its own. A gap curve is derived when the log has real and fake estimates
    but no logged gap.

    Returns:
        Written files, summary last
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    series = load_log(log_path)
    by_name = series_by_name(series)
    if "west_gap" not in by_name and {"west_real", "west_fake"} <= by_name.keys():
        by_name["west_gap"] = gap_series(by_name["west_real"], by_name["west_fake"])

    written = []
    grouped = set()
    for chart, (names, ylabel) in PLOT_GROUPS.items():
        members: List[CurveSeries] = [by_name[n] for n in names if n in by_name]
        if members:
            written.append(render_curves(members, out_dir / f"{chart}.svg", ylabel=ylabel))
            grouped.update(s.name for s in members)
    for name in sorted(by_name.keys() - grouped):
        written.append(render_curves([by_name[name]], out_dir / f"{name}.svg", ylabel=name))

    summary_path = out_dir / SUMMARY_NAME
    summary_path.write_text(json.dumps(summarize(list(by_name.values())), indent=2, sort_keys=True) + "\n")
    written.append(summary_path)
    logger.info(f"Plotted {len(by_name)} metrics from {log_path} into {out_dir}")
    return written
