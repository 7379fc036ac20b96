from .series import CurveSeries, load_log, gap_series, trend_slope, summarize, series_by_name
from .plots import render_curves
from .report import plot_log, PLOT_GROUPS, SUMMARY_NAME
