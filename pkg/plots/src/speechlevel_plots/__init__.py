"""Render figures from exported pipeline artifacts.

This package reads only the documented artifact formats (attention and
waveform CSV exports, the feature sidecar CSV, binary feature containers,
condition report JSON) and turns them into PNG or SVG figures. It has no
dependency on the package that produced the artifacts.
"""

from .readers import (SchemaError, read_attention_csv, read_feature_container,
                      read_report_json, read_sidecar_csv, read_wave_csv)
from .render import FIGURE_KINDS, OutputExists, PlotJob, render

__all__ = [
    "FIGURE_KINDS",
    "OutputExists",
    "PlotJob",
    "SchemaError",
    "read_attention_csv",
    "read_feature_container",
    "read_report_json",
    "read_sidecar_csv",
    "read_wave_csv",
    "render",
]
