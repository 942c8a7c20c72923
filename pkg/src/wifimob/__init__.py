"""Mobility activity inference from Wi-Fi scan stability.

Stage one regresses speed on Wi-Fi stability with a Gaussian process and
imputes missing speeds; stage two classifies each window as stationary,
walking or running.
"""

from .trace import Activity, ApObservation, GpsFix, UserTimeline, WifiScan, build_timeline

__version__ = "0.1.0"

__all__ = ["Activity", "ApObservation", "GpsFix", "UserTimeline", "WifiScan", "build_timeline", "__version__"]
