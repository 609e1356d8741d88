"""Robust GNSS/INS navigation with zonotope protection levels and IMU fault detection."""

__version__ = "0.1.0"
