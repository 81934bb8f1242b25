"""
Visualization Package

This package contains the overlay rendering of augmented maps.
"""

from augmap.visualization.overlay import CLASS_COLORS, render, render_overlay

__all__ = ["CLASS_COLORS", "render", "render_overlay"]
