"""Figure rendering for einet CSV artifacts.

This package never recomputes dynamics: it is a read-only consumer of the
documented CSV schemas, and renders deterministically (fixed geometry, no
timestamps, salted SVG ids), so re-running on the same input yields
byte-identical images.
"""

from .render import FigureRecipe, render

__version__ = "0.1.0"

__all__ = ["FigureRecipe", "render", "__version__"]
