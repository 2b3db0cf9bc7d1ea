"""Figure rendering for the zeroth-order proximal experiment outputs.

Reads the versioned CSV/JSON files the experiment CLI emits and renders
publication-style raster figures.  Strictly presentational: nothing is
recomputed, and every rendered file carries checksums proving the plotted
arrays are exactly the input columns.
"""

from .recipes import FigureRecipe, Panel, Series, recipe_for
from .render import MissingColumn, RenderResult, render

__version__ = "0.1.0"
