"""Figure rendering for shuffle-spectra artifacts.

Reads the documented CSV/JSON output schemas of the simulation package
and renders publication-style figures; no statistics are recomputed here.
"""

__version__ = "0.1.0"

from .figures import FigureResult, FigureSpec, SchemaError, plot
