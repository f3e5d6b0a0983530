"""Figure rendering for entbath outputs.

Reads only the documented CSV/JSON schemas (trajectory CSVs with metadata
sidecars, fit profiles, spectral tables, adiabatic gate summaries) and
maps them to paper-style panels.  No physics is recomputed: plotted
values equal file values up to axis transforms.  Rendering is
deterministic -- fixed style, no timestamps in the output files.
"""

from figures.spec import FigureSpec, SchemaError
from figures.render import render

__version__ = "0.1.0"

__all__ = ["FigureSpec", "SchemaError", "render", "__version__"]
