"""Static renderers for the beamrate figure CSVs."""

from plotview.render import FIGURE_IDS, SchemaError, render

__all__ = ["FIGURE_IDS", "SchemaError", "render"]
__version__ = "0.1.0"
