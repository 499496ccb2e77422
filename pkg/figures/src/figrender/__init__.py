"""Static figure rendering for uscdeph sweep outputs."""

from .render import RenderError, render
from .specs import FIGURE_SPECS, FigureSpec

__version__ = "0.1.0"
