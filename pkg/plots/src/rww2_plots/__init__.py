"""Read-only figure renderers for the wave-model experiment CSV schemas."""

__version__ = "0.1.0"

from .figures import FigureSpec, SchemaError, render
