"""Batch figure rendering for dicke-bands CSV artifacts."""

from .figspec import FigureSpec, SchemaError, load_spec
from .render import RenderResult, render

__all__ = ["FigureSpec", "SchemaError", "load_spec", "RenderResult", "render"]
