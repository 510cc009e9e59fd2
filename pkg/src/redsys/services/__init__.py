"""The bundled authoring services: highlighter, spotter, hider, transclusion,
plus autocomplete for interaction events."""

from .autocomplete import Autocomplete
from .hider import Hider
from .highlighter import Highlighter
from .rendering import render_visible_text
from .spotter import Spotter, TermDictionary
from .transclusion import Transclusion

__all__ = [
    "Autocomplete",
    "Hider",
    "Highlighter",
    "Spotter",
    "TermDictionary",
    "Transclusion",
    "render_visible_text",
]
