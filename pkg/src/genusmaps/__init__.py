"""Labelled maps, pointed quadrangulations and the bijection between them."""

from .combmap import CombinatorialMap, InvalidMapError, validate, canonical_form

__version__ = "0.1.0"

__all__ = ["CombinatorialMap", "InvalidMapError", "validate", "canonical_form"]
