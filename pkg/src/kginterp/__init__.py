"""Interpretability evaluation for multi-hop reasoning over knowledge graphs."""

__version__ = "0.1.0"

from .errors import (
    ConflictError,
    KGInterpError,
    NotFoundError,
    ParseError,
    UnknownNameError,
    ValidationError,
)
from .kg import KnowledgeGraph, augment_inverses, load_kg, load_kg_splits, split_kg

__all__ = [
    "ConflictError",
    "KGInterpError",
    "KnowledgeGraph",
    "NotFoundError",
    "ParseError",
    "UnknownNameError",
    "ValidationError",
    "augment_inverses",
    "load_kg",
    "load_kg_splits",
    "split_kg",
    "__version__",
]
