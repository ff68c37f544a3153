"""Tensor-network liquids: substrates, models, moves and their checks."""

from __future__ import annotations

__version__ = "0.1.0"
