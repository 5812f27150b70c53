"""causalab: desk-scale numerics for causal action principles, finite
spectral triples, and matrix trace dynamics."""

from .pairstats import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
