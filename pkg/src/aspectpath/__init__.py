"""Word and dependency-path embeddings for CRF-based aspect term extraction."""

__version__ = "0.1.0"
