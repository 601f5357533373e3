"""Open-domain video shot retrieval: query expansion, candidate retrieval, frame grounding and verification."""

__version__ = "0.1.0"
