"""Probing toolkit for the language neutrality of multilingual embeddings."""

__version__ = "0.1.0"
