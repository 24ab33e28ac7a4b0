"""Extraction bridge from pretrained encoders to the embedding container format."""

__version__ = "0.1.0"
