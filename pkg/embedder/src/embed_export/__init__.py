"""Batch text embedding exporter emitting EMBV1 binary files."""

__version__ = "0.1.0"
