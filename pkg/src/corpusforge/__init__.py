"""Corpus curation toolkit: WARC ingest, text extraction, dedup, filtering and scoring."""

__version__ = "0.1.0"
