"""Resume screening pipeline: ingest, extract, match, notify, benchmark."""

__version__ = "0.1.0"
