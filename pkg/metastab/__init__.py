"""Contact-process metastability toolkit."""

__version__ = "0.3.0"
