"""Bridge a DSSAT-style crop simulator onto the croprl line protocol."""

__version__ = "0.1.0"
