"""Fixed-encoding re-uploading circuits: synthesis, compilation and verification."""

__version__ = "0.1.0"
