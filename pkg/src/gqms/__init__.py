"""Graph quantum magic squares: verification, pencils, separation certificates."""

__version__ = "0.1.0"
