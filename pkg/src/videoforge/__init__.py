"""Video space-time metadata annotation and instruction data synthesis."""

__version__ = "0.1.0"
