"""Linear and two-dimensional spectroscopy of open polariton systems."""

__version__ = "0.1.0"
