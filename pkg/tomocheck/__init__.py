"""Two-mode optical tomography and Robertson uncertainty checks."""

__version__ = "0.1.0"
