"""Identification of decoupled polynomial NARX models."""

__version__ = "0.1.0"
