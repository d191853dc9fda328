"""Toolkit for building and evaluating essay-to-syntax-feedback instruction datasets."""

__version__ = "0.1.0"
