"""Numerical Weyl-Titchmarsh theory for CMV operators."""

__version__ = "0.1.0"
