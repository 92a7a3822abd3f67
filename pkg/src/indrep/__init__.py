"""Induction and pullback of surface group representations along finite covers."""

__version__ = "0.1.0"
