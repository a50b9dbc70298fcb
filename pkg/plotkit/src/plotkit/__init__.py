"""Offline rendering of planarmaps experiment CSVs into diagnostic figures."""

__version__ = "0.1.0"
