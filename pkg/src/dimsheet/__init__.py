"""Compile dimensional formula models into structured spreadsheet workbooks."""

__version__ = "0.1.0"
