"""Relative improvement, comparison tables and plot data."""
