"""Raster, manifest and resolution handling."""
