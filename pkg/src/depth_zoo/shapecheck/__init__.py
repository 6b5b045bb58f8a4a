"""Symbolic shape propagation from encoder hooks to the depth output."""
