"""Backbone descriptor catalog and published evaluation records."""
