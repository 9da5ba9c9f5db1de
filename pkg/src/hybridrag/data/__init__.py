"""Bundled data files (stop words, fixtures)."""
