"""Shared helpers: event bus and ordered parallel map."""
