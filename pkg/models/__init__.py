"""Data models for states, Hamiltonians, reports and scenarios."""
