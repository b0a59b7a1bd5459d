"""Numerical kernels: linear algebra, field states, dynamics, measures and phase space."""
