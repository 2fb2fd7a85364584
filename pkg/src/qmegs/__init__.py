"""Gaussian-filtered multiple eigenvalue phase estimation, simulated classically."""
