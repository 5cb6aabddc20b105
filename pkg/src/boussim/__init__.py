"""Depth-integrated Boussinesq wave solver with adaptive multistep stepping."""

__version__ = "0.1.0"
