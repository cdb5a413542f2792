"""Closed characteristics on convex hypersurfaces: orbits, index iteration, resonance."""

__version__ = "0.1.0"
