"""Curvature of complete-intersection germs, jet-space codimensions and peak sections."""
__version__ = "1.0.0"
