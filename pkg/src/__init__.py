"""Leader-follower formation control with observer-based attack detection."""

__version__ = "0.1.0"
