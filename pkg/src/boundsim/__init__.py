"""Location-free boundary recognition in simulated wireless sensor networks."""

__version__ = "0.1.0"
