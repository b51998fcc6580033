"""Half-integral weight eigenforms, Shimura lifts and slope data."""

__version__ = "0.1.0"
