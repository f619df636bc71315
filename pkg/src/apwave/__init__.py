"""Small-amplitude steady almost-periodic water waves with constant vorticity."""

__version__ = "0.1.0"
