"""E-band (71-76 / 81-86 GHz) point-to-point link engineering toolkit."""

__version__ = "0.1.0"
